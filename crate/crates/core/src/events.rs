//! DVS event types, labeled streams and the CSV interchange format.
//!
//! A record is `t_us,x,y,p[,label]` with `p` and `label` in `{0,1}`. Lines
//! starting with `#` and blank lines are ignored.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported sensor side in pixels (coordinates fit in 11 bits).
pub const MAX_SENSOR_SIDE: u16 = 2048;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: coordinate ({x}, {y}) outside {width}x{height} sensor")]
    CoordinateOutOfRange {
        line: usize,
        x: u64,
        y: u64,
        width: u16,
        height: u16,
    },
    #[error("line {line}: timestamp {t} precedes previous timestamp {prev}")]
    NonMonotonicTimestamp { line: usize, t: u64, prev: u64 },
    #[error("geometry mismatch: {0} vs {1}")]
    GeometryMismatch(SensorGeometry, SensorGeometry),
    #[error("invalid sensor geometry {width}x{height}: each side must be in 1..=2048")]
    InvalidGeometry { width: u32, height: u32 },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Polarity::On
        } else {
            Polarity::Off
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

/// Ground-truth annotation carried by the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Label {
    Signal,
    Noise,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
    pub label: Label,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self {
            t,
            x,
            y,
            polarity,
            label: Label::Unknown,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }
}

/// Sensor resolution: `width` columns (x) by `height` rows (y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr", into = "GeometryRepr")]
pub struct SensorGeometry {
    width: u16,
    height: u16,
}

/// Accepts either `"WxH"` or `{"width": W, "height": H}`; writes `"WxH"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GeometryRepr {
    Text(String),
    Sides { width: u32, height: u32 },
}

impl TryFrom<GeometryRepr> for SensorGeometry {
    type Error = EventError;

    fn try_from(r: GeometryRepr) -> Result<Self, Self::Error> {
        match r {
            GeometryRepr::Text(s) => s.parse(),
            GeometryRepr::Sides { width, height } => SensorGeometry::new(width, height),
        }
    }
}

impl From<SensorGeometry> for GeometryRepr {
    fn from(g: SensorGeometry) -> Self {
        GeometryRepr::Text(g.to_string())
    }
}

impl SensorGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self, EventError> {
        let side = 1..=u32::from(MAX_SENSOR_SIDE);
        if !side.contains(&width) || !side.contains(&height) {
            return Err(EventError::InvalidGeometry { width, height });
        }
        Ok(Self {
            width: width as u16,
            height: height as u16,
        })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    /// Row-major pixel index.
    pub fn pixel_index(&self, x: u16, y: u16) -> usize {
        usize::from(y) * usize::from(self.width) + usize::from(x)
    }
}

impl fmt::Display for SensorGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for SensorGeometry {
    type Err = EventError;

    /// Parses `WxH`, e.g. `346x260`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EventError::MalformedRecord {
            line: 0,
            reason: format!("geometry `{s}` is not of the form WxH"),
        };
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let w: u32 = w.trim().parse().map_err(|_| bad())?;
        let h: u32 = h.trim().parse().map_err(|_| bad())?;
        SensorGeometry::new(w, h)
    }
}

/// A time-ordered sequence of in-range events for one sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    pub fn empty(geometry: SensorGeometry) -> Self {
        Self {
            geometry,
            events: Vec::new(),
        }
    }

    /// Validates range and ordering. Error line numbers are 1-based event
    /// positions.
    pub fn new(geometry: SensorGeometry, events: Vec<Event>) -> Result<Self, EventError> {
        let mut prev = 0;
        for (i, e) in events.iter().enumerate() {
            check_event(&geometry, e, i + 1, prev)?;
            prev = e.t;
        }
        Ok(Self { geometry, events })
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.events.iter().map(|e| e.label)
    }

    /// Stream with its first `n` events.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            geometry: self.geometry,
            events: self.events[..n.min(self.events.len())].to_vec(),
        }
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.events.iter().filter(|e| e.label == label).count()
    }
}

fn check_event(g: &SensorGeometry, e: &Event, line: usize, prev: u64) -> Result<(), EventError> {
    if !g.contains(e.x, e.y) {
        return Err(EventError::CoordinateOutOfRange {
            line,
            x: e.x.into(),
            y: e.y.into(),
            width: g.width,
            height: g.height,
        });
    }
    if e.t < prev {
        return Err(EventError::NonMonotonicTimestamp { line, t: e.t, prev });
    }
    Ok(())
}

fn parse_bit(field: &str, name: &str, line: usize) -> Result<bool, EventError> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(EventError::MalformedRecord {
            line,
            reason: format!("{name} must be 0 or 1, got `{other}`"),
        }),
    }
}

fn parse_int(field: &str, name: &str, line: usize) -> Result<u64, EventError> {
    field
        .trim()
        .parse()
        .map_err(|_| EventError::MalformedRecord {
            line,
            reason: format!("{name} is not a non-negative integer: `{}`", field.trim()),
        })
}

/// Parses one CSV record (without validating range or ordering).
fn parse_record(text: &str, line: usize) -> Result<(u64, u64, u64, Event), EventError> {
    let fields: Vec<&str> = text.split(',').collect();
    if !(4..=5).contains(&fields.len()) {
        return Err(EventError::MalformedRecord {
            line,
            reason: format!("expected 4 or 5 fields, got {}", fields.len()),
        });
    }
    let t = parse_int(fields[0], "t", line)?;
    let x = parse_int(fields[1], "x", line)?;
    let y = parse_int(fields[2], "y", line)?;
    let polarity = Polarity::from_bit(parse_bit(fields[3], "polarity", line)?);
    let label = match fields.get(4).map(|f| f.trim()) {
        None | Some("") => Label::Unknown,
        Some(f) => {
            if parse_bit(f, "label", line)? {
                Label::Signal
            } else {
                Label::Noise
            }
        }
    };
    let ev = Event {
        t,
        x: x.min(u64::from(u16::MAX)) as u16,
        y: y.min(u64::from(u16::MAX)) as u16,
        polarity,
        label,
    };
    Ok((t, x, y, ev))
}

/// Reads `t_us,x,y,p[,label]` records. Labels map 1→Signal, 0→Noise and
/// absent→Unknown. Extra trailing fields are rejected.
pub fn parse_csv<R: BufRead>(
    reader: R,
    geometry: SensorGeometry,
) -> Result<EventStream, EventError> {
    let mut events = Vec::new();
    let mut prev = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (t, x, y, ev) = parse_record(text, line_no)?;
        if x >= u64::from(geometry.width) || y >= u64::from(geometry.height) {
            return Err(EventError::CoordinateOutOfRange {
                line: line_no,
                x,
                y,
                width: geometry.width,
                height: geometry.height,
            });
        }
        if t < prev {
            return Err(EventError::NonMonotonicTimestamp {
                line: line_no,
                t,
                prev,
            });
        }
        prev = t;
        events.push(ev);
    }
    Ok(EventStream { geometry, events })
}

pub fn parse_csv_str(text: &str, geometry: SensorGeometry) -> Result<EventStream, EventError> {
    parse_csv(text.as_bytes(), geometry)
}

pub(crate) fn write_record<W: Write>(w: &mut W, e: &Event) -> std::io::Result<()> {
    write!(w, "{},{},{},{}", e.t, e.x, e.y, e.polarity.bit())?;
    match e.label {
        Label::Signal => w.write_all(b",1"),
        Label::Noise => w.write_all(b",0"),
        Label::Unknown => Ok(()),
    }
}

/// Writes one record per event; unlabeled events get four fields.
pub fn write_csv<W: Write>(stream: &EventStream, mut sink: W) -> Result<(), EventError> {
    for e in &stream.events {
        write_record(&mut sink, e)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Stable time-ordered merge that relabels events by origin. At equal
/// timestamps signal events come first.
pub fn merge_streams(signal: &EventStream, noise: &EventStream) -> Result<EventStream, EventError> {
    if signal.geometry != noise.geometry {
        return Err(EventError::GeometryMismatch(
            signal.geometry,
            noise.geometry,
        ));
    }
    let (s, n) = (&signal.events, &noise.events);
    let mut out = Vec::with_capacity(s.len() + n.len());
    let (mut i, mut j) = (0, 0);
    while i < s.len() && j < n.len() {
        if s[i].t <= n[j].t {
            out.push(s[i].with_label(Label::Signal));
            i += 1;
        } else {
            out.push(n[j].with_label(Label::Noise));
            j += 1;
        }
    }
    out.extend(s[i..].iter().map(|e| e.with_label(Label::Signal)));
    out.extend(n[j..].iter().map(|e| e.with_label(Label::Noise)));
    Ok(EventStream {
        geometry: signal.geometry,
        events: out,
    })
}
