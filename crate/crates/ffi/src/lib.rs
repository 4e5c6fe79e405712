//! C ABI over `clf-core`.
//!
//! Every fallible function returns a [`ClfStatus`]. On failure a description
//! of the error is kept per thread and can be read with
//! [`clf_last_error_message`] until the next failing call on that thread.
//! Filters are opaque handles created by [`clf_filter_new`] and released with
//! [`clf_filter_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clf_core::events::EventError;
use clf_core::filters::{
    build_filter, memory_footprint_bits, required_banks, ConfigError, FilterError, FilterKind,
};
use clf_core::pipeline::{simulate, PipelineError};
use clf_core::{ClfConfig, Decision, Denoiser, Event, EventStream, Polarity, SensorGeometry};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration JSON was malformed or violates an invariant.
    InvalidConfig = 3,
    /// Width or height outside `1..=2048`.
    InvalidGeometry = 4,
    /// An event lies outside the sensor, or has a polarity other than 0 or 1.
    InvalidEvent = 5,
    /// Timestamps of a batch decrease.
    NonMonotonic = 6,
    /// The configuration is valid but the requested model does not support it.
    Unsupported = 7,
    /// A panic was caught at the boundary. The handle involved, if any,
    /// should be freed.
    Internal = 8,
}

/// Filter family selected at creation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClfFilterKind {
    Clf = 0,
    Baf = 1,
    Stcf = 2,
    Rcf = 3,
    Ssm = 4,
    Oracle = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClfEvent {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    /// 1 for ON, 0 for OFF.
    pub polarity: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClfDecision {
    pub is_signal: bool,
    /// Correlated entries found.
    pub count: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClfPipelineStats {
    pub total_cycles: u64,
    pub reads_issued: u64,
    pub reads_cancelled: u64,
    pub writes: u64,
    pub stalls: u64,
    pub latency_min: u64,
    pub latency_max: u64,
    pub latency_mean: f64,
}

/// Opaque filter handle.
pub struct ClfFilter {
    inner: Box<dyn Denoiser + Send>,
    geometry: SensorGeometry,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ClfStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(ClfStatus::NullPointer, format!("{what} must not be null"))
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(ClfStatus::InvalidConfig, e.to_string())
    }
}

impl From<EventError> for Failure {
    fn from(e: EventError) -> Self {
        let status = match e {
            EventError::InvalidGeometry { .. } => ClfStatus::InvalidGeometry,
            EventError::NonMonotonicTimestamp { .. } => ClfStatus::NonMonotonic,
            _ => ClfStatus::InvalidEvent,
        };
        Failure(status, e.to_string())
    }
}

impl From<FilterError> for Failure {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::Config(c) => c.into(),
            other => Failure(ClfStatus::InvalidEvent, other.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => c.into(),
            PipelineError::Filter(f) => f.into(),
            other => Failure(ClfStatus::Unsupported, other.to_string()),
        }
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|&b| b != 0);
        CString::new(bytes).expect("nul bytes removed")
    });
    LAST_ERROR.with(|l| *l.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ClfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            ClfStatus::Internal
        }
    }
}

/// # Safety
/// `json` must be null or a valid nul-terminated string.
unsafe fn parse_config(json: *const c_char) -> Result<ClfConfig, Failure> {
    if json.is_null() {
        return Ok(ClfConfig::default());
    }
    let text = CStr::from_ptr(json)
        .to_str()
        .map_err(|e| Failure(ClfStatus::InvalidUtf8, format!("config: {e}")))?;
    let config: ClfConfig = serde_json::from_str(text)
        .map_err(|e| Failure(ClfStatus::InvalidConfig, format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

fn geometry(width: u32, height: u32) -> Result<SensorGeometry, Failure> {
    Ok(SensorGeometry::new(width, height)?)
}

fn to_event(e: &ClfEvent) -> Result<Event, Failure> {
    let polarity = match e.polarity {
        0 => Polarity::Off,
        1 => Polarity::On,
        p => {
            return Err(Failure(
                ClfStatus::InvalidEvent,
                format!("polarity must be 0 or 1, got {p}"),
            ))
        }
    };
    Ok(Event::new(e.t, e.x, e.y, polarity))
}

fn to_decision(d: Decision) -> ClfDecision {
    ClfDecision {
        is_signal: d.is_signal,
        count: d.count,
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice_in<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or point to `len` writable values.
unsafe fn slice_out<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn clf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread, or null if none failed
/// yet. The string stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn clf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|l| l.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Smallest valid bank count for a window of `window_side` lines: the next
/// power of two. Returns 0 for a side of 0.
#[no_mangle]
pub extern "C" fn clf_required_banks(window_side: u32) -> u32 {
    if window_side == 0 {
        0
    } else {
        required_banks(window_side)
    }
}

/// Creates a filter. `config_json` holds a configuration object (null for
/// the defaults); baseline filters use its `params` and, for RCF, `bw_t` and
/// `quant_unit`. `ssm_r` is the SSM cell size and is ignored by other kinds.
///
/// # Safety
/// `config_json` must be null or a valid nul-terminated string; `out` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn clf_filter_new(
    kind: ClfFilterKind,
    ssm_r: u32,
    config_json: *const c_char,
    width: u32,
    height: u32,
    out: *mut *mut ClfFilter,
) -> ClfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let config = parse_config(config_json)?;
        let geometry = geometry(width, height)?;
        let kind = match kind {
            ClfFilterKind::Clf => FilterKind::Clf,
            ClfFilterKind::Baf => FilterKind::Baf,
            ClfFilterKind::Stcf => FilterKind::Stcf,
            ClfFilterKind::Rcf => FilterKind::Rcf,
            ClfFilterKind::Ssm => FilterKind::Ssm(ssm_r),
            ClfFilterKind::Oracle => FilterKind::Oracle,
        };
        let inner = build_filter(kind, &config, geometry)?;
        *out = Box::into_raw(Box::new(ClfFilter { inner, geometry }));
        Ok(())
    })
}

/// Releases a filter. Null is ignored.
///
/// # Safety
/// `filter` must be null or a handle from [`clf_filter_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn clf_filter_free(filter: *mut ClfFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Sensor width and height the filter was created for.
///
/// # Safety
/// `filter` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clf_filter_geometry(
    filter: *const ClfFilter,
    width: *mut u32,
    height: *mut u32,
) -> ClfStatus {
    guard(|| {
        let f = filter.as_ref().ok_or_else(|| Failure::null("filter"))?;
        let (w, h) = (width.as_mut(), height.as_mut());
        let (Some(w), Some(h)) = (w, h) else {
            return Err(Failure::null("width and height"));
        };
        *w = u32::from(f.geometry.width());
        *h = u32::from(f.geometry.height());
        Ok(())
    })
}

/// Classifies one event and stores it.
///
/// # Safety
/// `filter` must be a live handle, `event` readable and `decision` writable.
#[no_mangle]
pub unsafe extern "C" fn clf_filter_process(
    filter: *mut ClfFilter,
    event: *const ClfEvent,
    decision: *mut ClfDecision,
) -> ClfStatus {
    guard(|| {
        let f = filter.as_mut().ok_or_else(|| Failure::null("filter"))?;
        let e = event.as_ref().ok_or_else(|| Failure::null("event"))?;
        let d = decision.as_mut().ok_or_else(|| Failure::null("decision"))?;
        *d = to_decision(f.inner.process(&to_event(e)?)?);
        Ok(())
    })
}

/// Classifies `len` events in order. Processing stops at the first invalid
/// event; `processed` (if not null) receives the number of events handled,
/// whose decisions are valid.
///
/// # Safety
/// `filter` must be a live handle, `events` readable and `decisions` writable
/// for `len` elements, and `processed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn clf_filter_process_batch(
    filter: *mut ClfFilter,
    events: *const ClfEvent,
    len: usize,
    decisions: *mut ClfDecision,
    processed: *mut usize,
) -> ClfStatus {
    if let Some(p) = processed.as_mut() {
        *p = 0;
    }
    guard(|| {
        let f = filter.as_mut().ok_or_else(|| Failure::null("filter"))?;
        let events = slice_in(events, len, "events")?;
        let decisions = slice_out(decisions, len, "decisions")?;
        for (i, (e, d)) in events.iter().zip(decisions.iter_mut()).enumerate() {
            let event =
                to_event(e).map_err(|Failure(s, m)| Failure(s, format!("event {i}: {m}")))?;
            let out = f.inner.process(&event).map_err(|e| {
                let Failure(s, m) = e.into();
                Failure(s, format!("event {i}: {m}"))
            })?;
            *d = to_decision(out);
            if let Some(p) = processed.as_mut() {
                *p = i + 1;
            }
        }
        Ok(())
    })
}

/// Clears the filter's memory.
///
/// # Safety
/// `filter` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn clf_filter_reset(filter: *mut ClfFilter) -> ClfStatus {
    guard(|| {
        let f = filter.as_mut().ok_or_else(|| Failure::null("filter"))?;
        f.inner.reset();
        Ok(())
    })
}

/// Storage bits of a CLF configuration on a `width x height` sensor.
///
/// # Safety
/// `config_json` must be null or a valid nul-terminated string; `bits` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn clf_memory_footprint_bits(
    config_json: *const c_char,
    width: u32,
    height: u32,
    bits: *mut u64,
) -> ClfStatus {
    guard(|| {
        let out = bits.as_mut().ok_or_else(|| Failure::null("bits"))?;
        let config = parse_config(config_json)?;
        *out = memory_footprint_bits(&config, &geometry(width, height)?);
        Ok(())
    })
}

/// Runs the cycle-level datapath model over `len` events with
/// non-decreasing timestamps. The configuration's `pipelined` flag selects
/// the two-stage or the sequential model. `decisions` may be null; otherwise
/// it receives `len` decisions.
///
/// # Safety
/// `config_json` must be null or a valid nul-terminated string, `events`
/// readable for `len` elements, `decisions` null or writable for `len`
/// elements, and `stats` writable.
#[no_mangle]
pub unsafe extern "C" fn clf_pipeline_run(
    config_json: *const c_char,
    width: u32,
    height: u32,
    events: *const ClfEvent,
    len: usize,
    decisions: *mut ClfDecision,
    stats: *mut ClfPipelineStats,
) -> ClfStatus {
    guard(|| {
        let stats = stats.as_mut().ok_or_else(|| Failure::null("stats"))?;
        let config = parse_config(config_json)?;
        let geometry = geometry(width, height)?;
        let events = slice_in(events, len, "events")?
            .iter()
            .map(to_event)
            .collect::<Result<Vec<_>, _>>()?;
        let stream = EventStream::new(geometry, events)?;
        let run = simulate(&config, &stream, false)?;
        if !decisions.is_null() {
            let out = slice_out(decisions, len, "decisions")?;
            for (o, d) in out.iter_mut().zip(&run.decisions) {
                *o = to_decision(*d);
            }
        }
        let s = &run.stats;
        *stats = ClfPipelineStats {
            total_cycles: s.total_cycles,
            reads_issued: s.reads_issued,
            reads_cancelled: s.reads_cancelled,
            writes: s.writes,
            stalls: s.stalls,
            latency_min: s.latency_min,
            latency_max: s.latency_max,
            latency_mean: s.latency_mean,
        };
        Ok(())
    })
}
