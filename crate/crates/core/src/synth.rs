//! Labeled synthetic event streams: moving objects as signal, per-pixel
//! Poisson background activity as noise.
//!
//! Randomness comes from ChaCha8 ([`RNG_ALGORITHM`]) keyed with
//! `seed_from_u64(seed)`. Each noise pixel draws from its own ChaCha stream
//! (the row-major pixel index), so output does not depend on how pixels are
//! scheduled across threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{
    merge_streams, Event, EventError, EventStream, Label, Polarity, SensorGeometry,
};

pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9/seed_from_u64/stream-per-pixel";

// Streams reserved outside the pixel-index range.
const STREAM_JITTER: u64 = u64::MAX - 1;
const STREAM_SUBSET: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("scene leaves the {geometry} sensor: {reason}")]
    SceneOutOfBounds {
        geometry: SensorGeometry,
        reason: String,
    },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("noise rate must be finite and >= 0, got {0}")]
    InvalidRate(f64),
    #[error("noise ratio must be finite and >= 0, got {0}")]
    InvalidRatio(f64),
    #[error("cannot calibrate noise against an empty signal stream")]
    EmptySignal,
    #[error(transparent)]
    Event(#[from] EventError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-pixel Poisson rate in events per second.
    pub rate_hz: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    /// A bright `w x h` rectangle; `origin` is its top-left pixel at t = 0.
    Box { w: u16, h: u16 },
    /// A bright half-plane spanning the whole sensor across the motion axis;
    /// `origin` gives the position of its boundary along that axis.
    Edge,
    /// A square bob of side `bob` oscillating along the motion axis around
    /// `origin` as `amplitude * sin(2 pi t / period_us)`. `velocity` is
    /// ignored.
    Pendulum {
        amplitude: f64,
        period_us: u64,
        bob: u16,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Right,
    Left,
    Down,
    Up,
}

impl Direction {
    fn horizontal(self) -> bool {
        matches!(self, Direction::Right | Direction::Left)
    }

    fn sign(self) -> f64 {
        match self {
            Direction::Right | Direction::Down => 1.0,
            Direction::Left | Direction::Up => -1.0,
        }
    }
}

fn one() -> u32 {
    1
}

fn one_u64() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionScene {
    pub shape: Shape,
    /// `[x, y]`.
    pub origin: [u16; 2],
    #[serde(default)]
    pub direction: Direction,
    /// Pixels per second.
    #[serde(default)]
    pub velocity: f64,
    pub duration_us: u64,
    #[serde(default = "one")]
    pub events_per_crossing: u32,
    /// Spacing of the events of one crossing.
    #[serde(default = "one_u64")]
    pub burst_spacing_us: u64,
    /// Uniform timing jitter in `[0, jitter_us]` added to every event.
    #[serde(default)]
    pub jitter_us: u64,
}

impl MotionScene {
    pub fn new(
        shape: Shape,
        origin: [u16; 2],
        direction: Direction,
        velocity: f64,
        duration_us: u64,
    ) -> Self {
        Self {
            shape,
            origin,
            direction,
            velocity,
            duration_us,
            events_per_crossing: 1,
            burst_spacing_us: 1,
            jitter_us: 0,
        }
    }

    /// Microseconds between successive pixel crossings at constant velocity.
    pub fn crossing_interval_us(&self) -> f64 {
        1e6 / self.velocity.abs()
    }
}

/// One pixel-boundary crossing of an object edge.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    t_us: f64,
    /// Pixel index along the motion axis that turned on or off.
    pixel: i64,
    polarity: Polarity,
}

/// Crossings of an edge at `p(t)` moving with sign `dir` through boundary
/// `b`. `leading` is true when the object lies behind the edge.
fn crossing(t_us: f64, b: i64, moving_positive: bool, right_edge: bool) -> Crossing {
    // A right edge moving forward covers pixel b; moving back it uncovers b.
    // A left edge moving back covers pixel b-1; moving forward uncovers it.
    let (pixel, on) = match (right_edge, moving_positive) {
        (true, true) => (b, true),
        (true, false) => (b, false),
        (false, true) => (b - 1, false),
        (false, false) => (b - 1, true),
    };
    Crossing {
        t_us,
        pixel,
        polarity: Polarity::from_bit(on),
    }
}

/// Boundaries crossed by an edge starting at `p0` moving at `v` px/s for
/// `duration_us`. A crossing at t = 0 is kept only when it turns a pixel on.
fn linear_crossings(p0: f64, v: f64, right_edge: bool, duration_us: u64, out: &mut Vec<Crossing>) {
    if v == 0.0 || duration_us == 0 {
        return;
    }
    let forward = v > 0.0;
    let dur = duration_us as f64;
    let first = if forward { p0.ceil() } else { p0.floor() };
    let step = if forward { 1.0 } else { -1.0 };
    let mut b = first;
    loop {
        let t = (b - p0) / v * 1e6;
        if t >= dur {
            break;
        }
        let c = crossing(t, b as i64, forward, right_edge);
        if t > 0.0 || c.polarity == Polarity::On {
            out.push(c);
        }
        b += step;
    }
}

/// Crossings of an edge at `p0 + a sin(2 pi t / period)`.
fn oscillating_crossings(
    p0: f64,
    a: f64,
    period_us: f64,
    right_edge: bool,
    duration_us: u64,
    out: &mut Vec<Crossing>,
) {
    let dur = duration_us as f64;
    let omega = 2.0 * PI / period_us;
    let lo = (p0 - a).ceil() as i64;
    let hi = (p0 + a).floor() as i64;
    for b in lo..=hi {
        let r = (b as f64 - p0) / a;
        if r.abs() >= 1.0 {
            // Turning point: the edge touches the boundary without crossing.
            continue;
        }
        let base = r.asin();
        for theta in [base, PI - base] {
            let theta = theta.rem_euclid(2.0 * PI);
            let mut n = 0.0;
            loop {
                let t = (theta + 2.0 * PI * n) / omega;
                if t >= dur {
                    break;
                }
                let forward = (theta).cos() > 0.0;
                let c = crossing(t, b, forward, right_edge);
                if t > 0.0 || c.polarity == Polarity::On {
                    out.push(c);
                }
                n += 1.0;
            }
        }
    }
}

fn out_of_bounds(g: SensorGeometry, reason: impl Into<String>) -> SynthError {
    SynthError::SceneOutOfBounds {
        geometry: g,
        reason: reason.into(),
    }
}

/// Emits ON events where an object's leading edge enters a pixel and OFF
/// events where its trailing edge leaves one, at each pixel-boundary
/// crossing time (boundary distance / velocity, rounded to the microsecond).
/// All events are labeled Signal.
pub fn gen_signal(
    geometry: SensorGeometry,
    scene: &MotionScene,
    seed: u64,
) -> Result<EventStream, SynthError> {
    let horizontal = scene.direction.horizontal();
    let (len_along, len_across) = if horizontal {
        (i64::from(geometry.width()), i64::from(geometry.height()))
    } else {
        (i64::from(geometry.height()), i64::from(geometry.width()))
    };
    let (o_along, o_across) = if horizontal {
        (i64::from(scene.origin[0]), i64::from(scene.origin[1]))
    } else {
        (i64::from(scene.origin[1]), i64::from(scene.origin[0]))
    };
    if !scene.velocity.is_finite() {
        return Err(SynthError::InvalidScene("velocity must be finite".into()));
    }
    if scene.events_per_crossing == 0 {
        return Err(SynthError::InvalidScene(
            "events_per_crossing must be >= 1".into(),
        ));
    }
    let v = scene.velocity.abs() * scene.direction.sign();
    let dur_s = scene.duration_us as f64 / 1e6;

    let mut crossings = Vec::new();
    let (across_lo, across_hi) = match scene.shape {
        Shape::Box { w, h } => {
            let (size_along, size_across) = if horizontal { (w, h) } else { (h, w) };
            let (size_along, size_across) = (i64::from(size_along), i64::from(size_across));
            if size_along == 0 || size_across == 0 {
                return Err(SynthError::InvalidScene("box sides must be >= 1".into()));
            }
            let start = o_along as f64;
            let end = start + v * dur_s;
            if start.min(end) < 0.0 || start.max(end) + size_along as f64 > len_along as f64 {
                return Err(out_of_bounds(
                    geometry,
                    "box leaves the sensor along its motion axis",
                ));
            }
            if o_across + size_across > len_across {
                return Err(out_of_bounds(
                    geometry,
                    "box does not fit across its motion axis",
                ));
            }
            linear_crossings(start, v, false, scene.duration_us, &mut crossings);
            linear_crossings(
                start + size_along as f64,
                v,
                true,
                scene.duration_us,
                &mut crossings,
            );
            (o_across, o_across + size_across)
        }
        Shape::Edge => {
            if o_along > len_along {
                return Err(out_of_bounds(geometry, "edge starts outside the sensor"));
            }
            // Moving forward the bright side trails the edge, so the edge is
            // the object's right edge; moving back it is the left edge.
            linear_crossings(
                o_along as f64,
                v,
                v >= 0.0,
                scene.duration_us,
                &mut crossings,
            );
            (0, len_across)
        }
        Shape::Pendulum {
            amplitude,
            period_us,
            bob,
        } => {
            let bob = i64::from(bob);
            if !(amplitude.is_finite() && amplitude > 0.0) || period_us == 0 || bob == 0 {
                return Err(SynthError::InvalidScene(
                    "pendulum needs amplitude > 0, period_us > 0 and bob >= 1".into(),
                ));
            }
            let lo = o_along as f64 - amplitude;
            let hi = o_along as f64 + amplitude + bob as f64;
            if lo < 0.0 || hi > len_along as f64 {
                return Err(out_of_bounds(geometry, "pendulum swing leaves the sensor"));
            }
            if o_across + bob > len_across {
                return Err(out_of_bounds(
                    geometry,
                    "pendulum bob does not fit across its swing axis",
                ));
            }
            let p = period_us as f64;
            oscillating_crossings(
                o_along as f64,
                amplitude,
                p,
                false,
                scene.duration_us,
                &mut crossings,
            );
            oscillating_crossings(
                (o_along + bob) as f64,
                amplitude,
                p,
                true,
                scene.duration_us,
                &mut crossings,
            );
            (o_across, o_across + bob)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_JITTER);
    crossings.sort_by(|a, b| a.t_us.total_cmp(&b.t_us).then(a.pixel.cmp(&b.pixel)));
    let mut events = Vec::new();
    for c in &crossings {
        if c.pixel < 0 || c.pixel >= len_along {
            continue;
        }
        let t0 = c.t_us.round() as u64;
        for across in across_lo..across_hi {
            for j in 0..u64::from(scene.events_per_crossing) {
                let jitter = if scene.jitter_us > 0 {
                    rng.random_range(0..=scene.jitter_us)
                } else {
                    0
                };
                let t = t0 + j * scene.burst_spacing_us + jitter;
                let (x, y) = if horizontal {
                    (c.pixel, across)
                } else {
                    (across, c.pixel)
                };
                events
                    .push(Event::new(t, x as u16, y as u16, c.polarity).with_label(Label::Signal));
            }
        }
    }
    events.sort_by_key(|e| (e.t, e.y, e.x, e.polarity));
    Ok(EventStream::new(geometry, events)?)
}

/// Signal from several objects, merged in time order.
pub fn gen_signal_multi(
    geometry: SensorGeometry,
    scenes: &[MotionScene],
    seed: u64,
) -> Result<EventStream, SynthError> {
    let mut events = Vec::new();
    for (i, s) in scenes.iter().enumerate() {
        events.extend(gen_signal(geometry, s, seed.wrapping_add(i as u64))?.into_events());
    }
    events.sort_by_key(|e| (e.t, e.y, e.x, e.polarity));
    Ok(EventStream::new(geometry, events)?)
}

/// Independent Poisson processes of rate `model.rate_hz` at every pixel over
/// `[0, duration_us)`, random polarity, labeled Noise. Ties in time are
/// ordered by pixel index.
pub fn gen_noise(
    geometry: SensorGeometry,
    model: &NoiseModel,
    duration_us: u64,
) -> Result<EventStream, SynthError> {
    if !(model.rate_hz.is_finite() && model.rate_hz >= 0.0) {
        return Err(SynthError::InvalidRate(model.rate_hz));
    }
    if model.rate_hz == 0.0 || duration_us == 0 {
        return Ok(EventStream::empty(geometry));
    }
    let exp = Exp::new(model.rate_hz).expect("rate checked above");
    let dur = duration_us as f64;
    let width = usize::from(geometry.width());
    let mut events: Vec<(usize, Event)> = (0..geometry.pixel_count())
        .into_par_iter()
        .flat_map_iter(|pixel| {
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            rng.set_stream(pixel as u64);
            let x = (pixel % width) as u16;
            let y = (pixel / width) as u16;
            let mut t = 0.0f64;
            let mut out = Vec::new();
            loop {
                t += exp.sample(&mut rng) * 1e6;
                if t >= dur {
                    break;
                }
                let pol = Polarity::from_bit(rng.random::<bool>());
                out.push((
                    pixel,
                    Event::new(t as u64, x, y, pol).with_label(Label::Noise),
                ));
            }
            out
        })
        .collect();
    events.sort_by_key(|&(pixel, e)| (e.t, pixel));
    Ok(EventStream::new(
        geometry,
        events.into_iter().map(|(_, e)| e).collect(),
    )?)
}

/// Per-pixel rate giving `target_ratio * signal_len` expected noise events
/// over `duration_us`.
pub fn calibrated_rate(
    geometry: SensorGeometry,
    signal_len: usize,
    target_ratio: f64,
    duration_us: u64,
) -> f64 {
    let want = target_ratio * signal_len as f64;
    want / (geometry.pixel_count() as f64 * (duration_us.max(1) as f64 / 1e6))
}

/// Adds background activity so that `#noise / #signal` hits `target_ratio`.
///
/// The rate is calibrated to the signal's time span, a Poisson field is drawn
/// at a slightly higher rate, and a uniformly random subset of exactly
/// `round(target_ratio * #signal)` noise events is kept. Thinning a Poisson
/// field to a fixed count leaves the kept events i.i.d. uniform over pixels
/// and time, the same law as a Poisson field conditioned on that count.
/// `model.rate_hz` is ignored; `model.seed` drives the draw.
pub fn mix_to_ratio(
    signal: &EventStream,
    model: &NoiseModel,
    target_ratio: f64,
) -> Result<EventStream, SynthError> {
    if signal.is_empty() {
        return Err(SynthError::EmptySignal);
    }
    if !(target_ratio.is_finite() && target_ratio >= 0.0) {
        return Err(SynthError::InvalidRatio(target_ratio));
    }
    let g = signal.geometry();
    let want = (target_ratio * signal.len() as f64).round() as usize;
    if want == 0 {
        return Ok(merge_streams(signal, &EventStream::empty(g))?);
    }
    let duration = signal.events().last().map_or(1, |e| e.t + 1);
    let base = calibrated_rate(g, signal.len(), target_ratio, duration);
    let mut oversample = 1.2;
    let noise = loop {
        let n = gen_noise(
            g,
            &NoiseModel {
                rate_hz: base * oversample,
                seed: model.seed,
            },
            duration,
        )?;
        if n.len() >= want {
            break n;
        }
        oversample *= 1.5;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(STREAM_SUBSET);
    let mut keep = rand::seq::index::sample(&mut rng, noise.len(), want).into_vec();
    keep.sort_unstable();
    let events = noise.events();
    let kept = EventStream::new(g, keep.into_iter().map(|i| events[i]).collect())?;
    Ok(merge_streams(signal, &kept)?)
}

/// A complete labeled dataset recipe: objects on a sensor plus background
/// activity at a fixed noise-to-signal ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub geometry: SensorGeometry,
    pub scenes: Vec<MotionScene>,
    #[serde(default)]
    pub noise_ratio: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<EventStream, SynthError> {
        let signal = gen_signal_multi(self.geometry, &self.scenes, self.seed)?;
        if self.noise_ratio == 0.0 {
            return Ok(signal);
        }
        mix_to_ratio(
            &signal,
            &NoiseModel {
                rate_hz: 0.0,
                seed: self.seed,
            },
            self.noise_ratio,
        )
    }

    /// The demo scene at the given ratio and seed.
    pub fn demo(noise_ratio: f64, seed: u64) -> Self {
        let (geometry, scenes) = demo_scene();
        Self {
            geometry,
            scenes,
            noise_ratio,
            seed,
        }
    }
}

/// Scene used by the acceptance suite and the demo sweep, on a 346x260
/// sensor for 80 ms: three boxes moving right, left and down, and a
/// pendulum. Pixel-crossing intervals lie between about 250 and 500 us (the
/// pendulum slows further near its turning points), the range a 200-400 us
/// correlation window is meant for.
pub fn demo_scene() -> (SensorGeometry, Vec<MotionScene>) {
    let g = SensorGeometry::new(346, 260).expect("static geometry");
    let dur = 80_000;
    let jittered = |mut s: MotionScene| {
        s.jitter_us = 30;
        s
    };
    let scenes = vec![
        jittered(MotionScene::new(
            Shape::Box { w: 24, h: 18 },
            [4, 30],
            Direction::Right,
            3500.0,
            dur,
        )),
        jittered(MotionScene::new(
            Shape::Box { w: 16, h: 24 },
            [300, 150],
            Direction::Left,
            2500.0,
            dur,
        )),
        jittered(MotionScene::new(
            Shape::Box { w: 30, h: 12 },
            [150, 10],
            Direction::Down,
            2000.0,
            dur,
        )),
        jittered(MotionScene::new(
            Shape::Pendulum {
                amplitude: 80.0,
                period_us: 160_000,
                bob: 10,
            },
            [200, 210],
            Direction::Right,
            0.0,
            dur,
        )),
    ];
    (g, scenes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_scene(duration_us: u64) -> MotionScene {
        MotionScene::new(Shape::Edge, [0, 0], Direction::Right, 1000.0, duration_us)
    }

    #[test]
    fn zero_duration_is_empty() {
        let g = SensorGeometry::new(10, 1).unwrap();
        assert!(gen_signal(g, &edge_scene(0), 0).unwrap().is_empty());
    }

    #[test]
    fn edge_crossing_times() {
        let g = SensorGeometry::new(10, 1).unwrap();
        let s = gen_signal(g, &edge_scene(10_000), 0).unwrap();
        let got: Vec<(u64, u16, Polarity)> =
            s.events().iter().map(|e| (e.t, e.x, e.polarity)).collect();
        let want: Vec<_> = (0..10u16)
            .map(|c| (u64::from(c) * 1000, c, Polarity::On))
            .collect();
        assert_eq!(got, want);
        assert!(s.events().iter().all(|e| e.label == Label::Signal));
    }

    #[test]
    fn leftward_edge_enters_from_right() {
        let g = SensorGeometry::new(10, 2).unwrap();
        let scene = MotionScene::new(Shape::Edge, [10, 0], Direction::Left, 1000.0, 3_500);
        let s = gen_signal(g, &scene, 0).unwrap();
        let cols: Vec<(u64, u16)> = s.events().iter().map(|e| (e.t, e.x)).collect();
        assert_eq!(
            cols,
            vec![
                (0, 9),
                (0, 9),
                (1000, 8),
                (1000, 8),
                (2000, 7),
                (2000, 7),
                (3000, 6),
                (3000, 6)
            ]
        );
    }

    #[test]
    fn box_emits_leading_on_and_trailing_off() {
        let g = SensorGeometry::new(32, 8).unwrap();
        let scene = MotionScene::new(
            Shape::Box { w: 4, h: 2 },
            [2, 3],
            Direction::Right,
            1000.0,
            3_000,
        );
        let s = gen_signal(g, &scene, 0).unwrap();
        let on: Vec<(u64, u16)> = s
            .events()
            .iter()
            .filter(|e| e.polarity == Polarity::On && e.y == 3)
            .map(|e| (e.t, e.x))
            .collect();
        assert_eq!(on, vec![(0, 6), (1000, 7), (2000, 8)]);
        let off: Vec<(u64, u16)> = s
            .events()
            .iter()
            .filter(|e| e.polarity == Polarity::Off && e.y == 3)
            .map(|e| (e.t, e.x))
            .collect();
        assert_eq!(off, vec![(1000, 2), (2000, 3)]);
        assert!(s.events().iter().all(|e| (3..5).contains(&e.y)));
    }

    #[test]
    fn vertical_box() {
        let g = SensorGeometry::new(8, 32).unwrap();
        let scene = MotionScene::new(
            Shape::Box { w: 3, h: 2 },
            [1, 20],
            Direction::Up,
            1000.0,
            2_000,
        );
        let s = gen_signal(g, &scene, 0).unwrap();
        // Moving up, the top edge leads: row 19 turns on at t = 0.
        let first: Vec<(u16, u16, Polarity)> = s
            .events()
            .iter()
            .filter(|e| e.t == 0)
            .map(|e| (e.x, e.y, e.polarity))
            .collect();
        assert_eq!(
            first,
            vec![
                (1, 19, Polarity::On),
                (2, 19, Polarity::On),
                (3, 19, Polarity::On)
            ]
        );
        assert!(s
            .events()
            .iter()
            .any(|e| e.t == 1000 && e.y == 21 && e.polarity == Polarity::Off));
    }

    #[test]
    fn box_out_of_bounds() {
        let g = SensorGeometry::new(32, 8).unwrap();
        let scene = MotionScene::new(
            Shape::Box { w: 4, h: 2 },
            [20, 3],
            Direction::Right,
            1000.0,
            20_000,
        );
        assert!(matches!(
            gen_signal(g, &scene, 0),
            Err(SynthError::SceneOutOfBounds { .. })
        ));
        let scene = MotionScene::new(
            Shape::Box { w: 4, h: 9 },
            [0, 0],
            Direction::Right,
            10.0,
            1_000,
        );
        assert!(matches!(
            gen_signal(g, &scene, 0),
            Err(SynthError::SceneOutOfBounds { .. })
        ));
    }

    #[test]
    fn pendulum_stays_in_swing_and_alternates() {
        let g = SensorGeometry::new(64, 16).unwrap();
        let scene = MotionScene::new(
            Shape::Pendulum {
                amplitude: 10.0,
                period_us: 40_000,
                bob: 3,
            },
            [20, 5],
            Direction::Right,
            0.0,
            80_000,
        );
        let s = gen_signal(g, &scene, 0).unwrap();
        assert!(!s.is_empty());
        assert!(s
            .events()
            .iter()
            .all(|e| (9..=33).contains(&e.x) && (5..8).contains(&e.y)));
        assert!(s.events().iter().any(|e| e.polarity == Polarity::Off));
        let too_wide = MotionScene {
            origin: [5, 5],
            ..scene
        };
        assert!(gen_signal(g, &too_wide, 0).is_err());
    }

    #[test]
    fn bursts_and_jitter() {
        let g = SensorGeometry::new(10, 1).unwrap();
        let mut scene = edge_scene(2_000);
        scene.events_per_crossing = 3;
        scene.burst_spacing_us = 2;
        let s = gen_signal(g, &scene, 0).unwrap();
        let ts: Vec<u64> = s.events().iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![0, 2, 4, 1000, 1002, 1004]);
        scene.jitter_us = 30;
        let a = gen_signal(g, &scene, 9).unwrap();
        let b = gen_signal(g, &scene, 9).unwrap();
        assert_eq!(a, b);
        assert!(a
            .events()
            .iter()
            .zip(s.events())
            .all(|(j, e)| j.t >= e.t && j.t <= e.t + 30 + 4));
    }

    #[test]
    fn noise_zero_rate_and_determinism() {
        let g = SensorGeometry::new(16, 16).unwrap();
        let z = gen_noise(
            g,
            &NoiseModel {
                rate_hz: 0.0,
                seed: 1,
            },
            1_000_000,
        )
        .unwrap();
        assert!(z.is_empty());
        let m = NoiseModel {
            rate_hz: 20.0,
            seed: 42,
        };
        let a = gen_noise(g, &m, 500_000).unwrap();
        let b = gen_noise(g, &m, 500_000).unwrap();
        assert_eq!(a, b);
        assert!(a
            .events()
            .iter()
            .all(|e| e.label == Label::Noise && e.t < 500_000));
        assert!(gen_noise(
            g,
            &NoiseModel {
                rate_hz: -1.0,
                seed: 0
            },
            10
        )
        .is_err());
    }

    #[test]
    fn noise_count_matches_poisson_mean() {
        let g = SensorGeometry::new(64, 64).unwrap();
        for seed in 0..5 {
            let n = gen_noise(g, &NoiseModel { rate_hz: 1.0, seed }, 1_000_000)
                .unwrap()
                .len() as f64;
            assert!((n - 4096.0).abs() <= 3.0 * 64.0, "seed {seed}: {n}");
        }
    }

    #[test]
    fn mix_hits_ratio() {
        let g = SensorGeometry::new(64, 64).unwrap();
        let scene = MotionScene::new(
            Shape::Box { w: 5, h: 5 },
            [2, 2],
            Direction::Right,
            500.0,
            100_000,
        );
        let signal = gen_signal(g, &scene, 0).unwrap();
        // 50 leading crossings (t = 0 included) and 49 trailing, 5 rows each.
        assert_eq!(signal.len(), 495);
        let m = mix_to_ratio(
            &signal,
            &NoiseModel {
                rate_hz: 0.0,
                seed: 3,
            },
            0.0,
        )
        .unwrap();
        assert_eq!(m, signal);
        let m = mix_to_ratio(
            &signal,
            &NoiseModel {
                rate_hz: 0.0,
                seed: 3,
            },
            2.0,
        )
        .unwrap();
        assert_eq!(m.count_label(Label::Noise), 990);
        assert_eq!(m.count_label(Label::Signal), 495);
        assert!(matches!(
            mix_to_ratio(
                &EventStream::empty(g),
                &NoiseModel {
                    rate_hz: 0.0,
                    seed: 0
                },
                1.0
            ),
            Err(SynthError::EmptySignal)
        ));
    }

    #[test]
    fn demo_scene_generates() {
        let (g, scenes) = demo_scene();
        let s = gen_signal_multi(g, &scenes, 1).unwrap();
        assert!(s.len() > 1000);
    }
}
