#![allow(dead_code)]

use clf_core::events::{Event, EventStream, Polarity, SensorGeometry};
use clf_core::synth::{gen_signal_multi, mix_to_ratio, Direction, MotionScene, NoiseModel, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 64x64 stream of exactly `len` events: a few moving boxes plus Poisson
/// background activity, truncated to length.
pub fn mixed_stream(seed: u64, len: usize) -> EventStream {
    let g = SensorGeometry::new(64, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = 200_000;
    let scenes: Vec<MotionScene> = (0..rng.random_range(2..=4))
        .map(|_| {
            let w = rng.random_range(3..10u16);
            let h = rng.random_range(3..10u16);
            let dir = [
                Direction::Right,
                Direction::Left,
                Direction::Down,
                Direction::Up,
            ][rng.random_range(0..4)];
            // Start on the side the box moves away from.
            let lo = 2u16;
            let hi = 64 - 2 - w.max(h);
            let (along_start, across) = match dir {
                Direction::Right | Direction::Down => (lo, rng.random_range(0..64 - w.max(h))),
                Direction::Left | Direction::Up => (hi, rng.random_range(0..64 - w.max(h))),
            };
            let origin = if matches!(dir, Direction::Right | Direction::Left) {
                [along_start, across]
            } else {
                [across, along_start]
            };
            let travel = f64::from(hi - lo) - 1.0;
            let v = rng.random_range(100.0..travel / (duration as f64 / 1e6));
            let mut s = MotionScene::new(Shape::Box { w, h }, origin, dir, v, duration);
            s.events_per_crossing = rng.random_range(1..=3);
            s.burst_spacing_us = rng.random_range(1..40);
            s.jitter_us = rng.random_range(0..100);
            s
        })
        .collect();
    let signal = gen_signal_multi(g, &scenes, seed).unwrap();
    let ratio = (len as f64 / signal.len() as f64 - 1.0).max(0.5) * 1.1;
    let mixed = mix_to_ratio(&signal, &NoiseModel { rate_hz: 0.0, seed }, ratio).unwrap();
    assert!(
        mixed.len() >= len,
        "seed {seed}: only {} events",
        mixed.len()
    );
    mixed.truncated(len)
}

/// Uniformly random events with non-decreasing timestamps.
pub fn random_stream(seed: u64, g: SensorGeometry, len: usize, max_step: u64) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0;
    let events = (0..len)
        .map(|_| {
            t += rng.random_range(0..=max_step);
            Event::new(
                t,
                rng.random_range(0..g.width()),
                rng.random_range(0..g.height()),
                Polarity::from_bit(rng.random()),
            )
        })
        .collect();
    EventStream::new(g, events).unwrap()
}

/// Largest number of events sharing one row or one column.
pub fn max_line_load(s: &EventStream) -> u32 {
    let g = s.geometry();
    let mut rows = vec![0u32; g.height().into()];
    let mut cols = vec![0u32; g.width().into()];
    for e in s.events() {
        rows[usize::from(e.y)] += 1;
        cols[usize::from(e.x)] += 1;
    }
    rows.into_iter().chain(cols).max().unwrap_or(1).max(1)
}
