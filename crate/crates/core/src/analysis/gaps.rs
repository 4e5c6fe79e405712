use serde::{Deserialize, Serialize};

use crate::events::EventStream;

pub const DEFAULT_BINS: usize = 64;
const LOG_MIN_US: f64 = 0.0;
const LOG_MAX_US: f64 = 6.0;

/// Histogram of the delay between each event and the most recent earlier
/// event in its window. Finite gaps in `[1 us, 1 s)` are binned on a log
/// scale; gaps of 0, gaps of 1 s or more, and events with no predecessor are
/// counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    /// `bins + 1` bin edges in microseconds.
    pub edges_us: Vec<f64>,
    pub counts: Vec<u64>,
    pub zero: u64,
    pub overflow: u64,
    pub infinite: u64,
    pub p50_us: Option<u64>,
    pub p90_us: Option<u64>,
    pub p99_us: Option<u64>,
}

impl GapHistogram {
    pub fn finite(&self) -> u64 {
        self.zero + self.overflow + self.counts.iter().sum::<u64>()
    }

    /// Bin holding `gap_us`, if it falls inside `[1 us, 1 s)`.
    pub fn bin_of(&self, gap_us: u64) -> Option<usize> {
        bin_of(gap_us, self.counts.len())
    }
}

fn bin_of(gap_us: u64, bins: usize) -> Option<usize> {
    if gap_us == 0 {
        return None;
    }
    let pos = ((gap_us as f64).log10() - LOG_MIN_US) / (LOG_MAX_US - LOG_MIN_US) * bins as f64;
    let b = pos.floor() as usize;
    (b < bins).then_some(b)
}

pub fn time_gap_stats(stream: &EventStream, d_th: u32) -> GapHistogram {
    time_gap_stats_with_bins(stream, d_th, DEFAULT_BINS)
}

pub fn time_gap_stats_with_bins(stream: &EventStream, d_th: u32, bins: usize) -> GapHistogram {
    let g = stream.geometry();
    let (w, h) = (u32::from(g.width()), u32::from(g.height()));
    let mut last: Vec<Option<u64>> = vec![None; g.pixel_count()];
    let mut counts = vec![0u64; bins];
    let (mut zero, mut overflow, mut infinite) = (0, 0, 0);
    let mut gaps = Vec::with_capacity(stream.len());
    for e in stream.events() {
        let (x, y) = (u32::from(e.x), u32::from(e.y));
        let mut recent: Option<u64> = None;
        for yy in y.saturating_sub(d_th)..=(y + d_th).min(h - 1) {
            for xx in x.saturating_sub(d_th)..=(x + d_th).min(w - 1) {
                if let Some(t) = last[(yy * w + xx) as usize] {
                    recent = Some(recent.map_or(t, |r| r.max(t)));
                }
            }
        }
        match recent {
            None => infinite += 1,
            Some(t) => {
                let gap = e.t - t;
                gaps.push(gap);
                if gap == 0 {
                    zero += 1;
                } else if let Some(b) = bin_of(gap, bins) {
                    counts[b] += 1;
                } else {
                    overflow += 1;
                }
            }
        }
        last[g.pixel_index(e.x, e.y)] = Some(e.t);
    }
    gaps.sort_unstable();
    let q = |p: f64| -> Option<u64> {
        if gaps.is_empty() {
            return None;
        }
        let i = ((p * gaps.len() as f64).ceil() as usize).clamp(1, gaps.len()) - 1;
        Some(gaps[i])
    };
    let edges_us = (0..=bins)
        .map(|i| 10f64.powf(LOG_MIN_US + (LOG_MAX_US - LOG_MIN_US) * i as f64 / bins as f64))
        .collect();
    GapHistogram {
        edges_us,
        counts,
        zero,
        overflow,
        infinite,
        p50_us: q(0.5),
        p90_us: q(0.9),
        p99_us: q(0.99),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity, SensorGeometry};

    fn stream(evs: &[(u64, u16, u16)]) -> EventStream {
        let g = SensorGeometry::new(16, 16).unwrap();
        EventStream::new(
            g,
            evs.iter()
                .map(|&(t, x, y)| Event::new(t, x, y, Polarity::On))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_event_is_infinite() {
        let h = time_gap_stats(&stream(&[(5, 1, 1)]), 1);
        assert_eq!(h.infinite, 1);
        assert_eq!(h.finite(), 0);
        assert_eq!(h.p50_us, None);
    }

    #[test]
    fn same_pixel_gap() {
        let h = time_gap_stats(&stream(&[(0, 3, 3), (100, 3, 3)]), 1);
        assert_eq!(h.infinite, 1);
        assert_eq!(h.finite(), 1);
        let b = h.bin_of(100).unwrap();
        assert_eq!(h.counts[b], 1);
        assert!(h.edges_us[b] <= 100.0 && 100.0 < h.edges_us[b + 1]);
        assert_eq!(h.p99_us, Some(100));
    }

    #[test]
    fn window_and_outliers() {
        let h = time_gap_stats(
            &stream(&[(0, 3, 3), (0, 4, 4), (10, 6, 6), (2_000_000, 5, 5)]),
            1,
        );
        // (4,4) sees (3,3) at gap 0, (6,6) has no neighbor, (5,5) sees (6,6) 2 s later.
        assert_eq!((h.zero, h.infinite, h.overflow), (1, 2, 1));
        assert_eq!(h.edges_us.len(), 65);
        assert!((h.edges_us[64] - 1e6).abs() < 1e-6);
    }
}
