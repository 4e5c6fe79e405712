use crate::events::{Event, SensorGeometry};

use super::config::{ClfConfig, ConfigError};
use super::memory::{quantize_ts, MemoryModule, Probe, StoredEvent};
use super::{check_range, window, Decision, Denoiser, FilterError};

/// Cache-like filter: a row module (one block per sensor row, storing x)
/// and a column module (one block per column, storing y).
///
/// For each event the blocks of rows `y - D_th ..= y + D_th` and columns
/// `x - D_th ..= x + D_th` are scanned against the pre-write memory, the two
/// module counts are summed, and the event is then written into its own row
/// and column blocks regardless of the decision.
#[derive(Debug, Clone)]
pub struct Clf {
    config: ClfConfig,
    geometry: SensorGeometry,
    rows: Option<MemoryModule>,
    cols: Option<MemoryModule>,
    quant_unit: u64,
    // log2(quant_unit) when it is a power of two.
    quant_shift: Option<u32>,
    t_th_ticks: u64,
    mask: u64,
}

impl Clf {
    pub fn new(config: ClfConfig, geometry: SensorGeometry) -> Result<Self, ConfigError> {
        config.validate()?;
        let rows = config
            .enable_rdm
            .then(|| MemoryModule::new(geometry.height().into(), config.n_rm, config.s_rm));
        let cols = config
            .enable_cdm
            .then(|| MemoryModule::new(geometry.width().into(), config.n_cm, config.s_cm));
        Ok(Self {
            config,
            geometry,
            rows,
            cols,
            quant_unit: config.quant_unit(),
            quant_shift: config
                .quant_unit()
                .is_power_of_two()
                .then(|| config.quant_unit().trailing_zeros()),
            t_th_ticks: config.t_th_ticks(),
            mask: config.tick_mask(),
        })
    }

    pub fn config(&self) -> &ClfConfig {
        &self.config
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn row_memory(&self) -> Option<&MemoryModule> {
        self.rows.as_ref()
    }

    pub fn col_memory(&self) -> Option<&MemoryModule> {
        self.cols.as_ref()
    }

    #[inline]
    pub fn quantize(&self, t: u64) -> u64 {
        match self.quant_shift {
            Some(k) => (t >> k) & self.mask,
            None => quantize_ts(t, self.quant_unit, self.config.bw_t),
        }
    }

    fn probe(&self, coord: u16, tq: u64, e: &Event) -> Probe {
        Probe {
            coord,
            tq,
            polarity: self.config.same_polarity_only.then_some(e.polarity),
            d_th: self.config.params.d_th,
            t_th_ticks: self.t_th_ticks,
            mask: self.mask,
        }
    }

    /// Row-module and column-module counts for `e` against current memory,
    /// without storing it.
    pub fn module_counts(&self, e: &Event) -> (u32, u32) {
        self.counts_at(e, self.quantize(e.t))
    }

    #[inline]
    fn counts_at(&self, e: &Event, tq: u64) -> (u32, u32) {
        let d = self.config.params.d_th;
        let row_count = self.rows.as_ref().map_or(0, |m| {
            let p = self.probe(e.x, tq, e);
            m.count_lines(window(e.y, d, self.geometry.height()), &p)
        });
        let col_count = self.cols.as_ref().map_or(0, |m| {
            let p = self.probe(e.y, tq, e);
            m.count_lines(window(e.x, d, self.geometry.width()), &p)
        });
        (row_count, col_count)
    }

    /// Stores `e` in its own row and column blocks.
    pub fn store(&mut self, e: &Event) {
        self.store_at(e, self.quantize(e.t));
    }

    #[inline]
    fn store_at(&mut self, e: &Event, tq: u64) {
        if let Some(m) = self.rows.as_mut() {
            m.write(e.y.into(), StoredEvent::new(e.x, tq, e.polarity));
        }
        if let Some(m) = self.cols.as_mut() {
            m.write(e.x.into(), StoredEvent::new(e.y, tq, e.polarity));
        }
    }
}

impl Denoiser for Clf {
    fn process(&mut self, e: &Event) -> Result<Decision, FilterError> {
        check_range(&self.geometry, e)?;
        let tq = self.quantize(e.t);
        let (r, c) = self.counts_at(e, tq);
        self.store_at(e, tq);
        Ok(Decision::from_count(r + c, self.config.params.n_cr))
    }

    fn reset(&mut self) {
        self.rows.iter_mut().for_each(MemoryModule::clear);
        self.cols.iter_mut().for_each(MemoryModule::clear);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Polarity;
    use crate::filters::FilterParams;

    fn g64() -> SensorGeometry {
        SensorGeometry::new(64, 64).unwrap()
    }

    fn ev(t: u64, x: u16, y: u16) -> Event {
        Event::new(t, x, y, Polarity::On)
    }

    #[test]
    fn first_event_is_noise() {
        let mut f = Clf::new(ClfConfig::default(), g64()).unwrap();
        assert_eq!(
            f.process(&ev(1000, 10, 10)).unwrap(),
            Decision {
                is_signal: false,
                count: 0
            }
        );
    }

    #[test]
    fn same_pixel_within_window_is_signal() {
        let cfg = ClfConfig::full_precision(FilterParams::new(1, 200, 1), 4, 4);
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(1000, 10, 10)).unwrap();
        let d = f.process(&ev(1100, 10, 10)).unwrap();
        assert!(d.is_signal);
        // Found once by the row module and once by the column module.
        assert_eq!(d.count, 2);
    }

    #[test]
    fn stale_or_distant_events_do_not_count() {
        let cfg = ClfConfig::full_precision(FilterParams::new(1, 200, 1), 4, 4);
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(1000, 10, 10)).unwrap();
        assert!(!f.process(&ev(1300, 10, 10)).unwrap().is_signal);
        assert!(!f.process(&ev(1350, 12, 10)).unwrap().is_signal);
        assert!(!f.process(&ev(1360, 20, 20)).unwrap().is_signal);
    }

    #[test]
    fn diagonal_neighbor_found_by_both_modules() {
        let cfg = ClfConfig::full_precision(FilterParams::new(1, 200, 1), 4, 4);
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(0, 5, 5)).unwrap();
        assert_eq!(f.process(&ev(10, 6, 6)).unwrap().count, 2);
    }

    #[test]
    fn single_module_counts_once() {
        let cfg = ClfConfig {
            enable_cdm: false,
            ..ClfConfig::full_precision(FilterParams::new(1, 200, 1), 4, 4)
        };
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(0, 5, 5)).unwrap();
        assert_eq!(f.process(&ev(10, 5, 6)).unwrap().count, 1);
    }

    #[test]
    fn border_rows_are_skipped() {
        let cfg = ClfConfig::full_precision(FilterParams::new(1, 200, 1), 2, 2);
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(0, 0, 0)).unwrap();
        assert!(f.process(&ev(5, 1, 0)).unwrap().is_signal);
        f.process(&ev(10, 63, 63)).unwrap();
        assert!(f.process(&ev(15, 63, 62)).unwrap().is_signal);
    }

    #[test]
    fn out_of_range_event_is_rejected() {
        let mut f = Clf::new(ClfConfig::default(), g64()).unwrap();
        assert!(matches!(
            f.process(&ev(0, 64, 0)),
            Err(FilterError::EventOutOfRange { x: 64, .. })
        ));
    }

    #[test]
    fn capacity_evicts_oldest() {
        let cfg = ClfConfig::full_precision(FilterParams::new(1, 1000, 1), 1, 1);
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(0, 10, 10)).unwrap();
        // Same row, far column: evicts (10, 10) from row 10's single slot;
        // column 10 still remembers it.
        f.process(&ev(1, 40, 10)).unwrap();
        assert_eq!(f.process(&ev(2, 10, 10)).unwrap().count, 1);
    }

    #[test]
    fn polarity_gate_when_enabled() {
        let cfg = ClfConfig {
            same_polarity_only: true,
            ..ClfConfig::full_precision(FilterParams::new(1, 200, 1), 4, 4)
        };
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&Event::new(0, 5, 5, Polarity::On)).unwrap();
        assert!(
            !f.process(&Event::new(10, 5, 5, Polarity::Off))
                .unwrap()
                .is_signal
        );
        assert!(
            f.process(&Event::new(20, 5, 5, Polarity::On))
                .unwrap()
                .is_signal
        );
    }

    #[test]
    fn wraparound_false_positive() {
        // 8-bit ticks of 4 µs: T_s = 1024 µs, T_th = 200 µs -> 50 ticks.
        let cfg = ClfConfig::default();
        assert_eq!(cfg.timestamp_span_us(), 1024);
        let mut f = Clf::new(cfg, g64()).unwrap();
        f.process(&ev(0, 5, 5)).unwrap();
        assert!(!f.process(&ev(600, 5, 5)).unwrap().is_signal);
        f.reset();
        f.process(&ev(0, 5, 5)).unwrap();
        // 1024 + 100 µs later aliases to 100 µs.
        assert!(f.process(&ev(1124, 5, 5)).unwrap().is_signal);
    }

    #[test]
    fn reset_clears_memory() {
        let mut f = Clf::new(ClfConfig::default(), g64()).unwrap();
        f.process(&ev(0, 5, 5)).unwrap();
        f.reset();
        assert!(!f.process(&ev(1, 5, 5)).unwrap().is_signal);
    }
}
