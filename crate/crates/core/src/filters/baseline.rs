use crate::events::{Event, SensorGeometry};

use super::config::{ClfConfig, ConfigError, FilterParams};
use super::{check_range, window, Clf, Decision, Denoiser, FilterError};

const NEVER: u64 = u64::MAX;

/// Per-cell latest timestamp on a (possibly subsampled) grid.
#[derive(Debug, Clone)]
struct TimestampMap {
    cells: Vec<u64>,
    width: u16,
    height: u16,
}

impl TimestampMap {
    fn new(width: u16, height: u16) -> Self {
        Self {
            cells: vec![NEVER; usize::from(width) * usize::from(height)],
            width,
            height,
        }
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * usize::from(self.width) + x as usize
    }

    #[inline]
    fn fresh(&self, x: u32, y: u32, t: u64, t_th: u64) -> bool {
        let s = self.cells[self.idx(x, y)];
        s != NEVER && t.saturating_sub(s) <= t_th
    }

    fn set(&mut self, x: u32, y: u32, t: u64) {
        let i = self.idx(x, y);
        self.cells[i] = t;
    }

    fn clear(&mut self) {
        self.cells.fill(NEVER);
    }
}

/// Background activity filter: one timestamp per pixel. An event is signal
/// when its own cell holds a timestamp within `T_th`; it then stamps every
/// cell of its `(2 D_th + 1)^2` neighborhood.
#[derive(Debug, Clone)]
pub struct Baf {
    inner: Ssm,
}

impl Baf {
    pub fn new(params: FilterParams, geometry: SensorGeometry) -> Self {
        Self {
            inner: Ssm::build(params, geometry, 1),
        }
    }
}

impl Denoiser for Baf {
    fn process(&mut self, e: &Event) -> Result<Decision, FilterError> {
        self.inner.process(e)
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// Subsampled shared memory: BAF on a grid where each cell covers
/// `r x r` pixels.
#[derive(Debug, Clone)]
pub struct Ssm {
    params: FilterParams,
    geometry: SensorGeometry,
    shift: u32,
    map: TimestampMap,
}

impl Ssm {
    pub fn new(
        params: FilterParams,
        geometry: SensorGeometry,
        r: u32,
    ) -> Result<Self, ConfigError> {
        if r == 0 || !r.is_power_of_two() {
            return Err(ConfigError::SubsampleFactor(r));
        }
        Ok(Self::build(params, geometry, r))
    }

    fn build(params: FilterParams, geometry: SensorGeometry, r: u32) -> Self {
        let shift = r.trailing_zeros();
        let w = u32::from(geometry.width()).div_ceil(r) as u16;
        let h = u32::from(geometry.height()).div_ceil(r) as u16;
        Self {
            params,
            geometry,
            shift,
            map: TimestampMap::new(w, h),
        }
    }

    /// Number of timestamp cells, `ceil(m/r) * ceil(n/r)`.
    pub fn cell_count(&self) -> usize {
        self.map.cells.len()
    }
}

impl Denoiser for Ssm {
    fn process(&mut self, e: &Event) -> Result<Decision, FilterError> {
        check_range(&self.geometry, e)?;
        let cx = e.x >> self.shift;
        let cy = e.y >> self.shift;
        let own = self.map.fresh(cx.into(), cy.into(), e.t, self.params.t_th);
        for y in window(cy, self.params.d_th, self.map.height) {
            for x in window(cx, self.params.d_th, self.map.width) {
                self.map.set(x, y, e.t);
            }
        }
        Ok(Decision::from_count(own.into(), self.params.n_cr))
    }

    fn reset(&mut self) {
        self.map.clear();
    }
}

/// Spatiotemporal correlation filter: counts neighborhood cells (center
/// included) holding a timestamp within `T_th`, then stamps its own cell.
#[derive(Debug, Clone)]
pub struct Stcf {
    params: FilterParams,
    geometry: SensorGeometry,
    map: TimestampMap,
}

impl Stcf {
    pub fn new(params: FilterParams, geometry: SensorGeometry) -> Self {
        Self {
            params,
            geometry,
            map: TimestampMap::new(geometry.width(), geometry.height()),
        }
    }
}

impl Denoiser for Stcf {
    fn process(&mut self, e: &Event) -> Result<Decision, FilterError> {
        check_range(&self.geometry, e)?;
        let mut count = 0;
        for y in window(e.y, self.params.d_th, self.geometry.height()) {
            for x in window(e.x, self.params.d_th, self.geometry.width()) {
                count += u32::from(self.map.fresh(x, y, e.t, self.params.t_th));
            }
        }
        self.map.set(e.x.into(), e.y.into(), e.t);
        Ok(Decision::from_count(count, self.params.n_cr))
    }

    fn reset(&mut self) {
        self.map.clear();
    }
}

/// Row and column filter: one stored event per row and per column. This is
/// the cache-like filter with a single bank and a single slot per block.
#[derive(Debug, Clone)]
pub struct Rcf {
    inner: Clf,
}

impl Rcf {
    pub fn new(
        params: FilterParams,
        bw_t: u32,
        quant_unit: Option<u64>,
        geometry: SensorGeometry,
    ) -> Result<Self, ConfigError> {
        Ok(Self {
            inner: Clf::new(ClfConfig::row_column(params, bw_t, quant_unit), geometry)?,
        })
    }
}

impl Denoiser for Rcf {
    fn process(&mut self, e: &Event) -> Result<Decision, FilterError> {
        self.inner.process(e)
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Polarity;

    fn g64() -> SensorGeometry {
        SensorGeometry::new(64, 64).unwrap()
    }

    fn ev(t: u64, x: u16, y: u16) -> Event {
        Event::new(t, x, y, Polarity::On)
    }

    #[test]
    fn baf_first_event_noise() {
        let mut f = Baf::new(FilterParams::default(), g64());
        assert!(!f.process(&ev(0, 5, 5)).unwrap().is_signal);
    }

    #[test]
    fn baf_neighbor_stamp() {
        let mut f = Baf::new(FilterParams::new(1, 200, 1), g64());
        f.process(&ev(0, 5, 5)).unwrap();
        assert!(f.process(&ev(100, 6, 6)).unwrap().is_signal);
        assert!(!f.process(&ev(150, 8, 6)).unwrap().is_signal);
        assert!(!f.process(&ev(400, 6, 6)).unwrap().is_signal);
    }

    #[test]
    fn baf_border() {
        let mut f = Baf::new(FilterParams::new(1, 200, 1), g64());
        f.process(&ev(0, 0, 0)).unwrap();
        assert!(f.process(&ev(1, 1, 1)).unwrap().is_signal);
        assert!(f.process(&Event::new(2, 63, 63, Polarity::Off)).is_ok());
        assert!(f.process(&ev(3, 64, 0)).is_err());
    }

    #[test]
    fn stcf_counts_center_and_neighbors() {
        let mut f = Stcf::new(FilterParams::new(1, 200, 2), g64());
        f.process(&ev(0, 5, 5)).unwrap();
        f.process(&ev(10, 6, 5)).unwrap();
        let d = f.process(&ev(20, 5, 5)).unwrap();
        assert_eq!(d.count, 2);
        assert!(d.is_signal);
        let d = f.process(&ev(30, 7, 6)).unwrap();
        assert_eq!(d.count, 1);
        assert!(!d.is_signal);
    }

    #[test]
    fn stcf_first_event() {
        let mut f = Stcf::new(FilterParams::default(), g64());
        assert_eq!(f.process(&ev(0, 1, 1)).unwrap().count, 0);
    }

    #[test]
    fn ssm_shares_cells() {
        let mut f = Ssm::new(FilterParams::new(1, 200, 1), g64(), 2).unwrap();
        f.process(&ev(0, 0, 0)).unwrap();
        assert!(f.process(&ev(50, 1, 1)).unwrap().is_signal);
        assert!(Ssm::new(FilterParams::default(), g64(), 3).is_err());
        assert!(Ssm::new(FilterParams::default(), g64(), 0).is_err());
    }

    #[test]
    fn ssm_cell_count() {
        let g = SensorGeometry::new(346, 260).unwrap();
        let f = Ssm::new(FilterParams::default(), g, 4).unwrap();
        assert_eq!(f.cell_count(), 87 * 65);
    }

    #[test]
    fn rcf_same_pixel() {
        let mut f = Rcf::new(FilterParams::default(), 32, None, g64()).unwrap();
        assert!(!f.process(&ev(0, 9, 9)).unwrap().is_signal);
        assert!(f.process(&ev(10, 9, 9)).unwrap().is_signal);
    }
}
