use crate::events::{Event, SensorGeometry};

use super::config::FilterParams;
use super::{check_range, window, Decision, Denoiser, FilterError};

/// Exact reference: remembers every event. The count for `e0` is the number
/// of earlier events `e1` in stream order with `|x0 - x1| <= D_th`,
/// `|y0 - y1| <= D_th` and `t0 - t1 <= T_th`.
#[derive(Debug, Clone)]
pub struct Oracle {
    params: FilterParams,
    geometry: SensorGeometry,
    same_polarity: bool,
    // Sorted timestamps per (pixel, polarity).
    history: Vec<Vec<u64>>,
}

impl Oracle {
    pub fn new(params: FilterParams, geometry: SensorGeometry) -> Self {
        Self {
            params,
            geometry,
            same_polarity: false,
            history: vec![Vec::new(); geometry.pixel_count() * 2],
        }
    }

    /// Only count earlier events of the same polarity.
    pub fn with_same_polarity(mut self, on: bool) -> Self {
        self.same_polarity = on;
        self
    }

    fn slot(&self, x: u32, y: u32, pol: u8) -> usize {
        (y as usize * usize::from(self.geometry.width()) + x as usize) * 2 + usize::from(pol)
    }
}

impl Denoiser for Oracle {
    fn process(&mut self, e: &Event) -> Result<Decision, FilterError> {
        check_range(&self.geometry, e)?;
        let lower = e.t.saturating_sub(self.params.t_th);
        let pols: &[u8] = if self.same_polarity {
            &[e.polarity.bit()][..]
        } else {
            &[0, 1]
        };
        let mut count = 0usize;
        for y in window(e.y, self.params.d_th, self.geometry.height()) {
            for x in window(e.x, self.params.d_th, self.geometry.width()) {
                for &p in pols {
                    let h = &self.history[self.slot(x, y, p)];
                    count += h.len() - h.partition_point(|&t1| t1 < lower);
                }
            }
        }
        let i = self.slot(e.x.into(), e.y.into(), e.polarity.bit());
        let h = &mut self.history[i];
        let at = h.partition_point(|&t1| t1 <= e.t);
        h.insert(at, e.t);
        Ok(Decision::from_count(count as u32, self.params.n_cr))
    }

    fn reset(&mut self) {
        self.history.iter_mut().for_each(Vec::clear);
    }
}
