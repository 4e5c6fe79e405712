use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::SensorGeometry;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invariant violated: {0} must be >= 1")]
    ZeroParam(&'static str),
    #[error("invariant violated: {module} bank count {value} must be 1 or a power of two >= {required} (2^ceil(log2(2*D_th+1)))")]
    BankCount {
        module: &'static str,
        value: u32,
        required: u32,
    },
    #[error("invariant violated: {0} must be >= 1 when its module is enabled")]
    BlockCapacity(&'static str),
    #[error("invariant violated: at least one of the row and column modules must be enabled")]
    NoModuleEnabled,
    #[error("invariant violated: BW_T must be in 1..=64, got {0}")]
    Bitwidth(u32),
    #[error("invariant violated: quant_unit must be >= 1")]
    QuantUnit,
    #[error(
        "invariant violated: ceil(T_th / quant_unit) = {ticks} must be < 2^BW_T (BW_T = {bw_t})"
    )]
    WindowNotRepresentable { ticks: u64, bw_t: u32 },
    #[error("invariant violated: pipelined mode requires N_CR = 1, got {0}")]
    PipelinedThreshold(u32),
    #[error("invariant violated: subsample factor must be a power of two, got {0}")]
    SubsampleFactor(u32),
}

/// Correlation thresholds shared by every filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Spatial threshold in pixels (Chebyshev distance).
    pub d_th: u32,
    /// Temporal threshold in microseconds.
    pub t_th: u64,
    /// Minimum correlated-event count for a signal decision.
    pub n_cr: u32,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            d_th: 1,
            t_th: 200,
            n_cr: 1,
        }
    }
}

impl FilterParams {
    pub fn new(d_th: u32, t_th: u64, n_cr: u32) -> Self {
        Self { d_th, t_th, n_cr }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d_th == 0 {
            return Err(ConfigError::ZeroParam("D_th"));
        }
        if self.t_th == 0 {
            return Err(ConfigError::ZeroParam("T_th"));
        }
        if self.n_cr == 0 {
            return Err(ConfigError::ZeroParam("N_CR"));
        }
        Ok(())
    }

    /// Side of the square correlation window, `2*D_th + 1`.
    pub fn window_side(&self) -> u32 {
        2 * self.d_th + 1
    }
}

/// Design parameters of the cache-like filter. The default is the
/// 4-4-4-8 configuration (4 banks, 4 events per block, 8-bit timestamps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClfConfig {
    pub params: FilterParams,
    pub n_rm: u32,
    pub n_cm: u32,
    pub s_rm: u32,
    pub s_cm: u32,
    pub bw_t: u32,
    /// Microseconds per stored timestamp tick. `None` picks the smallest
    /// power of two that keeps `T_th` within a quarter of the timestamp span.
    pub quant_unit: Option<u64>,
    pub enable_rdm: bool,
    pub enable_cdm: bool,
    pub pipelined: bool,
    pub same_polarity_only: bool,
}

impl Default for ClfConfig {
    fn default() -> Self {
        Self {
            params: FilterParams::default(),
            n_rm: 4,
            n_cm: 4,
            s_rm: 4,
            s_cm: 4,
            bw_t: 8,
            quant_unit: None,
            enable_rdm: true,
            enable_cdm: true,
            pipelined: false,
            same_polarity_only: false,
        }
    }
}

/// Number of banks needed to read a `window_side`-high window in one access:
/// `2^ceil(log2(window_side))`.
pub fn required_banks(window_side: u32) -> u32 {
    window_side.max(1).next_power_of_two()
}

/// `ceil(log2(n))`, with 0 for `n <= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Default timestamp tick: the smallest power of two `u` such that
/// `ceil(T_th / u) <= 2^(BW_T - 2)`.
pub fn default_quant_unit(t_th: u64, bw_t: u32) -> u64 {
    let budget: u128 = if bw_t >= 2 {
        1u128 << (bw_t - 2).min(100)
    } else {
        1
    };
    let mut u: u64 = 1;
    while u128::from(t_th.div_ceil(u)) > budget {
        u <<= 1;
    }
    u
}

impl ClfConfig {
    /// Full-precision configuration: 64-bit timestamps at 1 µs resolution.
    pub fn full_precision(params: FilterParams, s_rm: u32, s_cm: u32) -> Self {
        let n = required_banks(params.window_side());
        Self {
            params,
            n_rm: n,
            n_cm: n,
            s_rm,
            s_cm,
            bw_t: 64,
            quant_unit: Some(1),
            ..Self::default()
        }
    }

    /// The single-unit-per-line configuration.
    pub fn row_column(params: FilterParams, bw_t: u32, quant_unit: Option<u64>) -> Self {
        Self {
            params,
            n_rm: 1,
            n_cm: 1,
            s_rm: 1,
            s_cm: 1,
            bw_t,
            quant_unit,
            ..Self::default()
        }
    }

    /// Sets the bank counts to the minimum for the current `D_th`.
    pub fn with_auto_banks(mut self) -> Self {
        let n = required_banks(self.params.window_side());
        self.n_rm = n;
        self.n_cm = n;
        self
    }

    pub fn quant_unit(&self) -> u64 {
        self.quant_unit
            .unwrap_or_else(|| default_quant_unit(self.params.t_th, self.bw_t))
    }

    /// `T_th` in ticks, rounded up so no true correlation is lost to
    /// quantization.
    pub fn t_th_ticks(&self) -> u64 {
        self.params.t_th.div_ceil(self.quant_unit().max(1))
    }

    /// Bit mask of the stored timestamp field.
    pub fn tick_mask(&self) -> u64 {
        tick_mask(self.bw_t)
    }

    /// Time span representable by the stored timestamp, `T_s` in µs.
    pub fn timestamp_span_us(&self) -> u128 {
        u128::from(self.quant_unit()) << self.bw_t.min(64)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate()?;
        if !self.enable_rdm && !self.enable_cdm {
            return Err(ConfigError::NoModuleEnabled);
        }
        let required = required_banks(self.params.window_side());
        for (enabled, module, n, cap_name, cap) in [
            (self.enable_rdm, "N_RM", self.n_rm, "s_RM", self.s_rm),
            (self.enable_cdm, "N_CM", self.n_cm, "s_CM", self.s_cm),
        ] {
            if !enabled {
                continue;
            }
            if n == 0 || !n.is_power_of_two() || (n != 1 && n < required) {
                return Err(ConfigError::BankCount {
                    module,
                    value: n,
                    required,
                });
            }
            if cap == 0 {
                return Err(ConfigError::BlockCapacity(cap_name));
            }
        }
        if !(1..=64).contains(&self.bw_t) {
            return Err(ConfigError::Bitwidth(self.bw_t));
        }
        if self.quant_unit == Some(0) {
            return Err(ConfigError::QuantUnit);
        }
        let ticks = self.t_th_ticks();
        if u128::from(ticks) >= 1u128 << self.bw_t {
            return Err(ConfigError::WindowNotRepresentable {
                ticks,
                bw_t: self.bw_t,
            });
        }
        if self.pipelined && self.params.n_cr != 1 {
            return Err(ConfigError::PipelinedThreshold(self.params.n_cr));
        }
        Ok(())
    }
}

pub(crate) fn tick_mask(bw_t: u32) -> u64 {
    if bw_t >= 64 {
        u64::MAX
    } else {
        (1u64 << bw_t) - 1
    }
}

/// Storage cost in bits: every slot holds the cross coordinate, the stored
/// timestamp and a valid bit (plus a polarity bit when polarity gates
/// correlation), and every block has a `ceil(log2 s)`-bit write pointer.
pub fn memory_footprint_bits(config: &ClfConfig, geometry: &SensorGeometry) -> u64 {
    let rows = u64::from(geometry.height());
    let cols = u64::from(geometry.width());
    let bw_x = u64::from(ceil_log2(cols));
    let bw_y = u64::from(ceil_log2(rows));
    let bw_t = u64::from(config.bw_t);
    let pol = u64::from(config.same_polarity_only);
    let mut bits = 0;
    if config.enable_rdm {
        let s = u64::from(config.s_rm);
        bits += rows * s * (bw_x + bw_t + 1 + pol) + rows * u64::from(ceil_log2(s));
    }
    if config.enable_cdm {
        let s = u64::from(config.s_cm);
        bits += cols * s * (bw_y + bw_t + 1 + pol) + cols * u64::from(ceil_log2(s));
    }
    bits
}
