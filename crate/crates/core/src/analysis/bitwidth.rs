//! False positives caused by timestamp wraparound.
//!
//! A stored timestamp keeps only `BW_T` bits of ticks, so it repeats every
//! `T_s`. If the next event in the window arrives after a delay `X` with
//! `k T_s <= X <= k T_s + T_th` for some `k >= 1`, the wrapped difference
//! falls below the threshold and the event is wrongly accepted. With Poisson
//! arrivals of rate `lambda` this happens with probability
//! `sum_k (exp(-lambda k T_s) - exp(-lambda (k T_s + T_th)))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::filters::default_quant_unit;

use super::AnalysisError;

fn check(lambda_hz: f64, t_th_us: f64, t_s_us: f64) -> Result<(), AnalysisError> {
    if !(lambda_hz.is_finite() && lambda_hz >= 0.0) {
        return Err(AnalysisError::InvalidParams(format!(
            "lambda must be finite and >= 0, got {lambda_hz}"
        )));
    }
    if !(t_th_us.is_finite() && t_th_us >= 0.0 && t_s_us.is_finite() && t_th_us < t_s_us) {
        return Err(AnalysisError::InvalidParams(format!(
            "need 0 <= T_th < T_s, got T_th = {t_th_us}, T_s = {t_s_us}"
        )));
    }
    Ok(())
}

/// Aggregate rate seen by a `(2 D_th + 1)^2` window of pixels each firing at
/// `pixel_rate_hz`.
pub fn window_rate(pixel_rate_hz: f64, d_th: u32) -> f64 {
    let side = f64::from(2 * d_th + 1);
    pixel_rate_hz * side * side
}

/// Probability that the first arrival lands in a wraparound window, counting
/// windows that start at or before `horizon_us`. Pass `f64::INFINITY` for the
/// untruncated value.
pub fn fp_rate_analytic(
    lambda_hz: f64,
    t_th_us: f64,
    t_s_us: f64,
    horizon_us: f64,
) -> Result<f64, AnalysisError> {
    check(lambda_hz, t_th_us, t_s_us)?;
    if lambda_hz == 0.0 || t_th_us == 0.0 {
        return Ok(0.0);
    }
    if horizon_us.is_infinite() {
        return fp_rate_closed_form(lambda_hz, t_th_us, t_s_us);
    }
    let l = lambda_hz * 1e-6;
    let mut sum = 0.0;
    let mut k = 1.0;
    while k * t_s_us <= horizon_us {
        let a = (-l * k * t_s_us).exp();
        if a == 0.0 {
            break;
        }
        sum += a - (-l * (k * t_s_us + t_th_us)).exp();
        k += 1.0;
    }
    Ok(sum)
}

/// `(1 - e^{-lambda T_th}) e^{-lambda T_s} / (1 - e^{-lambda T_s})`.
pub fn fp_rate_closed_form(
    lambda_hz: f64,
    t_th_us: f64,
    t_s_us: f64,
) -> Result<f64, AnalysisError> {
    check(lambda_hz, t_th_us, t_s_us)?;
    if lambda_hz == 0.0 {
        return Ok(0.0);
    }
    let l = lambda_hz * 1e-6;
    Ok(-(-l * t_th_us).exp_m1() * (-l * t_s_us).exp() / -(-l * t_s_us).exp_m1())
}

/// Draws the first arrival `trials` times and returns the fraction that hit a
/// wraparound window with its binomial standard error.
pub fn fp_rate_montecarlo(
    lambda_hz: f64,
    t_th_us: f64,
    t_s_us: f64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64), AnalysisError> {
    check(lambda_hz, t_th_us, t_s_us)?;
    if trials == 0 {
        return Err(AnalysisError::InvalidParams("trials must be >= 1".into()));
    }
    if lambda_hz == 0.0 {
        return Ok((0.0, 0.0));
    }
    let exp = Exp::new(lambda_hz * 1e-6).expect("rate checked");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let x: f64 = exp.sample(&mut rng);
        let k = (x / t_s_us).floor();
        if k >= 1.0 && x - k * t_s_us <= t_th_us {
            hits += 1;
        }
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitwidthRow {
    pub bw_t: u32,
    pub quant_unit_us: u64,
    pub t_s_us: f64,
    pub analytic: f64,
    pub montecarlo: f64,
    pub stderr: f64,
}

/// Evaluates each bitwidth at a shared tick size: the default quantization
/// unit for `T_th` at the smallest bitwidth of the list, so `T_s` doubles with
/// every extra bit. Both estimates use an unbounded horizon. Row `i` draws
/// from seed `seed + i`.
pub fn bitwidth_study(
    lambda_hz: f64,
    t_th_us: u64,
    bw_list: &[u32],
    trials: u64,
    seed: u64,
) -> Result<Vec<BitwidthRow>, AnalysisError> {
    let Some(&min_bw) = bw_list.iter().min() else {
        return Ok(Vec::new());
    };
    if bw_list.iter().any(|&b| !(2..=52).contains(&b)) {
        return Err(AnalysisError::InvalidParams(
            "bitwidths must lie in 2..=52".into(),
        ));
    }
    let u = default_quant_unit(t_th_us, min_bw);
    bw_list
        .iter()
        .enumerate()
        .map(|(i, &bw)| {
            let t_s = u as f64 * 2f64.powi(bw as i32);
            let t_th = t_th_us as f64;
            let analytic = fp_rate_analytic(lambda_hz, t_th, t_s, f64::INFINITY)?;
            let (montecarlo, stderr) =
                fp_rate_montecarlo(lambda_hz, t_th, t_s, trials, seed.wrapping_add(i as u64))?;
            Ok(BitwidthRow {
                bw_t: bw,
                quant_unit_us: u,
                t_s_us: t_s,
                analytic,
                montecarlo,
                stderr,
            })
        })
        .collect()
}
