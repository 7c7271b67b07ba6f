//! Power means `M_s(y) = (1/k sum y_i^s)^(1/s)`, their gradient, and the
//! majorization weights used by the annealed power k-means updates.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::par;

/// Zero entries are clamped to this before taking negative powers.
pub const ZERO_CLAMP: f64 = 1e-300;

/// Powers at or below this are evaluated in log space.
pub const LOG_SPACE_BELOW: f64 = -5.0;

/// Annealing schedule: `s` starts at `s0` and is multiplied by
/// `anneal_factor` after every step, never going below `s_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMeanConfig {
    pub s0: f64,
    pub anneal_factor: f64,
    pub s_min: f64,
}

impl Default for PowerMeanConfig {
    fn default() -> Self {
        Self {
            s0: -0.2,
            anneal_factor: 1.05,
            s_min: -20.0,
        }
    }
}

impl PowerMeanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 < 0.0) {
            return Err(Error::InvalidParameter(format!("s0 must be negative, got {}", self.s0)));
        }
        if !(self.anneal_factor > 1.0) || !self.anneal_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "anneal_factor must be > 1, got {}",
                self.anneal_factor
            )));
        }
        if !(self.s_min <= self.s0) || !self.s_min.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "s_min must be <= s0, got s_min={} s0={}",
                self.s_min, self.s0
            )));
        }
        Ok(())
    }

    /// The power that follows `s` in the schedule.
    pub fn next(&self, s: f64) -> f64 {
        (s * self.anneal_factor).max(self.s_min)
    }
}

fn check_power(s: f64) -> Result<()> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("power s must be finite and non-zero, got {s}")));
    }
    Ok(())
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln M_s(y)` for `s < 0` and strictly positive `y`, without range checks.
#[inline]
pub(crate) fn ln_power_mean_neg(y: &[f64], s: f64) -> f64 {
    let k = y.len() as f64;
    (log_sum_exp(y.iter().map(|&v| s * v.max(ZERO_CLAMP).ln())) - k.ln()) / s
}

pub fn power_mean(y: &[f64], s: f64) -> Result<f64> {
    check_power(s)?;
    if y.is_empty() {
        return Err(Error::EmptyData("power mean of an empty vector".into()));
    }
    if let Some(v) = y.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "power mean needs finite non-negative entries, got {v}"
        )));
    }
    let k = y.len() as f64;
    let raw = if s <= LOG_SPACE_BELOW {
        ln_power_mean_neg(y, s).exp()
    } else {
        let clamp = if s < 0.0 { ZERO_CLAMP } else { 0.0 };
        let mean = y.iter().map(|&v| v.max(clamp).powf(s)).sum::<f64>() / k;
        mean.powf(1.0 / s)
    };
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(raw.clamp(min, max))
}

/// Gradient of `M_s` with respect to each entry:
/// `(1/k sum y_i^s)^(1/s - 1) * (1/k) * y_j^(s-1)`, evaluated as
/// `(1/k) * (M_s / y_j)^(1 - s)`.
pub fn power_mean_grad(y: &[f64], s: f64) -> Result<Vec<f64>> {
    check_power(s)?;
    if y.is_empty() {
        return Err(Error::EmptyData("power mean of an empty vector".into()));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "power mean gradient needs strictly positive entries, got {v}"
        )));
    }
    let k = y.len() as f64;
    let ln_m = if s < 0.0 {
        ln_power_mean_neg(y, s)
    } else {
        (y.iter().map(|v| v.powf(s)).sum::<f64>() / k).ln() / s
    };
    Ok(y.iter()
        .map(|&v| ((1.0 - s) * (ln_m - v.ln())).exp() / k)
        .collect())
}

/// MM weights, `n x k`, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(Array2<f64>);

impl WeightMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Log of the MM weight for one row of distances:
/// `ln w_j = (1 - s) (ln M_s(d) - ln d_j)`.
#[inline]
pub(crate) fn log_weights_row(d: &[f64], s: f64, out: &mut [f64]) {
    let ln_m = ln_power_mean_neg(d, s);
    for (o, &dj) in out.iter_mut().zip(d) {
        *o = (1.0 - s) * (ln_m - dj.max(ZERO_CLAMP).ln());
    }
}

/// `w_ij = (1/k sum_l d_il^s)^(1/s - 1) * d_ij^(s-1)` for `s < 0`.
///
/// Each weight equals `(M_s(d_i) / d_ij)^(1 - s)`, so it lies in
/// `(0, k^(1 - 1/s)]` and the nearest centroid of every row gets weight
/// `>= 1`. No rescaling is applied.
pub fn mm_weights(distances: &Array2<f64>, s: f64) -> Result<WeightMatrix> {
    check_power(s)?;
    if s > 0.0 {
        return Err(Error::InvalidParameter(format!("mm weights need s < 0, got {s}")));
    }
    if let Some(v) = distances.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "distances must be finite and non-negative, got {v}"
        )));
    }
    let (n, k) = distances.dim();
    let src = distances.as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let mut buf = vec![0.0; n * k];
    par::fill_rows(&mut buf, k, |i, row| {
        log_weights_row(&src[i * k..(i + 1) * k], s, row);
        row.iter_mut().for_each(|w| *w = w.exp());
    });
    Ok(WeightMatrix(
        Array2::from_shape_vec((n, k), buf).expect("shape matches buffer"),
    ))
}
