use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{mild_solution_fourier_with, InitialDatum};
use crate::grid::RadialGrid;
use crate::norms::{NormSpec, Region};
use crate::params::ModelParams;
use crate::rates::fit_rate;

use super::scenario::TimeSchedule;

/// Decay exponents of `‖u(·, t)‖_{L^p}` at one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionExponent {
    pub dim: u32,
    /// `(αN/2s)(1 − 1/p)`.
    pub characteristic: f64,
    /// `α`.
    pub compact: f64,
    /// `min(characteristic, compact)`.
    pub dominant: f64,
    /// `2sp/(p−1)` (`2s` at `p = ∞`).
    pub threshold: f64,
}

/// Dominant decay exponent per dimension: the slower of the characteristic
/// and compact-set rates.
pub fn critical_dimension_table(
    alpha: f64,
    s: f64,
    p: f64,
    dims: &[u32],
) -> Result<Vec<DimensionExponent>> {
    if !(p > 1.0) {
        return Err(Error::domain(format!(
            "the critical dimension needs p > 1, got {p}"
        )));
    }
    let (inv_p, threshold) = if p.is_infinite() {
        (0.0, 2.0 * s)
    } else {
        (1.0 / p, 2.0 * s * p / (p - 1.0))
    };
    dims.iter()
        .map(|&dim| {
            ModelParams::new(alpha, s, dim)?;
            let characteristic = alpha * dim as f64 / (2.0 * s) * (1.0 - inv_p);
            Ok(DimensionExponent {
                dim,
                characteristic,
                compact: alpha,
                dominant: characteristic.min(alpha),
                threshold,
            })
        })
        .collect()
}

/// Measured counterpart of one [`DimensionExponent`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMeasurement {
    pub predicted: DimensionExponent,
    /// Minus the fitted slope of `‖u‖_{L^p}` on `ν ℓ ≤ |x| ≤ μ ℓ`.
    pub characteristic: f64,
    /// Minus the fitted slope of `‖u‖_{L^p(B_1)}`.
    pub compact: f64,
    pub dominant: f64,
    pub relative_error: f64,
}

/// Measures the characteristic and compact decay exponents of Gaussian-datum
/// solutions on each dimension and compares their minimum with
/// [`critical_dimension_table`]. Slopes are fitted over the second half of the
/// schedule.
pub fn measure_critical_dimension(
    alpha: f64,
    s: f64,
    p: f64,
    dims: &[u32],
    schedule: &TimeSchedule,
) -> Result<Vec<DimensionMeasurement>> {
    let table = critical_dimension_table(alpha, s, p, dims)?;
    let times = schedule.times()?;
    let half = (times.len() / 2).min(times.len().saturating_sub(4));
    let norm = NormSpec::strong(p)?;
    table
        .into_iter()
        .map(|predicted| {
            let params = ModelParams::new(alpha, s, predicted.dim)?;
            let datum = InitialDatum::gaussian(1.0, predicted.dim)?;
            let transform = datum.transform()?;
            let samples = times[half..]
                .par_iter()
                .map(|&t| {
                    let ell = params.length_scale(t);
                    let char_grid = RadialGrid::logarithmic(0.5 * ell, 2.0 * ell, 201, predicted.dim)?;
                    let u = mild_solution_fourier_with(&datum, &transform, &params, t, &char_grid)?;
                    let c = norm.eval(&u.field, Region::shell(0.5 * ell, 2.0 * ell))?;
                    let ball = RadialGrid::uniform(1.0, 81, predicted.dim)?;
                    let u = mild_solution_fourier_with(&datum, &transform, &params, t, &ball)?;
                    let b = norm.eval(&u.field, Region::ball(1.0))?;
                    Ok((c, b))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let ts = &times[half..];
            let c: Vec<f64> = samples.iter().map(|x| x.0).collect();
            let b: Vec<f64> = samples.iter().map(|x| x.1).collect();
            let characteristic = -fit_rate(ts, &c)?.slope;
            let compact = -fit_rate(ts, &b)?.slope;
            let dominant = characteristic.min(compact);
            Ok(DimensionMeasurement {
                predicted,
                characteristic,
                compact,
                dominant,
                relative_error: (dominant / predicted.dominant - 1.0).abs(),
            })
        })
        .collect()
}
