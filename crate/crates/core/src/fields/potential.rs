use std::f64::consts::PI;

use rayon::prelude::*;

use super::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quad::{adaptive, adaptive_to_infinity, QuadResult, Tolerance};

/// Average of `|x − y|^{2s−N}` over the sphere `|y| = q`, times `q^{N−1}`,
/// for `|x| = r`.
fn shell_kernel(dim: u32, s: f64, r: f64, q: f64) -> f64 {
    let a = 2.0 * s - dim as f64;
    match dim {
        1 => (r - q).abs().powf(a) + (r + q).powf(a),
        3 => {
            if r == 0.0 {
                return 4.0 * PI * q.powf(2.0 * s - 1.0);
            }
            let (lo, hi) = ((r - q).abs(), r + q);
            let bracket = if (s - 0.5).abs() < 1e-14 {
                (hi / lo).ln()
            } else {
                let e = 2.0 * s - 1.0;
                (hi.powf(e) - lo.powf(e)) / e
            };
            2.0 * PI * q / r * bracket
        }
        _ => {
            if r == 0.0 {
                return 2.0 * PI * q.powf(a + 1.0);
            }
            let g = |th: f64| ((r - q).powi(2) + 4.0 * r * q * (0.5 * th).sin().powi(2)).powf(a / 2.0);
            let delta = (r - q).abs() / (r * q).sqrt();
            let breaks: Vec<f64> = [1.0, 4.0, 16.0]
                .iter()
                .map(|k| k * delta)
                .filter(|x| *x < PI)
                .collect();
            2.0 * q * adaptive(g, 0.0, PI, &breaks, Tolerance::rel(1e-12)).value
        }
    }
}

/// `Φ(r) = ∫ u₀(y) |x − y|^{2s−N} dy` at `|x| = r` for each point.
pub fn riesz_potential(datum: &InitialDatum, params: &ModelParams, points: &[f64]) -> Result<Vec<f64>> {
    params.require_supported_dim()?;
    if params.regime() != crate::params::Regime::Subcritical {
        return Err(Error::domain(format!(
            "Riesz potential needs 2s < N, got s = {} and N = {}",
            params.s(),
            params.dim()
        )));
    }
    if datum.dim() != params.dim() {
        return Err(Error::domain("datum and parameters disagree on N"));
    }
    let (dim, s) = (params.dim(), params.s());
    points
        .par_iter()
        .map(|&r| {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
            }
            let f = |q: f64| {
                if q == 0.0 || q == r {
                    return 0.0;
                }
                datum.value(q) * shell_kernel(dim, s, r, q)
            };
            let mut breaks = vec![r, 0.5 * r, 1.5 * r, datum.width()];
            breaks.extend(datum.kinks());
            let tol = Tolerance::rel(1e-11);
            let res = match datum.effective_support() {
                Some(q_max) => adaptive(f, 0.0, q_max, &breaks, tol),
                None => {
                    let q1 = 4.0 * (r + datum.width());
                    let head = adaptive(f, 0.0, q1, &breaks, tol);
                    let tail = adaptive_to_infinity(f, q1, tol);
                    QuadResult {
                        value: head.value + tail.value,
                        error: head.error + tail.error,
                        converged: head.converged && tail.converged,
                    }
                }
            };
            if !res.value.is_finite() || (!res.converged && res.error > 1e-8 * res.value.abs()) {
                return Err(Error::numerical(format!("potential quadrature failed at r = {r}: {res:?}")));
            }
            Ok(res.value)
        })
        .collect()
}
