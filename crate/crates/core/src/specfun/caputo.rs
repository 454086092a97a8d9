use rayon::prelude::*;

use super::gamma::rgamma;
use crate::error::{Error, Result};

/// L1 approximation of the Caputo derivative `∂ₜ^α u` on a uniform grid.
///
/// ```text
/// ∂ₜ^α u(t_n) ≈ Δt^{−α}/Γ(2−α) Σ_{j=0}^{n−1} b_j (u_{n−j} − u_{n−j−1}),
/// b_j = (j+1)^{1−α} − j^{1−α}
/// ```
///
/// The result has one entry per node; the first is `NaN` (undefined).
pub fn caputo_l1_derivative(times: &[f64], samples: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if times.len() != samples.len() {
        return Err(Error::domain("times and samples differ in length"));
    }
    if times.len() < 3 {
        return Err(Error::domain("the L1 scheme needs at least 3 nodes"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::domain("time nodes must increase"));
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt + 16.0 * f64::EPSILON * w[1].abs() {
            return Err(Error::domain(format!(
                "nonuniform time grid at node {}: step {} vs {dt}",
                i + 1,
                w[1] - w[0]
            )));
        }
    }
    let n = times.len();
    let e = 1.0 - alpha;
    let b: Vec<f64> = (0..n).map(|j| ((j + 1) as f64).powf(e) - (j as f64).powf(e)).collect();
    let diff: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = dt.powf(-alpha) * rgamma(2.0 - alpha);
    let mut out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|m| {
            if m == 0 {
                return f64::NAN;
            }
            let mut acc = crate::quad::KahanSum::default();
            for j in 0..m {
                acc.add(b[j] * diff[m - j - 1]);
            }
            scale * acc.sum()
        })
        .collect();
    out[0] = f64::NAN;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn constants_have_zero_derivative() {
        let t = grid(50, 2.0);
        let d = caputo_l1_derivative(&t, &vec![3.5; t.len()], 0.4).unwrap();
        assert!(d[0].is_nan());
        assert!(d[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_function_is_exact() {
        // Caputo derivative of t is t^{1−α}/Γ(2−α); L1 is exact on linear data
        let t = grid(100, 1.0);
        let d = caputo_l1_derivative(&t, &t, 0.5).unwrap();
        let exact = 1.0 / statrs::function::gamma::gamma(1.5);
        assert!((d[100] - exact).abs() < 1e-12, "{}", d[100]);
    }

    #[test]
    fn rejects_nonuniform_grids() {
        let t = [0.0, 0.1, 0.25, 0.3];
        assert!(caputo_l1_derivative(&t, &[0.0; 4], 0.5).is_err());
        assert!(caputo_l1_derivative(&[0.0, 1.0], &[0.0; 2], 0.5).is_err());
        assert!(caputo_l1_derivative(&grid(4, 1.0), &[0.0; 5], 1.0).is_err());
    }
}
