//! Bessel functions `J_ν` of the orders needed for radial Fourier inversion
//! in `N ∈ {1, 2, 3}` (`ν = N/2 − 1`).

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselOrder {
    MinusHalf,
    Zero,
    Half,
}

impl BesselOrder {
    pub fn from_f64(nu: f64) -> Result<Self> {
        if nu == -0.5 {
            Ok(BesselOrder::MinusHalf)
        } else if nu == 0.0 {
            Ok(BesselOrder::Zero)
        } else if nu == 0.5 {
            Ok(BesselOrder::Half)
        } else {
            Err(Error::domain(format!(
                "unsupported Bessel order {nu}; only -1/2, 0, 1/2"
            )))
        }
    }

    /// `J_{N/2−1}` for `N ∈ {1, 2, 3}`.
    pub fn for_dim(dim: u32) -> Result<Self> {
        Self::from_f64(dim as f64 / 2.0 - 1.0)
    }
}

/// `J_ν(x)` for `ν ∈ {−1/2, 0, 1/2}` and `x ≥ 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("x must be nonnegative, got {x}")));
    }
    match order {
        BesselOrder::MinusHalf => {
            if x == 0.0 {
                return Err(Error::domain("J_{-1/2} is unbounded at 0"));
            }
            Ok((FRAC_2_PI / x).sqrt() * x.cos())
        }
        BesselOrder::Half => {
            if x == 0.0 {
                return Ok(0.0);
            }
            Ok((FRAC_2_PI / x).sqrt() * x.sin())
        }
        BesselOrder::Zero => Ok(j0(x)),
    }
}

/// `J₀(x)`, absolute error below `1e-13` for all `x ≥ 0`.
///
/// Power series for `x < 8`, the trapezoidal rule on the periodic integral
/// `(1/π)∫₀^π cos(x sin θ) dθ` for `8 ≤ x < 25` (exponentially convergent),
/// and Hankel's expansion beyond.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 8.0 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= q / (kf * kf);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else if x < 25.0 {
        let n = (x as usize) + 40;
        let h = PI / n as f64;
        // the endpoints θ = 0 and θ = π both contribute cos 0 = 1 with weight 1/2
        let mut sum = 1.0;
        for k in 1..n {
            sum += (x * (h * k as f64).sin()).cos();
        }
        sum / n as f64
    } else {
        let (p, q) = hankel_pq(x, 0.0);
        let chi = x - 0.25 * PI;
        (FRAC_2_PI / x).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// `J₁(x)`, same regimes as [`j0`].
pub fn j1(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let v = if x < 8.0 {
        let q = -0.25 * x * x;
        let mut term = 0.5 * x;
        let mut sum = term;
        for k in 1..60 {
            let kf = k as f64;
            term *= q / (kf * (kf + 1.0));
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else if x < 25.0 {
        // J₁(x) = (1/π)∫₀^π cos(θ − x sin θ) dθ
        let n = (x as usize) + 40;
        let h = PI / n as f64;
        // endpoint values cos 0 = 1 and cos π = −1 cancel
        let mut sum = 0.0;
        for k in 1..n {
            let t = h * k as f64;
            sum += (t - x * t.sin()).cos();
        }
        sum / n as f64
    } else {
        let (p, q) = hankel_pq(x, 1.0);
        let chi = x - 0.75 * PI;
        (FRAC_2_PI / x).sqrt() * (p * chi.cos() - q * chi.sin())
    };
    sign * v
}

/// Hankel's `P_ν(x)`, `Q_ν(x)` with optimal truncation.
fn hankel_pq(x: f64, nu: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let z = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * z);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // terms alternate between Q (odd k) and P (even k) with signs + − − + ...
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

/// The `k`-th positive zero of `J₀` (`k ≥ 1`), McMahon's expansion refined by
/// Newton's method.
pub fn j0_zero(k: usize) -> f64 {
    let b = (k as f64 - 0.25) * PI;
    let b8 = 8.0 * b;
    let mut x = b + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3)) + 120_928.0 / (15.0 * b8.powi(5));
    for _ in 0..4 {
        let d = j0(x) / j1(x);
        x += d;
        if d.abs() < 1e-15 * x {
            break;
        }
    }
    x
}
