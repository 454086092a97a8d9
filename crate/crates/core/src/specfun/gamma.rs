//! Gamma function on the whole real line. Arguments `≥ 1/2` go to `statrs`;
//! smaller ones use the reflection formula with an exact `sin(πx)`.

use std::f64::consts::PI;

/// `sin(πx)`, exactly zero at the integers.
pub fn sinpi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    let r = x.rem_euclid(2.0);
    // r ∈ [0, 2)
    let (v, sign) = if r < 1.0 { (r, 1.0) } else { (r - 1.0, -1.0) };
    let v = if v > 0.5 { 1.0 - v } else { v };
    sign * (PI * v).sin()
}

/// `cos(πx)`, exactly zero at half-integers.
pub fn cospi(x: f64) -> f64 {
    sinpi(x + 0.5)
}

/// Whether `x` is a pole of Γ (a nonpositive integer).
pub fn is_pole(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Γ(x); `±∞` at the poles.
pub fn gamma(x: f64) -> f64 {
    if is_pole(x) {
        return f64::INFINITY;
    }
    if x >= 0.5 {
        statrs::function::gamma::gamma(x)
    } else {
        PI / (sinpi(x) * statrs::function::gamma::gamma(1.0 - x))
    }
}

/// `1/Γ(x)`, exactly zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_pole(x) {
        return 0.0;
    }
    if x >= 0.5 {
        if x > 170.0 {
            return (-statrs::function::gamma::ln_gamma(x)).exp();
        }
        1.0 / statrs::function::gamma::gamma(x)
    } else {
        let y = 1.0 - x;
        let g = if y > 170.0 {
            statrs::function::gamma::ln_gamma(y).exp()
        } else {
            statrs::function::gamma::gamma(y)
        };
        sinpi(x) * g / PI
    }
}

/// `(ln|Γ(x)|, sign Γ(x))`; `(∞, 1)` at the poles.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if is_pole(x) {
        return (f64::INFINITY, 1.0);
    }
    if x >= 0.5 {
        (statrs::function::gamma::ln_gamma(x), 1.0)
    } else {
        let sp = sinpi(x);
        let l = PI.ln() - sp.abs().ln() - statrs::function::gamma::ln_gamma(1.0 - x);
        (l, sp.signum())
    }
}
