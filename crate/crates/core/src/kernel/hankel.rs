//! Radial inverse Fourier transform
//!
//! ```text
//! f(r) = (2π)^{−N/2} r^{1−N/2} ∫₀^∞ φ(ρ) ρ^{N/2} J_{N/2−1}(ρr) dρ = ∫₀^∞ φ(ρ) K_N(ρ, r) dρ
//! ```
//!
//! split into a head over a fixed panel grid, where the symbol is tabulated
//! once and reused for every output radius, and an oscillatory tail in which
//! the symbol is replaced by an algebraic expansion `Σ c_k ρ^{−e_k}` and
//! integrated between consecutive zeros of the Bessel factor with Wynn
//! acceleration of the partial sums.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{adaptive, gl12, gl16, wynn_epsilon, KahanSum, Tolerance};
use crate::specfun::bessel::{j0, j0_zero};
use crate::specfun::gamma::{ln_gamma_signed, sinpi};

/// `K_N(ρ, r)`, the radial inversion kernel for `N ∈ {1, 2, 3}`.
#[inline]
pub fn radial_kernel(dim: u32, rho: f64, r: f64) -> f64 {
    match dim {
        1 => (rho * r).cos() / PI,
        2 => rho * j0(rho * r) / (2.0 * PI),
        _ => {
            if r == 0.0 {
                rho * rho / (2.0 * PI * PI)
            } else {
                rho * (rho * r).sin() / (2.0 * PI * PI * r)
            }
        }
    }
}

/// `ln |R_N(a)|` and its sign, where `F⁻¹[|ξ|^a] = R_N(a) |x|^{−N−a}` and
/// `R_N(a) = 2^a π^{−N/2} Γ((N+a)/2) / Γ(−a/2)`. The sign is 0 when `a/2` is a
/// nonnegative integer (the symbol is then smooth and contributes nothing).
pub fn ln_riesz_constant(dim: u32, a: f64) -> (f64, f64) {
    let n = dim as f64;
    let h = -a / 2.0;
    if h <= 0.0 && h.fract() == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let (lg, sg) = ln_gamma_signed((n + a) / 2.0);
    // 1/Γ(h) via reflection keeps large a/2 finite in log form
    let (lr, sr) = if h < 0.5 {
        let sp = sinpi(h);
        let (l1, _) = ln_gamma_signed(1.0 - h);
        (l1 + sp.abs().ln() - PI.ln(), sp.signum())
    } else {
        let (l, s) = ln_gamma_signed(h);
        (-l, s)
    };
    (a * 2f64.ln() - 0.5 * n * PI.ln() + lg + lr, sg * sr)
}

/// `R_N(a)` (see [`ln_riesz_constant`]).
pub fn riesz_constant(dim: u32, a: f64) -> f64 {
    let (l, s) = ln_riesz_constant(dim, a);
    if s == 0.0 {
        0.0
    } else {
        s * l.exp()
    }
}

/// An algebraic expansion `Σ c_k ρ^{−e_k}` valid for `ρ ≥ start`.
#[derive(Debug, Clone)]
pub struct AlgebraicTail {
    pub start: f64,
    pub terms: Vec<(f64, f64)>,
}

impl AlgebraicTail {
    #[inline]
    pub fn eval(&self, rho: f64) -> f64 {
        let l = rho.ln();
        self.terms.iter().map(|(c, e)| c * (-e * l).exp()).sum()
    }
}

/// Symbol tabulated on a panel grid, ready to be inverted at any radius.
#[derive(Debug, Clone)]
pub struct HankelPlan {
    dim: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
    tail: Option<AlgebraicTail>,
}

/// Panel layout: one panel `[0, knee · 2^{−levels}]`, geometric panels
/// `[2^{−k−1}, 2^{−k}] · knee` above it, then panels of width at most `h` between the given
/// breakpoints up to `end`.
#[derive(Debug, Clone)]
pub struct PanelLayout {
    pub knee: f64,
    pub levels: u32,
    pub h: f64,
    pub breaks: Vec<f64>,
    pub end: f64,
    pub gl16: bool,
}

impl PanelLayout {
    pub fn uniform(knee: f64, h: f64, end: f64) -> Self {
        PanelLayout {
            knee,
            levels: 44,
            h,
            breaks: Vec::new(),
            end,
            gl16: false,
        }
    }

    fn quadrature(&self) -> (Vec<f64>, Vec<f64>) {
        let rule = if self.gl16 { gl16() } else { gl12() };
        let (mut x, mut w) = (Vec::new(), Vec::new());
        let knee = self.knee.min(self.end);
        let mut b = knee;
        let mut edges = Vec::new();
        for _ in 0..self.levels {
            edges.push(b);
            b *= 0.5;
        }
        edges.push(b);
        edges.push(0.0);
        edges.reverse();
        for e in edges.windows(2) {
            rule.push_mapped(e[0], e[1], &mut x, &mut w);
        }
        let mut pts: Vec<f64> = self
            .breaks
            .iter()
            .copied()
            .filter(|p| *p > knee && *p < self.end)
            .collect();
        pts.push(knee);
        pts.push(self.end);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        for seg in pts.windows(2) {
            let m = ((seg[1] - seg[0]) / self.h).ceil().max(1.0) as usize;
            let d = (seg[1] - seg[0]) / m as f64;
            for i in 0..m {
                let a = seg[0] + d * i as f64;
                let bb = if i + 1 == m { seg[1] } else { a + d };
                rule.push_mapped(a, bb, &mut x, &mut w);
            }
        }
        (x, w)
    }
}

impl HankelPlan {
    /// Tabulates `symbol` on `layout`; `tail` (if any) must start at
    /// `layout.end`.
    pub fn new(
        dim: u32,
        layout: &PanelLayout,
        symbol: impl Fn(f64) -> Result<f64> + Sync,
        tail: Option<AlgebraicTail>,
    ) -> Result<Self> {
        use rayon::prelude::*;
        if !(1..=3).contains(&dim) {
            return Err(Error::domain("radial inversion supports N∈{1,2,3}"));
        }
        let (nodes, weights) = layout.quadrature();
        let values = nodes
            .par_iter()
            .map(|&x| symbol(x))
            .collect::<Result<Vec<f64>>>()?;
        Ok(HankelPlan {
            dim,
            nodes,
            weights,
            values,
            tail,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Head integral only.
    pub fn head(&self, r: f64) -> f64 {
        let mut acc = KahanSum::default();
        for ((x, w), v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            acc.add(w * v * radial_kernel(self.dim, *x, r));
        }
        acc.sum()
    }

    /// `f(r)` with an estimate of the tail error.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        let h = self.head(r);
        match &self.tail {
            None => Ok((h, 0.0)),
            Some(t) => {
                let (v, e) = oscillatory_tail(self.dim, r, t)?;
                Ok((h + v, e))
            }
        }
    }
}

fn tail_at_origin(dim: u32, tail: &AlgebraicTail) -> Result<f64> {
    // ∫_a^∞ ρ^{−e} K_N(ρ, 0) dρ in closed form
    let p = dim as f64 - 1.0;
    let mut acc = 0.0;
    for (c, e) in &tail.terms {
        let q = e - p;
        if q <= 1.0 {
            return Err(Error::domain("the inversion integral diverges at r = 0"));
        }
        acc += c * tail.start.powf(1.0 - q) / (q - 1.0);
    }
    let norm = match dim {
        1 => 1.0 / PI,
        2 => 1.0 / (2.0 * PI),
        _ => 1.0 / (2.0 * PI * PI),
    };
    Ok(norm * acc)
}

/// `k`-th positive zero (k ≥ 1) of the oscillating factor of `K_N(ρ, 1)`.
fn kernel_zero(dim: u32, k: usize) -> f64 {
    match dim {
        1 => (k as f64 - 0.5) * PI,
        2 => {
            if k < 200 {
                j0_zero(k)
            } else {
                let b = (k as f64 - 0.25) * PI;
                b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b.powi(3))
            }
        }
        _ => k as f64 * PI,
    }
}

fn first_zero_index(dim: u32, x: f64) -> usize {
    let mut k = ((x / PI) - 1.0).floor().max(1.0) as usize;
    while kernel_zero(dim, k) <= x {
        k += 1;
    }
    k
}

/// `∫_a^∞ tail(ρ) K_N(ρ, r) dρ` by adaptive quadrature up to the first zero
/// of the Bessel factor past `a`, then zero-to-zero Gauss panels summed with
/// Wynn's epsilon algorithm.
pub fn oscillatory_tail(dim: u32, r: f64, tail: &AlgebraicTail) -> Result<(f64, f64)> {
    if r == 0.0 {
        return Ok((tail_at_origin(dim, tail)?, 0.0));
    }
    let a = tail.start;
    let f = |rho: f64| tail.eval(rho) * radial_kernel(dim, rho, r);
    let k0 = first_zero_index(dim, a * r);
    let z0 = kernel_zero(dim, k0) / r;
    let mut breaks = Vec::new();
    let mut b = 2.0 * a;
    while b < z0 {
        breaks.push(b);
        b *= 2.0;
    }
    let amp = tail.eval(a).abs() * radial_kernel(dim, a, 0.0).abs();
    let gap = adaptive(
        f,
        a,
        z0,
        &breaks,
        Tolerance::rel(1e-14).with_abs(1e-16 * amp * (z0 - a)),
    );
    if !gap.converged && gap.error > 1e-12 * amp * (z0 - a) {
        return Err(Error::numerical(format!(
            "tail quadrature failed before the first kernel zero at r = {r}"
        )));
    }
    let rule = gl16();
    let mut sums = vec![gap.value];
    let mut s = gap.value;
    let mut prev = f64::NAN;
    let mut stable = 0;
    let mut lo = z0;
    let mut scale = gap.value.abs();
    for k in (k0 + 1)..(k0 + 2000) {
        let hi = kernel_zero(dim, k) / r;
        let v = rule.integrate(lo, hi, f);
        scale = scale.max(v.abs());
        s += v;
        sums.push(s);
        lo = hi;
        if sums.len() >= 8 {
            let from = sums.len().saturating_sub(24);
            let est = wynn_epsilon(&sums[from..]);
            let tol = 1e-15 * est.abs().max(scale) + 1e-300;
            if (est - prev).abs() <= tol {
                stable += 1;
                if stable >= 2 {
                    return Ok((est, (est - prev).abs() + gap.error));
                }
            } else {
                stable = 0;
            }
            prev = est;
        }
    }
    if prev.is_finite() {
        let last = sums.len();
        let alt = wynn_epsilon(&sums[last - 20..last - 1]);
        let err = (prev - alt).abs();
        if err <= 1e-10 * prev.abs().max(scale) {
            return Ok((prev, err));
        }
    }
    Err(Error::numerical(format!(
        "oscillatory tail did not converge at r = {r}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_constant_matches_known_transforms() {
        // F⁻¹|ξ| in one dimension is −1/(π x²)
        assert!((riesz_constant(1, 1.0) + 1.0 / PI).abs() < 1e-15);
        // F⁻¹|ξ|^{−2} in three dimensions is 1/(4π|x|)
        assert!((riesz_constant(3, -2.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        // even powers are polynomials
        assert_eq!(riesz_constant(2, 2.0), 0.0);
        assert_eq!(riesz_constant(3, 4.0), 0.0);
    }

    #[test]
    fn exponential_symbol_gives_poisson_kernel() {
        for dim in [1u32, 2, 3] {
            let layout = PanelLayout::uniform(1.0, 0.05, 45.0);
            let plan = HankelPlan::new(dim, &layout, |x: f64| Ok((-x).exp()), None).unwrap();
            let c = crate::specfun::gamma((dim as f64 + 1.0) / 2.0)
                / PI.powf((dim as f64 + 1.0) / 2.0);
            for r in [0.0f64, 0.3, 1.0, 4.0, 10.0] {
                let exact = c * (1.0 + r * r).powf(-(dim as f64 + 1.0) / 2.0);
                let (v, _) = plan.eval(r).unwrap();
                assert!(((v - exact) / exact).abs() < 1e-11, "N={dim} r={r}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn algebraic_tail_matches_closed_form() {
        // ∫_1^∞ cos(ρr)/(πρ²) dρ = (cos r − r (π/2 − Si(r)))/π
        let tail = AlgebraicTail {
            start: 1.0,
            terms: vec![(1.0, 2.0)],
        };
        let r: f64 = 2.0;
        let si = adaptive(|x: f64| x.sin() / x, 0.0, r, &[], Tolerance::rel(1e-15)).value;
        let exact = (r.cos() - r * (PI / 2.0 - si)) / PI;
        let (v, _) = oscillatory_tail(1, r, &tail).unwrap();
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn abel_summed_tail_in_three_dimensions() {
        // ∫_1^∞ sin(ρr)/ρ dρ · 1/(2π² r) with ρ·ρ^{−1} = 1 amplitude on ρ
        // the tail of ρ^{−1}·K_3 is (π/2 − Si(r))/(2π² r)
        let tail = AlgebraicTail {
            start: 1.0,
            terms: vec![(1.0, 2.0)],
        };
        let r: f64 = 0.7;
        let si = adaptive(|x: f64| x.sin() / x, 0.0, r, &[], Tolerance::rel(1e-15)).value;
        let exact = (PI / 2.0 - si) / (2.0 * PI * PI * r);
        let (v, _) = oscillatory_tail(3, r, &tail).unwrap();
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
        // non-decaying amplitude: ∫_1^∞ sin(ρr) dρ = cos(r)/r in the Abel sense
        let flat = AlgebraicTail {
            start: 1.0,
            terms: vec![(1.0, 1.0)],
        };
        let exact = r.cos() / r / (2.0 * PI * PI * r);
        let (v, _) = oscillatory_tail(3, r, &flat).unwrap();
        assert!((v - exact).abs() < 1e-11 * exact.abs(), "{v} vs {exact}");
    }
}
