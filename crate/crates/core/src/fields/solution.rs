use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datum::{DatumFamily, DatumTransform, InitialDatum};
use crate::error::{Error, Result};
use crate::grid::{ball_volume, sphere_area, RadialField, RadialGrid, Spacing};
use crate::kernel::hankel::{ln_riesz_constant, HankelPlan, PanelLayout};
use crate::kernel::{kernel_value, MomentTable, ProfileTable};
use crate::params::ModelParams;
use crate::quad::{adaptive, adaptive_to_infinity, gl12, KahanSum, Tolerance};
use crate::specfun::gamma::ln_gamma_signed;
use crate::specfun::mittag_leffler::mittag_leffler;

/// How a solution field was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Fourier,
    Convolution,
    /// `M·Z(·, t)` itself (synthetic reference).
    Kernel,
}

impl Route {
    pub fn label(&self) -> &'static str {
        match self {
            Route::Fourier => "fourier",
            Route::Convolution => "convolution",
            Route::Kernel => "kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub expected: f64,
    pub computed: f64,
    pub relative_error: f64,
}

/// `u(·, t)` sampled on a radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub params: ModelParams,
    pub datum: InitialDatum,
    pub t: f64,
    pub field: RadialField,
    pub route: Route,
    pub mass_check: MassCheck,
}

impl SolutionField {
    fn new(
        params: ModelParams,
        datum: &InitialDatum,
        t: f64,
        field: RadialField,
        route: Route,
    ) -> Self {
        let computed = field_mass(&field);
        let expected = datum.mass();
        SolutionField {
            params,
            datum: datum.clone(),
            t,
            field,
            route,
            mass_check: MassCheck {
                expected,
                computed,
                relative_error: ((computed - expected) / expected).abs(),
            },
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.field.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    /// CSV with header `r,u,t,route`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u,t,route\n");
        for (r, u) in self.field.grid.nodes().iter().zip(&self.field.values) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{}\n",
                r,
                u,
                self.t,
                self.route.label()
            ));
        }
        out
    }
}

/// `∫ u` over `ℝ^N` from nodal values: the grid quadrature (trapezoidal in
/// `ln r` with an endpoint correction on logarithmic grids), the ball below
/// the first node at the first value, and a power-law tail fitted to the
/// last two nodes.
pub fn field_mass(field: &RadialField) -> f64 {
    let g = &field.grid;
    let (nodes, v) = (g.nodes(), &field.values);
    let dim = g.dim();
    let omega = sphere_area(dim);
    let n = nodes.len();
    let core = if g.spacing() == Spacing::Logarithmic && n >= 6 {
        let h = (nodes[n - 1] / nodes[0]).ln() / (n - 1) as f64;
        let f: Vec<f64> = nodes
            .iter()
            .zip(v)
            .map(|(r, u)| omega * r.powi(dim as i32) * u)
            .collect();
        let mut acc = KahanSum::default();
        for x in &f {
            acc.add(*x);
        }
        acc.add(-0.5 * (f[0] + f[n - 1]));
        let d0 = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
        let dn = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4]
            + 3.0 * f[n - 5])
            / (12.0 * h);
        h * acc.sum() - h * h / 12.0 * (dn - d0) + ball_volume(dim, nodes[0]) * v[0]
    } else {
        g.integrate(v)
    };
    let (r1, r2) = (nodes[n - 2], nodes[n - 1]);
    let (u1, u2) = (v[n - 2], v[n - 1]);
    let mut tail = 0.0;
    if u1 > 0.0 && u2 > 0.0 {
        let e = -(u2 / u1).ln() / (r2 / r1).ln();
        if e > dim as f64 {
            tail = omega * u2 * r2.powi(dim as i32) / (e - dim as f64);
        }
    }
    core + tail
}

/// Logarithmic grid spanning `[10⁻³ min(ℓ, w), 10³ max(ℓ, w)]`, with `ℓ` the
/// self-similar length at time `t` and `w` the datum width.
pub fn solution_grid(
    params: &ModelParams,
    datum: &InitialDatum,
    t: f64,
    nodes: usize,
) -> Result<RadialGrid> {
    let ell = params.length_scale(t);
    let w = datum.width();
    RadialGrid::logarithmic(1e-3 * ell.min(w), 1e3 * ell.max(w), nodes, params.dim())
}

fn check_inputs(params: &ModelParams, datum: &InitialDatum, t: f64, grid: &RadialGrid) -> Result<()> {
    params.require_supported_dim()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    if datum.dim() != params.dim() || grid.dim() != params.dim() {
        return Err(Error::domain("datum, grid and parameters disagree on N"));
    }
    Ok(())
}

/// Large-radius expansion of `u(·, t)` for Gaussian data,
///
/// ```text
/// u(r, t) ~ M Σ_{j≥1} Σ_{m≥0} (−t^α)^j/Γ(1+αj) · (−w²/4)^m/m! · R_N(2sj+2m) r^{−N−2sj−2m},
/// ```
///
/// obtained by inverting the non-smooth terms of `E_α(−ρ^{2s}t^α) û₀(ρ)`.
struct GaussianFarField {
    n: f64,
    blocks: Vec<Vec<(f64, f64, f64)>>,
}

impl GaussianFarField {
    fn new(params: &ModelParams, mass: f64, width: f64, t: f64) -> Self {
        let (alpha, s) = (params.alpha(), params.s());
        let lw = (width * width / 4.0).ln();
        let mut blocks = Vec::new();
        for j in 1..=160usize {
            let jf = j as f64;
            let (lgj, _) = ln_gamma_signed(1.0 + alpha * jf);
            let base = mass.ln() + alpha * jf * t.ln() - lgj;
            let mut block = Vec::new();
            for m in 0..=80usize {
                let a = 2.0 * s * jf + 2.0 * m as f64;
                let (lr, sr) = ln_riesz_constant(params.dim(), a);
                if sr == 0.0 {
                    continue;
                }
                let (lgm, _) = ln_gamma_signed(m as f64 + 1.0);
                let sign = if (j + m) % 2 == 0 { sr } else { -sr };
                block.push((base + m as f64 * lw - lgm + lr, sign, a));
            }
            blocks.push(block);
        }
        GaussianFarField {
            n: params.n(),
            blocks,
        }
    }

    /// Sum and error estimate at radius `r`.
    fn eval(&self, r: f64) -> (f64, f64) {
        let lr = r.ln();
        let mut total = KahanSum::default();
        let mut err = 0.0;
        let mut best = f64::INFINITY;
        let mut pending = 0.0;
        let mut pending_err = 0.0;
        let mut grows = 0;
        for block in &self.blocks {
            if block.is_empty() {
                continue;
            }
            let mut acc = KahanSum::default();
            let mut bmin = f64::INFINITY;
            let mut bpending = 0.0;
            let mut bgrow = 0;
            for (lc, sg, a) in block {
                let term = sg * (lc - (self.n + a) * lr).exp();
                if term.abs() < bmin {
                    acc.add(bpending);
                    bpending = term;
                    bmin = term.abs();
                    bgrow = 0;
                } else {
                    bgrow += 1;
                    if bgrow > 4 {
                        break;
                    }
                }
            }
            let value = acc.sum();
            let lead = value.abs().max(bmin);
            if lead < best {
                total.add(pending);
                err += pending_err;
                pending = value;
                pending_err = bmin;
                best = lead;
                grows = 0;
            } else {
                grows += 1;
                if grows > 4 {
                    break;
                }
            }
        }
        (total.sum(), err + best)
    }
}

/// Evaluates `u(r, t)` for one time by the symbol route.
pub struct FourierSolver {
    plan: HankelPlan,
    far: Option<GaussianFarField>,
    r_head: f64,
}

impl FourierSolver {
    /// Prepares the inversion for radii up to `r_max`.
    pub fn new(
        datum: &InitialDatum,
        transform: &DatumTransform,
        params: &ModelParams,
        t: f64,
        r_max: f64,
    ) -> Result<Self> {
        let (alpha, s) = (params.alpha(), params.s());
        let far = match datum.family() {
            DatumFamily::Gaussian { width } => {
                Some(GaussianFarField::new(params, datum.mass(), *width, t))
            }
            _ => None,
        };
        // radius above which the far-field expansion takes over
        let mut r_head = r_max;
        if let Some(f) = &far {
            let ell = params.length_scale(t);
            let mut r = r_max;
            while r > ell.max(datum.width()) {
                let (v, e) = f.eval(r);
                if !(v > 0.0 && e <= 1e-12 * v) {
                    break;
                }
                r_head = r;
                r /= 1.25;
            }
        }
        let rho_s = t.powf(-alpha / (2.0 * s));
        let cutoff = transform.cutoff();
        let h = (0.1f64).min(4.0 / r_head).min(cutoff / 200.0);
        if cutoff / h > 4e6 {
            return Err(Error::numerical(format!(
                "symbol route would need {:.0} panels to reach r = {r_head}",
                cutoff / h
            )));
        }
        let breaks = (-8..=8).map(|j| rho_s * 2f64.powi(j)).collect();
        let layout = PanelLayout {
            knee: 1f64.min(rho_s).min(cutoff / 4.0),
            levels: 50,
            h,
            breaks,
            end: cutoff,
            gl16: true,
        };
        let ta = t.powf(alpha);
        let plan = HankelPlan::new(
            params.dim(),
            &layout,
            |rho: f64| Ok(mittag_leffler(alpha, rho.powf(2.0 * s) * ta)? * transform.eval(rho)?),
            None,
        )?;
        Ok(FourierSolver { plan, far, r_head })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if let Some(f) = &self.far {
            if r > self.r_head {
                let (v, e) = f.eval(r);
                if v > 0.0 && e <= 1e-12 * v {
                    return Ok(v);
                }
            }
        }
        Ok(self.plan.eval(r)?.0)
    }
}

/// `u(r, t)` as the radial inverse transform of `E_α(−ρ^{2s}t^α) û₀(ρ)`.
pub fn mild_solution_fourier(
    datum: &InitialDatum,
    params: &ModelParams,
    t: f64,
    grid: &RadialGrid,
) -> Result<SolutionField> {
    check_inputs(params, datum, t, grid)?;
    if !datum.transform_available() {
        return Err(Error::domain(
            "Fourier transform unavailable for this datum family",
        ));
    }
    let transform = datum.transform()?;
    mild_solution_fourier_with(datum, &transform, params, t, grid)
}

/// As [`mild_solution_fourier`] with a precomputed transform.
pub fn mild_solution_fourier_with(
    datum: &InitialDatum,
    transform: &DatumTransform,
    params: &ModelParams,
    t: f64,
    grid: &RadialGrid,
) -> Result<SolutionField> {
    check_inputs(params, datum, t, grid)?;
    let solver = FourierSolver::new(datum, transform, params, t, grid.r_max())?;
    let values = grid
        .nodes()
        .par_iter()
        .map(|&r| solver.eval(r))
        .collect::<Result<Vec<f64>>>()?;
    let field = RadialField::new(grid.clone(), values)?;
    Ok(SolutionField::new(*params, datum, t, field, Route::Fourier))
}

/// `M·Z(·, t)` on `grid`.
pub fn kernel_field(
    table: &ProfileTable,
    datum: &InitialDatum,
    t: f64,
    grid: &RadialGrid,
) -> Result<SolutionField> {
    check_inputs(&table.params, datum, t, grid)?;
    let m = datum.mass();
    let values = grid
        .nodes()
        .iter()
        .map(|&r| Ok(m * kernel_value(table, r, t)?))
        .collect::<Result<Vec<f64>>>()?;
    let field = RadialField::new(grid.clone(), values)?;
    Ok(SolutionField::new(table.params, datum, t, field, Route::Kernel))
}

/// Evaluates `u(r, t) = ∫ Z(x−y, t) u₀(y) dy` for radial data, reducing the
/// angular integral to a kernel average over the sphere `|y| = q`.
pub struct ConvolutionSolver<'a> {
    datum: &'a InitialDatum,
    table: &'a ProfileTable,
    moment: Option<MomentTable>,
    ell: f64,
    tol: f64,
}

impl<'a> ConvolutionSolver<'a> {
    pub fn new(datum: &'a InitialDatum, table: &'a ProfileTable, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("time must be positive, got {t}")));
        }
        if datum.dim() != table.params.dim() {
            return Err(Error::domain("datum and profile disagree on N"));
        }
        let moment = (table.params.dim() == 3).then(|| table.first_moment_table());
        Ok(ConvolutionSolver {
            datum,
            table,
            moment,
            ell: table.params.length_scale(t),
            tol: 1e-11,
        })
    }

    fn f(&self, z: f64) -> f64 {
        // bisection towards the kernel singularity can land exactly on it
        crate::kernel::profile_value(self.table, z.max(1e-300)).unwrap_or(f64::NAN)
    }

    /// `∫_{|y|=q} Z(x−y) dσ(y) / q^{N−1}` for `|x| = r`.
    fn sphere_average(&self, r: f64, q: f64) -> f64 {
        let ell = self.ell;
        match self.table.params.dim() {
            1 => (self.f((r - q).abs() / ell) + self.f((r + q) / ell)) / ell,
            3 => {
                if r == 0.0 {
                    return 4.0 * PI * self.f(q / ell) / ell.powi(3);
                }
                let (a, b) = ((r - q).abs() / ell, (r + q) / ell);
                let diff = if (b - a) < 1e-4 * b {
                    gl12().integrate(a, b, |z| self.f(z) * z)
                } else {
                    let m = self.moment.as_ref().unwrap();
                    m.eval(b) - m.eval(a)
                };
                2.0 * PI * diff / (ell * r * q)
            }
            _ => {
                if r == 0.0 {
                    return 2.0 * PI * self.f(q / ell) / (ell * ell);
                }
                let d2 = |th: f64| (r - q).powi(2) + 4.0 * r * q * (0.5 * th).sin().powi(2);
                let g = |th: f64| self.f(d2(th).sqrt() / ell);
                let delta = (r - q).abs() / (r * q).sqrt();
                let breaks: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
                    .iter()
                    .map(|k| k * delta)
                    .filter(|x| *x < PI)
                    .collect();
                let res = adaptive(g, 0.0, PI, &breaks, Tolerance::rel(1e-12));
                2.0 * res.value / (ell * ell)
            }
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let dim = self.table.params.dim();
        let d = self.datum;
        let integrand = |q: f64| {
            if q == 0.0 {
                return 0.0;
            }
            d.value(q) * q.powi(dim as i32 - 1) * self.sphere_average(r, q)
        };
        let ell = self.ell;
        let mut breaks = vec![r, r - ell, r + ell, r - 0.1 * ell, r + 0.1 * ell, ell, d.width()];
        breaks.extend(d.kinks());
        let tol = Tolerance::rel(self.tol);
        let res = match d.effective_support() {
            Some(q_max) => adaptive(integrand, 0.0, q_max, &breaks, tol),
            None => {
                let q1 = 4.0 * (r + ell + d.width());
                breaks.push(2.0 * r);
                let head = adaptive(integrand, 0.0, q1, &breaks, tol);
                let tail = adaptive_to_infinity(integrand, q1, tol);
                crate::quad::QuadResult {
                    value: head.value + tail.value,
                    error: head.error + tail.error,
                    converged: head.converged && tail.converged,
                }
            }
        };
        if !res.value.is_finite() || (!res.converged && res.error > 1e-8 * res.value.abs()) {
            return Err(Error::numerical(format!(
                "convolution quadrature failed at r = {r} (ℓ = {ell}): value {:e}, error {:e}",
                res.value,
                res.error
            )));
        }
        Ok(res.value)
    }
}

/// `u(r, t)` by direct convolution of the datum with `Z(·, t)` taken from
/// the profile table.
pub fn mild_solution_convolution(
    datum: &InitialDatum,
    table: &ProfileTable,
    t: f64,
    grid: &RadialGrid,
) -> Result<SolutionField> {
    check_inputs(&table.params, datum, t, grid)?;
    let solver = ConvolutionSolver::new(datum, table, t)?;
    let values = grid
        .nodes()
        .par_iter()
        .map(|&r| solver.eval(r))
        .collect::<Result<Vec<f64>>>()?;
    let field = RadialField::new(grid.clone(), values)?;
    Ok(SolutionField::new(
        table.params,
        datum,
        t,
        field,
        Route::Convolution,
    ))
}

