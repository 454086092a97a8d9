use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hankel::{ln_riesz_constant, AlgebraicTail, HankelPlan, PanelLayout};
use super::stable::StableProfile;
use crate::error::{Error, Result};
use crate::grid::{sphere_area, RadialGrid, Spacing};
use crate::params::{ModelParams, Regime};
use crate::quad::KahanSum;
use crate::specfun::gamma::{ln_gamma_signed, rgamma};
use crate::specfun::mittag_leffler::{asymptotic_series, mittag_leffler};
use crate::specfun::wright::wright_mainardi_density;

/// How the profile values were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMethod {
    Direct,
    Subordination,
}

impl std::str::FromStr for BuildMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(BuildMethod::Direct),
            "subordination" => Ok(BuildMethod::Subordination),
            other => Err(Error::domain(format!(
                "unknown build method '{other}' (expected direct or subordination)"
            ))),
        }
    }
}

impl BuildMethod {
    pub fn label(&self) -> &'static str {
        match self {
            BuildMethod::Direct => "direct",
            BuildMethod::Subordination => "subordination",
        }
    }
}

/// Behaviour of `F` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginLaw {
    /// `F ~ κ r^{2s−N}`
    Power,
    /// `F ~ κ (−ln r)`
    Log,
    /// `F(0)` finite
    Constant,
}

impl OriginLaw {
    pub fn label(&self) -> &'static str {
        match self {
            OriginLaw::Power => "|ξ|^{2s−N}",
            OriginLaw::Log => "−log|ξ|",
            OriginLaw::Constant => "constant",
        }
    }
}

/// Continuation of `F` below the grid.
///
/// * `Power`: `coef · r^{exponent}`
/// * `Log`: `coef · (−ln r) + offset`
/// * `Constant`: `offset − coef · r^{exponent}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginFit {
    pub law: OriginLaw,
    pub coef: f64,
    pub offset: f64,
    pub exponent: f64,
}

impl OriginFit {
    fn eval(&self, r: f64) -> f64 {
        match self.law {
            OriginLaw::Power => self.coef * r.powf(self.exponent),
            OriginLaw::Log => -self.coef * r.ln() + self.offset,
            OriginLaw::Constant => self.offset - self.coef * r.powf(self.exponent),
        }
    }

    /// `∫_{|x|<r0} F` in `ℝ^N`.
    fn ball_integral(&self, dim: u32, r0: f64) -> f64 {
        let n = dim as f64;
        let w = sphere_area(dim);
        match self.law {
            OriginLaw::Power => w * self.coef * r0.powf(n + self.exponent) / (n + self.exponent),
            OriginLaw::Log => {
                // N = 1 only
                w * (self.coef * r0 * (1.0 - r0.ln()) + self.offset * r0)
            }
            OriginLaw::Constant => {
                w * (self.offset * r0.powf(n) / n
                    - self.coef * r0.powf(n + self.exponent) / (n + self.exponent))
            }
        }
    }
}

/// Quantities recorded while building a table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildDiagnostics {
    /// `∫F` (grid quadrature plus analytic origin and tail pieces).
    pub mass: f64,
    /// Relative variation of `r^{N+2s}F` over the last grid decade.
    pub tail_variation: f64,
    /// Fitted log-log slope on the first two grid decades (power law only).
    pub origin_slope: Option<f64>,
    /// Relative variation of `F/(−ln r)` over the first decade (log law only).
    pub log_ratio_variation: Option<f64>,
    /// Decade-to-decade spread of the κ estimate.
    pub kappa_spread: Option<f64>,
    /// Largest quadrature error estimate and the radius where it occurred.
    pub worst_error: f64,
    pub worst_radius: f64,
    /// Nodes evaluated with the large-radius series.
    pub series_nodes: usize,
    /// Invariant violations, empty when the table is valid.
    pub failures: Vec<String>,
}

/// Tabulated self-similar profile `F` with its origin and tail laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub params: ModelParams,
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    /// `d ln F / d ln r` at the nodes.
    pub slopes: Vec<f64>,
    pub kappa: Option<f64>,
    pub kappa_hat: f64,
    pub origin: OriginFit,
    /// `F(0)` when finite.
    pub f0: Option<f64>,
    pub method: BuildMethod,
    /// Coefficients `a_k` of `F(r) ~ Σ_{k≥1} a_k r^{−N−2sk}`.
    pub tail_coeffs: Vec<f64>,
    pub diagnostics: BuildDiagnostics,
}

/// The default profile grid: 600 logarithmic nodes on `[10⁻⁴, 10³]`.
pub fn default_profile_grid(dim: u32) -> Result<RadialGrid> {
    RadialGrid::logarithmic(1e-4, 1e3, 600, dim)
}

/// `ln |a_k|` and sign of the large-radius coefficients
/// `a_k = (−1)^k R_N(2sk) / Γ(1+αk)`.
pub(crate) fn tail_coefficient(params: &ModelParams, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let (lr, sr) = ln_riesz_constant(params.dim(), 2.0 * params.s() * kf);
    if sr == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let (lg, _) = ln_gamma_signed(1.0 + params.alpha() * kf);
    let sign = if k % 2 == 0 { sr } else { -sr };
    (lr - lg, sign)
}

/// Large-radius expansion `F(r) ~ Σ_{k≥1} a_k r^{−N−2sk}` with the
/// coefficients kept in log form.
#[derive(Debug, Clone)]
pub struct TailExpansion {
    n: f64,
    two_s: f64,
    coeffs: Vec<(f64, f64)>,
}

impl TailExpansion {
    pub fn new(params: &ModelParams) -> Self {
        TailExpansion {
            n: params.n(),
            two_s: 2.0 * params.s(),
            coeffs: (1..400).map(|k| tail_coefficient(params, k)).collect(),
        }
    }

    /// Optimally truncated sum and the size of the smallest omitted term.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let lr = r.ln();
        let term = |i: usize| {
            let (la, sg) = self.coeffs[i];
            if sg == 0.0 {
                0.0
            } else {
                sg * (la - (self.n + self.two_s * (i + 1) as f64) * lr).exp()
            }
        };
        let mut acc = KahanSum::default();
        let mut best_mag = f64::INFINITY;
        let mut pending = 0.0;
        let mut grows = 0;
        for i in 0..self.coeffs.len() {
            let t = term(i);
            if t == 0.0 {
                continue;
            }
            if t.abs() < best_mag {
                // everything before the smallest term is kept
                acc.add(pending);
                pending = t;
                best_mag = t.abs();
                grows = 0;
            } else {
                grows += 1;
                if grows > 8 {
                    break;
                }
            }
        }
        if best_mag == f64::INFINITY {
            return (0.0, 0.0);
        }
        (acc.sum(), best_mag)
    }
}

fn series_accurate(tail: &TailExpansion, r: f64) -> Option<f64> {
    let (v, e) = tail.eval(r);
    (v > 0.0 && e <= 1e-13 * v).then_some(v)
}

/// Builds the profile and checks the table invariants.
pub fn build_profile(
    params: &ModelParams,
    grid: &RadialGrid,
    method: BuildMethod,
) -> Result<ProfileTable> {
    let table = build_profile_unchecked(params, grid, method)?;
    if !table.diagnostics.failures.is_empty() {
        return Err(Error::Invariant(format!(
            "profile invariants violated: {}",
            table.diagnostics.failures.join("; ")
        )));
    }
    Ok(table)
}

/// Builds the profile; invariant violations are recorded in the diagnostics
/// instead of being returned as errors.
pub fn build_profile_unchecked(
    params: &ModelParams,
    grid: &RadialGrid,
    method: BuildMethod,
) -> Result<ProfileTable> {
    params.require_supported_dim()?;
    if params.s() >= 1.0 {
        return Err(Error::domain(
            "the profile has an algebraic tail only for s < 1",
        ));
    }
    if grid.dim() != params.dim() {
        return Err(Error::domain(format!(
            "grid dimension {} does not match N = {}",
            grid.dim(),
            params.dim()
        )));
    }
    if grid.r_min() <= 0.0 || grid.len() < 8 {
        return Err(Error::domain(
            "profile grids need at least 8 nodes starting at a positive radius",
        ));
    }
    let raw = match method {
        BuildMethod::Direct => direct_values(params, grid.nodes())?,
        BuildMethod::Subordination => subordination_values(params, grid.nodes())?,
    };
    let finite_origin = params.alpha() == 1.0 || params.regime() == Regime::Supercritical;
    let f0 = if finite_origin {
        Some(match method {
            BuildMethod::Direct => direct_values(params, &[0.0])?.values[0],
            BuildMethod::Subordination => subordination_origin(params)?,
        })
    } else {
        None
    };
    let tail_coeffs = (1..=16)
        .map(|k| {
            let (l, s) = tail_coefficient(params, k);
            if s == 0.0 {
                0.0
            } else {
                s * l.exp()
            }
        })
        .collect();
    let mut table = ProfileTable {
        params: *params,
        grid: grid.clone(),
        slopes: log_slopes(grid.nodes(), &raw.values),
        values: raw.values,
        kappa: None,
        kappa_hat: 0.0,
        origin: OriginFit {
            law: OriginLaw::Constant,
            coef: 0.0,
            offset: 0.0,
            exponent: 0.0,
        },
        f0,
        method,
        tail_coeffs,
        diagnostics: BuildDiagnostics {
            worst_error: raw.worst_error,
            worst_radius: raw.worst_radius,
            series_nodes: raw.series_nodes,
            ..Default::default()
        },
    };
    finish(&mut table);
    Ok(table)
}

fn finish(table: &mut ProfileTable) {
    let mut failures = Vec::new();
    if let Some(i) = table.values.iter().position(|v| !(*v > 0.0)) {
        failures.push(format!(
            "nonpositive value {} at r = {}",
            table.values[i],
            table.grid.nodes()[i]
        ));
        table.diagnostics.failures = failures;
        return;
    }
    let kh = tail_plateau(table);
    table.kappa_hat = kh.value;
    table.diagnostics.tail_variation = kh.variation;
    if kh.variation > 0.02 {
        failures.push(format!(
            "tail plateau of r^(N+2s)F varies by {:.3}% over the last decade",
            100.0 * kh.variation
        ));
    }
    table.origin = fit_origin(table);
    match estimate_kappa(table) {
        Ok(k) => {
            table.kappa = Some(k.value);
            table.diagnostics.kappa_spread = Some(k.spread);
        }
        Err(Error::Domain(_)) => {}
        Err(e) => failures.push(e.to_string()),
    }
    let p = &table.params;
    let (r0, nodes) = (table.grid.r_min(), table.grid.nodes());
    match table.origin.law {
        OriginLaw::Power if p.alpha() < 1.0 => {
            let idx: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] <= 100.0 * r0 * (1.0 + 1e-9)).collect();
            let x: Vec<f64> = idx.iter().map(|&i| nodes[i].ln()).collect();
            let y: Vec<f64> = idx.iter().map(|&i| table.values[i].ln()).collect();
            let slope = ols_slope(&x, &y);
            let expected = 2.0 * p.s() - p.n();
            table.diagnostics.origin_slope = Some(slope);
            if ((slope - expected) / expected).abs() > 0.03 {
                failures.push(format!(
                    "near-origin slope {slope:.4} differs from 2s−N = {expected} by more than 3%"
                ));
            }
        }
        OriginLaw::Log => {
            let ratios: Vec<f64> = (0..nodes.len())
                .filter(|&i| nodes[i] <= 10.0 * r0 * (1.0 + 1e-9))
                .map(|i| table.values[i] / (-nodes[i].ln()))
                .collect();
            let (lo, hi) = min_max(&ratios);
            table.diagnostics.log_ratio_variation = Some((hi - lo) / hi);
        }
        _ => {}
    }
    let mass = normalization(table);
    table.diagnostics.mass = mass;
    if (mass - 1.0).abs() > 1e-6 {
        failures.push(format!("∫F = {mass:.10} differs from 1 by more than 1e-6"));
    }
    table.diagnostics.failures = failures;
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let b = ols_slope(x, y);
    let n = x.len() as f64;
    let a = (y.iter().sum::<f64>() - b * x.iter().sum::<f64>()) / n;
    (b, a)
}

struct RawValues {
    values: Vec<f64>,
    worst_error: f64,
    worst_radius: f64,
    series_nodes: usize,
}

/// Panel width for the head integral at radius `r`, quantized to
/// `0.05 · 2^{−j}` so that symbol tables can be shared.
fn head_level(r: f64) -> u32 {
    if r <= 16.0 {
        0
    } else {
        (0.05 * r / 0.8).log2().ceil().max(0.0) as u32
    }
}

struct DirectSetup {
    end: f64,
    tail: Option<AlgebraicTail>,
}

fn direct_setup(params: &ModelParams) -> Result<DirectSetup> {
    let (alpha, s) = (params.alpha(), params.s());
    if alpha == 1.0 {
        return Ok(DirectSetup {
            end: 42f64.powf(1.0 / (2.0 * s)),
            tail: None,
        });
    }
    let mut xc = 30.0;
    loop {
        let (v, err) = asymptotic_series(alpha, xc, 60);
        if err <= 1e-15 * v.abs() {
            break;
        }
        xc *= 2.0;
        if xc > 1e6 {
            return Err(Error::numerical(format!(
                "no asymptotic range found for E_α at α = {alpha}"
            )));
        }
    }
    // keep the terms up to the smallest one at x_c
    let mut terms = Vec::new();
    let mut best = f64::INFINITY;
    for m in 1..=60usize {
        let c = if m % 2 == 1 { 1.0 } else { -1.0 } * rgamma(1.0 - alpha * m as f64);
        if c == 0.0 {
            continue;
        }
        let mag = c.abs() * xc.powi(-(m as i32));
        if mag > best {
            break;
        }
        best = mag;
        terms.push((c, 2.0 * s * m as f64));
    }
    let end = xc.powf(1.0 / (2.0 * s));
    Ok(DirectSetup {
        end,
        tail: Some(AlgebraicTail { start: end, terms }),
    })
}

fn direct_values(params: &ModelParams, radii: &[f64]) -> Result<RawValues> {
    let setup = direct_setup(params)?;
    let (alpha, s, dim) = (params.alpha(), params.s(), params.dim());
    let expansion = TailExpansion::new(params);
    let mut series = vec![None; radii.len()];
    radii
        .par_iter()
        .zip(series.par_iter_mut())
        .for_each(|(&r, out)| {
            if r >= 4.0 {
                *out = series_accurate(&expansion, r);
            }
        });
    let mut levels: BTreeMap<u32, Option<HankelPlan>> = BTreeMap::new();
    for (r, sv) in radii.iter().zip(&series) {
        if sv.is_none() {
            levels.insert(head_level(*r), None);
        }
    }
    for (lvl, slot) in levels.iter_mut() {
        let layout = PanelLayout::uniform(1.0, 0.05 / 2f64.powi(*lvl as i32), setup.end);
        let plan = HankelPlan::new(
            dim,
            &layout,
            |rho: f64| mittag_leffler(alpha, rho.powf(2.0 * s)),
            setup.tail.clone(),
        )?;
        *slot = Some(plan);
    }
    let results: Vec<Result<(f64, f64)>> = radii
        .par_iter()
        .zip(&series)
        .map(|(&r, sv)| match sv {
            Some(v) => Ok((*v, 0.0)),
            None => levels[&head_level(r)].as_ref().unwrap().eval(r),
        })
        .collect();
    let mut values = Vec::with_capacity(radii.len());
    let (mut worst_error, mut worst_radius) = (0.0, 0.0);
    for (r, res) in radii.iter().zip(results) {
        let (v, e) = res?;
        let rel = e / v.abs().max(f64::MIN_POSITIVE);
        if rel > worst_error {
            worst_error = rel;
            worst_radius = *r;
        }
        values.push(v);
    }
    Ok(RawValues {
        values,
        worst_error,
        worst_radius,
        series_nodes: series.iter().filter(|v| v.is_some()).count(),
    })
}

/// Nodes `v_j = ln τ_j` and weights (including the Jacobian `τ`) of the
/// trapezoidal rule for `∫ M_α(τ) (·) dτ`.
struct SubordinationRule {
    tau: Vec<f64>,
    weights: Vec<f64>,
}

fn subordination_rule(alpha: f64, v_lo: f64) -> Result<SubordinationRule> {
    let mut tau_hi: f64 = 1.0;
    while wright_mainardi_density(alpha, tau_hi)? * tau_hi > 1e-22 {
        tau_hi *= 1.25;
        if tau_hi > 1e4 {
            break;
        }
    }
    let h = 0.04;
    let v_hi = tau_hi.ln();
    let m = ((v_hi - v_lo) / h).ceil() as usize;
    let tau: Vec<f64> = (0..=m).map(|j| (v_lo + h * j as f64).exp()).collect();
    let dens = tau
        .par_iter()
        .map(|&t| wright_mainardi_density(alpha, t))
        .collect::<Result<Vec<f64>>>()?;
    let weights = tau.iter().zip(&dens).map(|(t, d)| h * t * d).collect();
    Ok(SubordinationRule { tau, weights })
}

fn subordination_values(params: &ModelParams, radii: &[f64]) -> Result<RawValues> {
    let stable = StableProfile::new(params.s(), params.dim())?;
    if params.alpha() == 1.0 {
        return Ok(RawValues {
            values: radii.iter().map(|&r| stable.value(r)).collect(),
            worst_error: 0.0,
            worst_radius: 0.0,
            series_nodes: 0,
        });
    }
    let (s, n) = (params.s(), params.n());
    let r_small = radii.iter().copied().fold(1.0, f64::min).max(1e-300);
    let rule = subordination_rule(params.alpha(), 2.0 * s * r_small.ln() - 20.0)?;
    let values = radii
        .par_iter()
        .map(|&r| {
            let mut acc = KahanSum::default();
            for (t, w) in rule.tau.iter().zip(&rule.weights) {
                let xi = r * t.powf(-1.0 / (2.0 * s));
                acc.add(w * t.powf(-n / (2.0 * s)) * stable.value(xi));
            }
            acc.sum()
        })
        .collect();
    Ok(RawValues {
        values,
        worst_error: 0.0,
        worst_radius: 0.0,
        series_nodes: 0,
    })
}

/// `F(0) = G_s(0) ∫ τ^{−N/2s} M_α(τ) dτ = G_s(0) Γ(1−N/2s)/Γ(1−αN/2s)`.
fn subordination_origin(params: &ModelParams) -> Result<f64> {
    let stable = StableProfile::new(params.s(), params.dim())?;
    let g0 = stable.value(0.0);
    if params.alpha() == 1.0 {
        return Ok(g0);
    }
    let q = params.n() / (2.0 * params.s());
    Ok(g0 * crate::specfun::gamma(1.0 - q) * rgamma(1.0 - params.alpha() * q))
}

/// Lagrange derivative on a 5-point stencil around each node, in the
/// variables `(ln r, ln F)`.
fn log_slopes(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let u: Vec<f64> = nodes.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    stencil_derivative(&u, &y)
}

pub(crate) fn stencil_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = n.min(5);
    (0..n)
        .map(|i| {
            let j0 = i.saturating_sub(m / 2).min(n - m);
            let xs = &x[j0..j0 + m];
            let ys = &y[j0..j0 + m];
            let xi = x[i];
            let mut d = 0.0;
            for (k, (&xk, &yk)) in xs.iter().zip(ys).enumerate() {
                // derivative of the k-th Lagrange basis polynomial at xi
                let mut denom = 1.0;
                for (l, &xl) in xs.iter().enumerate() {
                    if l != k {
                        denom *= xk - xl;
                    }
                }
                let mut num = 0.0;
                for (l, _) in xs.iter().enumerate() {
                    if l == k {
                        continue;
                    }
                    let mut prod = 1.0;
                    for (q, &xq) in xs.iter().enumerate() {
                        if q != k && q != l {
                            prod *= xi - xq;
                        }
                    }
                    num += prod;
                }
                d += yk * num / denom;
            }
            d
        })
        .collect()
}

fn fit_origin(table: &ProfileTable) -> OriginFit {
    let p = &table.params;
    let r0 = table.grid.r_min();
    let f_r0 = table.values[0];
    let e_sing = 2.0 * p.s() - p.n();
    if let Some(f0) = table.f0 {
        let exponent = if p.alpha() < 1.0 { e_sing } else { 2.0 };
        return OriginFit {
            law: OriginLaw::Constant,
            coef: (f0 - f_r0) / r0.powf(exponent),
            offset: f0,
            exponent,
        };
    }
    match p.regime() {
        Regime::Critical => {
            let (kappa, _) = log_fit(table, 0);
            OriginFit {
                law: OriginLaw::Log,
                coef: kappa,
                offset: f_r0 + kappa * r0.ln(),
                exponent: 0.0,
            }
        }
        _ => OriginFit {
            law: OriginLaw::Power,
            coef: f_r0 * r0.powf(-e_sing),
            offset: 0.0,
            exponent: e_sing,
        },
    }
}

/// Least-squares fit of `F = κ(−ln r) + c` over grid decade `d` (0 = first).
fn log_fit(table: &ProfileTable, d: i32) -> (f64, f64) {
    let r0 = table.grid.r_min();
    let (lo, hi) = (r0 * 10f64.powi(d), r0 * 10f64.powi(d + 1));
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (r, v) in table.grid.nodes().iter().zip(&table.values) {
        if *r >= lo * (1.0 - 1e-9) && *r <= hi * (1.0 + 1e-9) {
            x.push(-r.ln());
            y.push(*v);
        }
    }
    ols_line(&x, &y)
}

fn value_near(table: &ProfileTable, r: f64) -> (f64, f64) {
    let i = table.grid.ceil_index(r * (1.0 - 1e-9));
    (table.grid.nodes()[i], table.values[i])
}

/// Estimate of `κ` with its decade-to-decade spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub value: f64,
    pub spread: f64,
    pub law: OriginLaw,
}

/// Near-origin constant: `lim F r^{N−2s}` (2s < N), `lim F/(−ln r)`
/// (2s = N = 1) or `F(0)` (2s > N = 1).
pub fn estimate_kappa(table: &ProfileTable) -> Result<KappaEstimate> {
    let p = &table.params;
    let regime = p.regime();
    if p.alpha() == 1.0 && regime != Regime::Supercritical {
        return Err(Error::domain("κ-limit undefined at α=1"));
    }
    let r0 = table.grid.r_min();
    if table.grid.r_max() < 100.0 * r0 {
        return Err(Error::domain(
            "κ estimation needs three grid decades near the origin",
        ));
    }
    let (value, spread, law) = match regime {
        Regime::Subcritical => {
            let e = p.n() - 2.0 * p.s();
            let gamma = (2.0 * p.s()).min(e);
            let pts: Vec<(f64, f64)> = (0..3)
                .map(|d| {
                    let (r, v) = value_near(table, r0 * 10f64.powi(d));
                    (r, v * r.powf(e))
                })
                .collect();
            let rich = |a: (f64, f64), b: (f64, f64)| {
                let (ra, rb) = (a.0.powf(gamma), b.0.powf(gamma));
                (a.1 * rb - b.1 * ra) / (rb - ra)
            };
            let k12 = rich(pts[0], pts[1]);
            let k23 = rich(pts[1], pts[2]);
            (k12, ((k12 - k23) / k12).abs(), OriginLaw::Power)
        }
        Regime::Critical => {
            let (k1, _) = log_fit(table, 0);
            let (k2, _) = log_fit(table, 1);
            (k1, ((k1 - k2) / k1).abs(), OriginLaw::Log)
        }
        Regime::Supercritical => {
            let f0 = table
                .f0
                .ok_or_else(|| Error::numerical("table has no value at the origin"))?;
            let e = table.origin.exponent;
            let (ra, fa) = (table.grid.nodes()[0], table.values[0]);
            let (rb, fb) = value_near(table, 10.0 * r0);
            let (pa, pb) = (ra.powf(e), rb.powf(e));
            let extrap = (fa * pb - fb * pa) / (pb - pa);
            (f0, ((extrap - f0) / f0).abs(), OriginLaw::Constant)
        }
    };
    if !(value > 0.0) || spread > 0.05 {
        return Err(Error::numerical(format!(
            "κ does not stabilize: estimate {value}, spread {:.2}%",
            100.0 * spread
        )));
    }
    Ok(KappaEstimate {
        value,
        spread,
        law,
    })
}

/// Plateau of `r^{N+2s}F` over the last grid decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaHatEstimate {
    pub value: f64,
    pub variation: f64,
}

fn tail_plateau(table: &ProfileTable) -> KappaHatEstimate {
    let p = &table.params;
    let e = p.n() + 2.0 * p.s();
    let r_max = table.grid.r_max();
    let q: Vec<f64> = table
        .grid
        .nodes()
        .iter()
        .zip(&table.values)
        .filter(|(r, _)| **r >= 0.1 * r_max * (1.0 - 1e-9))
        .map(|(r, v)| v * r.powf(e))
        .collect();
    let last = *q.last().unwrap();
    let (lo, hi) = min_max(&q);
    KappaHatEstimate {
        value: last,
        variation: (hi - lo) / last,
    }
}

/// Tail constant `lim r^{N+2s}F(r)`: the value at the last node, with the
/// plateau variation over the final decade.
pub fn estimate_kappa_hat(table: &ProfileTable) -> Result<KappaHatEstimate> {
    let k = tail_plateau(table);
    if k.variation > 0.02 {
        return Err(Error::numerical(format!(
            "r^(N+2s)F varies by {:.2}% over the last decade",
            100.0 * k.variation
        )));
    }
    Ok(k)
}

/// `∫_{ℝ^N} F`: grid quadrature plus the origin law below the grid and the
/// large-radius expansion above it. On logarithmic grids the interior part
/// is the trapezoidal rule in `ln r` with an endpoint correction.
pub fn normalization(table: &ProfileTable) -> f64 {
    let p = &table.params;
    let dim = p.dim();
    let (nodes, values) = (table.grid.nodes(), &table.values);
    let omega = sphere_area(dim);
    let interior = if table.grid.spacing() == Spacing::Logarithmic && nodes.len() >= 6 {
        let n = nodes.len();
        let h = (nodes[n - 1] / nodes[0]).ln() / (n - 1) as f64;
        let g: Vec<f64> = nodes
            .iter()
            .zip(values)
            .map(|(r, v)| omega * r.powi(dim as i32) * v)
            .collect();
        let mut acc = KahanSum::default();
        for v in &g {
            acc.add(*v);
        }
        acc.add(-0.5 * (g[0] + g[n - 1]));
        let d0 = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / (12.0 * h);
        let dn = (25.0 * g[n - 1] - 48.0 * g[n - 2] + 36.0 * g[n - 3] - 16.0 * g[n - 4]
            + 3.0 * g[n - 5])
            / (12.0 * h);
        h * acc.sum() - h * h / 12.0 * (dn - d0)
    } else {
        let w = table.grid.interior_weights();
        w.iter().zip(values).map(|(a, b)| a * b).sum()
    };
    let origin = table.origin.ball_integral(dim, nodes[0]);
    interior + origin + tail_mass(table)
}

/// `∫_{|x|>R} F` from the large-radius expansion, truncated at its smallest
/// term. The leading coefficient is rescaled so that the expansion matches
/// the last node.
fn tail_mass(table: &ProfileTable) -> f64 {
    let p = &table.params;
    let two_s = 2.0 * p.s();
    let big_r = table.grid.r_max();
    let omega = sphere_area(p.dim());
    let mut acc = 0.0;
    let mut last = f64::INFINITY;
    for (k, a) in table.tail_coeffs.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let e = two_s * (k + 1) as f64;
        let term = a * big_r.powf(-e) / e;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        acc += term;
    }
    omega * acc
}

/// `F(r)`: stored values at the nodes, monotone cubic Hermite interpolation
/// in `(ln r, ln F)` between them, the origin law below the grid and
/// `κ̂ r^{−(N+2s)}` above it.
pub fn profile_value(table: &ProfileTable, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
    }
    let nodes = table.grid.nodes();
    let r_max = table.grid.r_max();
    if r > r_max {
        let p = &table.params;
        return Ok(table.kappa_hat * r.powf(-(p.n() + 2.0 * p.s())));
    }
    if r < nodes[0] {
        if r == 0.0 {
            return match table.origin.law {
                OriginLaw::Constant => Ok(table.origin.offset),
                _ => Err(Error::domain(
                    "F is singular at the origin for these parameters",
                )),
            };
        }
        return Ok(table.origin.eval(r));
    }
    let i = table.grid.floor_index(r);
    if nodes[i] == r || i + 1 >= nodes.len() {
        return Ok(table.values[i]);
    }
    Ok(hermite_log(table, i, r))
}

fn hermite_log(table: &ProfileTable, i: usize, r: f64) -> f64 {
    let nodes = table.grid.nodes();
    let (u0, u1) = (nodes[i].ln(), nodes[i + 1].ln());
    let (y0, y1) = (table.values[i].ln(), table.values[i + 1].ln());
    let h = u1 - u0;
    let delta = (y1 - y0) / h;
    let (mut d0, mut d1) = (table.slopes[i], table.slopes[i + 1]);
    // Fritsch-Carlson safeguard
    if delta == 0.0 {
        d0 = 0.0;
        d1 = 0.0;
    } else {
        if d0 * delta < 0.0 {
            d0 = 0.0;
        }
        if d1 * delta < 0.0 {
            d1 = 0.0;
        }
        let (a, b) = (d0 / delta, d1 / delta);
        let q = a * a + b * b;
        if q > 9.0 {
            let tau = 3.0 / q.sqrt();
            d0 = tau * a * delta;
            d1 = tau * b * delta;
        }
    }
    let t = (r.ln() - u0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1;
    y.exp()
}

/// `Z(x, t) = t^{−αN/2s} F(|x| t^{−α/2s})`.
pub fn kernel_value(table: &ProfileTable, x_radius: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    let a = table.params.scale_exponent();
    let n = table.params.n();
    Ok(t.powf(-a * n) * profile_value(table, x_radius * t.powf(-a))?)
}

/// Finite-difference gradient diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    /// Fitted exponent of `|F′|` over the last grid decade.
    pub tail_exponent: f64,
    /// `−(N+2s+1)`.
    pub tail_expected: f64,
    /// `max |F′(r)| r^{N+2s+1}` over the grid nodes with `r ≥ 1`.
    pub tail_constant: f64,
    /// Fitted exponent of `|F′|` on the first two grid decades.
    pub origin_exponent: f64,
    /// `2s−1−N` when `2s ≤ N`, 0 (a bounded gradient) when `2s > N = 1`,
    /// and 1 at α = 1.
    pub origin_expected: f64,
    /// Whether the fitted origin exponent agrees with the expected one
    /// within 5% (or, for an expected 0, is not below −0.05).
    pub origin_consistent: bool,
    pub tail_consistent: bool,
}

/// `|F′|` at the nodes, from the stored log-slopes.
pub fn profile_gradient(table: &ProfileTable) -> Vec<f64> {
    table
        .grid
        .nodes()
        .iter()
        .zip(&table.values)
        .zip(&table.slopes)
        .map(|((r, v), d)| (v * d / r).abs())
        .collect()
}

pub fn check_gradient_bounds(table: &ProfileTable) -> GradientReport {
    let p = &table.params;
    let (n, s) = (p.n(), p.s());
    let nodes = table.grid.nodes();
    let grad = profile_gradient(table);
    let r0 = nodes[0];
    let r_max = table.grid.r_max();
    let fit = |lo: f64, hi: f64| {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (r, g) in nodes.iter().zip(&grad) {
            if *r >= lo && *r <= hi && *g > 0.0 {
                x.push(r.ln());
                y.push(g.ln());
            }
        }
        if x.len() < 2 {
            f64::NAN
        } else {
            ols_slope(&x, &y)
        }
    };
    let tail_exponent = fit(0.1 * r_max * (1.0 - 1e-9), r_max);
    let tail_expected = -(n + 2.0 * s + 1.0);
    let tail_constant = nodes
        .iter()
        .zip(&grad)
        .filter(|(r, _)| **r >= 1.0)
        .map(|(r, g)| g * r.powf(n + 2.0 * s + 1.0))
        .fold(0.0, f64::max);
    let origin_exponent = fit(r0, 100.0 * r0 * (1.0 + 1e-9));
    let origin_expected = if p.alpha() == 1.0 {
        // the classical profile is smooth and even: F′ ~ r
        1.0
    } else if p.regime() == Regime::Supercritical {
        0.0
    } else {
        2.0 * s - 1.0 - n
    };
    let origin_consistent = if origin_expected == 0.0 {
        origin_exponent >= -0.05
    } else {
        ((origin_exponent - origin_expected) / origin_expected).abs() <= 0.05
    };
    GradientReport {
        tail_exponent,
        tail_expected,
        tail_constant,
        origin_exponent,
        origin_expected,
        origin_consistent,
        tail_consistent: ((tail_exponent - tail_expected) / tail_expected).abs() <= 0.05,
    }
}

impl ProfileTable {
    pub fn value(&self, r: f64) -> Result<f64> {
        profile_value(self, r)
    }

    pub fn kernel(&self, x_radius: f64, t: f64) -> Result<f64> {
        kernel_value(self, x_radius, t)
    }

    /// `∫₀^ζ F(r) r dr` (used for three-dimensional shell averages), with the
    /// origin law below the grid and the tail law above it.
    pub fn first_moment_table(&self) -> MomentTable {
        MomentTable::new(self)
    }

    /// CSV with header `r,F,method,alpha,s,N`.
    pub fn to_csv(&self) -> String {
        let p = &self.params;
        let mut out = String::from("r,F,method,alpha,s,N\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{}\n",
                r,
                v,
                self.method.label(),
                p.alpha(),
                p.s(),
                p.dim()
            ));
        }
        out
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            params: self.params,
            method: self.method,
            kappa: self.kappa,
            kappa_hat: self.kappa_hat,
            origin_law: self.origin.law.label().to_string(),
            tail_law: "|ξ|^{−(N+2s)}".to_string(),
            f0: self.f0,
            mass: self.diagnostics.mass,
            mass_error: (self.diagnostics.mass - 1.0).abs(),
            nodes: self.grid.len(),
            r_min: self.grid.r_min(),
            r_max: self.grid.r_max(),
            diagnostics: self.diagnostics.clone(),
            status: if self.diagnostics.failures.is_empty() {
                "ok".into()
            } else {
                "failed".into()
            },
        }
    }
}

/// JSON summary written next to a profile CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub params: ModelParams,
    pub method: BuildMethod,
    pub kappa: Option<f64>,
    pub kappa_hat: f64,
    pub origin_law: String,
    pub tail_law: String,
    pub f0: Option<f64>,
    pub mass: f64,
    pub mass_error: f64,
    pub nodes: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub diagnostics: BuildDiagnostics,
    pub status: String,
}

/// Cumulative `P(ζ) = ∫₀^ζ F(r) r dr`, tabulated on the profile grid. When the
/// moment diverges at the origin (`2s = N − 2`) only differences of `P` are
/// meaningful.
#[derive(Debug, Clone)]
pub struct MomentTable {
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    origin: OriginFit,
    kappa_hat: f64,
    tail_exp: f64,
    table: ProfileTable,
}

/// Antiderivative of `r·F(r)` under the origin law, vanishing at 0 when the
/// moment is finite there and taken as `coef·ln z` when it is not.
fn origin_moment(o: &OriginFit, z: f64) -> f64 {
    let power = |c: f64, e: f64| {
        if (2.0 + e).abs() < 1e-12 {
            c * z.ln()
        } else {
            c * z.powf(2.0 + e) / (2.0 + e)
        }
    };
    match o.law {
        OriginLaw::Power => power(o.coef, o.exponent),
        OriginLaw::Log => o.coef * (z * z / 4.0 - z * z * z.ln() / 2.0) + o.offset * z * z / 2.0,
        OriginLaw::Constant => o.offset * z * z / 2.0 - power(o.coef, o.exponent),
    }
}

impl MomentTable {
    fn new(table: &ProfileTable) -> Self {
        let nodes = table.grid.nodes().to_vec();
        let r0 = nodes[0];
        // ∫₀^{r0} F r dr from the origin law
        let o = table.origin;
        let start = origin_moment(&o, r0);
        let gl = crate::quad::gl12();
        let mut cumulative = Vec::with_capacity(nodes.len());
        cumulative.push(start);
        let mut acc = start;
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let v = gl.integrate(a.ln(), b.ln(), |u| {
                let r = u.exp();
                hermite_log(table, i, r) * r * r
            });
            acc += v;
            cumulative.push(acc);
        }
        let p = &table.params;
        MomentTable {
            nodes,
            cumulative,
            origin: o,
            kappa_hat: table.kappa_hat,
            tail_exp: p.n() + 2.0 * p.s(),
            table: table.clone(),
        }
    }

    /// `P(ζ)`.
    pub fn eval(&self, z: f64) -> f64 {
        let r0 = self.nodes[0];
        if z <= 0.0 {
            return 0.0;
        }
        if z < r0 {
            return origin_moment(&self.origin, z);
        }
        let last = self.nodes.len() - 1;
        let r_max = self.nodes[last];
        if z >= r_max {
            let e = 2.0 - self.tail_exp;
            return self.cumulative[last] + self.kappa_hat * (z.powf(e) - r_max.powf(e)) / e;
        }
        let i = self.nodes.partition_point(|x| *x <= z) - 1;
        let a = self.nodes[i];
        if a == z {
            return self.cumulative[i];
        }
        let table = &self.table;
        let v = crate::quad::gl12().integrate(a.ln(), z.ln(), |u| {
            let r = u.exp();
            hermite_log(table, i, r) * r * r
        });
        self.cumulative[i] + v
    }
}
