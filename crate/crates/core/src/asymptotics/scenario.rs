use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    mild_solution_convolution, mild_solution_fourier_with, riesz_potential, solution_grid,
    DatumFamily, DatumTransform, InitialDatum, Route, SolutionField,
};
use crate::grid::{RadialField, RadialGrid};
use crate::kernel::{estimate_kappa, kernel_value, ProfileTable};
use crate::norms::{NormSpec, Region};
use crate::params::{critical_exponent, CriticalExponent, ModelParams, Regime};
use crate::rates::{fit_rate, predicted_rate, Assumptions, PredictedRate, ProfileTag, RateEstimate};
use crate::window::{ScaleFn, ScaleWindow, WindowKind};

/// The large-time statements that can be run as scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    /// `L^p(ℝ^N)` convergence to `MZ` for subcritical `p`.
    CharacteristicLp,
    /// Convergence to `MZ` on `|x| ≥ ν t^{α/2s}` for data in `𝒟_N`.
    ExteriorSupercritical,
    /// Intermediate scales `|x| ≍ g(t)`, `1 ≪ g ≪ t^{α/2s}`.
    Intermediate,
    /// `t^α u → κΦ` on compact sets, `2s < N`.
    CompactSupercritical,
    /// `(t^α / log t) u → Mκα` on compact sets, `2s = N = 1`.
    CompactCritical1d,
    /// `t^{α/2s} u → MF(0)` on compact sets, `2s > N = 1`.
    CompactSubcritical1d,
    /// `u / (MZ) → 1` uniformly in `|x| ≥ ν t^{α/2s}`.
    FastMatched,
    /// `u |x|^β / A → 1` beyond `h(t)` for data with a heavy tail.
    FarTail,
    /// `‖u‖_{L²} ≍ t^{−α}` when `N > 4s`.
    SupercriticalL2,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 9] = [
        ScenarioId::CharacteristicLp,
        ScenarioId::ExteriorSupercritical,
        ScenarioId::Intermediate,
        ScenarioId::CompactSupercritical,
        ScenarioId::CompactCritical1d,
        ScenarioId::CompactSubcritical1d,
        ScenarioId::FastMatched,
        ScenarioId::FarTail,
        ScenarioId::SupercriticalL2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ScenarioId::CharacteristicLp => "characteristic_lp",
            ScenarioId::ExteriorSupercritical => "exterior_supercritical",
            ScenarioId::Intermediate => "intermediate",
            ScenarioId::CompactSupercritical => "compact_supercritical",
            ScenarioId::CompactCritical1d => "compact_critical_1d",
            ScenarioId::CompactSubcritical1d => "compact_subcritical_1d",
            ScenarioId::FastMatched => "fast_matched",
            ScenarioId::FarTail => "far_tail",
            ScenarioId::SupercriticalL2 => "supercritical_l2",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .iter()
            .copied()
            .find(|id| id.label() == s)
            .ok_or_else(|| Error::domain(format!("unknown scenario id `{s}`")))
    }
}

/// Sampling times of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeSchedule {
    /// `t₀ 2^k`, `k = 0..=k_max`, `k_max ≤ 20`.
    Dyadic { t0: f64, k_max: u32 },
    Explicit { times: Vec<f64> },
}

impl TimeSchedule {
    pub fn dyadic(k_max: u32) -> Self {
        TimeSchedule::Dyadic { t0: 1.0, k_max }
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let times: Vec<f64> = match self {
            TimeSchedule::Dyadic { t0, k_max } => {
                if !(*t0 > 0.0 && t0.is_finite()) || *k_max > 20 {
                    return Err(Error::domain(format!(
                        "dyadic schedule needs t0 > 0 and k_max ≤ 20, got t0 = {t0}, k_max = {k_max}"
                    )));
                }
                (0..=*k_max).map(|k| t0 * 2f64.powi(k as i32)).collect()
            }
            TimeSchedule::Explicit { times } => times.clone(),
        };
        if times.len() < 2 {
            return Err(Error::domain("a schedule needs at least two times"));
        }
        if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("schedule times must be positive and increasing"));
        }
        Ok(times)
    }
}

/// Pass criteria; absent entries are not checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Final functional value at most this multiple of the initial one.
    #[serde(default)]
    pub decay_factor: Option<f64>,
    /// Allowed relative increase between consecutive times over the second
    /// half of the schedule (no terminal upturn).
    #[serde(default)]
    pub wiggle: Option<f64>,
    /// Apply `wiggle` over the whole schedule.
    #[serde(default)]
    pub monotone: bool,
    /// Bound on the terminal pointwise relative error.
    #[serde(default)]
    pub terminal: Option<f64>,
    /// Relative tolerance on the fitted decay exponent of `‖u‖`.
    #[serde(default)]
    pub rate: Option<f64>,
}

/// Where the terminal relative error is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalMetric {
    /// Supremum over the window nodes.
    #[default]
    SupWindow,
    /// At `x = 0`.
    Origin,
}

fn default_nodes() -> usize {
    500
}

/// A runnable scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub params: ModelParams,
    pub datum: InitialDatum,
    pub window: WindowKind,
    pub norm: NormSpec,
    pub schedule: TimeSchedule,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub terminal: TerminalMetric,
    /// Replace `u` (and every comparison profile) by `M·Z`.
    #[serde(default)]
    pub synthetic: bool,
    /// Solution route; chosen from the datum when absent.
    #[serde(default)]
    pub route: Option<Route>,
    /// Nodes of the radial grids on which fields are evaluated.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn hyp(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

impl ScenarioSpec {
    /// The shipped configuration for `id`.
    pub fn preset(id: ScenarioId) -> Result<Self> {
        let p = |a, s, n| ModelParams::new(a, s, n);
        let gauss = |n| InitialDatum::gaussian(1.0, n);
        let trend = Thresholds {
            decay_factor: Some(0.25),
            wiggle: Some(0.05),
            terminal: None,
            rate: Some(0.05),
            monotone: false,
        };
        let spec = |id, params: ModelParams, datum, window, norm, schedule, thresholds| ScenarioSpec {
            id,
            params,
            datum,
            window,
            norm,
            schedule,
            thresholds,
            terminal: TerminalMetric::SupWindow,
            synthetic: false,
            route: None,
            nodes: default_nodes(),
        };
        let inf = NormSpec::strong(f64::INFINITY)?;
        Ok(match id {
            ScenarioId::CharacteristicLp => spec(
                id,
                p(0.5, 0.5, 1)?,
                gauss(1)?,
                WindowKind::WholeSpace,
                NormSpec::strong(2.0)?,
                TimeSchedule::dyadic(14),
                Thresholds {
                    monotone: true,
                    ..trend
                },
            ),
            ScenarioId::ExteriorSupercritical => spec(
                id,
                p(0.5, 0.5, 3)?,
                gauss(3)?,
                WindowKind::Exterior { nu: 1.0 },
                inf,
                TimeSchedule::dyadic(14),
                trend,
            ),
            ScenarioId::Intermediate => spec(
                id,
                p(0.5, 0.5, 3)?,
                gauss(3)?,
                WindowKind::Intermediate {
                    g: ScaleFn::power(1.0, 0.25),
                    nu: 0.5,
                    mu: 2.0,
                },
                NormSpec::strong(2.0)?,
                TimeSchedule::dyadic(14),
                trend,
            ),
            ScenarioId::CompactSupercritical => spec(
                id,
                p(0.5, 0.5, 3)?,
                gauss(3)?,
                WindowKind::Compact { mu: 1.0 },
                inf,
                TimeSchedule::dyadic(14),
                Thresholds {
                    decay_factor: Some(0.25),
                    wiggle: Some(0.05),
                    terminal: Some(0.05),
                    rate: Some(0.03),
                    monotone: false,
                },
            ),
            ScenarioId::CompactCritical1d => ScenarioSpec {
                terminal: TerminalMetric::Origin,
                ..spec(
                    id,
                    p(0.5, 0.5, 1)?,
                    gauss(1)?,
                    WindowKind::Compact { mu: 1.0 },
                    inf,
                    // ends at t = 10⁶
                    TimeSchedule::Dyadic {
                        t0: 1e6 / 2f64.powi(19),
                        k_max: 19,
                    },
                    Thresholds {
                        decay_factor: Some(0.25),
                        wiggle: Some(0.05),
                        terminal: Some(0.10),
                        rate: Some(0.10),
                        monotone: false,
                    },
                )
            },
            ScenarioId::CompactSubcritical1d => ScenarioSpec {
                terminal: TerminalMetric::Origin,
                ..spec(
                    id,
                    p(0.5, 0.75, 1)?,
                    gauss(1)?,
                    WindowKind::Compact { mu: 1.0 },
                    inf,
                    TimeSchedule::dyadic(14),
                    Thresholds {
                        decay_factor: Some(0.25),
                        wiggle: Some(0.05),
                        terminal: Some(0.02),
                        rate: Some(0.05),
                        monotone: false,
                    },
                )
            },
            ScenarioId::FastMatched => spec(
                id,
                p(0.5, 0.5, 1)?,
                gauss(1)?,
                WindowKind::FastMatched { nu: 0.5, cap: None },
                inf,
                TimeSchedule::dyadic(12),
                Thresholds {
                    decay_factor: Some(0.25),
                    wiggle: Some(0.05),
                    terminal: Some(0.05),
                    rate: Some(0.05),
                    monotone: false,
                },
            ),
            ScenarioId::FarTail => {
                let params = p(0.5, 0.5, 1)?;
                let beta = 1.6;
                let a = params.alpha() / (params.n() + 2.0 * params.s() - beta) + 0.1;
                spec(
                    id,
                    params,
                    InitialDatum::power_tail(beta, 1.0, 1)?,
                    WindowKind::FarTail {
                        h: ScaleFn::power(1.0, a),
                        cap: Some(ScaleFn::power(100.0, a)),
                    },
                    inf,
                    TimeSchedule::dyadic(14),
                    Thresholds {
                        decay_factor: None,
                        wiggle: None,
                        terminal: Some(0.05),
                        rate: Some(0.05),
                        monotone: false,
                    },
                )
            }
            ScenarioId::SupercriticalL2 => spec(
                id,
                p(0.5, 0.5, 3)?,
                gauss(3)?,
                WindowKind::WholeSpace,
                NormSpec::strong(2.0)?,
                TimeSchedule::dyadic(14),
                Thresholds {
                    rate: Some(0.05),
                    ..Default::default()
                },
            ),
        })
    }

    fn assumptions(&self) -> Assumptions {
        Assumptions {
            decay_class_n: self.datum.in_decay_class(self.params.n()),
            local_lp: self.datum.locally_bounded(),
            beta: Some(self.datum.beta()),
        }
    }

    /// Checks the hypotheses of the underlying statement and returns the
    /// validated window.
    pub fn validate(&self) -> Result<ScaleWindow> {
        let params = &self.params;
        params.require_supported_dim()?;
        if self.datum.dim() != params.dim() {
            return Err(Error::domain("datum and parameters disagree on N"));
        }
        if self.nodes < 16 {
            return Err(Error::domain("scenario grids need at least 16 nodes"));
        }
        self.schedule.times()?;
        let beta = self.datum.beta();
        let window = ScaleWindow::new(self.window, params, beta.is_finite().then_some(beta))?;
        let p = self.norm.p();
        let subcritical = params.is_subcritical(p);
        let regime = params.regime();
        let expect = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(hyp(format!("{}: {what}", self.id)))
            }
        };
        let kind = *window.kind();
        match self.id {
            ScenarioId::CharacteristicLp => {
                expect(matches!(kind, WindowKind::WholeSpace), "window must be whole_space")?;
                expect(subcritical, "p must be subcritical")?;
            }
            ScenarioId::ExteriorSupercritical => {
                expect(matches!(kind, WindowKind::Exterior { .. }), "window must be exterior")?;
                expect(self.datum.in_decay_class(params.n()), "u₀ must belong to 𝒟_N")?;
            }
            ScenarioId::Intermediate => {
                expect(
                    matches!(kind, WindowKind::Intermediate { .. }),
                    "window must be an intermediate scale g(t) = o(t^{α/2s})",
                )?;
                expect(
                    subcritical || self.datum.in_decay_class(params.n()),
                    "u₀ must belong to 𝒟_N when p is not subcritical",
                )?;
            }
            ScenarioId::CompactSupercritical => {
                expect(matches!(kind, WindowKind::Compact { .. }), "window must be compact")?;
                expect(regime == Regime::Subcritical, "needs 2s < N")?;
                let at_pc = matches!(critical_exponent(params), CriticalExponent::Finite(q) if (q - p).abs() < 1e-12);
                expect(!at_pc, "p = p_c is covered only in the Marcinkiewicz norm")?;
                expect(
                    subcritical || self.datum.locally_bounded(),
                    "u₀ must be in L^p_loc when p is not subcritical",
                )?;
            }
            ScenarioId::CompactCritical1d => {
                expect(matches!(kind, WindowKind::Compact { .. }), "window must be compact")?;
                expect(regime == Regime::Critical, "needs 2s = N = 1")?;
            }
            ScenarioId::CompactSubcritical1d => {
                expect(matches!(kind, WindowKind::Compact { .. }), "window must be compact")?;
                expect(regime == Regime::Supercritical, "needs 2s > N = 1")?;
            }
            ScenarioId::FastMatched => {
                expect(
                    matches!(kind, WindowKind::FastMatched { .. }),
                    "window must be fast_matched",
                )?;
            }
            ScenarioId::FarTail => {
                expect(matches!(kind, WindowKind::FarTail { .. }), "window must be far_tail")?;
                expect(
                    matches!(self.datum.family(), DatumFamily::PowerTail { .. }),
                    "u₀ must have a power tail A|x|^{−β}",
                )?;
            }
            ScenarioId::SupercriticalL2 => {
                expect(matches!(kind, WindowKind::WholeSpace), "window must be whole_space")?;
                expect(p == 2.0, "norm must be L²")?;
                expect(params.n() > 4.0 * params.s(), "needs N > 4s")?;
            }
        }
        if !self.synthetic {
            self.predicted()?;
        }
        Ok(window)
    }

    /// The rate the theory attaches to `‖u‖` on the window.
    pub fn predicted(&self) -> Result<PredictedRate> {
        let beta = self.datum.beta();
        let window = ScaleWindow::new(self.window, &self.params, beta.is_finite().then_some(beta))?;
        if self.id == ScenarioId::SupercriticalL2 {
            return Ok(PredictedRate {
                t_exponent: -self.params.alpha(),
                g_exponent: 0.0,
                log_correction: crate::rates::LogCorrection::None,
                profile: ProfileTag::KappaPhi,
                scale: None,
                alpha: self.params.alpha(),
            });
        }
        predicted_rate(&self.params, &window, &self.norm, &self.assumptions())
    }
}

/// One scheduled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    /// The scenario's error functional.
    pub error: f64,
    /// `‖u(·, t)‖` on the window.
    pub norm: f64,
    /// Pointwise relative error against the comparison profile.
    pub pointwise: Option<f64>,
    pub window_lo: f64,
    /// Upper window edge actually used (after capping to the grid).
    pub window_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Constants taken from the profile table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub mass: f64,
    pub kappa: Option<f64>,
    pub kappa_hat: f64,
    pub f0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: ScenarioId,
    pub spec: ScenarioSpec,
    pub predicted: Option<PredictedRate>,
    /// Slope of the predicted curve over the fitted times.
    pub predicted_slope: Option<f64>,
    /// Fit of `‖u‖` over the second half of the schedule.
    pub measured: Option<RateEstimate>,
    pub curve: Vec<CurvePoint>,
    pub terminal_error: Option<f64>,
    pub checks: Vec<Check>,
    pub constants: Constants,
    pub pass: bool,
}

impl ScenarioReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with header `t,error,norm,pointwise,window_lo,window_hi`.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("t,error,norm,pointwise,window_lo,window_hi\n");
        for c in &self.curve {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}\n",
                c.t,
                c.error,
                c.norm,
                c.pointwise.map_or(String::new(), |v| format!("{v:.16e}")),
                c.window_lo,
                c.window_hi
            ));
        }
        out
    }
}

/// `max |u/reference − 1|` over the grid nodes inside the window at time `t`.
pub fn relative_error_sup(
    u: &SolutionField,
    reference: &RadialField,
    window: &ScaleWindow,
    t: f64,
) -> Result<f64> {
    if reference.grid != u.field.grid {
        return Err(Error::domain("field and reference live on different grids"));
    }
    let (lo, hi) = window.interval(&u.params, t);
    sup_ratio_error(&u.field, &reference.values, lo, hi)
}

fn sup_ratio_error(u: &RadialField, reference: &[f64], lo: f64, hi: Option<f64>) -> Result<f64> {
    let nodes = u.grid.nodes();
    let hi = hi.unwrap_or(f64::INFINITY);
    let slack = 1e-12 * u.grid.r_max();
    let mut worst: Option<f64> = None;
    for (i, r) in nodes.iter().enumerate() {
        if *r < lo - slack || *r > hi + slack {
            continue;
        }
        if !(reference[i] > 0.0) {
            return Err(Error::domain(format!(
                "reference is not positive at r = {r}"
            )));
        }
        let e = (u.values[i] / reference[i] - 1.0).abs();
        worst = Some(worst.map_or(e, |w: f64| w.max(e)));
    }
    worst.ok_or_else(|| Error::domain(format!("empty window [{lo}, {hi}] on this grid")))
}

struct Context<'a> {
    spec: &'a ScenarioSpec,
    table: &'a ProfileTable,
    window: ScaleWindow,
    route: Route,
    transform: Option<DatumTransform>,
    mass: f64,
    kappa: Option<f64>,
    /// `Φ` on the compact grid.
    phi: Option<Vec<f64>>,
}

impl<'a> Context<'a> {
    fn solve(&self, t: f64, grid: &RadialGrid) -> Result<Vec<f64>> {
        if self.spec.synthetic {
            return self.mass_kernel(t, grid);
        }
        let field = match self.route {
            Route::Fourier => mild_solution_fourier_with(
                &self.spec.datum,
                self.transform.as_ref().expect("transform prepared"),
                &self.spec.params,
                t,
                grid,
            )?,
            Route::Convolution => mild_solution_convolution(&self.spec.datum, self.table, t, grid)?,
            Route::Kernel => return self.mass_kernel(t, grid),
        };
        Ok(field.field.values)
    }

    fn mass_kernel(&self, t: f64, grid: &RadialGrid) -> Result<Vec<f64>> {
        grid.nodes()
            .iter()
            .map(|&r| Ok(self.mass * kernel_value(self.table, r, t)?))
            .collect()
    }

    fn kappa(&self) -> Result<f64> {
        self.kappa
            .ok_or_else(|| Error::numerical("κ is unavailable for these parameters"))
    }

    fn compact_grid(&self, mu: f64) -> Result<RadialGrid> {
        let dim = self.spec.params.dim();
        if self.spec.synthetic && self.table.f0.is_none() {
            // M·Z is singular at the origin
            return RadialGrid::uniform_between(mu / 80.0, mu, 80, dim);
        }
        RadialGrid::uniform(mu, 81, dim)
    }

    /// Grid on which the scenario evaluates `u(·, t)`.
    fn grid(&self, t: f64) -> Result<RadialGrid> {
        let spec = self.spec;
        let dim = spec.params.dim();
        let (lo, hi) = self.window.interval(&spec.params, t);
        match *self.window.kind() {
            WindowKind::Compact { mu } => self.compact_grid(mu),
            WindowKind::Intermediate { .. } | WindowKind::Characteristic { .. } => {
                RadialGrid::logarithmic(lo, hi.unwrap(), spec.nodes / 2, dim)
            }
            WindowKind::FarTail { .. } => {
                let hi = hi.unwrap_or(100.0 * lo);
                RadialGrid::logarithmic(lo, hi, 41, dim)
            }
            _ => {
                let g = solution_grid(&spec.params, &spec.datum, t, spec.nodes)?;
                match hi {
                    Some(h) if h < g.r_max() => {
                        RadialGrid::logarithmic(g.r_min(), h, spec.nodes, dim)
                    }
                    _ => Ok(g),
                }
            }
        }
    }

    /// The profile `u` is compared against.
    fn reference(&self, t: f64, grid: &RadialGrid, mz: &[f64]) -> Result<Vec<f64>> {
        let spec = self.spec;
        if spec.synthetic {
            return Ok(mz.to_vec());
        }
        let p = &spec.params;
        let (alpha, s, n) = (p.alpha(), p.s(), p.n());
        let m = self.mass;
        let nodes = grid.nodes();
        Ok(match spec.id {
            ScenarioId::CharacteristicLp
            | ScenarioId::ExteriorSupercritical
            | ScenarioId::FastMatched
            | ScenarioId::SupercriticalL2 => mz.to_vec(),
            ScenarioId::Intermediate => {
                let ell = p.length_scale(t);
                match p.regime() {
                    Regime::Subcritical => {
                        let k = self.kappa()?;
                        nodes
                            .iter()
                            .map(|r| m * k * t.powf(-alpha) * r.powf(2.0 * s - n))
                            .collect()
                    }
                    Regime::Critical => {
                        let k = self.kappa()?;
                        nodes
                            .iter()
                            .map(|r| m * k * t.powf(-alpha) * (ell / r).ln())
                            .collect()
                    }
                    Regime::Supercritical => {
                        let f0 = self.table.f0.ok_or_else(|| Error::numerical("F(0) unavailable"))?;
                        vec![m * f0 * t.powf(-alpha / (2.0 * s)); nodes.len()]
                    }
                }
            }
            ScenarioId::CompactSupercritical => {
                let k = self.kappa()?;
                let phi = self.phi.as_ref().expect("potential prepared");
                phi.iter().map(|v| k * v * t.powf(-alpha)).collect()
            }
            ScenarioId::CompactCritical1d => {
                let k = self.kappa()?;
                vec![m * k * alpha * t.powf(-alpha) * t.ln(); nodes.len()]
            }
            ScenarioId::CompactSubcritical1d => {
                let f0 = self.table.f0.ok_or_else(|| Error::numerical("F(0) unavailable"))?;
                vec![m * f0 * t.powf(-alpha / (2.0 * s)); nodes.len()]
            }
            ScenarioId::FarTail => {
                let a = spec.datum.tail_amplitude().unwrap_or(f64::NAN);
                let beta = spec.datum.beta();
                nodes.iter().map(|r| a * r.powf(-beta)).collect()
            }
        })
    }

    fn sample(&self, t: f64) -> Result<CurvePoint> {
        let spec = self.spec;
        let p = &spec.params;
        let grid = self.grid(t)?;
        let (lo, hi) = self.window.interval(p, t);
        let hi_used = hi.map_or(grid.r_max(), |h| h.min(grid.r_max()));
        if grid.nodes().iter().filter(|r| **r >= lo && **r <= hi_used).count() < 3 {
            return Err(Error::domain(format!(
                "grid does not resolve the window [{lo}, {hi_used}] at t = {t}"
            )));
        }
        let region = Region {
            lo,
            hi: Some(hi_used),
        };
        let u = RadialField::new(grid.clone(), self.solve(t, &grid)?)?;
        let needs_mz = spec.synthetic
            || matches!(
                spec.id,
                ScenarioId::CharacteristicLp
                    | ScenarioId::ExteriorSupercritical
                    | ScenarioId::FastMatched
                    | ScenarioId::SupercriticalL2
            );
        let mz = if needs_mz {
            self.mass_kernel(t, &grid)?
        } else {
            Vec::new()
        };
        let reference = self.reference(t, &grid, &mz)?;
        let diff = RadialField::new(
            grid.clone(),
            u.values.iter().zip(&reference).map(|(a, b)| a - b).collect(),
        )?;
        let ref_field = RadialField::new(grid.clone(), reference.clone())?;
        let norm = self.spec.norm.eval(&u, region)?;
        let char_weight = t.powf(p.alpha() * p.n() / (2.0 * p.s()) * (1.0 - 1.0 / spec.norm.p()));
        let pointwise = match spec.terminal {
            _ if spec.id == ScenarioId::SupercriticalL2 && !spec.synthetic => None,
            TerminalMetric::Origin => Some((u.values[0] / reference[0] - 1.0).abs()),
            TerminalMetric::SupWindow => sup_ratio_error(&u, &reference, lo, Some(hi_used)).ok(),
        };
        let error = if spec.synthetic {
            spec.norm.eval(&diff, region)?
        } else {
            match spec.id {
                ScenarioId::CharacteristicLp | ScenarioId::ExteriorSupercritical => {
                    char_weight * spec.norm.eval(&diff, region)?
                }
                ScenarioId::FastMatched | ScenarioId::FarTail => {
                    sup_ratio_error(&u, &reference, lo, Some(hi_used))?
                }
                ScenarioId::SupercriticalL2 => t.powf(p.alpha()) * norm,
                _ => spec.norm.eval(&diff, region)? / spec.norm.eval(&ref_field, region)?,
            }
        };
        Ok(CurvePoint {
            t,
            error,
            norm,
            pointwise,
            window_lo: lo,
            window_hi: hi_used,
        })
    }
}

/// Runs `spec` against the profile of the same parameters.
pub fn run_scenario(spec: &ScenarioSpec, table: &ProfileTable) -> Result<ScenarioReport> {
    let window = spec.validate()?;
    if table.params != spec.params {
        return Err(Error::domain("profile table and scenario parameters differ"));
    }
    let times = spec.schedule.times()?;
    let route = match spec.route {
        Some(r) => r,
        None if spec.synthetic => Route::Kernel,
        None => match spec.datum.family() {
            DatumFamily::Gaussian { .. } => Route::Fourier,
            _ => Route::Convolution,
        },
    };
    let transform = match route {
        Route::Fourier if !spec.synthetic => Some(spec.datum.transform()?),
        _ => None,
    };
    let kappa = match spec.params.regime() {
        Regime::Supercritical => None,
        _ => estimate_kappa(table).ok().map(|k| k.value),
    };
    let mut ctx = Context {
        spec,
        table,
        window,
        route,
        transform,
        mass: spec.datum.mass(),
        kappa,
        phi: None,
    };
    if spec.id == ScenarioId::CompactSupercritical && !spec.synthetic {
        if let WindowKind::Compact { mu } = *window.kind() {
            let g = ctx.compact_grid(mu)?;
            ctx.phi = Some(riesz_potential(&spec.datum, &spec.params, g.nodes())?);
        }
    }
    let curve = times
        .par_iter()
        .map(|&t| ctx.sample(t))
        .collect::<Result<Vec<CurvePoint>>>()?;

    let th = spec.thresholds;
    let mut checks = Vec::new();
    let first = curve[0].error;
    let last = curve[curve.len() - 1].error;
    if let Some(f) = th.decay_factor {
        let ratio = if first == 0.0 && last == 0.0 { 0.0 } else { last / first };
        checks.push(Check {
            name: "decay_factor".into(),
            value: ratio,
            threshold: f,
            pass: ratio <= f,
        });
    }
    if let Some(w) = th.wiggle {
        let from = if th.monotone { 0 } else { curve.len() / 2 };
        let worst = curve[from..]
            .windows(2)
            .map(|c| {
                if c[0].error == 0.0 {
                    if c[1].error == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    c[1].error / c[0].error - 1.0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check {
            name: if th.monotone {
                "monotone_within_wiggle".into()
            } else {
                "no_terminal_upturn".into()
            },
            value: worst,
            threshold: w,
            pass: worst <= w,
        });
    }
    let terminal_error = if spec.synthetic {
        Some(last)
    } else {
        curve[curve.len() - 1].pointwise
    };
    if let Some(tol) = th.terminal {
        let v = terminal_error.unwrap_or(f64::INFINITY);
        checks.push(Check {
            name: "terminal_error".into(),
            value: v,
            threshold: tol,
            pass: v <= tol,
        });
    }

    let predicted = if spec.synthetic { spec.predicted().ok() } else { Some(spec.predicted()?) };
    let half = (times.len() / 2).min(times.len().saturating_sub(4));
    let fit_t: Vec<f64> = times[half..].to_vec();
    let fit_v: Vec<f64> = curve[half..].iter().map(|c| c.norm).collect();
    let measured = fit_rate(&fit_t, &fit_v).ok();
    let predicted_slope = predicted.as_ref().and_then(|pr| {
        let v: Vec<f64> = fit_t.iter().map(|t| pr.curve(*t)).collect();
        fit_rate(&fit_t, &v).ok().map(|f| f.slope)
    });
    if let (Some(tol), false) = (th.rate, spec.synthetic) {
        let (value, pass) = match (&measured, predicted_slope) {
            (Some(m), Some(ps)) => {
                let dev = (m.slope - ps).abs() / ps.abs().max(0.1);
                (dev, dev <= tol)
            }
            _ => (f64::INFINITY, false),
        };
        checks.push(Check {
            name: "rate_slope_deviation".into(),
            value,
            threshold: tol,
            pass,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ScenarioReport {
        id: spec.id,
        spec: spec.clone(),
        predicted,
        predicted_slope,
        measured,
        curve,
        terminal_error,
        checks,
        constants: Constants {
            mass: ctx.mass,
            kappa: ctx.kappa,
            kappa_hat: table.kappa_hat,
            f0: table.f0,
        },
        pass,
    })
}
