//! Acceptance criteria AC1..AC13 as executable checks with fixed tolerances.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use fracheat_core::asymptotics::{
    measure_critical_dimension, run_scenario, ScenarioId, ScenarioReport, ScenarioSpec,
    TimeSchedule,
};
use fracheat_core::fields::{mild_solution_convolution, mild_solution_fourier, InitialDatum};
use fracheat_core::kernel::{
    check_gradient_bounds, estimate_kappa_hat, normalization, BuildMethod, ProfileTable,
};
use fracheat_core::specfun::{caputo_l1_derivative, mittag_leffler};
use fracheat_core::{Error, ModelParams, NormSpec, RadialGrid, Result};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "AC1")]
    Ac1,
    #[serde(rename = "AC2")]
    Ac2,
    #[serde(rename = "AC3")]
    Ac3,
    #[serde(rename = "AC4")]
    Ac4,
    #[serde(rename = "AC5")]
    Ac5,
    #[serde(rename = "AC6")]
    Ac6,
    #[serde(rename = "AC7")]
    Ac7,
    #[serde(rename = "AC8")]
    Ac8,
    #[serde(rename = "AC9")]
    Ac9,
    #[serde(rename = "AC10")]
    Ac10,
    #[serde(rename = "AC11")]
    Ac11,
    #[serde(rename = "AC12")]
    Ac12,
    #[serde(rename = "AC13")]
    Ac13,
}

impl Criterion {
    pub const ALL: [Criterion; 13] = [
        Criterion::Ac1,
        Criterion::Ac2,
        Criterion::Ac3,
        Criterion::Ac4,
        Criterion::Ac5,
        Criterion::Ac6,
        Criterion::Ac7,
        Criterion::Ac8,
        Criterion::Ac9,
        Criterion::Ac10,
        Criterion::Ac11,
        Criterion::Ac12,
        Criterion::Ac13,
    ];

    pub fn number(&self) -> usize {
        Criterion::ALL.iter().position(|c| c == self).unwrap() + 1
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AC{}", self.number())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown criterion {s:?}")))
    }
}

/// One measured quantity against its bound (`value ≤ limit`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub label: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Measure {
    fn at_most(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Measure {
            label: label.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

/// A part of a criterion. Parts with `known_failure` set are expected to
/// fail at desk scale; the text says why.
pub struct Check {
    pub criterion: Criterion,
    pub name: &'static str,
    pub known_failure: Option<&'static str>,
    eval: fn() -> Result<Vec<Measure>>,
}

impl Check {
    pub fn run(&self) -> Result<Vec<Measure>> {
        (self.eval)()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub criterion: Criterion,
    pub name: String,
    pub known_failure: Option<String>,
    pub measures: Vec<Measure>,
    pub error: Option<String>,
    pub seconds: f64,
    pub pass: bool,
}

pub fn run_check(check: &Check) -> CheckOutcome {
    let start = Instant::now();
    let result = check.run();
    let seconds = start.elapsed().as_secs_f64();
    let (measures, error) = match result {
        Ok(m) => (m, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none() && !measures.is_empty() && measures.iter().all(|m| m.pass);
    CheckOutcome {
        criterion: check.criterion,
        name: check.name.to_string(),
        known_failure: check.known_failure.map(str::to_string),
        measures,
        error,
        seconds,
        pass,
    }
}

impl CheckOutcome {
    pub fn summary(&self) -> String {
        if let Some(e) = &self.error {
            return format!("{}: error: {e}", self.name);
        }
        let parts: Vec<String> = self
            .measures
            .iter()
            .filter(|m| !m.pass)
            .chain(self.measures.iter().filter(|m| m.pass).take(3))
            .take(4)
            .map(|m| {
                let rel = if m.pass { "≤" } else { ">" };
                format!("{}={:.3e}{rel}{:.1e}", m.label, m.value, m.limit)
            })
            .collect();
        format!("{}: {}", self.name, parts.join(", "))
    }
}

pub fn checks() -> Vec<Check> {
    use Criterion::*;
    let c = |criterion, name, known_failure, eval| Check {
        criterion,
        name,
        known_failure,
        eval,
    };
    vec![
        c(Ac1, "mittag_leffler_oracles", None, ac1),
        c(Ac2, "caputo_l1_order", None, ac2),
        c(
            Ac2,
            "caputo_l1_order_alpha_0.3",
            Some("E_α(−t^α) has a t^α singularity at t=0, which caps the L1 order at 1+α=1.3 when α=0.3"),
            ac2_small,
        ),
        c(Ac3, "profile_normalization", None, ac3),
        c(Ac4, "tail_plateau", None, ac4),
        c(Ac5, "near_origin_laws", None, ac5),
        c(Ac6, "gradient_tail_exponent", None, ac6),
        c(Ac7, "route_equivalence", None, ac7),
        c(Ac8, "characteristic_lp", None, ac8),
        c(Ac9, "compact_supercritical", None, ac9),
        c(
            Ac10,
            "compact_critical_1d",
            Some("the error decays like 1/ln t and is 0.20 at t=1e6; 10% needs t near 1e12"),
            ac10,
        ),
        c(
            Ac11,
            "compact_subcritical_1d",
            Some("the first correction decays like t^(−1/6) and is 0.11 at t=2^14; 2% needs t near 1e18"),
            ac11,
        ),
        c(Ac12, "fast_matched", None, ac12_fast),
        c(
            Ac12,
            "far_tail",
            Some("the kernel tail adds Mκ̂t^α h^(β−N−2s)/A ∝ t^(−0.04) at |x|=h, about 1.1 at t=2^14"),
            ac12_far,
        ),
        c(Ac13, "critical_dimension", None, ac13),
    ]
}

const PRESETS: [(f64, f64, u32); 6] = [
    (0.5, 0.5, 1),
    (0.5, 0.5, 3),
    (0.5, 0.75, 1),
    (0.8, 0.5, 1),
    (0.8, 0.5, 3),
    (0.8, 0.75, 1),
];

fn params(a: f64, s: f64, n: u32) -> Result<ModelParams> {
    ModelParams::new(a, s, n)
}

fn table(p: &ModelParams) -> Result<ProfileTable> {
    type Key = (u64, u64, u32);
    static MEMO: OnceLock<Mutex<HashMap<Key, ProfileTable>>> = OnceLock::new();
    let key = (p.alpha().to_bits(), p.s().to_bits(), p.dim());
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = memo.lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let t = crate::cache::profile(p, BuildMethod::Direct)?;
    memo.lock().unwrap().insert(key, t.clone());
    Ok(t)
}

fn label(p: (f64, f64, u32)) -> String {
    format!("({},{},{})", p.0, p.1, p.2)
}

fn erfcx(x: f64) -> f64 {
    if x < 4.0 {
        return (x * x).exp() * erfc(x);
    }
    let mut f = x;
    for k in (1..=60).rev() {
        f = x + (k as f64 / 2.0) / f;
    }
    1.0 / (PI.sqrt() * f)
}

fn ac1() -> Result<Vec<Measure>> {
    let start = Instant::now();
    let mut exp_err = 0.0f64;
    for i in 0..=500 {
        let x = 0.1 * i as f64;
        exp_err = exp_err.max((mittag_leffler(1.0, x)? / (-x).exp() - 1.0).abs());
    }
    let mut half_err = 0.0f64;
    for i in 0..=2000 {
        let x = 0.005 * i as f64;
        half_err = half_err.max((mittag_leffler(0.5, x)? / erfcx(x) - 1.0).abs());
    }
    Ok(vec![
        Measure::at_most("alpha=1", exp_err, 1e-10),
        Measure::at_most("alpha=0.5", half_err, 1e-8),
        Measure::at_most("seconds", start.elapsed().as_secs_f64(), 5.0),
    ])
}

/// Fitted order of the L1 residual of `∂ₜ^α y + y` at `t = 1`, `y = E_α(−t^α)`.
pub fn l1_order(alpha: f64) -> Result<f64> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for k in 7..=11 {
        let n = 1usize << k;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let u = t
            .iter()
            .map(|s| mittag_leffler(alpha, s.powf(alpha)))
            .collect::<Result<Vec<f64>>>()?;
        let d = caputo_l1_derivative(&t, &u, alpha)?;
        x.push((n as f64).ln());
        y.push((d[n] + u[n]).abs().ln());
    }
    Ok(-slope(&x, &y))
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn ac2_for(alphas: &[f64]) -> Result<Vec<Measure>> {
    alphas
        .iter()
        .map(|&a| {
            let order = l1_order(a)?;
            Ok(Measure::at_most(
                format!("|order−(2−α)| α={a}"),
                (order - (2.0 - a)).abs(),
                0.2,
            ))
        })
        .collect()
}

fn ac2() -> Result<Vec<Measure>> {
    ac2_for(&[0.5, 0.8])
}

fn ac2_small() -> Result<Vec<Measure>> {
    ac2_for(&[0.3])
}

fn ac3() -> Result<Vec<Measure>> {
    PRESETS
        .iter()
        .map(|&(a, s, n)| {
            let t = table(&params(a, s, n)?)?;
            Ok(Measure::at_most(
                label((a, s, n)),
                (normalization(&t) - 1.0).abs(),
                1e-6,
            ))
        })
        .collect()
}

fn ac4() -> Result<Vec<Measure>> {
    let mut out = PRESETS
        .iter()
        .map(|&(a, s, n)| {
            let kh = estimate_kappa_hat(&table(&params(a, s, n)?)?)?;
            Ok(Measure::at_most(label((a, s, n)), kh.variation, 0.02))
        })
        .collect::<Result<Vec<_>>>()?;
    let kh = estimate_kappa_hat(&table(&params(1.0, 0.5, 1)?)?)?;
    out.push(Measure::at_most("|κ̂π−1| (1,0.5,1)", (kh.value * PI - 1.0).abs(), 0.01));
    Ok(out)
}

fn ac5() -> Result<Vec<Measure>> {
    let t = table(&params(0.5, 0.5, 3)?)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (r, v) in t.grid.nodes().iter().zip(&t.values) {
        if (1e-4..=1e-2).contains(r) {
            x.push(r.ln());
            y.push(v.ln());
        }
    }
    let fitted = slope(&x, &y);
    let t = table(&params(0.5, 0.5, 1)?)?;
    let ratio: Vec<f64> = t
        .grid
        .nodes()
        .iter()
        .zip(&t.values)
        .filter(|(r, _)| (1e-4..=1e-3).contains(*r))
        .map(|(r, v)| v / -r.ln())
        .collect();
    let lo = ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratio.iter().cloned().fold(0.0, f64::max);
    Ok(vec![
        Measure::at_most("slope dev N=3", (fitted / -2.0 - 1.0).abs(), 0.03),
        Measure::at_most("log ratio variation N=1", hi / lo - 1.0, 0.05),
    ])
}

fn ac6() -> Result<Vec<Measure>> {
    PRESETS
        .iter()
        .map(|&(a, s, n)| {
            let g = check_gradient_bounds(&table(&params(a, s, n)?)?);
            let e = -(n as f64 + 2.0 * s + 1.0);
            Ok(Measure::at_most(
                label((a, s, n)),
                ((g.tail_exponent - e) / e).abs(),
                0.05,
            ))
        })
        .collect()
}

fn ac7() -> Result<Vec<Measure>> {
    let start = Instant::now();
    let p = params(0.5, 0.5, 1)?;
    let t0 = table(&p)?;
    let d = InitialDatum::gaussian(1.0, 1)?;
    let grid = RadialGrid::uniform(10.0, 201, 1)?;
    let mut out = Vec::new();
    for t in [1.0, 16.0, 256.0] {
        let a = mild_solution_fourier(&d, &p, t, &grid)?;
        let b = mild_solution_convolution(&d, &t0, t, &grid)?;
        let worst = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x / y - 1.0).abs())
            .fold(0.0, f64::max);
        out.push(Measure::at_most(format!("t={t}"), worst, 1e-4));
    }
    out.push(Measure::at_most("seconds", start.elapsed().as_secs_f64(), 120.0));
    Ok(out)
}

fn scenario(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    run_scenario(spec, &table(&spec.params)?)
}

fn verdict(r: &ScenarioReport) -> Measure {
    let failed = r.checks.iter().filter(|c| !c.pass).count();
    Measure::at_most(format!("{} failed checks", r.id), failed as f64, 0.0)
}

fn ac8() -> Result<Vec<Measure>> {
    let start = Instant::now();
    let mut out = Vec::new();
    for p in [1.0, 2.0] {
        let mut spec = ScenarioSpec::preset(ScenarioId::CharacteristicLp)?;
        spec.norm = NormSpec::strong(p)?;
        let r = scenario(&spec)?;
        let first = r.curve.first().map_or(f64::NAN, |c| c.error);
        let last = r.curve.last().map_or(f64::NAN, |c| c.error);
        out.push(Measure::at_most(format!("final/initial p={p}"), last / first, 0.25));
        let upturn = r
            .checks
            .iter()
            .filter(|c| c.name.contains("upturn") || c.name.contains("monotone"))
            .map(|c| c.value / c.threshold)
            .fold(0.0, f64::max);
        out.push(Measure::at_most(format!("wiggle/limit p={p}"), upturn, 1.0));
    }
    out.push(Measure::at_most("seconds", start.elapsed().as_secs_f64(), 600.0));
    Ok(out)
}

fn ac9() -> Result<Vec<Measure>> {
    let r = scenario(&ScenarioSpec::preset(ScenarioId::CompactSupercritical)?)?;
    let slope = r.measured.as_ref().map_or(f64::NAN, |m| m.slope);
    let a = r.spec.params.alpha();
    Ok(vec![
        Measure::at_most("terminal", r.terminal_error.unwrap_or(f64::NAN), 0.05),
        Measure::at_most("slope dev", (slope / -a - 1.0).abs(), 0.03),
    ])
}

fn terminal_only(id: ScenarioId, limit: f64) -> Result<Vec<Measure>> {
    let r = scenario(&ScenarioSpec::preset(id)?)?;
    Ok(vec![Measure::at_most(
        "terminal",
        r.terminal_error.unwrap_or(f64::NAN),
        limit,
    )])
}

fn ac10() -> Result<Vec<Measure>> {
    terminal_only(ScenarioId::CompactCritical1d, 0.10)
}

fn ac11() -> Result<Vec<Measure>> {
    terminal_only(ScenarioId::CompactSubcritical1d, 0.02)
}

fn ac12_fast() -> Result<Vec<Measure>> {
    let r = scenario(&ScenarioSpec::preset(ScenarioId::FastMatched)?)?;
    Ok(vec![
        Measure::at_most("terminal", r.terminal_error.unwrap_or(f64::NAN), 0.05),
        verdict(&r),
    ])
}

fn ac12_far() -> Result<Vec<Measure>> {
    terminal_only(ScenarioId::FarTail, 0.05)
}

fn ac13() -> Result<Vec<Measure>> {
    let m = measure_critical_dimension(0.5, 0.5, 2.0, &[1, 2, 3], &TimeSchedule::dyadic(14))?;
    Ok(m.iter()
        .map(|d| Measure::at_most(format!("N={}", d.predicted.dim), d.relative_error, 0.05))
        .collect())
}
