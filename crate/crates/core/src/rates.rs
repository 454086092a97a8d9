use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{NormKind, NormSpec};
use crate::params::{critical_exponent, CriticalExponent, ModelParams, Regime};
use crate::window::{ScaleFn, ScaleWindow, WindowKind};

/// Least-squares fit of `log value = slope · log t + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits a power law to strictly positive samples (at least four).
pub fn fit_rate(times: &[f64], values: &[f64]) -> Result<RateEstimate> {
    if times.len() != values.len() {
        return Err(Error::domain("times and values differ in length"));
    }
    if times.len() < 4 {
        return Err(Error::domain(format!(
            "a rate fit needs at least 4 samples, got {}",
            times.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::domain(format!("nonpositive sample time {t}")));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("nonpositive sample value {v}")));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("sample times must not all coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| {
            let e = b - (slope * a + intercept);
            e * e
        })
        .sum();
    let r_squared = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateEstimate {
        times: times.to_vec(),
        values: values.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}

/// Limit profile that a theorem attaches to a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTag {
    /// Mass times the fundamental solution.
    MassKernel,
    /// `κ·Φ`, Riesz potential of the datum.
    KappaPhi,
    /// `Mκα`, the constant for `2s = N = 1` on compact sets.
    MassKappaAlpha,
    /// `Mκ·E_{N,s}`, Riesz kernel in intermediate scales (`2s < N`).
    MassKappaRiesz,
    /// `Mκ`, the constant in intermediate scales at `2s = N = 1`.
    MassKappa,
    /// `MF(0)`, the constant for `2s > N = 1`.
    MassProfileAtZero,
    /// `A|x|^{−β}`, the tail of the datum.
    DatumTail,
}

impl ProfileTag {
    pub fn label(&self) -> &'static str {
        match self {
            ProfileTag::MassKernel => "M·Z",
            ProfileTag::KappaPhi => "κ·Φ",
            ProfileTag::MassKappaAlpha => "Mκα",
            ProfileTag::MassKappaRiesz => "Mκ·E_{N,s}",
            ProfileTag::MassKappa => "Mκ",
            ProfileTag::MassProfileAtZero => "MF(0)",
            ProfileTag::DatumTail => "A|x|^-β",
        }
    }
}

/// Logarithmic factor multiplying the power-law part of a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogCorrection {
    None,
    /// `× log t`.
    LogT,
    /// `÷ |log(g(t) t^{−α})|`.
    InverseLogScale,
}

/// `t^{t_exponent} · g(t)^{g_exponent} · (log factor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedRate {
    pub t_exponent: f64,
    pub g_exponent: f64,
    pub log_correction: LogCorrection,
    pub profile: ProfileTag,
    /// The scale `g` (or `h`) the `g`-exponent refers to.
    pub scale: Option<ScaleFn>,
    /// `α`, needed by the `|log(g t^{−α})|` correction.
    pub alpha: f64,
}

impl PredictedRate {
    pub fn has_log_correction(&self) -> bool {
        self.log_correction != LogCorrection::None
    }

    /// The predicted decay curve up to a multiplicative constant.
    pub fn curve(&self, t: f64) -> f64 {
        let mut v = t.powf(self.t_exponent);
        if let Some(g) = self.scale {
            let gt = g.eval(t);
            v *= gt.powf(self.g_exponent);
            if self.log_correction == LogCorrection::InverseLogScale {
                v /= (gt * t.powf(-self.alpha)).ln().abs();
            }
        }
        if self.log_correction == LogCorrection::LogT {
            v *= t.ln();
        }
        v
    }

    /// Exponent of the pure power-law part: `t_exponent + g_exponent · a`.
    pub fn power_exponent(&self) -> f64 {
        self.t_exponent + self.scale.map_or(0.0, |g| self.g_exponent * g.a)
    }
}

/// Datum properties that some theorems require beyond integrability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Assumptions {
    /// `u₀ ∈ 𝒟_N`.
    #[serde(default)]
    pub decay_class_n: bool,
    /// `u₀ ∈ L^p_loc` (or `L^q_loc`, `q > 1`, where the theorem asks for it).
    #[serde(default)]
    pub local_lp: bool,
    /// Decay exponent `β` of the datum (`∞` for compactly supported or
    /// Gaussian data).
    #[serde(default, with = "opt_exponent")]
    pub beta: Option<f64>,
}

mod opt_exponent {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::norms::exponent_serde")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

fn uncovered(h: impl Into<String>) -> Error {
    Error::Uncovered {
        hypothesis: h.into(),
    }
}

/// The decay rate the large-time theory predicts for `‖u(·,t)‖` on `window`.
pub fn predicted_rate(
    params: &ModelParams,
    window: &ScaleWindow,
    norm: &NormSpec,
    assumptions: &Assumptions,
) -> Result<PredictedRate> {
    let p = norm.p();
    let n = params.n();
    let s = params.s();
    let alpha = params.alpha();
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let subcritical = params.is_subcritical(p);
    let pc = critical_exponent(params);
    let at_pc = matches!(pc, CriticalExponent::Finite(q) if (q - p).abs() < 1e-12);
    let characteristic = -(alpha * n / (2.0 * s)) * (1.0 - inv_p);
    let rate = |t_exponent, profile| PredictedRate {
        t_exponent,
        g_exponent: 0.0,
        log_correction: LogCorrection::None,
        profile,
        scale: None,
        alpha,
    };

    if norm.kind() == NormKind::Weak {
        // ‖u‖_{M^{p_c}} ≍ t^{−α}: only the whole-space critical case is known.
        return match (window.kind(), at_pc) {
            (WindowKind::WholeSpace, true) => Ok(rate(-alpha, ProfileTag::MassKernel)),
            _ => Err(uncovered(
                "Marcinkiewicz rates are known only on ℝ^N at p = p_c",
            )),
        };
    }

    match *window.kind() {
        WindowKind::WholeSpace => {
            if subcritical {
                Ok(rate(characteristic, ProfileTag::MassKernel))
            } else {
                Err(uncovered("p subcritical (convergence on all of ℝ^N)"))
            }
        }
        WindowKind::Characteristic { .. } | WindowKind::Exterior { .. } => {
            if subcritical || assumptions.decay_class_n {
                Ok(rate(characteristic, ProfileTag::MassKernel))
            } else {
                Err(uncovered("u₀ ∈ 𝒟_N (p is not subcritical)"))
            }
        }
        WindowKind::Intermediate { g, .. } => {
            if !subcritical && !assumptions.decay_class_n {
                return Err(uncovered("u₀ ∈ 𝒟_N (p is not subcritical)"));
            }
            let (t_exponent, g_exponent, log_correction, profile) = match params.regime() {
                Regime::Subcritical => (
                    -alpha,
                    2.0 * s - n * (1.0 - inv_p),
                    LogCorrection::None,
                    ProfileTag::MassKappaRiesz,
                ),
                Regime::Critical => (
                    -alpha,
                    inv_p,
                    LogCorrection::InverseLogScale,
                    ProfileTag::MassKappa,
                ),
                Regime::Supercritical => (
                    -alpha / (2.0 * s),
                    inv_p,
                    LogCorrection::None,
                    ProfileTag::MassProfileAtZero,
                ),
            };
            Ok(PredictedRate {
                t_exponent,
                g_exponent,
                log_correction,
                profile,
                scale: Some(g),
                alpha,
            })
        }
        WindowKind::Compact { .. } => match params.regime() {
            Regime::Subcritical => {
                if at_pc {
                    return Err(uncovered("p ≠ p_c (use the Marcinkiewicz norm at p_c)"));
                }
                if !subcritical && !assumptions.local_lp {
                    return Err(uncovered("u₀ ∈ L^p_loc (p is not subcritical)"));
                }
                Ok(rate(-alpha, ProfileTag::KappaPhi))
            }
            Regime::Critical => {
                if p.is_infinite() && !assumptions.local_lp {
                    return Err(uncovered("u₀ ∈ L^q_loc for some q > 1 (p = ∞)"));
                }
                let mut r = rate(-alpha, ProfileTag::MassKappaAlpha);
                r.log_correction = LogCorrection::LogT;
                Ok(r)
            }
            Regime::Supercritical => Ok(rate(-alpha / (2.0 * s), ProfileTag::MassProfileAtZero)),
        },
        WindowKind::FastMatched { cap, .. } => {
            let beta = assumptions
                .beta
                .ok_or_else(|| uncovered("u₀ ∈ 𝒟_β with known β"))?;
            if beta >= n + 2.0 * s {
                Ok(rate(characteristic, ProfileTag::MassKernel))
            } else if beta > n {
                let limit = alpha / (n + 2.0 * s - beta);
                match cap {
                    Some(h) if h.is_little_o_of(limit) => {
                        Ok(rate(characteristic, ProfileTag::MassKernel))
                    }
                    _ => Err(uncovered(format!(
                        "upper edge h(t) = o(t^{limit}) for β = {beta} < N+2s"
                    ))),
                }
            } else {
                Err(uncovered("β > N (integrable decay)"))
            }
        }
        WindowKind::FarTail { h, .. } => {
            let n_over_p = n * inv_p;
            Ok(PredictedRate {
                t_exponent: 0.0,
                g_exponent: -assumptions.beta.unwrap_or(f64::NAN) + n_over_p,
                log_correction: LogCorrection::None,
                profile: ProfileTag::DatumTail,
                scale: Some(h),
                alpha,
            })
        }
    }
}
