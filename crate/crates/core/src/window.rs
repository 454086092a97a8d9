use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

const EXPONENT_EPS: f64 = 1e-12;

/// Power-log scale `c · t^a · |log t|^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFn {
    pub c: f64,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

impl ScaleFn {
    pub fn power(c: f64, a: f64) -> Self {
        ScaleFn { c, a, b: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        ScaleFn { c, a: 0.0, b: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.c * t.powf(self.a);
        if self.b != 0.0 {
            v *= t.ln().abs().powf(self.b);
        }
        v
    }

    /// Whether `g(t) → ∞`.
    pub fn diverges(&self) -> bool {
        self.c > 0.0 && (self.a > 0.0 || (self.a == 0.0 && self.b > 0.0))
    }

    /// Whether `g(t) = o(t^e)`.
    pub fn is_little_o_of(&self, e: f64) -> bool {
        self.a < e - EXPONENT_EPS || ((self.a - e).abs() <= EXPONENT_EPS && self.b < 0.0)
    }

    /// Whether `g(t) / t^e → ∞` or `g ≍ t^e` (exponent at least `e`).
    pub fn at_least(&self, e: f64) -> bool {
        self.a >= e - EXPONENT_EPS
    }
}

/// Space-time regions at which the large-time theorems are stated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    /// All of `ℝ^N`, resolved to the extent of the grid.
    WholeSpace,
    /// The ball `B_μ`.
    Compact { mu: f64 },
    /// `ν t^{α/2s} ≤ |x| ≤ μ t^{α/2s}`.
    Characteristic { nu: f64, mu: f64 },
    /// `ν g(t) ≤ |x| ≤ μ g(t)` with `g = o(t^{α/2s})`.
    Intermediate { g: ScaleFn, nu: f64, mu: f64 },
    /// `|x| ≥ ν t^{α/2s}`.
    Exterior { nu: f64 },
    /// `ν t^{α/2s} ≤ |x| ≤ cap(t)`; without a cap the field's accuracy limit applies.
    FastMatched { nu: f64, cap: Option<ScaleFn> },
    /// `|x| ≥ h(t)`, optionally capped.
    FarTail { h: ScaleFn, cap: Option<ScaleFn> },
}

/// A validated [`WindowKind`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleWindow {
    kind: WindowKind,
}

impl ScaleWindow {
    /// Validates `kind` against the parameters and, for far-tail windows, the
    /// decay exponent `β` of the datum.
    pub fn new(kind: WindowKind, params: &ModelParams, beta: Option<f64>) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let e = params.scale_exponent();
        let kind = match kind {
            WindowKind::WholeSpace => kind,
            WindowKind::Compact { mu } => {
                positive("mu", mu)?;
                kind
            }
            WindowKind::Characteristic { nu, mu } => {
                positive("nu", nu)?;
                positive("mu", mu)?;
                if nu >= mu {
                    return Err(Error::domain("characteristic window needs nu < mu"));
                }
                kind
            }
            WindowKind::Intermediate { g, nu, mu } => {
                positive("nu", nu)?;
                positive("mu", mu)?;
                positive("g.c", g.c)?;
                if nu >= mu {
                    return Err(Error::domain("intermediate window needs nu < mu"));
                }
                if (g.a - e).abs() <= EXPONENT_EPS && g.b == 0.0 {
                    WindowKind::Characteristic {
                        nu: nu * g.c,
                        mu: mu * g.c,
                    }
                } else {
                    if !g.diverges() {
                        return Err(Error::Hypothesis(
                            "intermediate scale must satisfy g(t) → ∞".into(),
                        ));
                    }
                    if !g.is_little_o_of(e) {
                        return Err(Error::Hypothesis(format!(
                            "intermediate scale must satisfy g(t) = o(t^{e}), got exponent {}",
                            g.a
                        )));
                    }
                    kind
                }
            }
            WindowKind::Exterior { nu } => {
                positive("nu", nu)?;
                kind
            }
            WindowKind::FastMatched { nu, cap } => {
                positive("nu", nu)?;
                if let Some(c) = cap {
                    positive("cap.c", c.c)?;
                }
                kind
            }
            WindowKind::FarTail { h, cap } => {
                positive("h.c", h.c)?;
                if let Some(c) = cap {
                    positive("cap.c", c.c)?;
                }
                let beta = beta.ok_or_else(|| {
                    Error::Hypothesis("far-tail window needs the datum decay exponent β".into())
                })?;
                let n = params.n();
                let two_s = 2.0 * params.s();
                if !(beta > n && beta < n + two_s) {
                    return Err(Error::Hypothesis(format!(
                        "far-tail window needs β ∈ (N, N+2s) = ({n}, {}), got {beta}",
                        n + two_s
                    )));
                }
                let threshold = params.alpha() / (n + two_s - beta);
                if !h.at_least(threshold) {
                    return Err(Error::Hypothesis(format!(
                        "far-tail scale h(t) must grow at least like t^{threshold}, got exponent {}",
                        h.a
                    )));
                }
                kind
            }
        };
        Ok(ScaleWindow { kind })
    }

    pub fn kind(&self) -> &WindowKind {
        &self.kind
    }

    /// Radial interval `[lo, hi]` at time `t`; `hi = None` means unbounded
    /// (resolved to the extent of whatever grid the field lives on).
    pub fn interval(&self, params: &ModelParams, t: f64) -> (f64, Option<f64>) {
        let l = params.length_scale(t);
        match self.kind {
            WindowKind::WholeSpace => (0.0, None),
            WindowKind::Compact { mu } => (0.0, Some(mu)),
            WindowKind::Characteristic { nu, mu } => (nu * l, Some(mu * l)),
            WindowKind::Intermediate { g, nu, mu } => {
                let gt = g.eval(t);
                (nu * gt, Some(mu * gt))
            }
            WindowKind::Exterior { nu } => (nu * l, None),
            WindowKind::FastMatched { nu, cap } => (nu * l, cap.map(|c| c.eval(t))),
            WindowKind::FarTail { h, cap } => (h.eval(t), cap.map(|c| c.eval(t))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, s: f64, n: u32) -> ModelParams {
        ModelParams::new(alpha, s, n).unwrap()
    }

    #[test]
    fn intermediate_scale_validation() {
        let params = p(0.5, 0.5, 3);
        let ok = WindowKind::Intermediate {
            g: ScaleFn::power(1.0, 0.25),
            nu: 0.5,
            mu: 2.0,
        };
        assert!(ScaleWindow::new(ok, &params, None).is_ok());
        let too_fast = WindowKind::Intermediate {
            g: ScaleFn::power(1.0, 0.75),
            nu: 0.5,
            mu: 2.0,
        };
        assert!(matches!(
            ScaleWindow::new(too_fast, &params, None),
            Err(Error::Hypothesis(_))
        ));
        let bounded = WindowKind::Intermediate {
            g: ScaleFn::constant(3.0),
            nu: 0.5,
            mu: 2.0,
        };
        assert!(ScaleWindow::new(bounded, &params, None).is_err());
        // borderline exponent with a decaying log is still o(t^{α/2s})
        let borderline = WindowKind::Intermediate {
            g: ScaleFn { c: 1.0, a: 0.5, b: -1.0 },
            nu: 0.5,
            mu: 2.0,
        };
        assert!(ScaleWindow::new(borderline, &params, None).is_ok());
    }

    #[test]
    fn matching_exponent_becomes_characteristic() {
        let params = p(0.5, 0.5, 3);
        let w = ScaleWindow::new(
            WindowKind::Intermediate {
                g: ScaleFn::power(2.0, 0.5),
                nu: 0.5,
                mu: 2.0,
            },
            &params,
            None,
        )
        .unwrap();
        assert_eq!(*w.kind(), WindowKind::Characteristic { nu: 1.0, mu: 4.0 });
    }

    #[test]
    fn far_tail_validation() {
        let params = p(0.5, 0.5, 1);
        let h = ScaleFn::power(1.0, 1.35);
        let kind = WindowKind::FarTail { h, cap: None };
        assert!(ScaleWindow::new(kind, &params, Some(1.6)).is_ok());
        assert!(ScaleWindow::new(kind, &params, None).is_err());
        assert!(ScaleWindow::new(kind, &params, Some(2.5)).is_err());
        let slow = WindowKind::FarTail {
            h: ScaleFn::power(1.0, 1.0),
            cap: None,
        };
        assert!(ScaleWindow::new(slow, &params, Some(1.6)).is_err());
    }

    #[test]
    fn intervals() {
        let params = p(0.5, 0.5, 1);
        let w = ScaleWindow::new(WindowKind::Characteristic { nu: 0.5, mu: 2.0 }, &params, None)
            .unwrap();
        let (lo, hi) = w.interval(&params, 16.0);
        assert!((lo - 2.0).abs() < 1e-15);
        assert!((hi.unwrap() - 8.0).abs() < 1e-15);
    }
}
