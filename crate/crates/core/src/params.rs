use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The model triple `(α, s, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    alpha: f64,
    s: f64,
    dim: u32,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    s: f64,
    dim: u32,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.alpha, r.s, r.dim)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            alpha: p.alpha,
            s: p.s,
            dim: p.dim,
        }
    }
}

/// Position of `2s` relative to the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `2s < N`: singular profile, Riesz-type near the origin.
    Subcritical,
    /// `2s = N = 1`: logarithmic profile near the origin.
    Critical,
    /// `2s > N = 1`: profile continuous at the origin.
    Supercritical,
}

/// Critical integrability exponent `p_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalExponent {
    Finite(f64),
    Infinite,
    AllSubcritical,
}

impl ModelParams {
    pub fn new(alpha: f64, s: f64, dim: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0,1], got {alpha}")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::domain(format!("s must lie in (0,1], got {s}")));
        }
        if dim == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        Ok(ModelParams { alpha, s, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn regime(&self) -> Regime {
        let two_s = 2.0 * self.s;
        let n = self.n();
        if (two_s - n).abs() < 1e-12 {
            Regime::Critical
        } else if two_s < n {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }

    /// Exponent `α/(2s)` of the characteristic length `t^{α/2s}`.
    pub fn scale_exponent(&self) -> f64 {
        self.alpha / (2.0 * self.s)
    }

    /// Characteristic length `t^{α/2s}`.
    pub fn length_scale(&self, t: f64) -> f64 {
        t.powf(self.scale_exponent())
    }

    /// Requires `N ∈ {1, 2, 3}`, the dimensions with closed-form radial kernels.
    pub fn require_supported_dim(&self) -> Result<()> {
        if (1..=3).contains(&self.dim) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "only N∈{{1,2,3}} is supported, got N={}",
                self.dim
            )))
        }
    }

    /// Whether `p` lies in the subcritical range (S).
    pub fn is_subcritical(&self, p: f64) -> bool {
        match critical_exponent(self) {
            CriticalExponent::AllSubcritical => true,
            CriticalExponent::Infinite => p.is_finite(),
            CriticalExponent::Finite(pc) => p < pc,
        }
    }
}

/// `N/(N−2s)` for `N > 2s`, `∞` for `N = 2s`, every `p` when `2s > N = 1`.
pub fn critical_exponent(params: &ModelParams) -> CriticalExponent {
    match params.regime() {
        Regime::Subcritical => {
            let n = params.n();
            CriticalExponent::Finite(n / (n - 2.0 * params.s))
        }
        Regime::Critical => CriticalExponent::Infinite,
        Regime::Supercritical => CriticalExponent::AllSubcritical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponent_examples() {
        let p = ModelParams::new(0.5, 0.5, 3).unwrap();
        assert_eq!(critical_exponent(&p), CriticalExponent::Finite(1.5));
        let p = ModelParams::new(0.3, 0.5, 1).unwrap();
        assert_eq!(critical_exponent(&p), CriticalExponent::Infinite);
        let p = ModelParams::new(0.7, 0.75, 1).unwrap();
        assert_eq!(critical_exponent(&p), CriticalExponent::AllSubcritical);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(0.0, 0.5, 1).is_err());
        assert!(ModelParams::new(1.2, 0.5, 1).is_err());
        assert!(ModelParams::new(0.5, 0.0, 1).is_err());
        assert!(ModelParams::new(0.5, 0.5, 0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 2).is_ok());
    }

    #[test]
    fn serde_validates() {
        let ok: ModelParams = serde_json::from_str(r#"{"alpha":0.5,"s":0.5,"dim":3}"#).unwrap();
        assert_eq!(ok.dim(), 3);
        assert!(serde_json::from_str::<ModelParams>(r#"{"alpha":2,"s":0.5,"dim":3}"#).is_err());
    }

    #[test]
    fn subcritical_membership() {
        let p = ModelParams::new(0.5, 0.5, 3).unwrap();
        assert!(p.is_subcritical(1.4));
        assert!(!p.is_subcritical(1.5));
        let p = ModelParams::new(0.5, 0.5, 1).unwrap();
        assert!(p.is_subcritical(1e6));
        assert!(!p.is_subcritical(f64::INFINITY));
    }
}
