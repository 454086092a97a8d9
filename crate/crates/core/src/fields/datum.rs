use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ball_volume, sphere_area};
use crate::kernel::hankel::{AlgebraicTail, HankelPlan, PanelLayout};
use crate::quad::{adaptive, Tolerance};
use crate::specfun::gamma::{gamma, rgamma};

/// Radial initial-datum families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DatumFamily {
    /// `exp(−r²/w²)`
    Gaussian { width: f64 },
    /// `exp(−1/(1−(r/R)²))` on `r < R`
    Bump { radius: f64 },
    /// `A (1+r²)^{−β/2}`
    PowerTail { beta: f64, amplitude: f64 },
    /// `1` on `r ≤ R`
    Indicator { radius: f64 },
    /// Piecewise-linear samples, zero beyond the last radius.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatumSpec {
    #[serde(flatten)]
    family: DatumFamily,
    dim: u32,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

/// A nonnegative radial initial datum `u₀` in `ℝ^N` with its mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatumSpec", into = "DatumSpec")]
pub struct InitialDatum {
    family: DatumFamily,
    dim: u32,
    scale: f64,
    mass: f64,
}

impl TryFrom<DatumSpec> for InitialDatum {
    type Error = Error;
    fn try_from(s: DatumSpec) -> Result<Self> {
        InitialDatum::new(s.family, s.dim)?.scaled(s.scale)
    }
}

impl From<InitialDatum> for DatumSpec {
    fn from(d: InitialDatum) -> Self {
        DatumSpec {
            family: d.family,
            dim: d.dim,
            scale: d.scale,
        }
    }
}

impl InitialDatum {
    pub fn new(family: DatumFamily, dim: u32) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain(format!("N∈{{1,2,3}} required, got N = {dim}")));
        }
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{what} must be positive, got {x}")))
            }
        };
        match &family {
            DatumFamily::Gaussian { width } => positive(*width, "gaussian width")?,
            DatumFamily::Bump { radius } | DatumFamily::Indicator { radius } => {
                positive(*radius, "radius")?
            }
            DatumFamily::PowerTail { beta, amplitude } => {
                positive(*amplitude, "tail amplitude")?;
                if !(*beta > dim as f64) {
                    return Err(Error::domain(format!(
                        "power-tail datum needs β > N for integrability, got β = {beta}"
                    )));
                }
            }
            DatumFamily::Table { radii, values } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return Err(Error::domain("table datum needs matching radii and values"));
                }
                if radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::domain(
                        "table radii must start at 0 and increase strictly",
                    ));
                }
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::domain("table values must be nonnegative"));
                }
            }
        }
        let mut d = InitialDatum {
            family,
            dim,
            scale: 1.0,
            mass: 0.0,
        };
        d.mass = d.compute_mass()?;
        if !(d.mass > 0.0) {
            return Err(Error::domain("the datum must have positive mass"));
        }
        Ok(d)
    }

    pub fn gaussian(width: f64, dim: u32) -> Result<Self> {
        Self::new(DatumFamily::Gaussian { width }, dim)
    }

    pub fn bump(radius: f64, dim: u32) -> Result<Self> {
        Self::new(DatumFamily::Bump { radius }, dim)
    }

    pub fn power_tail(beta: f64, amplitude: f64, dim: u32) -> Result<Self> {
        Self::new(DatumFamily::PowerTail { beta, amplitude }, dim)
    }

    pub fn indicator(radius: f64, dim: u32) -> Result<Self> {
        Self::new(DatumFamily::Indicator { radius }, dim)
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>, dim: u32) -> Result<Self> {
        Self::new(DatumFamily::Table { radii, values }, dim)
    }

    /// The datum multiplied by `factor > 0`.
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::domain("scale factor must be positive"));
        }
        self.scale *= factor;
        self.mass *= factor;
        Ok(self)
    }

    pub fn family(&self) -> &DatumFamily {
        &self.family
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Decay exponent `β` (∞ for compactly supported or Gaussian data).
    pub fn beta(&self) -> f64 {
        match self.family {
            DatumFamily::PowerTail { beta, .. } => beta,
            _ => f64::INFINITY,
        }
    }

    /// `lim |x|^β u₀(x)` for power-tail data.
    pub fn tail_amplitude(&self) -> Option<f64> {
        match self.family {
            DatumFamily::PowerTail { amplitude, .. } => Some(self.scale * amplitude),
            _ => None,
        }
    }

    /// Membership in the decay class `𝒟_β`.
    pub fn in_decay_class(&self, beta: f64) -> bool {
        self.beta() >= beta
    }

    /// All shipped families are bounded, hence in every local `Lᵖ`.
    pub fn locally_bounded(&self) -> bool {
        true
    }

    pub fn has_closed_form_transform(&self) -> bool {
        matches!(self.family, DatumFamily::Gaussian { .. })
    }

    pub fn transform_available(&self) -> bool {
        matches!(
            self.family,
            DatumFamily::Gaussian { .. } | DatumFamily::Bump { .. } | DatumFamily::PowerTail { .. }
        )
    }

    /// `u₀(r)`.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        self.scale
            * match &self.family {
                DatumFamily::Gaussian { width } => (-(r / width).powi(2)).exp(),
                DatumFamily::Bump { radius } => {
                    let x = r / radius;
                    if x >= 1.0 {
                        0.0
                    } else {
                        (-1.0 / (1.0 - x * x)).exp()
                    }
                }
                DatumFamily::PowerTail { beta, amplitude } => {
                    amplitude * (1.0 + r * r).powf(-beta / 2.0)
                }
                DatumFamily::Indicator { radius } => {
                    if r <= *radius {
                        1.0
                    } else {
                        0.0
                    }
                }
                DatumFamily::Table { radii, values } => {
                    let last = radii.len() - 1;
                    if r > radii[last] {
                        0.0
                    } else {
                        let i = radii.partition_point(|x| *x <= r).min(last).max(1) - 1;
                        let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                        values[i] + t * (values[i + 1] - values[i])
                    }
                }
            }
    }

    /// Radius beyond which the datum vanishes (or is below `e^{−45}` of its
    /// peak for Gaussians); `None` for algebraic tails.
    pub fn effective_support(&self) -> Option<f64> {
        match &self.family {
            DatumFamily::Gaussian { width } => Some(width * 45f64.sqrt()),
            DatumFamily::Bump { radius } | DatumFamily::Indicator { radius } => Some(*radius),
            DatumFamily::Table { radii, .. } => radii.last().copied(),
            DatumFamily::PowerTail { .. } => None,
        }
    }

    /// Radii where the datum is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.family {
            DatumFamily::Indicator { radius } => vec![*radius],
            DatumFamily::Table { radii, .. } => radii.clone(),
            _ => Vec::new(),
        }
    }

    /// A length scale of the datum.
    pub fn width(&self) -> f64 {
        match &self.family {
            DatumFamily::Gaussian { width } => *width,
            DatumFamily::Bump { radius } | DatumFamily::Indicator { radius } => *radius,
            DatumFamily::PowerTail { .. } => 1.0,
            DatumFamily::Table { radii, .. } => *radii.last().unwrap(),
        }
    }

    fn compute_mass(&self) -> Result<f64> {
        let n = self.dim as f64;
        let omega = sphere_area(self.dim);
        Ok(match &self.family {
            DatumFamily::Gaussian { width } => (width * PI.sqrt()).powi(self.dim as i32),
            DatumFamily::Indicator { radius } => ball_volume(self.dim, *radius),
            DatumFamily::PowerTail { beta, amplitude } => {
                amplitude * PI.powf(n / 2.0) * gamma((beta - n) / 2.0) * rgamma(beta / 2.0)
            }
            DatumFamily::Bump { radius } => {
                let r = adaptive(
                    |x: f64| self.value(x) * x.powi(self.dim as i32 - 1),
                    0.0,
                    *radius,
                    &[],
                    Tolerance::rel(1e-13),
                );
                omega * r.value
            }
            DatumFamily::Table { radii, values } => {
                // exact for the piecewise-linear interpolant
                let k = self.dim as i32 - 1;
                let mut acc = 0.0;
                for i in 0..radii.len() - 1 {
                    let (a, b) = (radii[i], radii[i + 1]);
                    let (fa, fb) = (values[i], values[i + 1]);
                    acc += crate::quad::gl12().integrate(a, b, |x| {
                        let t = (x - a) / (b - a);
                        (fa + t * (fb - fa)) * x.powi(k)
                    });
                }
                omega * acc
            }
        } * self.scale)
    }

    /// Radial Fourier transform `û₀(ρ) = ∫ u₀(x) e^{−ix·ξ} dx`, `|ξ| = ρ`:
    /// closed form for Gaussians, numerical for bumps and power tails.
    pub fn transform(&self) -> Result<DatumTransform> {
        DatumTransform::new(self)
    }
}

/// Evaluator for `û₀`.
#[derive(Debug, Clone)]
pub enum DatumTransform {
    Gaussian { mass: f64, width: f64 },
    Numeric { plan: Box<HankelPlan>, factor: f64, cutoff: f64 },
}

impl DatumTransform {
    fn new(d: &InitialDatum) -> Result<Self> {
        let dim = d.dim;
        let factor = (2.0 * PI).powi(dim as i32);
        match &d.family {
            DatumFamily::Gaussian { width } => Ok(DatumTransform::Gaussian {
                mass: d.mass,
                width: *width,
            }),
            DatumFamily::Bump { radius } => {
                let mut layout = PanelLayout::uniform(0.5 * radius, radius / 400.0, *radius);
                layout.levels = 6;
                layout.gl16 = true;
                let dd = d.clone();
                let plan = HankelPlan::new(dim, &layout, move |r| Ok(dd.value(r)), None)?;
                Ok(DatumTransform::Numeric {
                    plan: Box::new(plan),
                    factor,
                    cutoff: 400.0 / radius,
                })
            }
            DatumFamily::PowerTail { beta, amplitude } => {
                // (1+r²)^{−β/2} = Σ_j C(−β/2, j) r^{−β−2j} for r > 1
                let start: f64 = 4.0;
                let mut terms = Vec::new();
                let mut c = d.scale * amplitude;
                for j in 0..40 {
                    terms.push((c, beta + 2.0 * j as f64));
                    c *= (-beta / 2.0 - j as f64) / (j as f64 + 1.0);
                    if c.abs() * start.powf(-beta - 2.0 * (j + 1) as f64) < 1e-18 {
                        break;
                    }
                }
                let mut layout = PanelLayout::uniform(1.0, 0.02, start);
                layout.levels = 4;
                let dd = d.clone();
                let plan = HankelPlan::new(
                    dim,
                    &layout,
                    move |r| Ok(dd.value(r)),
                    Some(AlgebraicTail { start, terms }),
                )?;
                Ok(DatumTransform::Numeric {
                    plan: Box::new(plan),
                    factor,
                    cutoff: 50.0,
                })
            }
            _ => Err(Error::domain(
                "no Fourier transform is available for this datum family",
            )),
        }
    }

    /// Frequency beyond which `û₀` is negligible.
    pub fn cutoff(&self) -> f64 {
        match self {
            DatumTransform::Gaussian { width, .. } => 2.0 * 45f64.sqrt() / width,
            DatumTransform::Numeric { cutoff, .. } => *cutoff,
        }
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        match self {
            DatumTransform::Gaussian { mass, width } => {
                Ok(mass * (-(width * rho).powi(2) / 4.0).exp())
            }
            DatumTransform::Numeric { plan, factor, .. } => {
                // the forward transform uses K_N with the roles of r and ρ swapped
                Ok(factor * plan.eval(rho)?.0)
            }
        }
    }
}
