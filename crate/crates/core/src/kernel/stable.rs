//! Profile `G_s` of the classical (α = 1) kernel of `(−Δ)^s`, the building
//! block of the subordination formula.

use super::profile::{build_profile_unchecked, default_profile_grid, BuildMethod, TailExpansion, ProfileTable};
use crate::error::Result;
use crate::params::ModelParams;
use crate::specfun::gamma::gamma;

#[derive(Debug, Clone)]
pub enum StableProfile {
    /// `G_{1/2}(ξ) = Γ((N+1)/2) π^{−(N+1)/2} (1+|ξ|²)^{−(N+1)/2}`
    Poisson { dim: u32, c: f64 },
    /// Direct inversion of `e^{−ρ^{2s}}`, with the large-radius series
    /// beyond the grid.
    Tabulated(Box<ProfileTable>, TailExpansion),
}

impl StableProfile {
    pub fn new(s: f64, dim: u32) -> Result<Self> {
        if s == 0.5 {
            let h = (dim as f64 + 1.0) / 2.0;
            return Ok(StableProfile::Poisson {
                dim,
                c: gamma(h) / std::f64::consts::PI.powf(h),
            });
        }
        let params = ModelParams::new(1.0, s, dim)?;
        let grid = default_profile_grid(dim)?;
        let table = build_profile_unchecked(&params, &grid, BuildMethod::Direct)?;
        let tail = TailExpansion::new(&params);
        Ok(StableProfile::Tabulated(Box::new(table), tail))
    }

    pub fn value(&self, xi: f64) -> f64 {
        match self {
            StableProfile::Poisson { dim, c } => {
                c * (1.0 + xi * xi).powf(-(*dim as f64 + 1.0) / 2.0)
            }
            StableProfile::Tabulated(t, tail) => {
                if xi > t.grid.r_max() {
                    let (v, e) = tail.eval(xi);
                    if e <= 1e-10 * v.abs() {
                        return v;
                    }
                }
                super::profile::profile_value(t, xi).unwrap_or(0.0)
            }
        }
    }
}
