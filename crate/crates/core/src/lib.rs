//! Numerical laboratory for the space-time fractional heat equation
//! `∂ₜ^α u + (−Δ)^s u = 0` in `ℝ^N`, `N ∈ {1, 2, 3}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Mittag-Leffler, Wright-Mainardi and Bessel functions, plus
//!   an L1 Caputo derivative used for validation.
//! * [`kernel`]: the self-similar profile `F` of the fundamental solution
//!   `Z(x,t) = t^{−αN/2s} F(x t^{−α/2s})` and its near-origin/tail constants.
//! * [`fields`]: initial data, mild solutions (Fourier and convolution
//!   routes) and Riesz potentials.
//! * [`asymptotics`]: executable large-time scenarios producing reports.
//!
//! Shared types (parameters, radial grids, windows, norms and rate fits) live
//! at the crate root.

pub mod asymptotics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod kernel;
pub mod norms;
pub mod params;
pub mod quad;
pub mod rates;
pub mod specfun;
pub mod window;

pub use error::{Error, Result};
pub use grid::{RadialField, RadialGrid, Spacing};
pub use norms::{lp_norm, weak_norm, NormKind, NormSpec, Region};
pub use params::{critical_exponent, CriticalExponent, ModelParams, Regime};
pub use rates::{fit_rate, predicted_rate, Assumptions, PredictedRate, ProfileTag, RateEstimate};
pub use window::{ScaleFn, ScaleWindow, WindowKind};
