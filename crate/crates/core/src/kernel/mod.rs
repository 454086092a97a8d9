//! Self-similar profile `F` of the fundamental solution and its constants.

pub mod hankel;
pub mod profile;
pub mod stable;

pub use profile::{
    build_profile, build_profile_unchecked, check_gradient_bounds, default_profile_grid,
    estimate_kappa, estimate_kappa_hat, kernel_value, normalization, profile_gradient,
    profile_value, BuildDiagnostics, BuildMethod, GradientReport, KappaEstimate,
    KappaHatEstimate, MomentTable, OriginFit, OriginLaw, ProfileSidecar, ProfileTable, TailExpansion,
};
pub use stable::StableProfile;
