//! Special functions used by the kernel and field modules.

pub mod bessel;
pub mod caputo;
pub mod gamma;
pub mod mittag_leffler;
pub mod wright;

pub use bessel::{bessel_j, BesselOrder};
pub use caputo::caputo_l1_derivative;
pub use gamma::{gamma, rgamma};
pub use mittag_leffler::{
    mittag_leffler, mittag_leffler_deriv, mittag_leffler_deriv_with, mittag_leffler_with,
    MLEvalPolicy,
};
pub use wright::{wright_mainardi, wright_mainardi_density, wright_series_limit};
