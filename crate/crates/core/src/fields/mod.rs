//! Radial initial data, solutions of the nonlocal evolution and the Riesz
//! potential of the datum.

pub mod datum;
pub mod potential;
pub mod solution;

pub use datum::{DatumFamily, DatumTransform, InitialDatum};
pub use potential::riesz_potential;
pub use solution::{
    field_mass, kernel_field, mild_solution_convolution, mild_solution_fourier,
    mild_solution_fourier_with, solution_grid, ConvolutionSolver, FourierSolver, MassCheck,
    Route, SolutionField,
};
