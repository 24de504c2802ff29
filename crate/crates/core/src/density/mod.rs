//! Transition densities on grids, and certified pointwise bounds.

mod chaining;
mod concentration;
mod fourier;
mod grid;
mod split;

pub use chaining::{chain_length_gaussian, chain_length_xlog, chaining_lower, default_rho, ChainingBound};
pub use concentration::{concentration_upper, ConcentrationBound, ConcentrationEngine};
pub use fourier::{auto_grid, auto_grid_with, density_fourier, CUTOFF_LEVEL};
pub use grid::{DensityGrid, GridSpec};
pub use split::{convolve, density_split, poisson_tail, required_order, semigroup_residual, SERIES_TOL};
