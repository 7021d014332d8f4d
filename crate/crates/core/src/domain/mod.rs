//! Discretized convex domains, balls and ball chains, smooth cutoffs and the
//! backward Gaussian weight kernel.

mod chain;
mod cutoff;
mod grid;
mod kernel;

pub use chain::{ball_chain, BallChain};
pub use cutoff::{build_cutoff, quintic_step, CutoffFunction};
pub use grid::{build_grid, Ball, BoundaryNode, Point, SpatialGrid};
pub use kernel::{gaussian_factor, kernel_caloric_residual, CaloricResidual, HeatKernelWeight};
