//! Pathwise solver for `dy - Δy dt = a y dt + b y dB` with Dirichlet
//! boundary, the semilinear variant `dw - Δw dt = w^m dB`, and oracles built
//! on the exponential transform and on backward reconstruction.

mod coefficients;
mod ensemble;
mod initial;
mod oracles;

pub use coefficients::{AdaptedFn, Coefficient, CoefficientField, CoefficientNorms, SpaceTimeFn};
pub use ensemble::{solve_forward, solve_semilinear, step_forward, TrajectoryEnsemble};
pub use initial::{enveloped_bumps, sine_envelope, Bump};
pub use oracles::{backward_uniqueness_probe, energy_trace, exp_transform_oracle, BackwardUniquenessReport, ExpTransformReport, TransformDrift};
