//! Numerical laboratory for stochastic heat equations with multiplicative
//! Brownian noise,
//!
//! ```text
//! dy - Δy dt = a y dt + b y dB(t)   in G × (0, T),   y = 0 on ∂G,
//! ```
//!
//! on intervals and rectangles. The crate simulates the equation pathwise
//! (Monte Carlo or on an exact Bernoulli filtration), evaluates the weighted
//! frequency function `N = 2D/H`, checks quantitative unique continuation and
//! observability inequalities with their explicit constants, and synthesizes
//! null/approximate controls for the dual backward equation through a
//! Gramian (HUM) solve.

pub mod control;
pub mod domain;
pub mod error;
pub mod export;
pub mod forward;
pub mod frequency;
pub mod linalg;
pub mod noise;
pub mod observability;
pub mod report;
pub mod suite;
pub mod sweep;
pub mod ucp;

pub use error::{Error, Result};

/// Deterministic pairwise summation. The reduction tree depends only on the
/// slice length, so results do not depend on how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}
