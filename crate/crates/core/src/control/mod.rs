//! Controlled backward equation
//!
//! ```text
//! dz + Δz dt = a₁z dt + b₁Z dt + h dt + χ_{E₁}χ_{G₀} f dt + Z dB,   z(T) = z_T,
//! ```
//!
//! on the Bernoulli tree, its duality with the forward equation
//! `dŷ - Δŷ dt = -a₁ŷ dt - b₁ŷ dB`, and Gramian-based control synthesis.

mod backward;
mod hum;

pub use backward::{BackwardMode, BackwardPair, DualityReport};
pub use hum::{conjugate_residual, ApproxControlReport, KrylovOutcome, NullControlReport, RegularizationPoint, SupportReport, REG_FLOOR};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{Ball, SpatialGrid};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, Coefficient, CoefficientField, TrajectoryEnsemble};
use crate::linalg::ImplicitDiffusion;
use crate::noise::{BernoulliTree, NoiseModel};
use crate::observability::MeasurableTimeSet;

/// Nodal values on every tree node of levels `0..=N`, level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeField {
    levels: Vec<Vec<f64>>,
    n: usize,
}

impl TreeField {
    pub fn zeros(tree: &BernoulliTree, n: usize) -> Self {
        Self { levels: (0..=tree.depth()).map(|k| vec![0.0; tree.nodes(k) * n]).collect(), n }
    }

    /// `f(level, node) -> nodal values`.
    pub fn from_fn(tree: &BernoulliTree, n: usize, mut f: impl FnMut(usize, usize) -> Vec<f64>) -> Self {
        let mut levels = Vec::with_capacity(tree.depth() + 1);
        for k in 0..=tree.depth() {
            let mut level = Vec::with_capacity(tree.nodes(k) * n);
            for p in 0..tree.nodes(k) {
                level.extend(f(k, p));
            }
            levels.push(level);
        }
        Self { levels, n }
    }

    /// Deterministic-in-space data `g(t_k, x, B(t_k))` on every node.
    pub fn from_brownian(tree: &BernoulliTree, grid: &SpatialGrid, g: impl Fn(f64, &[f64; 2], f64) -> f64) -> Self {
        let coords = grid.coords();
        let levels = (0..=tree.depth())
            .map(|k| {
                let t = tree.mesh().time(k);
                tree.brownian(k).into_iter().flat_map(|b| coords.iter().map(|x| g(t, x, b)).collect::<Vec<_>>()).collect()
            })
            .collect();
        Self { levels, n: grid.len() }
    }

    pub fn node(&self, level: usize, p: usize) -> &[f64] {
        &self.levels[level][p * self.n..(p + 1) * self.n]
    }

    pub fn level(&self, level: usize) -> &[f64] {
        &self.levels[level]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        &mut self.levels[level]
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { levels: self.levels.iter().map(|l| l.iter().map(|v| c * v).collect()).collect(), n: self.n }
    }
}

/// Observation region `G₀ × E₁` as a spatial mask and per-level time
/// weights: level `k` is active when `|E₁ ∩ (t_k, t_{k+1})| ≥ Δt/2`, with
/// weight equal to that overlap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlGeometry {
    pub g0: (f64, f64, f64),
    pub mask: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ControlGeometry {
    pub fn new(grid: &SpatialGrid, tree: &BernoulliTree, g0: &Ball, e1: &MeasurableTimeSet) -> Result<Self> {
        if !grid.contains_closed_ball(g0) {
            return Err(Error::Geometry("control region must lie inside the domain".into()));
        }
        let mask: Vec<f64> = grid.ball_mask(g0).into_iter().map(|m| if m { 1.0 } else { 0.0 }).collect();
        if mask.iter().all(|m| *m == 0.0) {
            return Err(Error::Geometry("control region contains no grid node".into()));
        }
        let mesh = tree.mesh();
        let dt = mesh.dt();
        let weights: Vec<f64> = (0..mesh.steps())
            .map(|k| {
                let o = e1.intersect(mesh.time(k), mesh.time(k + 1));
                if o >= 0.5 * dt {
                    o
                } else {
                    0.0
                }
            })
            .collect();
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::Geometry("control time set covers no time level".into()));
        }
        Ok(Self { g0: (g0.center[0], g0.center[1], g0.radius), mask, weights })
    }
}

/// Backward equation data on one tree and grid.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    grid: SpatialGrid,
    tree: BernoulliTree,
    noise: NoiseModel,
    coeffs: CoefficientField,
    geometry: ControlGeometry,
    op: ImplicitDiffusion,
    /// `a₁`, `b₁` on every node of levels `0..N`, or `None` when deterministic.
    a_cache: Vec<Option<Vec<f64>>>,
    b_cache: Vec<Option<Vec<f64>>>,
}

impl ControlProblem {
    pub fn new(grid: SpatialGrid, tree: BernoulliTree, coeffs: CoefficientField, geometry: ControlGeometry) -> Result<Self> {
        if geometry.mask.len() != grid.len() || geometry.weights.len() != tree.depth() {
            return Err(Error::Shape("control geometry does not match grid and tree".into()));
        }
        let mesh = *tree.mesh();
        let cache = |c: &Coefficient| (0..mesh.steps()).map(|k| c.is_deterministic().then(|| c.eval(&grid, &mesh, k, &[]))).collect();
        let a_cache = cache(&coeffs.a);
        let b_cache = cache(&coeffs.b);
        let op = ImplicitDiffusion::new(&grid, mesh.dt());
        let noise = NoiseModel::Tree(tree.clone());
        Ok(Self { grid, tree, noise, coeffs, geometry, op, a_cache, b_cache })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn tree(&self) -> &BernoulliTree {
        &self.tree
    }

    pub fn geometry(&self) -> &ControlGeometry {
        &self.geometry
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    fn a_at(&self, k: usize, p: usize) -> Vec<f64> {
        match &self.a_cache[k] {
            Some(v) => v.clone(),
            None => self.coeffs.a.eval(&self.grid, self.tree.mesh(), k, &self.noise.history(k, p)),
        }
    }

    fn b_at(&self, k: usize, p: usize) -> Vec<f64> {
        match &self.b_cache[k] {
            Some(v) => v.clone(),
            None => self.coeffs.b.eval(&self.grid, self.tree.mesh(), k, &self.noise.history(k, p)),
        }
    }

    /// `ŷ` from a deterministic initial datum, with coefficients `(-a₁, -b₁)`.
    pub fn dual_forward(&self, y0: &[f64]) -> Result<TrajectoryEnsemble> {
        solve_forward(y0, &self.coeffs.negated(), &self.noise, &self.grid)
    }

    /// `χ_{G₀} ŷ_k` on active levels, zero elsewhere.
    pub fn restrict(&self, ens: &TrajectoryEnsemble) -> TreeField {
        let n = self.grid.len();
        TreeField::from_fn(&self.tree, n, |k, p| {
            let active = k < self.tree.depth() && self.geometry.weights[k] > 0.0;
            let y = ens.state(k, p);
            (0..n).map(|i| if active { self.geometry.mask[i] * y[i] } else { 0.0 }).collect()
        })
    }

    /// `Σ_k c_k E‖χ_{G₀} ŷ_k‖²`.
    pub fn observation_mass(&self, ens: &TrajectoryEnsemble) -> f64 {
        let terms: Vec<f64> = (0..self.tree.depth())
            .filter(|&k| self.geometry.weights[k] > 0.0)
            .map(|k| {
                self.geometry.weights[k]
                    * ens.expect(k, |_, y| {
                        let v: Vec<f64> = y.iter().zip(&self.geometry.mask).map(|(a, m)| a * m).collect();
                        self.grid.norm_sq(&v)
                    })
            })
            .collect();
        crate::pairwise_sum(&terms)
    }

    /// `(E‖v‖²)^{1/2}` for leaf values.
    pub fn leaf_norm(&self, leaves: &[f64]) -> f64 {
        let n = self.grid.len();
        let per: Vec<f64> = leaves.chunks(n).map(|c| self.grid.norm_sq(c)).collect();
        (crate::pairwise_sum(&per) / per.len() as f64).sqrt()
    }

    /// Leaf-measurable field with independent uniform values on `(-1, 1)`.
    pub fn random_leaf_field(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.tree.leaves() * self.grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Adapted field with independent uniform values on every node.
    pub fn random_tree_field(&self, seed: u64) -> TreeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.grid.len();
        TreeField::from_fn(&self.tree, n, |_, _| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    pub fn random_deterministic(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Random combination of the first `modes` Dirichlet eigenmodes along the
    /// first axis, coefficients uniform on `(-1, 1)`.
    pub fn random_mode_target(&self, seed: u64, modes: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![0.0; self.grid.len()];
        for m in 1..=modes {
            let c: f64 = rng.random_range(-1.0..1.0);
            let idx: Vec<usize> = (0..self.grid.dim()).map(|a| if a == 0 { m } else { 1 }).collect();
            let (e, _) = self.grid.eigenmode(&idx);
            for (o, v) in out.iter_mut().zip(&e) {
                *o += c * v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests;
