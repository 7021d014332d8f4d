//! Brownian increments: seeded Monte Carlo ensembles and an exact Bernoulli
//! tree filtration.
//!
//! Both are exposed through [`NoiseModel`], which presents the noise as a
//! sequence of levels `k = 0..=N`. Level `k` holds a list of states (tree
//! nodes or paths), each with a probability weight, a parent at level `k - 1`
//! and the increment that led to it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Default depth cap for Bernoulli trees.
pub const DEFAULT_TREE_CAP: usize = 16;

/// Uniform time mesh on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMesh {
    horizon: f64,
    steps: usize,
}

impl TimeMesh {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config(format!("time horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Config("time mesh needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Mesh with `factor` times fewer steps.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::Shape(format!("cannot coarsen {} steps by {factor}", self.steps)));
        }
        Self::new(self.horizon, self.steps / factor)
    }
}

/// Standard normal pair from one ChaCha block position keyed by
/// `(seed, path, step)`.
pub fn gaussian_increment(seed: u64, path: u64, step: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng.set_word_pos(4 * step as u128);
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Monte Carlo increments `ΔB_{k,ω}`, path-major.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    mesh: TimeMesh,
    paths: usize,
    seed: u64,
    increments: Vec<f64>,
}

/// Draws `paths` Gaussian paths; each increment is a pure function of
/// `(seed, path, step)`.
pub fn sample_ensemble(mesh: TimeMesh, paths: usize, seed: u64) -> Result<PathEnsemble> {
    if paths == 0 {
        return Err(Error::Config("path count must be at least 1".into()));
    }
    let sd = mesh.dt().sqrt();
    let n = mesh.steps();
    let mut increments = vec![0.0; paths * n];
    for (w, row) in increments.chunks_mut(n).enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = sd * gaussian_increment(seed, w as u64, k as u64);
        }
    }
    Ok(PathEnsemble { mesh, paths, seed, increments })
}

impl PathEnsemble {
    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increment(&self, path: usize, step: usize) -> f64 {
        self.increments[path * self.mesh.steps() + step]
    }

    pub fn path(&self, path: usize) -> &[f64] {
        let n = self.mesh.steps();
        &self.increments[path * n..(path + 1) * n]
    }

    /// Brownian value `B(t_k)` along a path.
    pub fn brownian(&self, path: usize, k: usize) -> f64 {
        self.path(path)[..k].iter().sum()
    }

    /// Same Brownian paths on a mesh `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let mesh = self.mesh.coarsen(factor)?;
        let increments = self.increments.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(Self { mesh, paths: self.paths, seed: self.seed, increments })
    }
}

/// Complete binary tree of `±√Δt` increments. At level `k` node `i` has
/// children `2i` (up move) and `2i + 1` (down move).
#[derive(Debug, Clone)]
pub struct BernoulliTree {
    mesh: TimeMesh,
}

pub fn build_tree(mesh: TimeMesh, cap: usize) -> Result<BernoulliTree> {
    if mesh.steps() > cap {
        return Err(Error::Resource(format!("tree depth {} exceeds cap {cap}", mesh.steps())));
    }
    Ok(BernoulliTree { mesh })
}

impl BernoulliTree {
    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn depth(&self) -> usize {
        self.mesh.steps()
    }

    pub fn nodes(&self, level: usize) -> usize {
        1 << level
    }

    pub fn leaves(&self) -> usize {
        self.nodes(self.depth())
    }

    /// Increment leading into node `i` of level `k + 1`.
    pub fn step_increment(&self, child: usize) -> f64 {
        let s = self.mesh.dt().sqrt();
        if child % 2 == 0 {
            s
        } else {
            -s
        }
    }

    /// Increment `ΔB_k` along the path through `node` at `level` (`k < level`).
    pub fn increment_on(&self, level: usize, node: usize, k: usize) -> f64 {
        self.step_increment(node >> (level - k - 1))
    }

    /// Brownian values `B(t_k)` for every node of level `k`.
    pub fn brownian(&self, level: usize) -> Vec<f64> {
        let s = self.mesh.dt().sqrt();
        (0..self.nodes(level)).map(|i| s * (level as f64 - 2.0 * i.count_ones() as f64)).collect()
    }

    /// Averages values given at `from_level` down to `level`.
    pub fn conditional_expectation(&self, values: &[f64], from_level: usize, level: usize) -> Result<Vec<f64>> {
        if from_level > self.depth() || level > from_level {
            return Err(Error::Shape(format!("cannot condition level {from_level} on level {level}")));
        }
        if values.len() != self.nodes(from_level) {
            return Err(Error::Shape(format!("expected {} values at level {from_level}, got {}", self.nodes(from_level), values.len())));
        }
        let mut cur = values.to_vec();
        for _ in level..from_level {
            cur = cur.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        }
        Ok(cur)
    }

    /// Tree expectation of leaf values.
    pub fn expectation(&self, leaf_values: &[f64]) -> Result<f64> {
        Ok(self.conditional_expectation(leaf_values, self.depth(), 0)?[0])
    }
}

/// Noise used by a simulation.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    Tree(BernoulliTree),
    Sampled(PathEnsemble),
}

impl NoiseModel {
    pub fn mesh(&self) -> &TimeMesh {
        match self {
            NoiseModel::Tree(t) => t.mesh(),
            NoiseModel::Sampled(p) => p.mesh(),
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self, NoiseModel::Tree(_))
    }

    pub fn states(&self, level: usize) -> usize {
        match self {
            NoiseModel::Tree(t) => t.nodes(level),
            NoiseModel::Sampled(p) => p.paths(),
        }
    }

    /// Probability weight of one state at `level`.
    pub fn weight(&self, level: usize) -> f64 {
        1.0 / self.states(level) as f64
    }

    /// Parent at `level - 1` of `state` at `level`.
    pub fn parent(&self, state: usize) -> usize {
        match self {
            NoiseModel::Tree(_) => state >> 1,
            NoiseModel::Sampled(_) => state,
        }
    }

    /// Increment `ΔB_{level-1}` that led into `state` at `level`.
    pub fn increment_into(&self, level: usize, state: usize) -> f64 {
        match self {
            NoiseModel::Tree(t) => t.step_increment(state),
            NoiseModel::Sampled(p) => p.increment(state, level - 1),
        }
    }

    /// Past increments `ΔB_0..ΔB_{level-1}` of `state`.
    pub fn history(&self, level: usize, state: usize) -> Vec<f64> {
        match self {
            NoiseModel::Tree(t) => (0..level).map(|k| t.increment_on(level, state, k)).collect(),
            NoiseModel::Sampled(p) => p.path(state)[..level].to_vec(),
        }
    }

    pub fn brownian(&self, level: usize) -> Vec<f64> {
        match self {
            NoiseModel::Tree(t) => t.brownian(level),
            NoiseModel::Sampled(p) => (0..p.paths()).map(|w| p.brownian(w, level)).collect(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseModel::Tree(_) => "tree",
            NoiseModel::Sampled(_) => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// One-sample Kolmogorov–Smirnov test against the standard normal at the 1%
/// level (asymptotic critical value `1.628/√M`).
pub fn ks_normal_test(samples: &[f64]) -> KsReport {
    let normal = Normal::standard();
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let statistic = s
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = normal.cdf(*x);
            (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.628 / m.sqrt();
    KsReport { statistic, critical, pass: statistic < critical }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_single_path() {
        let mesh = TimeMesh::new(0.5, 1).unwrap();
        let e = sample_ensemble(mesh, 1, 7).unwrap();
        assert_eq!(e.brownian(0, 1), e.increment(0, 0));
    }

    #[test]
    fn sampled_variance_band() {
        let mesh = TimeMesh::new(1.0, 100).unwrap();
        let e = sample_ensemble(mesh, 100, 11).unwrap();
        let n = e.increments.len() as f64;
        let mean = e.increments.iter().sum::<f64>() / n;
        let var = e.increments.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.0094..=0.0106).contains(&var), "variance {var}");
        assert!(mean.abs() < 5.0 * (0.01 / n).sqrt());
    }

    #[test]
    fn same_seed_same_bits() {
        let mesh = TimeMesh::new(1.0, 16).unwrap();
        let a = sample_ensemble(mesh, 8, 3).unwrap();
        let b = sample_ensemble(mesh, 8, 3).unwrap();
        assert!(a.increments.iter().zip(&b.increments).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = sample_ensemble(mesh, 8, 4).unwrap();
        assert_ne!(a.increments, c.increments);
        assert_eq!(mesh.dt().sqrt() * gaussian_increment(3, 5, 9), a.increment(5, 9));
    }

    #[test]
    fn ks_accepts_normals_rejects_uniforms() {
        let z: Vec<f64> = (0..20_000).map(|i| gaussian_increment(99, i, 0)).collect();
        assert!(ks_normal_test(&z).pass);
        let u: Vec<f64> = (0..20_000).map(|i| i as f64 / 20_000.0).collect();
        assert!(!ks_normal_test(&u).pass);
    }

    #[test]
    fn coarsening_sums_increments() {
        let mesh = TimeMesh::new(1.0, 8).unwrap();
        let e = sample_ensemble(mesh, 3, 1).unwrap();
        let c = e.coarsen(4).unwrap();
        assert_eq!(c.mesh().steps(), 2);
        assert!((c.brownian(2, 2) - e.brownian(2, 8)).abs() < 1e-15);
        assert!(e.coarsen(3).is_err());
    }

    #[test]
    fn small_trees() {
        let t1 = build_tree(TimeMesh::new(0.25, 1).unwrap(), 16).unwrap();
        assert_eq!(t1.leaves(), 2);
        assert_eq!(t1.brownian(1), vec![0.5, -0.5]);
        let t3 = build_tree(TimeMesh::new(1.0, 3).unwrap(), 16).unwrap();
        assert_eq!(t3.leaves(), 8);
        assert_eq!(t3.expectation(&[1.0; 8]).unwrap(), 1.0);
        assert!(build_tree(TimeMesh::new(1.0, 17).unwrap(), 16).is_err());
    }

    #[test]
    fn exact_moments() {
        let mesh = TimeMesh::new(0.5, 10).unwrap();
        let t = build_tree(mesh, 16).unwrap();
        let b = t.brownian(10);
        let sq: Vec<f64> = b.iter().map(|v| v * v).collect();
        assert!((t.expectation(&sq).unwrap() - 0.5).abs() < 1e-14);
        for j in 0..10 {
            for k in 0..10 {
                let prod: Vec<f64> = (0..t.leaves()).map(|i| t.increment_on(10, i, j) * t.increment_on(10, i, k)).collect();
                let e = t.expectation(&prod).unwrap();
                let want = if j == k { mesh.dt() } else { 0.0 };
                assert!((e - want).abs() < 1e-15);
            }
            let inc: Vec<f64> = (0..t.leaves()).map(|i| t.increment_on(10, i, j)).collect();
            assert_eq!(t.expectation(&inc).unwrap(), 0.0);
        }
    }

    #[test]
    fn martingale_increment_conditioned_one_level_up() {
        let t = build_tree(TimeMesh::new(1.0, 4).unwrap(), 16).unwrap();
        let inc: Vec<f64> = (0..16).map(|i| t.increment_on(4, i, 3)).collect();
        assert!(t.conditional_expectation(&inc, 4, 3).unwrap().iter().all(|v| *v == 0.0));
        assert!(t.conditional_expectation(&inc[..8], 4, 3).is_err());
    }
}
