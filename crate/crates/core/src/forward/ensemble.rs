use rayon::prelude::*;

use super::coefficients::{Coefficient, CoefficientField};
use crate::domain::SpatialGrid;
use crate::error::{Error, Result};
use crate::linalg::ImplicitDiffusion;
use crate::noise::{NoiseModel, TimeMesh};
use crate::pairwise_sum;

/// Pathwise solution `y_{k,s}(x)` on every level `k` and noise state `s`.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    grid: SpatialGrid,
    noise: NoiseModel,
    levels: Vec<Vec<f64>>,
    valid: Vec<Vec<bool>>,
    scheme: &'static str,
}

impl TrajectoryEnsemble {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn mesh(&self) -> &TimeMesh {
        self.noise.mesh()
    }

    pub fn scheme(&self) -> &'static str {
        self.scheme
    }

    pub fn steps(&self) -> usize {
        self.mesh().steps()
    }

    pub fn states(&self, level: usize) -> usize {
        self.noise.states(level)
    }

    pub fn state(&self, level: usize, s: usize) -> &[f64] {
        let n = self.grid.len();
        &self.levels[level][s * n..(s + 1) * n]
    }

    pub fn level(&self, level: usize) -> &[f64] {
        &self.levels[level]
    }

    pub fn is_valid(&self, level: usize, s: usize) -> bool {
        self.valid[level][s]
    }

    /// Number of states at the terminal level excluded by the blow-up guard.
    pub fn blown_up(&self) -> usize {
        self.valid[self.steps()].iter().filter(|v| !**v).count()
    }

    /// Expectation over valid states of a per-state scalar. Reduction order is
    /// fixed, so the result does not depend on the thread count.
    pub fn expect<F>(&self, level: usize, f: F) -> f64
    where
        F: Fn(usize, &[f64]) -> f64 + Sync,
    {
        let vals: Vec<f64> = (0..self.states(level)).into_par_iter().map(|s| if self.valid[level][s] { f(s, self.state(level, s)) } else { 0.0 }).collect();
        let count = self.valid[level].iter().filter(|v| **v).count();
        if count == 0 {
            return 0.0;
        }
        pairwise_sum(&vals) / count as f64
    }

    /// Componentwise expectation of a per-state vector of length `m`.
    pub fn expect_many<F>(&self, level: usize, m: usize, f: F) -> Vec<f64>
    where
        F: Fn(usize, &[f64]) -> Vec<f64> + Sync,
    {
        let rows: Vec<Vec<f64>> =
            (0..self.states(level)).into_par_iter().map(|s| if self.valid[level][s] { f(s, self.state(level, s)) } else { vec![0.0; m] }).collect();
        let count = self.valid[level].iter().filter(|v| **v).count();
        (0..m)
            .map(|j| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                if count == 0 {
                    0.0
                } else {
                    pairwise_sum(&col) / count as f64
                }
            })
            .collect()
    }

    /// Nodal expectation `E[y(t_k)]`.
    pub fn mean_field(&self, level: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.expect(level, |_, y| y[i])).collect()
    }

    /// Ensemble on the same noise scaled by `c` (every field multiplied).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            for v in l.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Builds an ensemble from precomputed level data.
    pub fn from_levels(grid: SpatialGrid, noise: NoiseModel, levels: Vec<Vec<f64>>, scheme: &'static str) -> Result<Self> {
        if levels.len() != noise.mesh().steps() + 1 {
            return Err(Error::Shape(format!("expected {} levels, got {}", noise.mesh().steps() + 1, levels.len())));
        }
        for (k, l) in levels.iter().enumerate() {
            if l.len() != noise.states(k) * grid.len() {
                return Err(Error::Shape(format!("level {k} has {} values", l.len())));
            }
        }
        let valid = (0..levels.len()).map(|k| vec![true; noise.states(k)]).collect();
        Ok(Self { grid, noise, levels, valid, scheme })
    }
}

/// One diffusion-implicit Euler–Maruyama step
/// `(I - Δt Δ_h) y_{k+1} = y_k + Δt a y_k + b y_k ΔB_k`.
pub fn step_forward(y: &[f64], a: &[f64], b: &[f64], db: f64, op: &ImplicitDiffusion) -> Vec<f64> {
    let dt = op.dt();
    let mut rhs: Vec<f64> = (0..y.len()).map(|i| y[i] + dt * a[i] * y[i] + b[i] * y[i] * db).collect();
    op.solve(&mut rhs);
    rhs
}

fn check_initial(y0: &[f64], grid: &SpatialGrid) -> Result<()> {
    if y0.len() != grid.len() {
        return Err(Error::Shape(format!("initial datum has {} values, grid has {}", y0.len(), grid.len())));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("initial datum is not finite".into()));
    }
    Ok(())
}

/// Advances every state level by level. `step(k, history, y, ΔB)` returns
/// `y_{k+1}` or `None` when the path must be dropped.
fn evolve<S>(y0: &[f64], noise: &NoiseModel, grid: &SpatialGrid, scheme: &'static str, step: S) -> Result<TrajectoryEnsemble>
where
    S: Fn(usize, usize, &[f64], f64) -> Option<Vec<f64>> + Sync,
{
    check_initial(y0, grid)?;
    let n = grid.len();
    let steps = noise.mesh().steps();
    let mut levels = Vec::with_capacity(steps + 1);
    let mut valid = Vec::with_capacity(steps + 1);
    levels.push(y0.repeat(noise.states(0)));
    valid.push(vec![true; noise.states(0)]);
    for k in 0..steps {
        let states = noise.states(k + 1);
        let prev = &levels[k];
        let prev_valid: &Vec<bool> = &valid[k];
        let results: Vec<Option<Vec<f64>>> = (0..states)
            .into_par_iter()
            .map(|s| {
                let p = noise.parent(s);
                if !prev_valid[p] {
                    return None;
                }
                step(k, s, &prev[p * n..(p + 1) * n], noise.increment_into(k + 1, s))
            })
            .collect();
        let mut next = vec![0.0; states * n];
        let mut ok = vec![true; states];
        for (s, r) in results.into_iter().enumerate() {
            match r {
                Some(v) => next[s * n..(s + 1) * n].copy_from_slice(&v),
                None => ok[s] = false,
            }
        }
        levels.push(next);
        valid.push(ok);
    }
    Ok(TrajectoryEnsemble { grid: grid.clone(), noise: noise.clone(), levels, valid, scheme })
}

/// Coefficient values at step `k` for the state `s` of level `k + 1`'s parent.
fn coeff_at(c: &Coefficient, cache: &[Option<Vec<f64>>], grid: &SpatialGrid, noise: &NoiseModel, k: usize, s: usize) -> Vec<f64> {
    match &cache[k] {
        Some(v) => v.clone(),
        None => c.eval(grid, noise.mesh(), k, &noise.history(k, noise.parent(s))),
    }
}

fn deterministic_cache(c: &Coefficient, grid: &SpatialGrid, mesh: &TimeMesh) -> Vec<Option<Vec<f64>>> {
    (0..mesh.steps()).map(|k| c.is_deterministic().then(|| c.eval(grid, mesh, k, &[]))).collect()
}

/// Solves the linear forward equation on every noise state.
pub fn solve_forward(y0: &[f64], coeffs: &CoefficientField, noise: &NoiseModel, grid: &SpatialGrid) -> Result<TrajectoryEnsemble> {
    let mesh = *noise.mesh();
    let op = ImplicitDiffusion::new(grid, mesh.dt());
    let a_cache = deterministic_cache(&coeffs.a, grid, &mesh);
    let b_cache = deterministic_cache(&coeffs.b, grid, &mesh);
    evolve(y0, noise, grid, "implicit-euler-maruyama", |k, s, y, db| {
        let a = coeff_at(&coeffs.a, &a_cache, grid, noise, k, s);
        let b = coeff_at(&coeffs.b, &b_cache, grid, noise, k, s);
        Some(step_forward(y, &a, &b, db, &op))
    })
}

/// Solves `dw - Δw dt = w^m dB` with the same scheme. Paths whose sup norm
/// exceeds `cap` (or turns non-finite) are dropped together with their
/// descendants.
pub fn solve_semilinear(w0: &[f64], m: u32, noise: &NoiseModel, grid: &SpatialGrid, cap: f64) -> Result<TrajectoryEnsemble> {
    if m == 0 {
        return Err(Error::Config("semilinear exponent must be at least 1".into()));
    }
    let op = ImplicitDiffusion::new(grid, noise.mesh().dt());
    evolve(w0, noise, grid, "implicit-euler-maruyama-semilinear", |_, _, w, db| {
        let mut rhs: Vec<f64> = w.iter().map(|v| v + v.powi(m as i32) * db).collect();
        op.solve(&mut rhs);
        let sup = rhs.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        (sup.is_finite() && sup <= cap).then_some(rhs)
    })
}
