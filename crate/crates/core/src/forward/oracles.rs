use rayon::prelude::*;

use super::coefficients::{Coefficient, CoefficientField};
use super::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::linalg::ImplicitDiffusion;
use crate::noise::NoiseModel;

/// Drift used for the transformed deterministic equation
/// `z_t - Δz = (a - κ b²) z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformDrift {
    /// `κ = 1/2`, the Itô correction of `e^{-bB}`.
    Ito,
    /// `κ = 1`, without the Itô correction.
    Unit,
}

impl TransformDrift {
    fn kappa(self) -> f64 {
        match self {
            TransformDrift::Ito => 0.5,
            TransformDrift::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpTransformReport {
    /// Per terminal state: `max_k ‖e^{bB_k} z_k - y_k‖_∞ / max_k ‖y_k‖_∞`.
    pub per_path: Vec<f64>,
    pub max_gap: f64,
    pub mean_gap: f64,
}

fn ancestor(noise: &NoiseModel, terminal: usize, steps: usize, level: usize) -> usize {
    match noise {
        NoiseModel::Tree(_) => terminal >> (steps - level),
        NoiseModel::Sampled(_) => terminal,
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |s, x| s.max(x.abs()))
}

/// Compares each path of `ens` (solved with constant `b`) against
/// `e^{bB(t)} z(t)` where `z` solves the random PDE with the same implicit
/// diffusion step.
pub fn exp_transform_oracle(ens: &TrajectoryEnsemble, coeffs: &CoefficientField, drift: TransformDrift) -> Result<ExpTransformReport> {
    let b = coeffs.b.as_constant().ok_or_else(|| Error::Precondition("exponential transform oracle needs b constant in x and t".into()))?;
    let grid = ens.grid();
    let noise = ens.noise();
    let mesh = *ens.mesh();
    let steps = mesh.steps();
    let dt = mesh.dt();
    let op = ImplicitDiffusion::new(grid, dt);
    let kappa = drift.kappa();
    let brownian: Vec<Vec<f64>> = (0..=steps).map(|k| noise.brownian(k)).collect();
    let a_det: Option<Vec<Vec<f64>>> = coeffs.a.is_deterministic().then(|| (0..steps).map(|k| coeffs.a.eval(grid, &mesh, k, &[])).collect());
    let solve_z = |history: &[f64]| -> Vec<Vec<f64>> {
        let mut z = vec![ens.state(0, 0).to_vec()];
        for k in 0..steps {
            let a = match &a_det {
                Some(t) => t[k].clone(),
                None => coeffs.a.eval(grid, &mesh, k, history),
            };
            let prev = &z[k];
            let mut rhs: Vec<f64> = (0..prev.len()).map(|i| prev[i] + dt * (a[i] - kappa * b * b) * prev[i]).collect();
            op.solve(&mut rhs);
            z.push(rhs);
        }
        z
    };
    let shared = a_det.as_ref().map(|_| solve_z(&[]));
    let per_path: Vec<f64> = (0..ens.states(steps))
        .into_par_iter()
        .map(|s| {
            let own;
            let z = match &shared {
                Some(z) => z,
                None => {
                    own = solve_z(&noise.history(steps, s));
                    &own
                }
            };
            let mut gap: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..=steps {
                let st = ancestor(noise, s, steps, k);
                let y = ens.state(k, st);
                let w = (b * brownian[k][st]).exp();
                gap = gap.max(y.iter().zip(&z[k]).map(|(yv, zv)| (w * zv - yv).abs()).fold(0.0, f64::max));
                scale = scale.max(sup(y));
            }
            if scale > 0.0 {
                gap / scale
            } else {
                gap
            }
        })
        .collect();
    let max_gap = per_path.iter().cloned().fold(0.0, f64::max);
    let mean_gap = crate::pairwise_sum(&per_path) / per_path.len() as f64;
    Ok(ExpTransformReport { per_path, max_gap, mean_gap })
}

/// `E‖y(t_k)‖²_{L²(G)}` for every time node.
pub fn energy_trace(ens: &TrajectoryEnsemble) -> Vec<f64> {
    let grid = ens.grid();
    (0..=ens.steps()).map(|k| ens.expect(k, |_, y| grid.norm_sq(y))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardUniquenessReport {
    /// Every noise factor `1 + Δt a + b ΔB` has modulus at least `1e-12`.
    pub invertible: bool,
    pub min_factor: f64,
    /// `max_s ‖y¹_N - y²_N‖_∞`.
    pub terminal_diff: f64,
    /// `max_{k,s} ‖y¹_k - y²_k‖_∞`.
    pub max_diff: f64,
    /// Largest mismatch when the difference is reconstructed backward from
    /// each child, relative to `max_diff`.
    pub reconstruction_error: f64,
    /// `false` only if a vanishing terminal difference coexists with a
    /// nonzero earlier difference on invertible steps.
    pub consistent: bool,
}

/// Backward-uniqueness probe for two trajectories on the same noise.
pub fn backward_uniqueness_probe(y1: &TrajectoryEnsemble, y2: &TrajectoryEnsemble, coeffs: &CoefficientField) -> Result<BackwardUniquenessReport> {
    if y1.grid() != y2.grid() || y1.mesh() != y2.mesh() || y1.noise().label() != y2.noise().label() || y1.states(y1.steps()) != y2.states(y2.steps()) {
        return Err(Error::Shape("trajectories live on different grids or noise".into()));
    }
    let grid = y1.grid();
    let noise = y1.noise();
    let mesh = *y1.mesh();
    let steps = mesh.steps();
    let dt = mesh.dt();
    let op = ImplicitDiffusion::new(grid, dt);
    let n = grid.len();
    let diff = |k: usize, s: usize| -> Vec<f64> { y1.state(k, s).iter().zip(y2.state(k, s)).map(|(a, b)| a - b).collect() };
    let mut min_factor = f64::INFINITY;
    let mut max_diff: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for k in 0..=steps {
        for s in 0..y1.states(k) {
            max_diff = max_diff.max(sup(&diff(k, s)));
        }
    }
    for k in 0..steps {
        for s in 0..y1.states(k + 1) {
            let p = noise.parent(s);
            let hist = noise.history(k, p);
            let a = coeff_values(&coeffs.a, grid, &mesh, k, &hist);
            let b = coeff_values(&coeffs.b, grid, &mesh, k, &hist);
            let db = noise.increment_into(k + 1, s);
            let d_next = diff(k + 1, s);
            let mut lifted = vec![0.0; n];
            op.apply(&d_next, &mut lifted);
            let d_prev = diff(k, p);
            for i in 0..n {
                let f = 1.0 + dt * a[i] + b[i] * db;
                min_factor = min_factor.min(f.abs());
                if f.abs() >= 1e-12 {
                    recon = recon.max((lifted[i] / f - d_prev[i]).abs());
                }
            }
        }
    }
    let terminal_diff = (0..y1.states(steps)).map(|s| sup(&diff(steps, s))).fold(0.0, f64::max);
    let invertible = min_factor >= 1e-12;
    let consistent = !invertible || terminal_diff > 0.0 || max_diff == 0.0;
    Ok(BackwardUniquenessReport {
        invertible,
        min_factor,
        terminal_diff,
        max_diff,
        reconstruction_error: if max_diff > 0.0 { recon / max_diff } else { recon },
        consistent,
    })
}

fn coeff_values(c: &Coefficient, grid: &crate::domain::SpatialGrid, mesh: &crate::noise::TimeMesh, k: usize, hist: &[f64]) -> Vec<f64> {
    c.eval(grid, mesh, k, hist)
}
