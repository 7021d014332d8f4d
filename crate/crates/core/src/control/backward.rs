use rayon::prelude::*;
use serde::Serialize;

use super::{ControlProblem, TreeField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BackwardMode {
    /// Exact discrete adjoint of the forward step:
    /// `z_k = E_k[(I - Δt a₁ - b₁ΔB_k)(I - ΔtΔ_h)⁻¹ z_{k+1}] - Δt h_k - c_k χ f_k`.
    AdjointExact,
    /// Martingale representation: `Z_k = E_k[z_{k+1}ΔB_k]/Δt` and
    /// `(I - ΔtΔ_h + Δt a₁) z_k = E_k z_{k+1} - Δt b₁Z_k - Δt h_k - c_k χ f_k`.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardPair {
    pub z: TreeField,
    /// `Z_k` on levels `0..N` (level `N` is zero).
    pub big_z: TreeField,
    pub mode: BackwardMode,
}

impl BackwardPair {
    pub fn z0(&self) -> &[f64] {
        self.z.node(0, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    /// `E⟨ŷ(T), z(T)⟩ - ⟨ŷ₀, z(0)⟩`.
    pub lhs: f64,
    /// `Σ Δt E⟨ŷ_k, h_k⟩ + Σ c_k E⟨ŷ_k, χ f_k⟩`.
    pub rhs: f64,
    pub residual: f64,
    /// Residual over the sum of absolute values of all terms.
    pub normalized: f64,
    pub mode: BackwardMode,
}

impl ControlProblem {
    fn check_field(&self, f: Option<&TreeField>, what: &str) -> Result<()> {
        if let Some(f) = f {
            if f.depth() != self.tree.depth() || f.level(0).len() != self.grid.len() {
                return Err(Error::Shape(format!("{what} does not match the tree and grid")));
            }
        }
        Ok(())
    }

    /// Backward induction from the leaf datum `z_t` (leaf-major, `leaves × n`).
    pub fn solve_backward(&self, z_t: &[f64], h: Option<&TreeField>, f: Option<&TreeField>, mode: BackwardMode) -> Result<BackwardPair> {
        let n = self.grid.len();
        let depth = self.tree.depth();
        if z_t.len() != self.tree.leaves() * n {
            return Err(Error::Shape(format!("terminal datum has {} values, expected {}", z_t.len(), self.tree.leaves() * n)));
        }
        self.check_field(h, "source h")?;
        self.check_field(f, "control f")?;
        let dt = self.tree.mesh().dt();
        let sq = dt.sqrt();
        let mut z = TreeField::zeros(&self.tree, n);
        let mut big_z = TreeField::zeros(&self.tree, n);
        z.level_mut(depth).copy_from_slice(z_t);
        for k in (0..depth).rev() {
            let next = z.level(k + 1);
            let ck = self.geometry.weights[k];
            let results: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..self.tree.nodes(k))
                .into_par_iter()
                .map(|p| {
                    let up = &next[2 * p * n..(2 * p + 1) * n];
                    let down = &next[(2 * p + 1) * n..(2 * p + 2) * n];
                    let zz: Vec<f64> = up.iter().zip(down).map(|(u, d)| (u - d) / (2.0 * sq)).collect();
                    let a = self.a_at(k, p);
                    let b = self.b_at(k, p);
                    let mut out = match mode {
                        BackwardMode::AdjointExact => {
                            let mut acc = vec![0.0; n];
                            for (child, vals) in [(2 * p, up), (2 * p + 1, down)] {
                                let db = self.tree.step_increment(child);
                                let mut w = vals.to_vec();
                                self.op.solve(&mut w);
                                for i in 0..n {
                                    acc[i] += 0.5 * (1.0 - dt * a[i] - b[i] * db) * w[i];
                                }
                            }
                            acc
                        }
                        BackwardMode::Independent => (0..n).map(|i| 0.5 * (up[i] + down[i]) - dt * b[i] * zz[i]).collect(),
                    };
                    let hp = h.map(|h| h.node(k, p));
                    let fp = f.map(|f| f.node(k, p));
                    for i in 0..n {
                        if let Some(hp) = hp {
                            out[i] -= dt * hp[i];
                        }
                        if let Some(fp) = fp {
                            out[i] -= ck * self.geometry.mask[i] * fp[i];
                        }
                    }
                    if mode == BackwardMode::Independent {
                        let shift: Vec<f64> = a.iter().map(|v| dt * v).collect();
                        self.op.solve_shifted(&shift, &mut out)?;
                    }
                    Ok((out, zz))
                })
                .collect();
            let mut zl = Vec::with_capacity(self.tree.nodes(k) * n);
            let mut bl = Vec::with_capacity(self.tree.nodes(k) * n);
            for r in results {
                let (a, b) = r?;
                zl.extend(a);
                bl.extend(b);
            }
            z.level_mut(k).copy_from_slice(&zl);
            big_z.level_mut(k).copy_from_slice(&bl);
        }
        Ok(BackwardPair { z, big_z, mode })
    }

    /// Evaluates both sides of the duality identity for the dual trajectory
    /// started at `y0`.
    pub fn duality_check(&self, y0: &[f64], z_t: &[f64], h: Option<&TreeField>, f: Option<&TreeField>, mode: BackwardMode) -> Result<DualityReport> {
        let ens = self.dual_forward(y0)?;
        let pair = self.solve_backward(z_t, h, f, mode)?;
        let depth = self.tree.depth();
        let dt = self.tree.mesh().dt();
        let pair_at = |k: usize, field: &TreeField| ens.expect(k, |s, y| self.grid.inner(y, field.node(k, s)));
        let terminal = pair_at(depth, &pair.z);
        let initial = self.grid.inner(y0, pair.z0());
        let mut terms = Vec::new();
        for k in 0..depth {
            if let Some(h) = h {
                terms.push(dt * pair_at(k, h));
            }
            let ck = self.geometry.weights[k];
            if let (Some(f), true) = (f, ck > 0.0) {
                let v = ens.expect(k, |s, y| {
                    let fp = f.node(k, s);
                    let prod: Vec<f64> = (0..y.len()).map(|i| y[i] * self.geometry.mask[i] * fp[i]).collect();
                    self.grid.integrate(&prod)
                });
                terms.push(ck * v);
            }
        }
        let lhs = terminal - initial;
        let rhs = crate::pairwise_sum(&terms);
        let scale = terminal.abs() + initial.abs() + terms.iter().map(|t| t.abs()).sum::<f64>();
        let residual = (lhs - rhs).abs();
        Ok(DualityReport { lhs, rhs, residual, normalized: if scale > 0.0 { residual / scale } else { 0.0 }, mode })
    }
}
