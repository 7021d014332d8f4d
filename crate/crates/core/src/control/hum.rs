use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::backward::BackwardMode;
use super::{ControlProblem, TreeField};
use crate::error::{Error, Result};

/// Smallest regularization weight tried by the approximate-control sweep.
pub const REG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Residual norms, starting with the initial one.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Conjugate residual iteration for an operator that is self-adjoint in
/// `inner`. Unlike CG the residual norm is nonincreasing, which the
/// synthesis reports rely on.
pub fn conjugate_residual(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    inner: impl Fn(&[f64], &[f64]) -> f64,
    tol_abs: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut residuals = vec![inner(&r, &r).max(0.0).sqrt()];
    if residuals[0] <= tol_abs {
        return Ok(KrylovOutcome { x, iterations: 0, residuals, converged: true });
    }
    let mut ar = apply(&r)?;
    let mut p = r.clone();
    let mut ap = ar.clone();
    let mut rar = inner(&r, &ar);
    for it in 1..=max_iter {
        let apap = inner(&ap, &ap);
        if apap <= 0.0 || !apap.is_finite() || rar <= 0.0 {
            return Ok(KrylovOutcome { x, iterations: it - 1, residuals, converged: false });
        }
        let alpha = rar / apap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = inner(&r, &r).max(0.0).sqrt();
        residuals.push(rn);
        if rn <= tol_abs {
            return Ok(KrylovOutcome { x, iterations: it, residuals, converged: true });
        }
        ar = apply(&r)?;
        let rar_new = inner(&r, &ar);
        let beta = rar_new / rar;
        rar = rar_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
            ap[i] = ar[i] + beta * ap[i];
        }
    }
    Ok(KrylovOutcome { x, iterations: max_iter, residuals, converged: false })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullControlReport {
    pub cg_iters: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// `(E‖z_T‖²)^{1/2}`.
    pub zt_norm: f64,
    /// Re-solved `‖z(0)‖` with the synthesized control.
    pub z0_norm: f64,
    pub relative: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizationPoint {
    pub eps_reg: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxControlReport {
    pub target_norm: f64,
    pub eps_target: f64,
    /// Log-spaced sweep from 1 down to [`REG_FLOOR`].
    pub curve: Vec<RegularizationPoint>,
    pub monotone: bool,
    /// Largest `ε_reg` found by bisection whose verified residual meets the target.
    pub chosen: RegularizationPoint,
    pub achieved: bool,
    /// Best residual over all tried weights.
    pub best_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportReport {
    pub eta_norm_sq: f64,
    /// `Σ c_k E‖χ_{G₀} ŷ_k‖²`.
    pub mass: f64,
    pub ratio: f64,
    /// Nonzero `η` with numerically vanishing observation.
    pub red_flag: bool,
    pub below_lambda_min: bool,
}

/// Spectrum of the dense Gramian.
#[derive(Debug, Clone)]
struct Spectrum {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl ControlProblem {
    fn inner(&self) -> impl Fn(&[f64], &[f64]) -> f64 + '_ {
        move |u, v| self.grid.inner(u, v)
    }

    fn norm(&self, v: &[f64]) -> f64 {
        self.grid.norm_sq(v).max(0.0).sqrt()
    }

    /// `Λu = -z(0)` for the backward solve with `z_T = 0`, `h = 0` and
    /// control `χ_{G₀×E₁} ŷ_u`.
    pub fn gramian_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let ens = self.dual_forward(u)?;
        let f = self.restrict(&ens);
        let zero = vec![0.0; self.tree.leaves() * self.grid.len()];
        let pair = self.solve_backward(&zero, None, Some(&f), BackwardMode::AdjointExact)?;
        Ok(pair.z0().iter().map(|v| -v).collect())
    }

    /// Dense Gramian in nodal coordinates, one application per column.
    pub fn gramian_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.grid.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.gramian_apply(&e)?;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }

    fn spectrum(&self) -> Result<Spectrum> {
        let m = self.gramian_matrix()?;
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("Gramian eigenvalues are not finite".into()));
        }
        Ok(Spectrum { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    /// Control `χ_{G₀×E₁} ŷ_u` generated by the dual datum `u`.
    pub fn control_from(&self, u: &[f64]) -> Result<TreeField> {
        Ok(self.restrict(&self.dual_forward(u)?))
    }

    fn free_z0(&self, z_t: &[f64], h: Option<&TreeField>) -> Result<Vec<f64>> {
        Ok(self.solve_backward(z_t, h, None, BackwardMode::AdjointExact)?.z0().to_vec())
    }

    fn verified_z0(&self, z_t: &[f64], h: Option<&TreeField>, u: &[f64]) -> Result<Vec<f64>> {
        let f = self.control_from(u)?;
        Ok(self.solve_backward(z_t, h, Some(&f), BackwardMode::AdjointExact)?.z0().to_vec())
    }

    /// Drives `z(0)` to zero with `h = 0`: solves `Λu = z_free(0)` by
    /// conjugate residuals and re-solves the backward equation with the
    /// control generated by `u`.
    pub fn null_control(&self, z_t: &[f64], tol: f64, max_iter: usize) -> Result<(TreeField, NullControlReport)> {
        let zt_norm = self.leaf_norm(z_t);
        let rhs = self.free_z0(z_t, None)?;
        let kr = conjugate_residual(|u| self.gramian_apply(u), &rhs, self.inner(), tol * zt_norm, max_iter)?;
        let control = self.control_from(&kr.x)?;
        let z0 = self.solve_backward(z_t, None, Some(&control), BackwardMode::AdjointExact)?;
        let z0_norm = self.norm(z0.z0());
        let spec = self.spectrum()?;
        let lambda_min = spec.values.min();
        let lambda_max = spec.values.max();
        let report = NullControlReport {
            cg_iters: kr.iterations,
            residuals: kr.residuals,
            converged: kr.converged,
            zt_norm,
            z0_norm,
            relative: if zt_norm > 0.0 { z0_norm / zt_norm } else { z0_norm },
            lambda_min,
            lambda_max,
            // eigenvalues below rounding are not resolved by the dense solve
            condition: lambda_max / lambda_min.max(f64::EPSILON * lambda_max),
        };
        Ok((control, report))
    }

    /// Steers `z(0)` towards `z0_target` within `eps_target` (absolute,
    /// `L²(G)`): solves `(Λ + ε_reg‖Λ‖ I)u = z_free(0) - z₀` on the dense
    /// spectrum, sweeping `ε_reg` and bisecting in `log ε_reg`. The weight is
    /// relative to the largest Gramian eigenvalue since `Λ` carries the units
    /// of `|E₁|` and of the cell volume.
    pub fn approx_control(&self, z_t: &[f64], h: Option<&TreeField>, z0_target: &[f64], eps_target: f64) -> Result<(TreeField, ApproxControlReport)> {
        let n = self.grid.len();
        if z0_target.len() != n {
            return Err(Error::Shape("target must be a nodal field".into()));
        }
        let free = self.free_z0(z_t, h)?;
        let rhs: Vec<f64> = free.iter().zip(z0_target).map(|(a, b)| a - b).collect();
        let spec = self.spectrum()?;
        let coeffs = spec.vectors.transpose() * DVector::from_column_slice(&rhs);
        let scale = spec.values.max();
        let solve = |eps: f64| -> Vec<f64> {
            let scaled = DVector::from_iterator(n, (0..n).map(|i| coeffs[i] / (spec.values[i] + eps * scale)));
            (&spec.vectors * scaled).as_slice().to_vec()
        };
        let residual_at = |eps: f64| -> Result<(f64, Vec<f64>)> {
            let u = solve(eps);
            let z0 = self.verified_z0(z_t, h, &u)?;
            let d: Vec<f64> = z0.iter().zip(z0_target).map(|(a, b)| a - b).collect();
            Ok((self.norm(&d), u))
        };
        let decades = (-REG_FLOOR.log10()).round() as i32;
        let mut curve = Vec::with_capacity(decades as usize + 1);
        for j in 0..=decades {
            let eps_reg = 10f64.powi(-j);
            curve.push(RegularizationPoint { eps_reg, residual: residual_at(eps_reg)?.0 });
        }
        // rounding slack for the re-solved residual
        let slack = 64.0 * f64::EPSILON * (self.norm(&free) + self.norm(z0_target));
        let monotone = curve.windows(2).all(|w| w[1].residual <= w[0].residual + slack);
        let best = curve.iter().map(|p| p.residual).fold(f64::INFINITY, f64::min);

        let first_ok = curve.iter().position(|p| p.residual <= eps_target);
        let (chosen, u) = match first_ok {
            Some(0) => (curve[0], residual_at(curve[0].eps_reg)?.1),
            Some(i) => {
                // bracket (fail, ok) in log ε_reg
                let (mut lo, mut hi) = (curve[i].eps_reg.ln(), curve[i - 1].eps_reg.ln());
                let mut ok = curve[i];
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    let (res, _) = residual_at(mid.exp())?;
                    if res <= eps_target {
                        ok = RegularizationPoint { eps_reg: mid.exp(), residual: res };
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (ok, residual_at(ok.eps_reg)?.1)
            }
            None => {
                let p = *curve.iter().min_by(|a, b| a.residual.total_cmp(&b.residual)).expect("nonempty curve");
                (p, residual_at(p.eps_reg)?.1)
            }
        };
        let control = self.control_from(&u)?;
        let report = ApproxControlReport {
            target_norm: self.norm(z0_target),
            eps_target,
            curve,
            monotone,
            chosen,
            achieved: first_ok.is_some(),
            best_residual: best.min(chosen.residual),
        };
        Ok((control, report))
    }

    /// Observation mass of the dual trajectory from `eta`; a nonzero `eta`
    /// with vanishing mass would contradict unique continuation.
    pub fn support_check(&self, eta: &[f64], lambda_min: Option<f64>) -> Result<SupportReport> {
        let eta_norm_sq = self.grid.norm_sq(eta);
        let mass = self.observation_mass(&self.dual_forward(eta)?);
        let ratio = if eta_norm_sq > 0.0 { mass / eta_norm_sq } else { 0.0 };
        let red_flag = eta_norm_sq > 0.0 && ratio <= 1e-14;
        let below_lambda_min = match lambda_min {
            Some(l) => eta_norm_sq > 0.0 && ratio < l * (1.0 - 1e-8),
            None => false,
        };
        Ok(SupportReport { eta_norm_sq, mass, ratio, red_flag, below_lambda_min })
    }

    /// Smallest and largest eigenvalue of the dense Gramian.
    pub fn gramian_extremes(&self) -> Result<(f64, f64)> {
        let s = self.spectrum()?;
        Ok((s.values.min(), s.values.max()))
    }
}
