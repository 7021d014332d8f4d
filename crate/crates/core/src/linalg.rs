//! Implicit diffusion solves `(I - Δt Δ_h + diag(s)) x = r` on the Dirichlet
//! grid: a tridiagonal (Thomas) sweep in 1-D and a discrete sine transform in
//! 2-D, with preconditioned CG when a nodal shift breaks separability.

use crate::domain::SpatialGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Factor {
    Line { off: f64, diag: f64 },
    Plane { sx: Vec<f64>, sy: Vec<f64>, nx: usize, ny: usize, denom: Vec<f64> },
}

/// Step operator `I - Δt Δ_h`, symmetric positive definite.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    grid: SpatialGrid,
    dt: f64,
    factor: Factor,
}

fn sine_matrix(n: usize) -> Vec<f64> {
    let scale = (2.0 / (n + 1) as f64).sqrt();
    let mut s = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            s[j * n + k] = scale * (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n + 1) as f64).sin();
        }
    }
    s
}

impl ImplicitDiffusion {
    pub fn new(grid: &SpatialGrid, dt: f64) -> Self {
        let factor = if grid.dim() == 1 {
            let h2 = grid.h(0) * grid.h(0);
            Factor::Line { off: -dt / h2, diag: 1.0 + 2.0 * dt / h2 }
        } else {
            let nx = grid.counts()[0];
            let ny = grid.counts()[1];
            let mx = grid.axis_eigenvalues(0);
            let my = grid.axis_eigenvalues(1);
            let mut denom = vec![0.0; nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    denom[i + nx * j] = 1.0 + dt * (mx[i] + my[j]);
                }
            }
            Factor::Plane { sx: sine_matrix(nx), sy: sine_matrix(ny), nx, ny, denom }
        };
        Self { grid: grid.clone(), dt, factor }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// `out = (I - Δt Δ_h) x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.grid.apply_laplacian(x, out);
        for (o, v) in out.iter_mut().zip(x) {
            *o = v - self.dt * *o;
        }
    }

    /// Solves `(I - Δt Δ_h) x = rhs` in place.
    pub fn solve(&self, rhs: &mut [f64]) {
        match &self.factor {
            Factor::Line { off, diag } => {
                let diag = vec![*diag; rhs.len()];
                thomas(*off, &diag, rhs).expect("diagonally dominant step matrix");
            }
            Factor::Plane { sx, sy, nx, ny, denom } => {
                sine_transform(sx, sy, *nx, *ny, rhs);
                for (v, d) in rhs.iter_mut().zip(denom) {
                    *v /= d;
                }
                sine_transform(sx, sy, *nx, *ny, rhs);
            }
        }
    }

    /// Solves `(I - Δt Δ_h + diag(shift)) x = rhs` in place.
    pub fn solve_shifted(&self, shift: &[f64], rhs: &mut [f64]) -> Result<()> {
        match &self.factor {
            Factor::Line { off, diag } => {
                let d: Vec<f64> = shift.iter().map(|s| diag + s).collect();
                thomas(*off, &d, rhs)
            }
            Factor::Plane { .. } => {
                if shift.iter().all(|s| *s == 0.0) {
                    self.solve(rhs);
                    return Ok(());
                }
                self.shifted_pcg(shift, rhs)
            }
        }
    }

    fn shifted_pcg(&self, shift: &[f64], rhs: &mut [f64]) -> Result<()> {
        let n = rhs.len();
        let b = rhs.to_vec();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(());
        }
        let op = |x: &[f64], out: &mut [f64]| {
            self.apply(x, out);
            for i in 0..n {
                out[i] += shift[i] * x[i];
            }
        };
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut z = r.clone();
        self.solve(&mut z);
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        for _ in 0..500 {
            op(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::Numerical(format!("shifted step matrix not positive definite (pᵀAp = {pap:e})")));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= 1e-15 * bnorm {
                rhs.copy_from_slice(&x);
                return Ok(());
            }
            z.copy_from_slice(&r);
            self.solve(&mut z);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= 1e-12 * bnorm {
            rhs.copy_from_slice(&x);
            Ok(())
        } else {
            Err(Error::Numerical(format!("shifted solve stalled at relative residual {:e}", rnorm / bnorm)))
        }
    }
}

/// Symmetric constant off-diagonal tridiagonal solve.
fn thomas(off: f64, diag: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < 1e-300 {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    c[0] = off / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - off * c[i - 1];
        if pivot.abs() < 1e-300 {
            return Err(Error::Numerical(format!("zero pivot at row {i} in tridiagonal solve")));
        }
        c[i] = off / pivot;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Orthonormal DST-I along both axes; it is its own inverse.
fn sine_transform(sx: &[f64], sy: &[f64], nx: usize, ny: usize, u: &mut [f64]) {
    let mut tmp = vec![0.0; nx * ny];
    for j in 0..ny {
        let row = &u[j * nx..(j + 1) * nx];
        for k in 0..nx {
            let s = &sx[k * nx..(k + 1) * nx];
            tmp[j * nx + k] = s.iter().zip(row).map(|(a, b)| a * b).sum();
        }
    }
    for i in 0..nx {
        for k in 0..ny {
            let s = &sy[k * ny..(k + 1) * ny];
            u[k * nx + i] = (0..ny).map(|j| s[j] * tmp[j * nx + i]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn residual(op: &ImplicitDiffusion, shift: &[f64], x: &[f64], b: &[f64]) -> f64 {
        let mut out = vec![0.0; x.len()];
        op.apply(x, &mut out);
        out.iter().zip(shift).zip(x).zip(b).map(|(((o, s), xv), bv)| (o + s * xv - bv).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn line_and_plane_solves_invert_apply() {
        for grid in [SpatialGrid::interval(0.0, 1.0, 17).unwrap(), SpatialGrid::rectangle((0.0, 1.0), (0.0, 2.0), 7, 9).unwrap()] {
            let op = ImplicitDiffusion::new(&grid, 0.01);
            let b: Vec<f64> = (0..grid.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
            let zero = vec![0.0; grid.len()];
            let mut x = b.clone();
            op.solve(&mut x);
            assert!(residual(&op, &zero, &x, &b) < 1e-12);
            let shift: Vec<f64> = (0..grid.len()).map(|i| 0.05 * ((i % 5) as f64 - 1.0)).collect();
            let mut y = b.clone();
            op.solve_shifted(&shift, &mut y).unwrap();
            assert!(residual(&op, &shift, &y, &b) < 1e-11);
        }
    }

    #[test]
    fn eigenvector_scaling() {
        let grid = SpatialGrid::rectangle((0.0, 1.0), (0.0, 1.0), 11, 11).unwrap();
        let (v, mu) = grid.eigenmode(&[1, 2]);
        let op = ImplicitDiffusion::new(&grid, 0.003);
        let mut x = v.clone();
        op.solve(&mut x);
        for (a, b) in x.iter().zip(&v) {
            assert_relative_eq!(*a, b / (1.0 + 0.003 * mu), epsilon = 1e-12);
        }
    }
}
