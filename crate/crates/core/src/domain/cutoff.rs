use super::grid::{Ball, Point, SpatialGrid};
use crate::error::{Error, Result};

/// Smooth step `q(s) = 1 - s³(10 - 15s + 6s²)` on `[0, 1]`, clamped outside.
/// Returns `(q, q', q'')`. `q` is C² with `q(1/2) = 1/2`.
pub fn quintic_step(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let q = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let dq = -30.0 * s * s * (1.0 - s) * (1.0 - s);
        let ddq = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        (q, dq, ddq)
    }
}

/// Radial cutoff `φ` with `φ = 1` on the inner ball and `supp φ ⊂` outer ball.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFunction {
    pub inner: Ball,
    pub outer: Ball,
    pub phi: Vec<f64>,
    pub grad: Vec<Point>,
    pub laplacian: Vec<f64>,
}

impl CutoffFunction {
    /// `(φ, ∇φ, Δφ)` at an arbitrary point.
    pub fn eval_point(&self, x: &Point, dim: usize) -> (f64, Point, f64) {
        radial_cutoff(&self.inner, &self.outer, x, dim)
    }
}

fn radial_cutoff(inner: &Ball, outer: &Ball, x: &Point, dim: usize) -> (f64, Point, f64) {
    let width = outer.radius - inner.radius;
    let rho = (0..dim).map(|a| (x[a] - inner.center[a]).powi(2)).sum::<f64>().sqrt();
    let s = (rho - inner.radius) / width;
    let (q, dq, ddq) = quintic_step(s);
    let mut grad = [0.0; 2];
    let mut lap = 0.0;
    if dq != 0.0 || ddq != 0.0 {
        for a in 0..dim {
            grad[a] = dq / width * (x[a] - inner.center[a]) / rho;
        }
        // Radial Laplacian: φ'' + (n-1)/ρ φ'.
        lap = ddq / (width * width) + (dim as f64 - 1.0) / rho * dq / width;
    }
    (q, grad, lap)
}

pub fn build_cutoff(inner: Ball, outer: Ball, grid: &SpatialGrid) -> Result<CutoffFunction> {
    let dim = grid.dim();
    let offset = grid.dist_sq(&inner.center, &outer.center).sqrt();
    if offset > 1e-12 || !(inner.radius < outer.radius) {
        return Err(Error::Geometry(format!("cutoff needs concentric balls with inner radius {} < outer radius {}", inner.radius, outer.radius)));
    }
    if !grid.contains_closed_ball(&outer) {
        return Err(Error::Geometry("cutoff support ball must lie inside the domain".into()));
    }
    let mut phi = Vec::with_capacity(grid.len());
    let mut grad = Vec::with_capacity(grid.len());
    let mut laplacian = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (p, g, l) = radial_cutoff(&inner, &outer, &grid.coord(i), dim);
        phi.push(p);
        grad.push(g);
        laplacian.push(l);
    }
    Ok(CutoffFunction { inner, outer, phi, grad, laplacian })
}
