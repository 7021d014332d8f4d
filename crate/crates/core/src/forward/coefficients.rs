use std::fmt;
use std::sync::Arc;

use crate::domain::{Point, SpatialGrid};
use crate::error::{Error, Result};
use crate::noise::TimeMesh;

pub type SpaceTimeFn = Arc<dyn Fn(f64, &Point) -> f64 + Send + Sync>;
/// Adapted coefficient: `(k, ΔB_0..ΔB_{k-1}, x) -> value` at step `k`.
pub type AdaptedFn = Arc<dyn Fn(usize, &[f64], &Point) -> f64 + Send + Sync>;

const FD_STEP: f64 = 1e-6;

/// A potential `a` or noise intensity `b`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// Time-independent nodal values on the interior grid.
    Nodal(Vec<f64>),
    /// Deterministic smooth function of `(t, x)`.
    Function(SpaceTimeFn),
    /// Per-path coefficient; the callback only ever sees past increments, so
    /// adaptedness holds by construction. Bounds must be supplied.
    Adapted {
        f: AdaptedFn,
        sup: f64,
        grad_sup: f64,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Nodal(v) => write!(f, "Nodal(len {})", v.len()),
            Coefficient::Function(_) => write!(f, "Function"),
            Coefficient::Adapted { sup, grad_sup, .. } => write!(f, "Adapted(sup {sup}, grad_sup {grad_sup})"),
        }
    }
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::Constant(0.0)
    }

    pub fn function(f: impl Fn(f64, &Point) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Coefficient::Adapted { .. })
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// Nodal values at step `k`; `history` holds `ΔB_0..ΔB_{k-1}`.
    pub fn eval(&self, grid: &SpatialGrid, mesh: &TimeMesh, k: usize, history: &[f64]) -> Vec<f64> {
        match self {
            Coefficient::Constant(c) => vec![*c; grid.len()],
            Coefficient::Nodal(v) => v.clone(),
            Coefficient::Function(f) => {
                let t = mesh.time(k);
                (0..grid.len()).map(|i| f(t, &grid.coord(i))).collect()
            }
            Coefficient::Adapted { f, .. } => {
                let h = &history[..k];
                (0..grid.len()).map(|i| f(k, h, &grid.coord(i))).collect()
            }
        }
    }

    fn check_len(&self, grid: &SpatialGrid) -> Result<()> {
        if let Coefficient::Nodal(v) = self {
            if v.len() != grid.len() {
                return Err(Error::Shape(format!("nodal coefficient has {} values, grid has {}", v.len(), grid.len())));
            }
        }
        Ok(())
    }

    /// Discrete `sup |c|` over masked nodes and all time nodes.
    pub fn sup(&self, grid: &SpatialGrid, mesh: &TimeMesh, mask: Option<&[bool]>) -> f64 {
        let keep = |i: usize| mask.is_none_or(|m| m[i]);
        match self {
            Coefficient::Constant(c) => c.abs(),
            Coefficient::Nodal(v) => (0..grid.len()).filter(|&i| keep(i)).map(|i| v[i].abs()).fold(0.0, f64::max),
            Coefficient::Function(f) => {
                let mut s: f64 = 0.0;
                for t in mesh.times() {
                    for i in (0..grid.len()).filter(|&i| keep(i)) {
                        s = s.max(f(t, &grid.coord(i)).abs());
                    }
                }
                s
            }
            Coefficient::Adapted { sup, .. } => *sup,
        }
    }

    /// Discrete `sup |∇c|` over masked nodes and all time nodes.
    pub fn grad_sup(&self, grid: &SpatialGrid, mesh: &TimeMesh, mask: Option<&[bool]>) -> f64 {
        let keep = |i: usize| mask.is_none_or(|m| m[i]);
        match self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Nodal(v) => {
                let g = interior_gradient(grid, v);
                (0..grid.len()).filter(|&i| keep(i)).map(|i| norm(&g[i])).fold(0.0, f64::max)
            }
            Coefficient::Function(f) => {
                let mut s: f64 = 0.0;
                for t in mesh.times() {
                    for i in (0..grid.len()).filter(|&i| keep(i)) {
                        let x = grid.coord(i);
                        let mut g = [0.0; 2];
                        for (a, ga) in g.iter_mut().enumerate().take(grid.dim()) {
                            let mut p = x;
                            let mut m = x;
                            p[a] += FD_STEP;
                            m[a] -= FD_STEP;
                            *ga = (f(t, &p) - f(t, &m)) / (2.0 * FD_STEP);
                        }
                        s = s.max(norm(&g));
                    }
                }
                s
            }
            Coefficient::Adapted { grad_sup, .. } => *grad_sup,
        }
    }

    /// `‖c‖_{W^{1,∞}} = max(sup |c|, sup |∇c|)`.
    pub fn w1_norm(&self, grid: &SpatialGrid, mesh: &TimeMesh, mask: Option<&[bool]>) -> f64 {
        self.sup(grid, mesh, mask).max(self.grad_sup(grid, mesh, mask))
    }
}

fn norm(g: &Point) -> f64 {
    (g[0] * g[0] + g[1] * g[1]).sqrt()
}

/// Gradient of a field that need not vanish on the boundary: centered
/// differences, second-order one-sided at the first and last interior node.
fn interior_gradient(grid: &SpatialGrid, v: &[f64]) -> Vec<Point> {
    let counts = grid.counts();
    let nx = counts[0];
    let mut g = vec![[0.0; 2]; v.len()];
    for (idx, gi) in g.iter_mut().enumerate() {
        let i = idx % nx;
        let j = idx / nx;
        gi[0] = one_axis(v, idx, i, nx, 1, grid.h(0));
        if grid.dim() == 2 {
            gi[1] = one_axis(v, idx, j, counts[1], nx, grid.h(1));
        }
    }
    g
}

fn one_axis(v: &[f64], idx: usize, pos: usize, n: usize, stride: usize, h: f64) -> f64 {
    if pos == 0 {
        (-3.0 * v[idx] + 4.0 * v[idx + stride] - v[idx + 2 * stride]) / (2.0 * h)
    } else if pos + 1 == n {
        (3.0 * v[idx] - 4.0 * v[idx - stride] + v[idx - 2 * stride]) / (2.0 * h)
    } else {
        (v[idx + stride] - v[idx - stride]) / (2.0 * h)
    }
}

/// Cached coefficient norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientNorms {
    /// `‖a‖_∞`.
    pub a_sup: f64,
    /// `‖b‖_{W^{1,∞}}`.
    pub b_w1: f64,
}

impl CoefficientNorms {
    pub fn a_sq(&self) -> f64 {
        self.a_sup * self.a_sup
    }

    pub fn b_sq(&self) -> f64 {
        self.b_w1 * self.b_w1
    }
}

/// The pair `(a, b)` of the forward equation.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub a: Coefficient,
    pub b: Coefficient,
    norms: CoefficientNorms,
}

impl CoefficientField {
    pub fn new(a: Coefficient, b: Coefficient, grid: &SpatialGrid, mesh: &TimeMesh) -> Result<Self> {
        a.check_len(grid)?;
        b.check_len(grid)?;
        let norms = CoefficientNorms { a_sup: a.sup(grid, mesh, None), b_w1: b.w1_norm(grid, mesh, None) };
        if !norms.a_sup.is_finite() || !norms.b_w1.is_finite() {
            return Err(Error::Config("coefficient norms are not finite".into()));
        }
        Ok(Self { a, b, norms })
    }

    pub fn constant(a: f64, b: f64, grid: &SpatialGrid, mesh: &TimeMesh) -> Result<Self> {
        Self::new(Coefficient::Constant(a), Coefficient::Constant(b), grid, mesh)
    }

    pub fn norms(&self) -> CoefficientNorms {
        self.norms
    }

    pub fn is_deterministic(&self) -> bool {
        self.a.is_deterministic() && self.b.is_deterministic()
    }

    /// `‖b‖_{W^{1,∞}}` restricted to masked nodes (e.g. the cutoff support).
    pub fn b_norm_on(&self, grid: &SpatialGrid, mesh: &TimeMesh, mask: &[bool]) -> f64 {
        self.b.w1_norm(grid, mesh, Some(mask))
    }

    /// Dual coefficients `(-a, -b)`.
    pub fn negated(&self) -> Self {
        Self { a: negate(&self.a), b: negate(&self.b), norms: self.norms }
    }
}

fn negate(c: &Coefficient) -> Coefficient {
    match c {
        Coefficient::Constant(v) => Coefficient::Constant(-v),
        Coefficient::Nodal(v) => Coefficient::Nodal(v.iter().map(|x| -x).collect()),
        Coefficient::Function(f) => {
            let f = f.clone();
            Coefficient::function(move |t, x| -f(t, x))
        }
        Coefficient::Adapted { f, sup, grad_sup } => {
            let f = f.clone();
            Coefficient::Adapted { f: Arc::new(move |k, h, x| -f(k, h, x)), sup: *sup, grad_sup: *grad_sup }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms_of_smooth_fields() {
        let grid = SpatialGrid::interval(0.0, 1.0, 63).unwrap();
        let mesh = TimeMesh::new(0.5, 10).unwrap();
        let b = Coefficient::function(|_, x| 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin());
        let c = CoefficientField::new(Coefficient::Constant(-0.7), b, &grid, &mesh).unwrap();
        assert_eq!(c.norms().a_sup, 0.7);
        let grad_max = 0.3 * 2.0 * std::f64::consts::PI;
        assert_relative_eq!(c.norms().b_w1, grad_max, max_relative = 1e-2);
        assert!(c.norms().b_w1 <= grad_max);
    }

    #[test]
    fn nodal_gradient_is_exact_for_quadratics() {
        let grid = SpatialGrid::rectangle((0.0, 1.0), (0.0, 1.0), 7, 5).unwrap();
        let v: Vec<f64> = grid.coords().iter().map(|p| p[0] * p[0] + 3.0 * p[1]).collect();
        let g = interior_gradient(&grid, &v);
        for (i, p) in grid.coords().iter().enumerate() {
            assert_relative_eq!(g[i][0], 2.0 * p[0], epsilon = 1e-12);
            assert_relative_eq!(g[i][1], 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adapted_callback_sees_only_the_past() {
        let grid = SpatialGrid::interval(0.0, 1.0, 3).unwrap();
        let mesh = TimeMesh::new(1.0, 4).unwrap();
        let c = Coefficient::Adapted {
            f: Arc::new(|k, h, _| {
                assert_eq!(h.len(), k);
                h.iter().sum()
            }),
            sup: 1.0,
            grad_sup: 0.0,
        };
        let v = c.eval(&grid, &mesh, 2, &[0.5, 0.25, 100.0, 100.0]);
        assert_eq!(v, vec![0.75; 3]);
    }

    #[test]
    fn nodal_length_checked() {
        let grid = SpatialGrid::interval(0.0, 1.0, 3).unwrap();
        let mesh = TimeMesh::new(1.0, 4).unwrap();
        assert!(CoefficientField::new(Coefficient::Nodal(vec![1.0; 4]), Coefficient::zero(), &grid, &mesh).is_err());
    }
}
