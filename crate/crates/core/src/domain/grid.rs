use crate::error::{Error, Result};
use crate::pairwise_sum;

/// Spatial point; the second coordinate is ignored in one dimension.
pub type Point = [f64; 2];

/// Uniform tensor grid on an interval or rectangle.
///
/// Fields are stored on interior nodes only (x index fastest); the
/// Dirichlet boundary value 0 is implicit. The "full" grid adds the boundary
/// nodes and is used for gradients and trapezoid quadrature of quantities
/// that do not vanish on `∂G`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    counts: [usize; 2],
    h: [f64; 2],
}

/// Ball `B_r(x₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Geometry(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn interval(center: f64, radius: f64) -> Result<Self> {
        Self::new([center, 0.0], radius)
    }
}

/// Boundary node of the full grid with its outward unit normal(s). Corners of
/// a rectangle carry both face normals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNode {
    pub coord: Point,
    pub normals: Vec<Point>,
}

/// Builds a uniform grid from per-axis extents and interior node counts.
pub fn build_grid(extents: &[(f64, f64)], counts: &[usize]) -> Result<SpatialGrid> {
    if extents.is_empty() || extents.len() > 2 || extents.len() != counts.len() {
        return Err(Error::Config(format!("grid needs 1 or 2 axes with matching counts, got {} extents and {} counts", extents.len(), counts.len())));
    }
    let dim = extents.len();
    let mut lo = [0.0; 2];
    let mut hi = [1.0; 2];
    let mut n = [1usize; 2];
    let mut h = [1.0; 2];
    for axis in 0..dim {
        let (a, b) = extents[axis];
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("axis {axis}: extent ({a}, {b}) is not a positive interval")));
        }
        if counts[axis] < 3 {
            return Err(Error::Config(format!("axis {axis}: need at least 3 interior nodes, got {}", counts[axis])));
        }
        lo[axis] = a;
        hi[axis] = b;
        n[axis] = counts[axis];
        h[axis] = (b - a) / (counts[axis] + 1) as f64;
    }
    Ok(SpatialGrid { dim, lo, hi, counts: n, h })
}

impl SpatialGrid {
    pub fn interval(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        build_grid(&[(lo, hi)], &[nodes])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        build_grid(&[x, y], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn extent(&self, axis: usize) -> (f64, f64) {
        (self.lo[axis], self.hi[axis])
    }

    /// Largest mesh width; used in tolerance budgets.
    pub fn h_max(&self) -> f64 {
        self.h[..self.dim].iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    pub fn coord(&self, idx: usize) -> Point {
        let i = idx % self.counts[0];
        let j = idx / self.counts[0];
        let mut p = [self.lo[0] + (i + 1) as f64 * self.h[0], 0.0];
        if self.dim == 2 {
            p[1] = self.lo[1] + (j + 1) as f64 * self.h[1];
        }
        p
    }

    pub fn coords(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    pub fn dist_sq(&self, a: &Point, b: &Point) -> f64 {
        (0..self.dim).map(|k| (a[k] - b[k]).powi(2)).sum()
    }

    /// Trapezoid quadrature of an interior field (boundary values are zero).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        pairwise_sum(values) * self.cell_volume()
    }

    /// Discrete L² inner product matching [`SpatialGrid::integrate`].
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let prod: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
        self.integrate(&prod)
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }

    /// Dirichlet 3-point / 5-point Laplacian.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let nx = self.counts[0];
        let ny = self.counts[1];
        let hx2 = self.h[0] * self.h[0];
        for j in 0..ny {
            for i in 0..nx {
                let idx = i + nx * j;
                let c = u[idx];
                let left = if i > 0 { u[idx - 1] } else { 0.0 };
                let right = if i + 1 < nx { u[idx + 1] } else { 0.0 };
                let mut lap = (left - 2.0 * c + right) / hx2;
                if self.dim == 2 {
                    let hy2 = self.h[1] * self.h[1];
                    let down = if j > 0 { u[idx - nx] } else { 0.0 };
                    let up = if j + 1 < ny { u[idx + nx] } else { 0.0 };
                    lap += (down - 2.0 * c + up) / hy2;
                }
                out[idx] = lap;
            }
        }
    }

    /// Eigenvalues of `-Δ_h` along one axis, `μ_k = 4/h² sin²(kπ/(2(n+1)))`.
    pub fn axis_eigenvalues(&self, axis: usize) -> Vec<f64> {
        let n = self.counts[axis];
        let h = self.h[axis];
        (1..=n)
            .map(|k| {
                let s = (k as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
                4.0 * s * s / (h * h)
            })
            .collect()
    }

    /// Discrete Dirichlet eigenvector `sin(kπ(x-lo)/L)` (product over axes in
    /// 2-D) with `-Δ_h` eigenvalue.
    pub fn eigenmode(&self, modes: &[usize]) -> (Vec<f64>, f64) {
        let mut mu = 0.0;
        for axis in 0..self.dim {
            mu += self.axis_eigenvalues(axis)[modes[axis] - 1];
        }
        let v = (0..self.len())
            .map(|idx| {
                let p = self.coord(idx);
                (0..self.dim)
                    .map(|a| {
                        let len = self.hi[a] - self.lo[a];
                        (modes[a] as f64 * std::f64::consts::PI * (p[a] - self.lo[a]) / len).sin()
                    })
                    .product()
            })
            .collect();
        (v, mu)
    }

    pub fn full_counts(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.counts[0] + 2, 1]
        } else {
            [self.counts[0] + 2, self.counts[1] + 2]
        }
    }

    pub fn full_len(&self) -> usize {
        let c = self.full_counts();
        c[0] * c[1]
    }

    fn full_split(&self, fidx: usize) -> (usize, usize) {
        let fx = self.full_counts()[0];
        (fidx % fx, fidx / fx)
    }

    pub fn full_coord(&self, fidx: usize) -> Point {
        let (i, j) = self.full_split(fidx);
        let mut p = [self.lo[0] + i as f64 * self.h[0], 0.0];
        if self.dim == 2 {
            p[1] = self.lo[1] + j as f64 * self.h[1];
        }
        p
    }

    /// Interior index of a full-grid node, `None` on the boundary.
    pub fn full_to_interior(&self, fidx: usize) -> Option<usize> {
        let (i, j) = self.full_split(fidx);
        let [fx, fy] = self.full_counts();
        let inside_x = i > 0 && i + 1 < fx;
        let inside_y = self.dim == 1 || (j > 0 && j + 1 < fy);
        if inside_x && inside_y {
            let jj = if self.dim == 2 { j - 1 } else { 0 };
            Some((i - 1) + self.counts[0] * jj)
        } else {
            None
        }
    }

    /// Trapezoid weight of a full-grid node.
    pub fn full_weight(&self, fidx: usize) -> f64 {
        let (i, j) = self.full_split(fidx);
        let [fx, fy] = self.full_counts();
        let mut w = self.h[0] * if i == 0 || i + 1 == fx { 0.5 } else { 1.0 };
        if self.dim == 2 {
            w *= self.h[1] * if j == 0 || j + 1 == fy { 0.5 } else { 1.0 };
        }
        w
    }

    /// Interior field extended by the Dirichlet zeros.
    pub fn extend_full(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.full_len()];
        for (f, slot) in out.iter_mut().enumerate() {
            if let Some(i) = self.full_to_interior(f) {
                *slot = u[i];
            }
        }
        out
    }

    /// Gradient on the full grid: centered differences inside, second-order
    /// one-sided differences on boundary nodes, Dirichlet zeros as ghosts.
    pub fn gradient_full(&self, u: &[f64]) -> Vec<Point> {
        let full = self.extend_full(u);
        let [fx, fy] = self.full_counts();
        let mut grad = vec![[0.0; 2]; full.len()];
        for j in 0..fy {
            for i in 0..fx {
                let f = i + fx * j;
                grad[f][0] = axis_diff(&full, f, i, fx, 1, self.h[0]);
                if self.dim == 2 {
                    grad[f][1] = axis_diff(&full, f, j, fy, fx, self.h[1]);
                }
            }
        }
        grad
    }

    /// Centered-difference gradient at interior nodes (ghost zeros at ∂G).
    pub fn gradient(&self, u: &[f64]) -> Vec<Point> {
        let full = self.gradient_full(u);
        let mut out = vec![[0.0; 2]; self.len()];
        for (f, g) in full.into_iter().enumerate() {
            if let Some(i) = self.full_to_interior(f) {
                out[i] = g;
            }
        }
        out
    }

    /// Trapezoid quadrature over the full grid.
    pub fn integrate_full(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = values.iter().enumerate().map(|(f, v)| v * self.full_weight(f)).collect();
        pairwise_sum(&terms)
    }

    /// Closure of the ball lies strictly inside the box.
    pub fn contains_closed_ball(&self, ball: &Ball) -> bool {
        (0..self.dim).all(|a| ball.center[a] - ball.radius > self.lo[a] && ball.center[a] + ball.radius < self.hi[a])
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| p[a] > self.lo[a] && p[a] < self.hi[a])
    }

    /// Interior nodes inside the closed ball.
    pub fn ball_mask(&self, ball: &Ball) -> Vec<bool> {
        let r2 = ball.radius * ball.radius * (1.0 + 1e-12);
        (0..self.len()).map(|i| self.dist_sq(&self.coord(i), &ball.center) <= r2).collect()
    }

    /// `max_{x ∈ Ḡ} |x - x₀|²`, attained at a corner of the box.
    pub fn max_dist_sq(&self, x0: &Point) -> f64 {
        (0..self.dim).map(|a| (x0[a] - self.lo[a]).powi(2).max((x0[a] - self.hi[a]).powi(2))).sum()
    }

    pub fn boundary_nodes(&self) -> Vec<BoundaryNode> {
        let [fx, fy] = self.full_counts();
        let mut out = Vec::new();
        for f in 0..self.full_len() {
            if self.full_to_interior(f).is_some() {
                continue;
            }
            let (i, j) = self.full_split(f);
            let mut normals = Vec::new();
            if i == 0 {
                normals.push([-1.0, 0.0]);
            }
            if i + 1 == fx {
                normals.push([1.0, 0.0]);
            }
            if self.dim == 2 {
                if j == 0 {
                    normals.push([0.0, -1.0]);
                }
                if j + 1 == fy {
                    normals.push([0.0, 1.0]);
                }
            }
            out.push(BoundaryNode { coord: self.full_coord(f), normals });
        }
        out
    }
}

fn axis_diff(full: &[f64], f: usize, pos: usize, n: usize, stride: usize, h: f64) -> f64 {
    if pos == 0 {
        (-3.0 * full[f] + 4.0 * full[f + stride] - full[f + 2 * stride]) / (2.0 * h)
    } else if pos + 1 == n {
        (3.0 * full[f] - 4.0 * full[f - stride] + full[f - 2 * stride]) / (2.0 * h)
    } else {
        (full[f + stride] - full[f - stride]) / (2.0 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_partition_examples() {
        let g = SpatialGrid::interval(0.0, 1.0, 3).unwrap();
        assert_eq!(g.coords().iter().map(|p| p[0]).collect::<Vec<_>>(), vec![0.25, 0.5, 0.75]);
        assert_eq!(g.h(0), 0.25);
        let g = SpatialGrid::interval(0.0, 2.0, 7).unwrap();
        assert_eq!(g.h(0), 0.25);
        let g = SpatialGrid::rectangle((0.0, 1.0), (0.0, 1.0), 15, 15).unwrap();
        assert_eq!(g.len(), 225);
        assert_eq!(g.h(0), 1.0 / 16.0);
        assert_eq!(g.h(1), 1.0 / 16.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(SpatialGrid::interval(0.0, 1.0, 2), Err(Error::Config(_))));
        assert!(matches!(SpatialGrid::interval(1.0, 1.0, 5), Err(Error::Config(_))));
        assert!(matches!(build_grid(&[(0.0, 1.0)], &[4, 4]), Err(Error::Config(_))));
    }

    #[test]
    fn interior_nodes_strictly_inside() {
        let g = SpatialGrid::rectangle((0.0, 1.0), (0.0, 2.0), 5, 7).unwrap();
        assert!(g.coords().iter().all(|p| g.contains_point(p)));
        let full = g.extend_full(&vec![1.0; g.len()]);
        for node in 0..g.full_len() {
            if g.full_to_interior(node).is_none() {
                assert_eq!(full[node], 0.0);
            }
        }
    }

    #[test]
    fn eigenmode_is_discrete_eigenvector() {
        let g = SpatialGrid::rectangle((0.0, 1.0), (0.0, 1.0), 9, 11).unwrap();
        let (v, mu) = g.eigenmode(&[2, 3]);
        let mut lap = vec![0.0; g.len()];
        g.apply_laplacian(&v, &mut lap);
        for (l, x) in lap.iter().zip(&v) {
            assert_relative_eq!(*l, -mu * x, epsilon = 1e-9 * mu);
        }
    }

    #[test]
    fn gradient_of_quadratic_is_exact() {
        // y = x(1-x) vanishes on ∂G; second-order differences are exact.
        let g = SpatialGrid::interval(0.0, 1.0, 9).unwrap();
        let y: Vec<f64> = g.coords().iter().map(|p| p[0] * (1.0 - p[0])).collect();
        let grad = g.gradient_full(&y);
        for (f, gr) in grad.iter().enumerate() {
            let x = g.full_coord(f)[0];
            assert_relative_eq!(gr[0], 1.0 - 2.0 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_area() {
        let g = SpatialGrid::rectangle((0.0, 2.0), (0.0, 1.0), 6, 4).unwrap();
        let ones = vec![1.0; g.full_len()];
        assert_relative_eq!(g.integrate_full(&ones), 2.0, epsilon = 1e-12);
    }
}
