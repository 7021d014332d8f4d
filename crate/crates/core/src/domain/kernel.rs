use super::grid::{Point, SpatialGrid};
use crate::error::{Error, Result};

/// `ϑ(s, x, x₀) = exp(-|x - x₀|² / (4s))`.
pub fn gaussian_factor(s: f64, dist_sq: f64) -> f64 {
    (-dist_sq / (4.0 * s)).exp()
}

/// Backward heat kernel `K(x,t) = (T - t + λ)^{-n/2} ϑ(T - t + λ, x, x₀)`.
///
/// `K` solves `K_t + ΔK = 0`; its derivatives are available in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelWeight {
    horizon: f64,
    lambda: f64,
    center: Point,
    dim: usize,
}

impl HeatKernelWeight {
    /// `λ` is restricted to `(0, 1]`.
    pub fn new(horizon: f64, lambda: f64, center: Point, dim: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Config(format!("kernel horizon must be positive, got {horizon}")));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(format!("kernel shift λ must lie in (0, 1], got {lambda}")));
        }
        if dim == 0 || dim > 2 {
            return Err(Error::Config(format!("kernel dimension must be 1 or 2, got {dim}")));
        }
        Ok(Self { horizon, lambda, center, dim })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `T - t + λ`.
    pub fn tau(&self, t: f64) -> f64 {
        self.horizon - t + self.lambda
    }

    fn dist_sq(&self, x: &Point) -> f64 {
        (0..self.dim).map(|a| (x[a] - self.center[a]).powi(2)).sum()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon;
        if t < -slack || t > self.horizon + slack || !t.is_finite() {
            return Err(Error::Domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    pub fn value(&self, x: &Point, t: f64) -> f64 {
        let tau = self.tau(t);
        tau.powf(-0.5 * self.dim as f64) * gaussian_factor(tau, self.dist_sq(x))
    }

    /// `∇K = -(x - x₀) K / (2(T - t + λ))`.
    pub fn gradient(&self, x: &Point, t: f64) -> Point {
        let k = self.value(x, t);
        let tau = self.tau(t);
        let mut g = [0.0; 2];
        for a in 0..self.dim {
            g[a] = -(x[a] - self.center[a]) * k / (2.0 * tau);
        }
        g
    }

    /// `ΔK = (-n/(2τ) + |x - x₀|²/(4τ²)) K`.
    pub fn laplacian(&self, x: &Point, t: f64) -> f64 {
        let tau = self.tau(t);
        let n = self.dim as f64;
        (-n / (2.0 * tau) + self.dist_sq(x) / (4.0 * tau * tau)) * self.value(x, t)
    }

    /// `K_t`, differentiating the prefactor and exponent in `τ = T - t + λ`.
    pub fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        let tau = self.tau(t);
        let n = self.dim as f64;
        (n / (2.0 * tau) - self.dist_sq(x) / (4.0 * tau * tau)) * self.value(x, t)
    }

    /// Nodal values on interior nodes.
    pub fn eval(&self, grid: &SpatialGrid, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok((0..grid.len()).map(|i| self.value(&grid.coord(i), t)).collect())
    }

    /// Nodal values on the full grid (boundary included).
    pub fn eval_full(&self, grid: &SpatialGrid, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok((0..grid.full_len()).map(|f| self.value(&grid.full_coord(f), t)).collect())
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.horizon, lambda, self.center, self.dim)
    }
}

/// Residuals of the caloric identity `K_t + ΔK = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaloricResidual {
    /// `max |K_t + ΔK|` with closed-form derivatives.
    pub closed_form: f64,
    /// Same with a centered time difference and the 3/5-point Laplacian.
    pub finite_difference: f64,
    /// `max K` over interior nodes at time `t`.
    pub max_kernel: f64,
}

pub fn kernel_caloric_residual(weight: &HeatKernelWeight, grid: &SpatialGrid, t: f64, dt: f64) -> Result<CaloricResidual> {
    weight.check_time(t)?;
    let mut closed: f64 = 0.0;
    let mut fd: f64 = 0.0;
    let mut kmax: f64 = 0.0;
    for i in 0..grid.len() {
        let x = grid.coord(i);
        let k = weight.value(&x, t);
        kmax = kmax.max(k);
        closed = closed.max((weight.time_derivative(&x, t) + weight.laplacian(&x, t)).abs());

        // K is smooth across ∂G, so neighbours use true kernel values.
        let kt = (weight.value(&x, t + dt) - weight.value(&x, t - dt)) / (2.0 * dt);
        let mut lap = 0.0;
        for a in 0..grid.dim() {
            let h = grid.h(a);
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            lap += (weight.value(&xp, t) - 2.0 * k + weight.value(&xm, t)) / (h * h);
        }
        fd = fd.max((kt + lap).abs());
    }
    Ok(CaloricResidual { closed_form: closed, finite_difference: fd, max_kernel: kmax })
}
