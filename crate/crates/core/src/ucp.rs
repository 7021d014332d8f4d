//! Quantitative unique continuation: the explicit convex-case constants, the
//! `λ₁` bracket scan, the three-ball estimate at the terminal time, the
//! interpolation inequality `‖y(T)‖² ≤ 2^δ e^β ‖y(0)‖^{2(1-δ)} ‖y(T)‖_{B_r}^{2δ}`,
//! and propagation of numerical vanishing along a ball chain.

use serde::Serialize;

use crate::domain::{ball_chain, gaussian_factor, Ball, Point, SpatialGrid};
use crate::error::{Error, Result};
use crate::forward::{CoefficientNorms, TrajectoryEnsemble};
use crate::frequency::AProfileEntry;
use crate::report::CheckRecord;

/// Relative mass below which a ball counts as numerically vanishing.
pub const VANISHING_THRESHOLD: f64 = 1e-12;
/// Points of the uniform grid used to maximize `Θ(t)` and `γ(t)`.
pub const THETA_GRID: usize = 1024;

/// `5(Δt + h²)·scale`, the discretization allowance for inequality checks,
/// plus 10% headroom.
pub fn inequality_tol(dt: f64, h: f64, scale: f64) -> f64 {
    1.1 * 5.0 * (dt + h * h) * scale
}

/// `E ∫ w y²` at one level (interior nodes, boundary values vanish).
pub fn weighted_mass(ens: &TrajectoryEnsemble, level: usize, weight: &[f64]) -> f64 {
    let grid = ens.grid();
    ens.expect(level, |_, y| {
        let terms: Vec<f64> = y.iter().zip(weight).map(|(v, w)| v * v * w).collect();
        grid.integrate(&terms)
    })
}

pub fn ball_mass(ens: &TrajectoryEnsemble, level: usize, ball: &Ball) -> f64 {
    let w: Vec<f64> = ens.grid().ball_mask(ball).iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    weighted_mass(ens, level, &w)
}

pub fn global_mass(ens: &TrajectoryEnsemble, level: usize) -> f64 {
    weighted_mass(ens, level, &vec![1.0; ens.grid().len()])
}

/// Endpoint masses the constants depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointMasses {
    /// `E‖y(0)‖²`.
    pub initial: f64,
    /// `E‖y(T)‖²`.
    pub terminal: f64,
    /// `E‖y(T)‖²_{L²(B_r)}`.
    pub local: f64,
}

impl EndpointMasses {
    pub fn measure(ens: &TrajectoryEnsemble, observation: &Ball) -> Self {
        let last = ens.steps();
        Self { initial: global_mass(ens, 0), terminal: global_mass(ens, last), local: ball_mass(ens, last, observation) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let c2 = c * c;
        Self { initial: c2 * self.initial, terminal: c2 * self.terminal, local: c2 * self.local }
    }
}

/// Geometry and coefficient data entering the constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UcpGeometry {
    /// Radius of `B_r ⊂ G₀`.
    pub r: f64,
    /// `m = max_{x∈Ḡ} |x - x₀|²`.
    pub m: f64,
    pub horizon: f64,
    pub dim: usize,
}

impl UcpGeometry {
    pub fn new(grid: &SpatialGrid, x0: &Point, r: f64, horizon: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Geometry(format!("observation radius must be positive, got {r}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { r, m: grid.max_dist_sq(x0), horizon, dim: grid.dim() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UcpConstants {
    pub r: f64,
    pub m: f64,
    pub horizon: f64,
    pub dim: usize,
    pub a_sup: f64,
    pub a_sq: f64,
    pub b_sq: f64,
    /// `ln(E‖y(0)‖²/E‖y(T)‖²)` clamped below at 0.
    pub log_ratio: f64,
    /// The unclamped log ratio.
    pub raw_log_ratio: f64,
    pub d_const: f64,
    pub j_const: f64,
    /// `r²T + 8m(T+1)e^{T‖b‖²}`.
    pub denominator: f64,
    pub delta: f64,
    pub beta: f64,
    /// `8m(T+1)e^{T‖b‖²}/(r²T)`.
    pub theta_exponent: f64,
    pub lambda_tilde: f64,
}

/// `𝒥` at horizon `t`: `(t+1)e^{t‖b‖²}[m/t² + 4‖a‖ + t‖a‖² + 2(1+t)‖b‖²] + n/2`.
pub fn j_at(t: f64, m: f64, dim: usize, norms: &CoefficientNorms) -> f64 {
    let b2 = norms.b_sq();
    (t + 1.0) * (t * b2).exp() * (m / (t * t) + 4.0 * norms.a_sup + t * norms.a_sq() + 2.0 * (1.0 + t) * b2) + dim as f64 / 2.0
}

pub fn compute_constants(masses: &EndpointMasses, geo: &UcpGeometry, norms: &CoefficientNorms) -> Result<UcpConstants> {
    if !(masses.terminal > 0.0) {
        return Err(Error::VanishingTerminal);
    }
    if !(masses.initial > 0.0) {
        return Err(Error::Precondition("initial mass vanishes".into()));
    }
    let t = geo.horizon;
    let b2 = norms.b_sq();
    let growth = (t + 1.0) * (t * b2).exp();
    let raw = (masses.initial / masses.terminal).ln();
    let log_ratio = raw.max(0.0);
    let j_const = j_at(t, geo.m, geo.dim, norms);
    let d_const = j_const + 2.0 * growth / t * log_ratio;
    let r2 = geo.r * geo.r;
    let denominator = r2 * t + 8.0 * geo.m * growth;
    Ok(UcpConstants {
        r: geo.r,
        m: geo.m,
        horizon: t,
        dim: geo.dim,
        a_sup: norms.a_sup,
        a_sq: norms.a_sq(),
        b_sq: b2,
        log_ratio,
        raw_log_ratio: raw,
        d_const,
        j_const,
        denominator,
        delta: r2 * t / denominator,
        beta: 4.0 * geo.m * t * j_const / denominator,
        theta_exponent: 8.0 * geo.m * growth / (r2 * t),
        lambda_tilde: r2 / (16.0 * d_const),
    })
}

impl UcpConstants {
    /// Re-derives the algebraic identities tying the constants together and
    /// returns the largest relative defect.
    pub fn identity_defect(&self) -> f64 {
        let t = self.horizon;
        let growth = (t + 1.0) * (t * self.b_sq).exp();
        let r2 = self.r * self.r;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
        [
            rel(self.delta * self.denominator, r2 * t),
            rel(self.delta, 1.0 / (1.0 + self.theta_exponent)),
            rel(self.beta, 4.0 * self.m * self.j_const / r2 * self.delta),
            if self.log_ratio == 0.0 { (self.d_const - self.j_const).abs() } else { rel(self.d_const - self.j_const, 2.0 * growth / t * self.log_ratio) },
            rel(16.0 * self.d_const * self.lambda_tilde, r2),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `Θ` and `γ` maximized over a uniform grid of `(0, T]`, with `𝒥` evaluated
/// at the running time (substituted) and frozen at `T` (literal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaGamma {
    pub theta: f64,
    pub theta_literal: f64,
    pub gamma: f64,
    /// Argmax of the substituted `Θ(t)`.
    pub theta_at: f64,
}

pub fn theta_gamma(geo: &UcpGeometry, norms: &CoefficientNorms, points: usize) -> ThetaGamma {
    let b2 = norms.b_sq();
    let j_fixed = j_at(geo.horizon, geo.m, geo.dim, norms);
    let r2 = geo.r * geo.r;
    let mut out = ThetaGamma { theta: f64::NEG_INFINITY, theta_literal: f64::NEG_INFINITY, gamma: 0.0, theta_at: 0.0 };
    for i in 1..=points {
        let t = geo.horizon * i as f64 / points as f64;
        let growth = (t + 1.0) * (t * b2).exp();
        let th = t * j_at(t, geo.m, geo.dim, norms) / (2.0 * growth);
        if th > out.theta {
            out.theta = th;
            out.theta_at = t;
        }
        out.theta_literal = out.theta_literal.max(t * j_fixed / (2.0 * growth));
        let g = 8.0 * geo.m * growth;
        out.gamma = out.gamma.max(g / (r2 * t + g));
    }
    out
}

/// `1 - (8λ/r²)(𝒜 + n/2)`.
pub fn bracket(lambda: f64, a_value: f64, r: f64, dim: usize) -> f64 {
    1.0 - 8.0 * lambda / (r * r) * (a_value + dim as f64 / 2.0)
}

/// `{2^{-j}}_{j=0..40}`.
pub fn lambda_grid() -> Vec<f64> {
    (0..=40).map(|j| 0.5f64.powi(j)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSelection {
    pub lambda1: Option<f64>,
    pub a_value: Option<f64>,
    pub bracket: Option<f64>,
    pub profile: Vec<AProfileEntry>,
}

/// Largest grid `λ` with bracket `≥ 1/2`.
pub fn select_lambda(profile: &[AProfileEntry], r: f64, dim: usize) -> LambdaSelection {
    let mut best: Option<&AProfileEntry> = None;
    for e in profile {
        let Some(a) = e.a_value else { continue };
        if a.is_finite() && bracket(e.lambda, a, r, dim) >= 0.5 && best.is_none_or(|b| e.lambda > b.lambda) {
            best = Some(e);
        }
    }
    LambdaSelection {
        lambda1: best.map(|e| e.lambda),
        a_value: best.and_then(|e| e.a_value),
        bracket: best.map(|e| bracket(e.lambda, e.a_value.unwrap(), r, dim)),
        profile: profile.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeBallReport {
    pub lhs: f64,
    pub rhs: f64,
    pub lambda: f64,
    pub bracket: Option<f64>,
    pub pass: bool,
}

/// `E∫_{B_{r₂}}|x-x₀|²y²(T)ϑ(λ) ≤ r₁² E∫_{B_{r₁}}y²(T)ϑ(λ)` with
/// `ϑ(λ) = exp(-|x-x₀|²/(4λ))`.
pub fn three_ball_check(ens: &TrajectoryEnsemble, x0: Point, r1: f64, r2: f64, lambda: f64, rel_tol: f64) -> Result<ThreeBallReport> {
    if !(0.0 < r1 && r1 < r2) {
        return Err(Error::Geometry(format!("need 0 < r₁ < r₂, got {r1}, {r2}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("λ must be positive, got {lambda}")));
    }
    let grid = ens.grid();
    let lim1 = r1 * r1 * (1.0 + 1e-12);
    let lim2 = r2 * r2 * (1.0 + 1e-12);
    let mut wl = vec![0.0; grid.len()];
    let mut wr = vec![0.0; grid.len()];
    for (i, (l, r)) in wl.iter_mut().zip(wr.iter_mut()).enumerate() {
        let d2 = grid.dist_sq(&grid.coord(i), &x0);
        let th = gaussian_factor(lambda, d2);
        if d2 <= lim2 {
            *l = d2 * th;
        }
        if d2 <= lim1 {
            *r = r1 * r1 * th;
        }
    }
    let k = ens.steps();
    let lhs = weighted_mass(ens, k, &wl);
    let rhs = weighted_mass(ens, k, &wr);
    Ok(ThreeBallReport { lhs, rhs, lambda, bracket: None, pass: lhs <= rhs * (1.0 + rel_tol) })
}

/// Both sides of the interpolation inequality, in log space as well.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UcpReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub delta: f64,
    pub beta: f64,
    pub lambda_tilde: f64,
    pub pass: bool,
    pub note: Option<String>,
}

pub fn quantitative_ucp_check(masses: &EndpointMasses, consts: &UcpConstants, rel_tol: f64) -> UcpReport {
    let d = consts.delta;
    if masses.terminal == 0.0 {
        return UcpReport {
            lhs: 0.0,
            rhs: 0.0,
            ln_lhs: f64::NEG_INFINITY,
            ln_rhs: f64::NEG_INFINITY,
            delta: d,
            beta: consts.beta,
            lambda_tilde: consts.lambda_tilde,
            pass: true,
            note: Some("terminal state vanishes: backward-uniqueness branch".into()),
        };
    }
    let ln_lhs = masses.terminal.ln();
    let ln_rhs = d * 2f64.ln() + consts.beta + (1.0 - d) * masses.initial.ln() + d * masses.local.ln();
    UcpReport {
        lhs: masses.terminal,
        rhs: ln_rhs.exp(),
        ln_lhs,
        ln_rhs,
        delta: d,
        beta: consts.beta,
        lambda_tilde: consts.lambda_tilde,
        pass: ln_lhs <= ln_rhs + rel_tol.ln_1p(),
        note: None,
    }
}

impl UcpReport {
    pub fn record(&self, name: &str) -> CheckRecord {
        let r = CheckRecord::le_log(name, self.ln_lhs, self.ln_rhs, 0.0);
        let r = CheckRecord { pass: self.pass, ..r };
        match &self.note {
            Some(n) => r.with_note(n.clone()),
            None => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStep {
    pub role: &'static str,
    pub center: Point,
    pub radius: f64,
    pub relative_mass: f64,
    pub vanishing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationReport {
    pub steps: Vec<ChainStep>,
    /// Index of the first step that is not numerically vanishing.
    pub first_nonvanishing: Option<usize>,
    pub reaches_target: bool,
    pub global_mass: f64,
}

/// Walks `B, S₁, S̃₁, S₂, …, S_m, B̃` and reports the relative terminal mass
/// on each ball.
pub fn propagate_vanishing(ens: &TrajectoryEnsemble, seed: &Ball, target: &Ball) -> Result<PropagationReport> {
    let chain = ball_chain(seed, target, ens.grid())?;
    let k = ens.steps();
    let global = global_mass(ens, k);
    let mut balls: Vec<(&'static str, Ball)> = vec![("seed", *seed)];
    for i in 0..chain.len() {
        balls.push(("ball", chain.balls[i]));
        if i < chain.bridges.len() {
            balls.push(("bridge", chain.bridges[i]));
        }
    }
    balls.push(("target", *target));
    let steps: Vec<ChainStep> = balls
        .into_iter()
        .map(|(role, b)| {
            let rel = if global > 0.0 { ball_mass(ens, k, &b) / global } else { 0.0 };
            ChainStep { role, center: b.center, radius: b.radius, relative_mass: rel, vanishing: rel <= VANISHING_THRESHOLD }
        })
        .collect();
    let first = steps.iter().position(|s| !s.vanishing);
    Ok(PropagationReport { reaches_target: first.is_none(), first_nonvanishing: first, steps, global_mass: global })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{solve_forward, CoefficientField};
    use crate::noise::{build_tree, NoiseModel, TimeMesh};
    use approx::assert_relative_eq;

    fn norms(a: f64, b: f64) -> CoefficientNorms {
        CoefficientNorms { a_sup: a, b_w1: b }
    }

    fn geo(r: f64, m: f64, t: f64) -> UcpGeometry {
        UcpGeometry { r, m, horizon: t, dim: 1 }
    }

    #[test]
    fn delta_by_hand() {
        let masses = EndpointMasses { initial: 2.0, terminal: 1.0, local: 0.5 };
        let c = compute_constants(&masses, &geo(0.1, 0.25, 1.0), &norms(0.0, 0.0)).unwrap();
        assert_relative_eq!(c.delta, 0.01 / 4.01, max_relative = 1e-15);
        assert!(c.identity_defect() < 1e-14);
        // J = 2(1/4) + 1/2
        assert_relative_eq!(c.j_const, 1.0, max_relative = 1e-15);
        assert_relative_eq!(c.d_const, 1.0 + 4.0 * 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn delta_half_when_terms_balance() {
        let t: f64 = 0.5;
        let b = 0.3;
        let m = 0.25;
        let r2 = 8.0 * m * (t + 1.0) * (t * b * b).exp() / t;
        let masses = EndpointMasses { initial: 1.0, terminal: 1.0, local: 1.0 };
        let c = compute_constants(&masses, &geo(r2.sqrt(), m, t), &norms(0.0, b)).unwrap();
        assert_relative_eq!(c.delta, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn delta_decreases_in_b() {
        let masses = EndpointMasses { initial: 1.0, terminal: 1.0, local: 1.0 };
        let mut prev = 1.0;
        for b in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let d = compute_constants(&masses, &geo(0.1, 0.25, 1.0), &norms(0.0, b)).unwrap().delta;
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn delta_nondecreasing_in_r() {
        let masses = EndpointMasses { initial: 1.0, terminal: 0.5, local: 0.1 };
        let ds: Vec<f64> = (1..20).map(|i| compute_constants(&masses, &geo(0.02 * i as f64, 0.25, 0.5), &norms(1.0, 0.5)).unwrap().delta).collect();
        assert!(ds.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn growth_clamps_log() {
        let masses = EndpointMasses { initial: 1.0, terminal: 3.0, local: 1.0 };
        let c = compute_constants(&masses, &geo(0.1, 0.25, 1.0), &norms(1.0, 0.0)).unwrap();
        assert_eq!(c.log_ratio, 0.0);
        assert!(c.raw_log_ratio < 0.0);
        assert_eq!(c.d_const, c.j_const);
        assert!(c.identity_defect() < 1e-14);
    }

    #[test]
    fn vanishing_terminal_is_signalled() {
        let masses = EndpointMasses { initial: 1.0, terminal: 0.0, local: 0.0 };
        assert_eq!(compute_constants(&masses, &geo(0.1, 0.25, 1.0), &norms(0.0, 0.0)), Err(Error::VanishingTerminal));
    }

    #[test]
    fn lambda_with_zero_a() {
        let r = 0.3;
        let profile: Vec<AProfileEntry> =
            lambda_grid().into_iter().map(|l| AProfileEntry { lambda: l, a_value: Some(0.0), h_ratio: None, lambda_n_terminal: None }).collect();
        let s = select_lambda(&profile, r, 1);
        let l = s.lambda1.unwrap();
        assert!(l <= r * r / 8.0 && 2.0 * l > r * r / 8.0);
    }

    #[test]
    fn lambda_with_huge_a_fails() {
        let profile: Vec<AProfileEntry> =
            lambda_grid().into_iter().map(|l| AProfileEntry { lambda: l, a_value: Some(1e300), h_ratio: None, lambda_n_terminal: None }).collect();
        assert!(select_lambda(&profile, 0.1, 1).lambda1.is_none());
    }

    #[test]
    fn lambda_with_reciprocal_a_matches_scan() {
        for r in [2.0, 3.9, 4.1, 6.0] {
            let profile: Vec<AProfileEntry> =
                lambda_grid().into_iter().map(|l| AProfileEntry { lambda: l, a_value: Some(1.0 / l), h_ratio: None, lambda_n_terminal: None }).collect();
            let s = select_lambda(&profile, r, 1);
            let scan = lambda_grid()
                .into_iter()
                .filter(|l| 1.0 - 8.0 / (r * r) * (1.0 + l / 2.0) >= 0.5)
                .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.max(l))));
            assert_eq!(s.lambda1, scan);
            assert_eq!(s.lambda1.is_some(), r * r > 16.0);
        }
    }

    #[test]
    fn theta_gamma_ranges() {
        let g = geo(0.1, 0.25, 0.5);
        let tg = theta_gamma(&g, &norms(1.0, 0.5), THETA_GRID);
        assert!(tg.gamma > 0.0 && tg.gamma < 1.0);
        assert!(tg.theta >= tg.theta_literal);
        assert_relative_eq!(tg.theta_at, 0.5 / 1024.0);
    }

    fn tiny_ensemble() -> TrajectoryEnsemble {
        let grid = SpatialGrid::interval(0.0, 1.0, 31).unwrap();
        let noise = NoiseModel::Tree(build_tree(TimeMesh::new(0.05, 4).unwrap(), 16).unwrap());
        let c = CoefficientField::constant(0.0, 0.0, &grid, noise.mesh()).unwrap();
        let (v, _) = grid.eigenmode(&[1]);
        solve_forward(&v, &c, &noise, &grid).unwrap()
    }

    #[test]
    fn eigenmode_inequality_is_strict_and_scale_invariant() {
        let ens = tiny_ensemble();
        let grid = ens.grid().clone();
        let ball = Ball::interval(0.5, 0.1).unwrap();
        let masses = EndpointMasses::measure(&ens, &ball);
        let g = UcpGeometry::new(&grid, &[0.5, 0.0], 0.1, 0.05).unwrap();
        let c = compute_constants(&masses, &g, &norms(0.0, 0.0)).unwrap();
        let r1 = quantitative_ucp_check(&masses, &c, 0.0);
        assert!(r1.pass && r1.ln_lhs < r1.ln_rhs);
        let masses3 = EndpointMasses::measure(&ens.scaled(3.0), &ball);
        let c3 = compute_constants(&masses3, &g, &norms(0.0, 0.0)).unwrap();
        let r3 = quantitative_ucp_check(&masses3, &c3, 0.0);
        assert_eq!(r1.pass, r3.pass);
        assert_relative_eq!(r3.ln_rhs - r1.ln_rhs, 9f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn three_ball_supported_inside_inner_ball() {
        let grid = SpatialGrid::interval(0.0, 1.0, 31).unwrap();
        let noise = NoiseModel::Tree(build_tree(TimeMesh::new(0.05, 1).unwrap(), 16).unwrap());
        let y: Vec<f64> = grid.coords().iter().map(|p| if (p[0] - 0.5).abs() < 0.07 { 1.0 } else { 0.0 }).collect();
        let ens = TrajectoryEnsemble::from_levels(grid, noise, vec![y.clone(), [y.clone(), y].concat()], "synthetic").unwrap();
        let r = three_ball_check(&ens, [0.5, 0.0], 0.08, 0.2, 0.01, 0.0).unwrap();
        assert!(r.pass && r.lhs < r.rhs);
        let scaled = three_ball_check(&ens.scaled(3.0), [0.5, 0.0], 0.08, 0.2, 0.01, 0.0).unwrap();
        assert_relative_eq!(scaled.lhs, 9.0 * r.lhs, max_relative = 1e-14);
        assert_relative_eq!(scaled.rhs, 9.0 * r.rhs, max_relative = 1e-14);
    }

    #[test]
    fn propagation_on_zero_and_eigenmode() {
        let ens = tiny_ensemble();
        let seed = Ball::interval(0.3, 0.05).unwrap();
        let target = Ball::interval(0.7, 0.05).unwrap();
        let p = propagate_vanishing(&ens, &seed, &target).unwrap();
        assert_eq!(p.first_nonvanishing, Some(0));
        let z = propagate_vanishing(&ens.scaled(0.0), &seed, &target).unwrap();
        assert!(z.reaches_target);
    }

    #[test]
    fn propagation_stops_at_the_interface() {
        let grid = SpatialGrid::interval(0.0, 1.0, 63).unwrap();
        let noise = NoiseModel::Tree(build_tree(TimeMesh::new(0.05, 1).unwrap(), 16).unwrap());
        // Odd reflection of a bump on (0.5, 1), zeroed on the left half.
        let y: Vec<f64> = grid.coords().iter().map(|p| if p[0] > 0.5 { (2.0 * std::f64::consts::PI * p[0]).sin().abs() } else { 0.0 }).collect();
        let ens = TrajectoryEnsemble::from_levels(grid, noise, vec![y.clone(), [y.clone(), y].concat()], "synthetic").unwrap();
        let p = propagate_vanishing(&ens, &Ball::interval(0.2, 0.05).unwrap(), &Ball::interval(0.8, 0.05).unwrap()).unwrap();
        let first = p.first_nonvanishing.unwrap();
        assert!(first > 0);
        for s in &p.steps[..first] {
            assert!(s.center[0] + s.radius <= 0.5 + 1e-12);
        }
        let s = &p.steps[first];
        assert!(s.center[0] + s.radius > 0.5);
    }
}
