//! Localized field `Φ = φy`, source `F = aΦ - yΔφ - 2∇φ·∇y`, the weighted
//! quantities `H = E∫Φ²K`, `D = E∫|∇Φ|²K`, `N = 2D/H`, and checks of the
//! identity for `H'` and of the differential inequality for `N`.

use serde::Serialize;

use crate::domain::{CutoffFunction, HeatKernelWeight, Point, SpatialGrid};
use crate::error::{Error, Result};
use crate::forward::{CoefficientField, TrajectoryEnsemble};

/// `N` is reported only where `H ≥ VALIDITY_RATIO · H(0)`.
pub const VALIDITY_RATIO: f64 = 1e-14;

#[derive(Debug, Clone)]
pub enum Localization {
    /// `φ ≡ 1`; used on convex domains where `y` itself vanishes on `∂G`.
    Identity,
    Cutoff(CutoffFunction),
}

/// `Φ` and `F` on every level and state, laid out like the ensemble.
#[derive(Debug, Clone)]
pub struct LocalizedField {
    pub phi: Vec<Vec<f64>>,
    pub source: Vec<Vec<f64>>,
    pub identity: bool,
}

impl LocalizedField {
    pub fn phi_state(&self, level: usize, s: usize, n: usize) -> &[f64] {
        &self.phi[level][s * n..(s + 1) * n]
    }

    pub fn source_state(&self, level: usize, s: usize, n: usize) -> &[f64] {
        &self.source[level][s * n..(s + 1) * n]
    }
}

/// Builds `Φ` and `F`. In identity mode `F = a y`, which is what the source
/// term reduces to when `φ ≡ 1`.
pub fn localize(ens: &TrajectoryEnsemble, loc: &Localization, coeffs: &CoefficientField) -> Result<LocalizedField> {
    let grid = ens.grid();
    let n = grid.len();
    if let Localization::Cutoff(c) = loc {
        if c.phi.len() != n {
            return Err(Error::Shape("cutoff and ensemble grids differ".into()));
        }
    }
    let mesh = *ens.mesh();
    let mut phi = Vec::with_capacity(ens.steps() + 1);
    let mut source = Vec::with_capacity(ens.steps() + 1);
    for k in 0..=ens.steps() {
        let states = ens.states(k);
        let mut pl = vec![0.0; states * n];
        let mut fl = vec![0.0; states * n];
        let a_det = coeffs.a.is_deterministic().then(|| coeffs.a.eval(grid, &mesh, k.min(mesh.steps()), &[]));
        for s in 0..states {
            let y = ens.state(k, s);
            let a = match &a_det {
                Some(a) => a.clone(),
                None => coeffs.a.eval(grid, &mesh, k, &ens.noise().history(k, s)),
            };
            let p = &mut pl[s * n..(s + 1) * n];
            let f = &mut fl[s * n..(s + 1) * n];
            match loc {
                Localization::Identity => {
                    p.copy_from_slice(y);
                    for i in 0..n {
                        f[i] = a[i] * y[i];
                    }
                }
                Localization::Cutoff(c) => {
                    let gy = grid.gradient(y);
                    for i in 0..n {
                        p[i] = c.phi[i] * y[i];
                        let dot = c.grad[i][0] * gy[i][0] + c.grad[i][1] * gy[i][1];
                        f[i] = a[i] * p[i] - y[i] * c.laplacian[i] - 2.0 * dot;
                    }
                }
            }
        }
        phi.push(pl);
        source.push(fl);
    }
    Ok(LocalizedField { phi, source, identity: matches!(loc, Localization::Identity) })
}

/// Expected weighted integrals at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelMoments {
    /// `E∫Φ²K`.
    pub h: f64,
    /// `E∫|∇Φ|²K`.
    pub d: f64,
    /// `E∫ΦFK`.
    pub phi_f: f64,
    /// `E∫b²Φ²K`.
    pub b2_phi2: f64,
    /// `E∫F²K`.
    pub f2: f64,
}

/// Weighted integrals on the full grid (trapezoid rule; gradients one-sided
/// on boundary nodes).
pub fn level_moments(ens: &TrajectoryEnsemble, field: &LocalizedField, coeffs: &CoefficientField, weight: &HeatKernelWeight) -> Result<Vec<LevelMoments>> {
    let grid = ens.grid();
    let mesh = *ens.mesh();
    if (weight.horizon() - mesh.horizon()).abs() > 1e-12 * mesh.horizon() {
        return Err(Error::Config(format!("kernel horizon {} differs from trajectory horizon {}", weight.horizon(), mesh.horizon())));
    }
    let n = grid.len();
    let mut out = Vec::with_capacity(ens.steps() + 1);
    for k in 0..=ens.steps() {
        let t = mesh.time(k);
        let kf = weight.eval_full(grid, t)?;
        let ki = weight.eval(grid, t)?;
        let vol = grid.cell_volume();
        let b_step = k.min(mesh.steps() - 1).max(0);
        let b_det = coeffs.b.is_deterministic().then(|| coeffs.b.eval(grid, &mesh, if k == mesh.steps() { k } else { b_step }, &[]));
        let v = ens.expect_many(k, 5, |s, _| {
            let phi = field.phi_state(k, s, n);
            let src = field.source_state(k, s, n);
            let b = match &b_det {
                Some(b) => b.clone(),
                None => coeffs.b.eval(grid, &mesh, k, &ens.noise().history(k, s)),
            };
            let g = grid.gradient_full(phi);
            let d_terms: Vec<f64> = g.iter().zip(&kf).map(|(gv, kv)| (gv[0] * gv[0] + gv[1] * gv[1]) * kv).collect();
            let mut h = Vec::with_capacity(n);
            let mut pf = Vec::with_capacity(n);
            let mut bp = Vec::with_capacity(n);
            let mut ff = Vec::with_capacity(n);
            for i in 0..n {
                let w = ki[i] * vol;
                h.push(phi[i] * phi[i] * w);
                pf.push(phi[i] * src[i] * w);
                bp.push(b[i] * b[i] * phi[i] * phi[i] * w);
                ff.push(src[i] * src[i] * w);
            }
            vec![crate::pairwise_sum(&h), grid.integrate_full(&d_terms), crate::pairwise_sum(&pf), crate::pairwise_sum(&bp), crate::pairwise_sum(&ff)]
        });
        out.push(LevelMoments { h: v[0], d: v[1], phi_f: v[2], b2_phi2: v[3], f2: v[4] });
    }
    Ok(out)
}

/// `H`, `D` and `N` over the time nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTrace {
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub n: Vec<Option<f64>>,
    pub lambda: f64,
    pub center: Point,
    pub horizon: f64,
    pub moments: Vec<LevelMoments>,
}

impl FrequencyTrace {
    pub fn valid(&self, k: usize) -> bool {
        self.n[k].is_some()
    }
}

pub fn frequency_trace(times: Vec<f64>, moments: Vec<LevelMoments>, weight: &HeatKernelWeight) -> FrequencyTrace {
    let h: Vec<f64> = moments.iter().map(|m| m.h).collect();
    let d: Vec<f64> = moments.iter().map(|m| m.d).collect();
    let floor = VALIDITY_RATIO * h[0];
    let n = h.iter().zip(&d).map(|(hv, dv)| (*hv > 0.0 && *hv >= floor).then(|| 2.0 * dv / hv)).collect();
    FrequencyTrace { times, h, d, n, lambda: weight.lambda(), center: weight.center(), horizon: weight.horizon(), moments }
}

/// Localizes, integrates and assembles the trace in one call.
pub fn compute_hdn(ens: &TrajectoryEnsemble, loc: &Localization, coeffs: &CoefficientField, weight: &HeatKernelWeight) -> Result<FrequencyTrace> {
    let field = localize(ens, loc, coeffs)?;
    let moments = level_moments(ens, &field, coeffs, weight)?;
    Ok(frequency_trace(ens.mesh().times(), moments, weight))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    /// `(H_{k+1} - H_k)/Δt - RHS_k`.
    pub series: Vec<f64>,
    /// `max_k |res_k| / max H`.
    pub max_normalized: f64,
    /// `Σ_k |res_k| Δt / max H`.
    pub integrated_normalized: f64,
}

/// Residual of `H' = -2D + 2E∫ΦFK + E∫b²Φ²K` with a forward difference in
/// time. In identity mode `F = ay` and this is the convex-domain identity.
pub fn hprime_identity_residual(trace: &FrequencyTrace) -> IdentityResidual {
    let m = &trace.moments;
    let steps = m.len() - 1;
    let series: Vec<f64> = (0..steps)
        .map(|k| {
            let dt = trace.times[k + 1] - trace.times[k];
            let rhs = -2.0 * m[k].d + 2.0 * m[k].phi_f + m[k].b2_phi2;
            (m[k + 1].h - m[k].h) / dt - rhs
        })
        .collect();
    let hmax = trace.h.iter().cloned().fold(0.0, f64::max);
    if hmax == 0.0 {
        return IdentityResidual { series, max_normalized: 0.0, integrated_normalized: 0.0 };
    }
    let max_normalized = series.iter().fold(0.0_f64, |s, r| s.max(r.abs())) / hmax;
    let integrated = series.iter().enumerate().map(|(k, r)| r.abs() * (trace.times[k + 1] - trace.times[k])).sum::<f64>();
    IdentityResidual { series, max_normalized, integrated_normalized: integrated / hmax }
}

/// Right-hand side form of the frequency inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundForm {
    /// Cutoff case: `∫(1/(T-τ+λ) + 2β²)N + 2β²(t-s) + ∫E∫F²K/H` with `β`
    /// the `W^{1,∞}` norm of `b` over the cutoff support.
    Cutoff { b_local: f64 },
    /// Convex case: `∫(1/(T-τ+λ) + ‖b‖²)N + (‖a‖² + 2‖b‖²)(t-s)`.
    Convex { a_sup: f64, b_w1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyBoundRecord {
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `E∫F²K / H` on the levels of `[s, t]` (cutoff form only).
    pub f_term: Vec<f64>,
}

fn trapezoid(times: &[f64], vals: &[f64]) -> f64 {
    times.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Evaluates `N(t) - N(s) ≤ RHS` between levels `i ≤ j`.
pub fn frequency_bound_check(trace: &FrequencyTrace, form: BoundForm, i: usize, j: usize) -> Result<FrequencyBoundRecord> {
    if i > j || j >= trace.times.len() {
        return Err(Error::Shape(format!("bad level interval [{i}, {j}]")));
    }
    if (i..=j).any(|k| !trace.valid(k)) {
        return Err(Error::Precondition("H vanishes inside the interval".into()));
    }
    let times = &trace.times[i..=j];
    let n: Vec<f64> = (i..=j).map(|k| trace.n[k].unwrap()).collect();
    let lam = trace.lambda;
    let big_t = trace.horizon;
    let lhs = n[n.len() - 1] - n[0];
    let span = times[times.len() - 1] - times[0];
    let (rhs, f_term) = match form {
        BoundForm::Cutoff { b_local } => {
            let b2 = b_local * b_local;
            let coef: Vec<f64> = times.iter().zip(&n).map(|(t, nv)| (1.0 / (big_t - t + lam) + 2.0 * b2) * nv).collect();
            let f_term: Vec<f64> = (i..=j).map(|k| trace.moments[k].f2 / trace.h[k]).collect();
            (trapezoid(times, &coef) + 2.0 * b2 * span + trapezoid(times, &f_term), f_term)
        }
        BoundForm::Convex { a_sup, b_w1 } => {
            let b2 = b_w1 * b_w1;
            let coef: Vec<f64> = times.iter().zip(&n).map(|(t, nv)| (1.0 / (big_t - t + lam) + b2) * nv).collect();
            (trapezoid(times, &coef) + (a_sup * a_sup + 2.0 * b2) * span, Vec::new())
        }
    };
    Ok(FrequencyBoundRecord { s: times[0], t: times[times.len() - 1], lhs, rhs, margin: rhs - lhs, f_term })
}

/// Smallest margin over every level pair of the valid range.
pub fn frequency_bound_sweep(trace: &FrequencyTrace, form: BoundForm) -> Result<FrequencyBoundRecord> {
    let last = trace.times.len() - 1;
    let mut worst: Option<FrequencyBoundRecord> = None;
    for i in 0..=last {
        for j in i..=last {
            if (i..=j).any(|k| !trace.valid(k)) {
                continue;
            }
            let r = frequency_bound_check(trace, form, i, j)?;
            if worst.as_ref().is_none_or(|w| r.margin < w.margin) {
                worst = Some(r);
            }
        }
    }
    worst.ok_or_else(|| Error::Precondition("no level with H > 0".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignEntry {
    pub coord: Point,
    pub normal: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignAudit {
    pub entries: Vec<SignEntry>,
    pub min_value: f64,
    pub pass: bool,
}

/// `(x - x₀)·ν ≥ 0` at every boundary node of the box.
pub fn boundary_sign_audit(grid: &SpatialGrid, x0: &Point) -> SignAudit {
    let mut entries = Vec::new();
    for node in grid.boundary_nodes() {
        for nu in &node.normals {
            let value = (0..grid.dim()).map(|a| (node.coord[a] - x0[a]) * nu[a]).sum();
            entries.push(SignEntry { coord: node.coord, normal: *nu, value });
        }
    }
    let min_value = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    SignAudit { pass: min_value >= 0.0, entries, min_value }
}

/// One entry of the `𝒜(λ)` profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AProfileEntry {
    pub lambda: f64,
    /// `𝒜(λ)`, or `None` when `H` vanishes on the window.
    pub a_value: Option<f64>,
    /// `𝒠(λ) = H(T - 2ε)/H(T - ε)`.
    pub h_ratio: Option<f64>,
    /// `λ N(T)`, which `𝒜(λ)` bounds.
    pub lambda_n_terminal: Option<f64>,
}

/// `𝒜(λ) = ((T+λ)/ε) e^{2Tβ²} [ln(H(T-2ε)/H(T-ε)) + ε + ε(1+2T)β² +
/// (ε+1)∫_{T-2ε}^T E∫F²K/H]` with `ε = eps_steps · Δt` and `β` the
/// `W^{1,∞}` norm of `b` on the outer cutoff ball.
pub fn a_profile(
    ens: &TrajectoryEnsemble,
    field: &LocalizedField,
    coeffs: &CoefficientField,
    center: Point,
    b_local: f64,
    eps_steps: usize,
    lambdas: &[f64],
) -> Result<Vec<AProfileEntry>> {
    let mesh = *ens.mesh();
    let steps = mesh.steps();
    if eps_steps == 0 || 2 * eps_steps > steps {
        return Err(Error::Config(format!("ε must span between 1 and {} steps, got {eps_steps}", steps / 2)));
    }
    let big_t = mesh.horizon();
    let eps = eps_steps as f64 * mesh.dt();
    let b2 = b_local * b_local;
    let window = steps - 2 * eps_steps;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let w = HeatKernelWeight::new(big_t, lam, center, ens.grid().dim())?;
        let moments = level_moments_window(ens, field, coeffs, &w, window)?;
        let h = |k: usize| moments[k - window].h;
        let ok = (window..=steps).all(|k| h(k) > 0.0);
        if !ok {
            out.push(AProfileEntry { lambda: lam, a_value: None, h_ratio: None, lambda_n_terminal: None });
            continue;
        }
        let times: Vec<f64> = (window..=steps).map(|k| mesh.time(k)).collect();
        let fterm: Vec<f64> = (window..=steps).map(|k| moments[k - window].f2 / h(k)).collect();
        let ratio = h(window) / h(window + eps_steps);
        let bracket = ratio.ln() + eps + eps * (1.0 + 2.0 * big_t) * b2 + (eps + 1.0) * trapezoid(&times, &fterm);
        let a = (big_t + lam) / eps * (2.0 * big_t * b2).exp() * bracket;
        let last = &moments[steps - window];
        out.push(AProfileEntry { lambda: lam, a_value: Some(a), h_ratio: Some(ratio), lambda_n_terminal: Some(lam * 2.0 * last.d / last.h) });
    }
    Ok(out)
}

fn level_moments_window(
    ens: &TrajectoryEnsemble,
    field: &LocalizedField,
    coeffs: &CoefficientField,
    weight: &HeatKernelWeight,
    from: usize,
) -> Result<Vec<LevelMoments>> {
    // The full pass is cheap at desk scale; slicing keeps one code path.
    Ok(level_moments(ens, field, coeffs, weight)?.split_off(from))
}
