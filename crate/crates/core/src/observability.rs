//! Observability from a measurable set of times: density-point sequences,
//! the `ε`-interpolation split, the `ε_m` recursion, the telescoping sum and
//! the final constant `C = 2α₁⁻¹ e^{2C(a,b,T)} e^Θ`.
//!
//! Quantities that over- or underflow (`ε_m`, `α_m`, `σ_m`, `C`) are kept as
//! natural logarithms.

use serde::Serialize;

use crate::domain::Ball;
use crate::error::{Error, Result};
use crate::forward::{CoefficientNorms, TrajectoryEnsemble};
use crate::report::CheckRecord;
use crate::ucp::{ball_mass, global_mass, theta_gamma, ThetaGamma, UcpGeometry, THETA_GRID};

pub const DEFAULT_RATIO: f64 = 2.0;
pub const DEFAULT_DEPTH: usize = 8;
pub const SCAN_POINTS: usize = 1024;
pub const SIGMA_THRESHOLD: f64 = 1e-8;

/// Finite union of disjoint open intervals inside `(0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurableTimeSet {
    intervals: Vec<(f64, f64)>,
    horizon: f64,
}

impl MeasurableTimeSet {
    pub fn new(mut intervals: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Config("time set is empty".into()));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(a, b) in &intervals {
            if !(0.0 <= a && a < b && b <= horizon) {
                return Err(Error::Config(format!("interval ({a}, {b}) is not inside (0, {horizon})")));
            }
        }
        if intervals.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::Config("time intervals overlap".into()));
        }
        Ok(Self { intervals, horizon })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// `|E ∩ (lo, hi)|`.
    pub fn intersect(&self, lo: f64, hi: f64) -> f64 {
        self.intervals.iter().map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0)).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < t && t < b)
    }

    /// Earliest interval of maximal length (lengths equal up to round-off tie).
    pub fn longest(&self) -> (f64, f64) {
        let max = self.intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
        *self.intervals.iter().find(|(a, b)| b - a >= max * (1.0 - 1e-9)).expect("non-empty set")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySequence {
    pub t0: f64,
    pub t1: f64,
    pub z: f64,
    pub depth: usize,
    /// `t_1, …, t_{depth+2}`.
    pub times: Vec<f64>,
    /// `|E ∩ (t_{m+1}, t_m)|` for `m = 1..=depth+1`.
    pub gaps: Vec<f64>,
    /// `(t_m - t_{m+1}) / |E ∩ (t_{m+1}, t_m)|` for `m = 1..=depth`.
    pub factors: Vec<f64>,
    pub holds: bool,
    /// Largest `(t_m - t_{m+1}) - 3|E ∩ gap|` of the selected (or best) `t₁`.
    pub worst_violation: f64,
}

fn sequence_for(e: &MeasurableTimeSet, t0: f64, t1: f64, z: f64, depth: usize) -> (Vec<f64>, Vec<f64>) {
    let times: Vec<f64> = (0..depth + 2).map(|m| t0 + (t1 - t0) / z.powi(m as i32)).collect();
    let gaps = times.windows(2).map(|w| e.intersect(w[1], w[0])).collect();
    (times, gaps)
}

fn violation(times: &[f64], gaps: &[f64], depth: usize) -> f64 {
    (0..depth).map(|m| (times[m] - times[m + 1]) - 3.0 * gaps[m]).fold(f64::NEG_INFINITY, f64::max)
}

/// `t₀` is the midpoint of the longest interval of `E`; `t₁` is the first
/// point of the dyadic scan `t₀ + (T - t₀)2^{-j}`, `j = 1..=SCAN_POINTS`, for
/// which the 3-factor condition holds for every `m ≤ depth`.
pub fn density_sequence(e: &MeasurableTimeSet, z: f64, depth: usize) -> Result<DensitySequence> {
    if !(z > 1.0) {
        return Err(Error::Config(format!("ratio z must exceed 1, got {z}")));
    }
    if depth == 0 {
        return Err(Error::Config("depth must be at least 1".into()));
    }
    let (a, b) = e.longest();
    let t0 = 0.5 * (a + b);
    let span = e.horizon() - t0;
    let mut best: Option<(f64, f64)> = None;
    for j in 1..=SCAN_POINTS {
        let t1 = t0 + span * 0.5f64.powi(j as i32);
        if t1 <= t0 {
            break;
        }
        let (times, gaps) = sequence_for(e, t0, t1, z, depth);
        let v = violation(&times, &gaps, depth);
        if v <= 0.0 {
            best = Some((t1, v));
            break;
        }
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((t1, v));
        }
    }
    let (t1, _) = best.expect("scan is non-empty");
    let (times, gaps) = sequence_for(e, t0, t1, z, depth);
    let worst_violation = violation(&times, &gaps, depth);
    let factors = (0..depth).map(|m| (times[m] - times[m + 1]) / gaps[m]).collect();
    let holds = times.windows(2).all(|w| w[1] < w[0]) && worst_violation <= 0.0;
    Ok(DensitySequence { t0, t1, z, depth, times, gaps, factors, holds, worst_violation })
}

/// Which form of the energy growth rate `C(a,b)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyConstant {
    /// `2‖a‖ + ‖b‖²`, as produced by the Gronwall step.
    Linear,
    /// `2‖a‖² + ‖b‖²`.
    Squared,
    /// The larger of the two.
    Larger,
}

impl EnergyConstant {
    pub fn rate(self, norms: &CoefficientNorms) -> f64 {
        let d = 2.0 * norms.a_sup + norms.b_sq();
        let p = 2.0 * norms.a_sq() + norms.b_sq();
        match self {
            EnergyConstant::Linear => d,
            EnergyConstant::Squared => p,
            EnergyConstant::Larger => d.max(p),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Self::Linear),
            "squared" => Some(Self::Squared),
            "larger" => Some(Self::Larger),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSequence {
    pub ln_eps: Vec<f64>,
    pub ln_alpha: Vec<f64>,
    pub ln_sigma: Vec<f64>,
    /// `ln ε₁ = -ln(3z e^C)`, the induction bound.
    pub ln_bound: f64,
    pub bound_holds: bool,
    /// `max_m |ln σ_m - (ln α_{m+1} - C)|`.
    pub matching_defect: f64,
    pub sigma_decreasing: bool,
}

/// `ε^γ_{m+1} = ε_m^{γ+1} e^C |E∩gap_m| / |E∩gap_{m+1}|` from `ε₁ = 1/(3z e^C)`;
/// `α_m = ε_m^γ |E∩gap_m|`, `σ_m = ε_m^{γ+1} |E∩gap_m|`.
pub fn epsilon_sequence(gamma: f64, c_abt: f64, z: f64, gaps: &[f64]) -> Result<EpsilonSequence> {
    if gaps.len() < 2 || gaps.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::Precondition("gap measures must be positive".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("γ must be positive, got {gamma}")));
    }
    let ln_bound = -(3.0 * z).ln() - c_abt;
    let mut ln_eps = vec![ln_bound];
    for m in 0..gaps.len() - 1 {
        let next = ((gamma + 1.0) * ln_eps[m] + c_abt + gaps[m].ln() - gaps[m + 1].ln()) / gamma;
        ln_eps.push(next);
    }
    let ln_alpha: Vec<f64> = ln_eps.iter().zip(gaps).map(|(e, g)| gamma * e + g.ln()).collect();
    let ln_sigma: Vec<f64> = ln_eps.iter().zip(gaps).map(|(e, g)| (gamma + 1.0) * e + g.ln()).collect();
    let bound_holds = ln_eps.iter().all(|e| *e <= ln_bound + 1e-12 * ln_bound.abs());
    let matching_defect = (0..gaps.len() - 1).map(|m| (ln_sigma[m] - (ln_alpha[m + 1] - c_abt)).abs()).fold(0.0, f64::max);
    let sigma_decreasing = ln_sigma.windows(2).all(|w| w[1] < w[0]);
    Ok(EpsilonSequence { ln_eps, ln_alpha, ln_sigma, ln_bound, bound_holds, matching_defect, sigma_decreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservabilityConstants {
    pub theta_gamma: ThetaGamma,
    pub energy_variant: EnergyConstant,
    pub rate: f64,
    /// `C(a,b,T) = rate·T`.
    pub c_abt: f64,
    pub z: f64,
    pub sequence: EpsilonSequence,
    /// `ln C = ln 2 - ln α₁ + 2C(a,b,T) + Θ`.
    pub ln_c_explicit: f64,
    /// Same with the literal-`T` `Θ`.
    pub ln_c_explicit_literal: f64,
}

pub fn observability_constants(geo: &UcpGeometry, norms: &CoefficientNorms, variant: EnergyConstant, seq: &DensitySequence) -> Result<ObservabilityConstants> {
    let tg = theta_gamma(geo, norms, THETA_GRID);
    let rate = variant.rate(norms);
    let c_abt = rate * geo.horizon;
    let sequence = epsilon_sequence(tg.gamma, c_abt, seq.z, &seq.gaps)?;
    let base = 2f64.ln() - sequence.ln_alpha[0] + 2.0 * c_abt;
    Ok(ObservabilityConstants {
        theta_gamma: tg,
        energy_variant: variant,
        rate,
        c_abt,
        z: seq.z,
        sequence,
        ln_c_explicit: base + tg.theta,
        ln_c_explicit_literal: base + tg.theta_literal,
    })
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn ln0(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `‖y(t)‖² ≤ (2/ε^γ) e^Θ ‖y(t)‖²_{B_r} + ε ‖y(0)‖²`, compared in log space.
pub fn interpolation_split(energy_t: f64, local_t: f64, initial: f64, eps: f64, gamma: f64, theta: f64, rel_tol: f64) -> Result<CheckRecord> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::Config(format!("ε must lie in (0,1), got {eps}")));
    }
    let first = 2f64.ln() - gamma * eps.ln() + theta + ln0(local_t);
    let second = eps.ln() + ln0(initial);
    let ln_rhs = ln_add(first, second);
    let ln_lhs = ln0(energy_t);
    Ok(CheckRecord::le_log("interpolation_split", ln_lhs, ln_rhs, rel_tol))
}

/// `E‖y(t)‖²`, `E‖y(t)‖²_{B_r}` and `E‖y(t)‖²_{G₀}` at every time node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub local: Vec<f64>,
    pub control_region: Vec<f64>,
}

impl ObservationSeries {
    pub fn measure(ens: &TrajectoryEnsemble, observation: &Ball, g0: &Ball) -> Self {
        let n = ens.steps();
        Self {
            times: ens.mesh().times(),
            energy: (0..=n).map(|k| global_mass(ens, k)).collect(),
            local: (0..=n).map(|k| ball_mass(ens, k, observation)).collect(),
            control_region: (0..=n).map(|k| ball_mass(ens, k, g0)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| c * c * x).collect();
        Self { times: self.times.clone(), energy: s(&self.energy), local: s(&self.local), control_region: s(&self.control_region) }
    }
}

/// Piecewise-linear interpolation of nodal values.
pub fn interpolate(times: &[f64], vals: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return vals[0];
    }
    if t >= times[n - 1] {
        return vals[n - 1];
    }
    let i = times.partition_point(|s| *s <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    (1.0 - w) * vals[i] + w * vals[i + 1]
}

/// Exact integral of the piecewise-linear interpolant over `(lo, hi)`.
pub fn integrate_linear(times: &[f64], vals: &[f64], lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut knots = vec![lo];
    knots.extend(times.iter().copied().filter(|t| *t > lo && *t < hi));
    knots.push(hi);
    knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (interpolate(times, vals, w[0]) + interpolate(times, vals, w[1]))).sum()
}

/// `∫_{E∩(lo,hi)} v(t) dt`.
pub fn integrate_on_set(e: &MeasurableTimeSet, times: &[f64], vals: &[f64], lo: f64, hi: f64) -> f64 {
    e.intervals().iter().map(|&(a, b)| integrate_linear(times, vals, a.max(lo), b.min(hi))).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelescopingReport {
    pub per_gap: Vec<CheckRecord>,
    pub summed: CheckRecord,
    pub final_check: CheckRecord,
    pub explicit_vs_empirical: CheckRecord,
    pub ln_c_emp: f64,
    pub ln_c_explicit: f64,
    pub c_emp: f64,
    /// `E∫_E∫_{G₀} y²`.
    pub observed_mass: f64,
}

impl TelescopingReport {
    pub fn records(&self) -> Vec<CheckRecord> {
        let mut v = self.per_gap.clone();
        v.push(self.summed.clone());
        v.push(self.final_check.clone());
        v.push(self.explicit_vs_empirical.clone());
        v
    }
}

/// Per-gap inequalities
/// `α_m e^{-C}‖y(t_m)‖² - σ_m‖y(t_{m+1})‖² ≤ 2e^Θ ∫_{E∩gap_m}‖y‖²_{B_r}`,
/// their telescoped sum, and the final
/// `‖y(T)‖² ≤ C ∫_E ‖y‖²_{G₀}`.
pub fn telescoping_check(
    series: &ObservationSeries,
    e: &MeasurableTimeSet,
    seq: &DensitySequence,
    consts: &ObservabilityConstants,
    rel_tol: f64,
) -> Result<TelescopingReport> {
    let depth = seq.depth;
    let theta = consts.theta_gamma.theta;
    let gamma = consts.theta_gamma.gamma;
    let c = consts.c_abt;
    let s = &consts.sequence;
    if s.ln_eps.len() < depth + 1 {
        return Err(Error::Shape("ε sequence shorter than the density sequence".into()));
    }
    let en = |t: f64| interpolate(&series.times, &series.energy, t);
    let mut per_gap = Vec::with_capacity(depth);
    for m in 0..depth {
        let (hi, lo) = (seq.times[m], seq.times[m + 1]);
        let obs = integrate_on_set(e, &series.times, &series.local, lo, hi);
        let bracket = (-c).exp() * en(hi) - s.ln_eps[m].exp() * en(lo);
        let ln_lhs = if bracket > 0.0 { gamma * s.ln_eps[m] + seq.gaps[m].ln() + bracket.ln() } else { f64::NEG_INFINITY };
        let ln_rhs = 2f64.ln() + theta + ln0(obs);
        let mut r = CheckRecord::le_log(format!("per_gap[{}]", m + 1), ln_lhs, ln_rhs, rel_tol);
        if bracket <= 0.0 {
            r = r.with_note("left side non-positive");
        }
        per_gap.push(r);
    }
    let observed_local = integrate_on_set(e, &series.times, &series.local, 0.0, e.horizon());
    let first = s.ln_alpha[0] - c + ln0(en(seq.times[0]));
    let last = s.ln_sigma[depth - 1] + ln0(en(seq.times[depth]));
    let ln_lhs = if first > last { first + (-(last - first).exp()).ln_1p() } else { f64::NEG_INFINITY };
    let summed =
        CheckRecord::le_log("summed", ln_lhs, 2f64.ln() + theta + ln0(observed_local), rel_tol).with_note(format!("σ_n = {:e}", s.ln_sigma[depth - 1].exp()));
    let observed_mass = integrate_on_set(e, &series.times, &series.control_region, 0.0, e.horizon());
    let terminal = *series.energy.last().expect("non-empty series");
    if observed_mass == 0.0 && terminal > 0.0 {
        let f = CheckRecord::flag("final", false, "observation vanishes while the terminal state does not");
        return Ok(TelescopingReport {
            per_gap,
            summed,
            explicit_vs_empirical: f.clone(),
            final_check: f,
            ln_c_emp: f64::INFINITY,
            ln_c_explicit: consts.ln_c_explicit,
            c_emp: f64::INFINITY,
            observed_mass,
        });
    }
    let ln_c_emp = if terminal == 0.0 { f64::NEG_INFINITY } else { terminal.ln() - observed_mass.ln() };
    let final_check = CheckRecord::le_log("final", ln0(terminal), consts.ln_c_explicit + ln0(observed_mass), rel_tol);
    let explicit_vs_empirical = CheckRecord::le_log("c_emp_le_c_explicit", ln_c_emp, consts.ln_c_explicit, 0.0);
    Ok(TelescopingReport {
        per_gap,
        summed,
        final_check,
        explicit_vs_empirical,
        ln_c_emp,
        ln_c_explicit: consts.ln_c_explicit,
        c_emp: ln_c_emp.exp(),
        observed_mass,
    })
}

/// `E‖y(t_k)‖² ≤ e^{rate·t_k} E‖y(0)‖² (1 + rel_tol)` at every node.
pub fn energy_estimate_check(times: &[f64], energy: &[f64], rate: f64, rel_tol: f64) -> CheckRecord {
    let mut worst = CheckRecord::le("energy_estimate", 0.0, 0.0, rel_tol);
    let mut worst_ratio = f64::NEG_INFINITY;
    for (t, e) in times.iter().zip(energy) {
        let bound = (rate * t).exp() * energy[0];
        let ratio = if bound > 0.0 {
            e / bound
        } else if *e > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst = CheckRecord::le("energy_estimate", *e, bound, rel_tol + 1e-12).with_note(format!("t = {t}"));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_set() -> MeasurableTimeSet {
        MeasurableTimeSet::new(vec![(0.3, 0.45), (0.1, 0.2)], 0.5).unwrap()
    }

    #[test]
    fn set_validation_and_measure() {
        let e = default_set();
        assert_relative_eq!(e.measure(), 0.25, epsilon = 1e-15);
        assert_eq!(e.intervals()[0], (0.1, 0.2));
        assert_relative_eq!(e.intersect(0.15, 0.35), 0.1, epsilon = 1e-15);
        assert!(MeasurableTimeSet::new(vec![(0.1, 0.3), (0.2, 0.4)], 0.5).is_err());
        assert!(MeasurableTimeSet::new(vec![(0.1, 0.6)], 0.5).is_err());
    }

    #[test]
    fn full_interval_has_unit_factors() {
        let e = MeasurableTimeSet::new(vec![(0.0, 1.0)], 1.0).unwrap();
        let s = density_sequence(&e, 3.0, 6).unwrap();
        assert!(s.holds);
        for f in &s.factors {
            assert_relative_eq!(*f, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_interval_set_by_exhaustive_scan() {
        let e = MeasurableTimeSet::new(vec![(0.2, 0.4), (0.6, 0.8)], 1.0).unwrap();
        let s = density_sequence(&e, 2.0, 8).unwrap();
        assert_relative_eq!(s.t0, 0.3, epsilon = 1e-15);
        assert!(s.holds && s.t1 <= 0.4 + 1e-12);
        for m in 0..8 {
            assert!(s.times[m] - s.times[m + 1] <= 3.0 * s.gaps[m]);
            assert!(s.times[m + 1] < s.times[m]);
        }
        // Exhaustive re-scan: earlier dyadic points all violate.
        let span = 1.0 - s.t0;
        for j in 1.. {
            let t1 = s.t0 + span * 0.5f64.powi(j);
            if t1 == s.t1 {
                break;
            }
            let (t, g) = sequence_for(&e, s.t0, t1, 2.0, 8);
            assert!(violation(&t, &g, 8) > 0.0, "{t1}");
        }
        assert_relative_eq!(s.t1, 0.3875, epsilon = 1e-15);
    }

    #[test]
    fn default_set_sequence() {
        let s = density_sequence(&default_set(), DEFAULT_RATIO, DEFAULT_DEPTH).unwrap();
        assert!(s.holds, "{s:?}");
        assert_relative_eq!(s.t0, 0.375, epsilon = 1e-15);
        assert!(s.gaps.iter().all(|g| *g > 0.0));
    }

    #[test]
    fn uniform_ratio_matches_closed_form() {
        let gamma = 0.7;
        let c = 0.4;
        let z: f64 = 2.0;
        let gaps: Vec<f64> = (0..9).map(|m| 0.1 / z.powi(m)).collect();
        let s = epsilon_sequence(gamma, c, z, &gaps).unwrap();
        let fixed = -(c + z.ln());
        for (m, le) in s.ln_eps.iter().enumerate() {
            let closed = fixed + ((gamma + 1.0) / gamma).powi(m as i32) * (s.ln_eps[0] - fixed);
            assert_relative_eq!(*le, closed, max_relative = 1e-12);
        }
        assert!(s.bound_holds && s.sigma_decreasing);
        assert!(s.matching_defect < 1e-12);
        assert_relative_eq!(s.ln_eps[0], s.ln_bound);
    }

    #[test]
    fn gamma_one_squares() {
        let gaps = [0.2, 0.1, 0.05];
        let s = epsilon_sequence(1.0, 0.0, 2.0, &gaps).unwrap();
        let e1 = s.ln_eps[0].exp();
        assert_relative_eq!(s.ln_eps[1].exp(), e1 * e1 * 2.0, max_relative = 1e-12);
    }

    #[test]
    fn split_monotone_in_eps_and_zero_safe() {
        assert!(interpolation_split(0.0, 0.0, 0.0, 0.5, 0.9, 1.0, 0.0).unwrap().pass);
        let r = interpolation_split(1.0, 1e-30, 10.0, 0.99, 0.9, 1.0, 0.0).unwrap();
        assert!(r.pass);
        assert!(interpolation_split(1.0, 1.0, 1.0, 1.5, 0.9, 1.0, 0.0).is_err());
    }

    #[test]
    fn linear_integration_is_exact() {
        let t = [0.0, 0.1, 0.2, 0.3];
        let v = [0.0, 0.1, 0.2, 0.3];
        assert_relative_eq!(integrate_linear(&t, &v, 0.05, 0.25), 0.5 * (0.25f64.powi(2) - 0.05f64.powi(2)), epsilon = 1e-15);
        let e = MeasurableTimeSet::new(vec![(0.0, 0.1), (0.2, 0.3)], 0.3).unwrap();
        assert_relative_eq!(integrate_on_set(&e, &t, &v, 0.0, 0.3), 0.005 + 0.025, epsilon = 1e-15);
    }

    #[test]
    fn energy_check_flags_growth() {
        let t = [0.0, 0.5, 1.0];
        assert!(energy_estimate_check(&t, &[1.0, 0.9, 0.8], 0.0, 0.0).pass);
        assert!(!energy_estimate_check(&t, &[1.0, 1.1, 1.2], 0.0, 0.0).pass);
        assert!(energy_estimate_check(&t, &[1.0, 1.1, 1.2], 0.5, 0.0).pass);
    }
}
