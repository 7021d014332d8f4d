//! Seeded families of smooth random coefficients and initial data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::SpatialGrid;
use crate::error::{Error, Result};
use crate::forward::{enveloped_bumps, Bump, Coefficient, CoefficientField};
use crate::noise::TimeMesh;

/// `bound · Σ_j c_j sin(jπx + φ_j) / Σ_j |c_j| · (3 + cos(ωt))/4`, so the
/// sup norm never exceeds `bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigSeries {
    pub bound: f64,
    pub amps: Vec<f64>,
    pub phases: Vec<f64>,
    pub omega: f64,
}

impl TrigSeries {
    pub fn random(rng: &mut ChaCha8Rng, bound: f64, terms: usize) -> Self {
        let amps = (0..terms).map(|_| rng.random_range(-1.0..1.0)).collect();
        let phases = (0..terms).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        Self { bound, amps, phases, omega: rng.random_range(0.0..2.0 * PI) }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let norm: f64 = self.amps.iter().map(|c| c.abs()).sum();
        if norm == 0.0 {
            return 0.0;
        }
        let s: f64 = self.amps.iter().zip(&self.phases).enumerate().map(|(j, (c, p))| c * ((j + 1) as f64 * PI * x + p).sin()).sum();
        self.bound * s / norm * (3.0 + (self.omega * t).cos()) / 4.0
    }

    pub fn coefficient(&self) -> Coefficient {
        let s = self.clone();
        Coefficient::function(move |t, x| s.eval(t, x[0]))
    }
}

/// One configuration of the seeded sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCase {
    pub index: usize,
    pub seed: u64,
    pub a: TrigSeries,
    pub b: TrigSeries,
    /// Bumps of `y₀` along the first axis.
    pub bumps: Vec<(f64, f64, f64)>,
}

impl SweepCase {
    pub fn new(index: usize, seed: u64, a_bound: f64, b_bound: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = TrigSeries::random(&mut rng, a_bound, 3);
        let b = TrigSeries::random(&mut rng, b_bound, 2);
        let count = rng.random_range(1..=3);
        let bumps = (0..count)
            .map(|_| (rng.random_range(0.2..0.8), rng.random_range(0.06..0.2), rng.random_range(0.5..1.5) * if rng.random_bool(0.8) { 1.0 } else { -1.0 }))
            .collect();
        Self { index, seed, a, b, bumps }
    }

    pub fn coefficients(&self, grid: &SpatialGrid, mesh: &TimeMesh) -> Result<CoefficientField> {
        CoefficientField::new(self.a.coefficient(), self.b.coefficient(), grid, mesh)
    }

    pub fn initial(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        let bumps: Vec<Bump> = self.bumps.iter().map(|&(c, w, amp)| Bump { center: [c, 0.5], width: w, amplitude: amp }).collect();
        let y0 = enveloped_bumps(grid, &bumps);
        if y0.iter().all(|v| *v == 0.0) {
            return Err(Error::Numerical("initial datum vanishes on the grid".into()));
        }
        Ok(y0)
    }
}

/// Per-configuration seeds derived from the base seed with SplitMix64.
pub fn sweep_cases(base_seed: u64, count: usize, a_bound: f64, b_bound: f64) -> Vec<SweepCase> {
    (0..count).map(|i| SweepCase::new(i, splitmix(base_seed.wrapping_add(i as u64)), a_bound, b_bound)).collect()
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
