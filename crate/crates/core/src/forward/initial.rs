use std::f64::consts::PI;

use crate::domain::{Point, SpatialGrid};

/// Gaussian bump `amp · exp(-|x - c|² / (2 w²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub width: f64,
    pub amplitude: f64,
}

/// First sine mode of the box, positive inside and zero on `∂G`.
pub fn sine_envelope(grid: &SpatialGrid, p: &Point) -> f64 {
    (0..grid.dim())
        .map(|a| {
            let (lo, hi) = grid.extent(a);
            (PI * (p[a] - lo) / (hi - lo)).sin()
        })
        .product()
}

/// Sum of Gaussian bumps times the sine envelope.
pub fn enveloped_bumps(grid: &SpatialGrid, bumps: &[Bump]) -> Vec<f64> {
    grid.coords()
        .iter()
        .map(|p| {
            let s: f64 = bumps.iter().map(|b| b.amplitude * (-grid.dist_sq(p, &b.center) / (2.0 * b.width * b.width)).exp()).sum();
            s * sine_envelope(grid, p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_under_envelope() {
        let grid = SpatialGrid::interval(0.0, 1.0, 3).unwrap();
        let b = enveloped_bumps(&grid, &[Bump { center: [0.5, 0.0], width: 0.1, amplitude: 2.0 }]);
        assert!((b[1] - 2.0).abs() < 1e-15);
    }
}
