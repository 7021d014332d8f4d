use super::grid::{Ball, SpatialGrid};
use crate::error::{Error, Result};

/// Chain of balls `S₁..S_m` with bridges `S̃₁..S̃_{m-1}` linking a seed ball
/// to a target ball:
///
/// * `B ⊂ S₁`, concentric;
/// * `S̃ᵢ ⊂⊂ Sᵢ ∩ Sᵢ₊₁`, with `S̃ᵢ` concentric to `Sᵢ₊₁`;
/// * `S_m ⊂ B̃`, concentric.
#[derive(Debug, Clone, PartialEq)]
pub struct BallChain {
    pub balls: Vec<Ball>,
    pub bridges: Vec<Ball>,
}

/// Consecutive centers are at most half the smaller radius apart.
const STEP_RATIO: f64 = 0.5;
/// Bridge radius as a fraction of the admissible room.
const BRIDGE_SHRINK: f64 = 0.75;

fn dist(grid: &SpatialGrid, a: &Ball, b: &Ball) -> f64 {
    grid.dist_sq(&a.center, &b.center).sqrt()
}

pub fn ball_chain(from: &Ball, to: &Ball, grid: &SpatialGrid) -> Result<BallChain> {
    for (name, b) in [("seed", from), ("target", to)] {
        if !grid.contains_closed_ball(b) {
            return Err(Error::Geometry(format!("{name} ball (radius {}) does not lie inside the domain; reduce radii", b.radius)));
        }
    }
    let length = dist(grid, from, to);
    let rmin = from.radius.min(to.radius);
    let mut m = 1 + (length / (STEP_RATIO * rmin) - 1e-12).ceil().max(0.0) as usize;
    if m == 1 && from.radius > to.radius {
        m = 2;
    }
    let mut balls = Vec::with_capacity(m);
    for i in 0..m {
        let s = if m == 1 { 0.0 } else { i as f64 / (m - 1) as f64 };
        let mut center = [0.0; 2];
        for a in 0..2 {
            center[a] = from.center[a] + s * (to.center[a] - from.center[a]);
        }
        let radius = from.radius + s * (to.radius - from.radius);
        balls.push(Ball { center, radius });
    }
    let mut bridges = Vec::with_capacity(m.saturating_sub(1));
    for i in 0..m.saturating_sub(1) {
        let d = dist(grid, &balls[i], &balls[i + 1]);
        let room = (balls[i].radius - d).min(balls[i + 1].radius);
        bridges.push(Ball { center: balls[i + 1].center, radius: BRIDGE_SHRINK * room });
    }
    let chain = BallChain { balls, bridges };
    if !chain.verify(from, to, grid) {
        return Err(Error::Geometry("no admissible chain at the requested radii".into()));
    }
    Ok(chain)
}

impl BallChain {
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Re-checks every containment predicate geometrically.
    pub fn verify(&self, from: &Ball, to: &Ball, grid: &SpatialGrid) -> bool {
        let tol = 1e-12;
        let (Some(first), Some(last)) = (self.balls.first(), self.balls.last()) else {
            return false;
        };
        let inside = |inner: &Ball, outer: &Ball, strict: bool| {
            let d = dist(grid, inner, outer) + inner.radius;
            if strict {
                d < outer.radius
            } else {
                d <= outer.radius + tol
            }
        };
        let ends = dist(grid, from, first) <= tol && inside(from, first, false) && dist(grid, last, to) <= tol && inside(last, to, false);
        let all_in_domain = self.balls.iter().chain(&self.bridges).all(|b| grid.contains_closed_ball(b));
        let links = self.bridges.len() + 1 == self.balls.len()
            && self.bridges.iter().enumerate().all(|(i, br)| {
                dist(grid, br, &self.balls[i + 1]) <= tol && br.radius > 0.0 && inside(br, &self.balls[i], true) && inside(br, &self.balls[i + 1], true)
            });
        ends && all_in_domain && links
    }
}
