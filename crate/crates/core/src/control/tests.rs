use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

use super::*;
use crate::noise::{build_tree, TimeMesh};

fn problem(nodes: usize, depth: usize, horizon: f64, coeffs: (f64, f64), g0: (f64, f64), e1: (f64, f64)) -> ControlProblem {
    let grid = SpatialGrid::interval(0.0, 1.0, nodes).unwrap();
    let tree = build_tree(TimeMesh::new(horizon, depth).unwrap(), 16).unwrap();
    let c = CoefficientField::constant(coeffs.0, coeffs.1, &grid, tree.mesh()).unwrap();
    let ball = Ball::interval(g0.0, g0.1).unwrap();
    let e = MeasurableTimeSet::new(vec![e1], horizon).unwrap();
    let geo = ControlGeometry::new(&grid, &tree, &ball, &e).unwrap();
    ControlProblem::new(grid, tree, c, geo).unwrap()
}

fn desk() -> ControlProblem {
    problem(15, 10, 0.5, (0.5, 0.3), (0.5, 0.15), (0.05, 0.45))
}

fn adapted_problem(depth: usize) -> ControlProblem {
    let grid = SpatialGrid::interval(0.0, 1.0, 9).unwrap();
    let tree = build_tree(TimeMesh::new(0.2, depth).unwrap(), 16).unwrap();
    let a = Coefficient::function(|t, x| 0.4 * (3.0 * x[0]).cos() + t);
    let b = Coefficient::Adapted { f: Arc::new(|_k, hist: &[f64], x| 0.3 * (hist.iter().sum::<f64>() + x[0]).sin()), sup: 0.3, grad_sup: 0.3 };
    let c = CoefficientField::new(a, b, &grid, tree.mesh()).unwrap();
    let ball = Ball::interval(0.4, 0.2).unwrap();
    let e = MeasurableTimeSet::new(vec![(0.02, 0.15)], 0.2).unwrap();
    let geo = ControlGeometry::new(&grid, &tree, &ball, &e).unwrap();
    ControlProblem::new(grid, tree, c, geo).unwrap()
}

#[test]
fn zero_data_gives_zero_pair() {
    let p = problem(5, 4, 0.1, (0.7, 0.4), (0.5, 0.2), (0.0, 0.1));
    let zero = vec![0.0; p.tree().leaves() * 5];
    for mode in [BackwardMode::AdjointExact, BackwardMode::Independent] {
        let pair = p.solve_backward(&zero, None, None, mode).unwrap();
        for k in 0..=4 {
            assert!(pair.z.level(k).iter().all(|v| *v == 0.0));
            assert!(pair.big_z.level(k).iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn deterministic_terminal_without_noise_is_backward_heat() {
    let p = problem(7, 5, 0.1, (0.0, 0.0), (0.5, 0.2), (0.0, 0.1));
    let (mode0, _) = p.grid().eigenmode(&[1]);
    let z_t = mode0.repeat(p.tree().leaves());
    let op = ImplicitDiffusion::new(p.grid(), p.tree().mesh().dt());
    let mut expect = mode0.clone();
    for _ in 0..5 {
        op.solve(&mut expect);
    }
    for mode in [BackwardMode::AdjointExact, BackwardMode::Independent] {
        let pair = p.solve_backward(&z_t, None, None, mode).unwrap();
        for k in 0..5 {
            assert!(pair.big_z.level(k).iter().all(|v| *v == 0.0), "Z must vanish for deterministic data");
        }
        for (a, b) in pair.z0().iter().zip(&expect) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
    }
}

/// Dense 3-node, depth-2 oracle built directly from matrices.
#[test]
fn three_node_depth_two_matches_dense_oracle() {
    let (a, b) = (0.8, 0.6);
    let p = problem(3, 2, 0.1, (a, b), (0.5, 0.25), (0.0, 0.1));
    let n = 3;
    let dt = 0.05;
    let h = 0.25;
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        lap[(i, i)] = -2.0 / (h * h);
        if i > 0 {
            lap[(i, i - 1)] = 1.0 / (h * h);
        }
        if i + 1 < n {
            lap[(i, i + 1)] = 1.0 / (h * h);
        }
    }
    let big_a = DMatrix::identity(n, n) - lap * dt;
    let a_inv = big_a.clone().try_inverse().unwrap();
    let z_t = p.random_leaf_field(3);
    let hf = p.random_tree_field(4);
    let ff = p.random_tree_field(5);
    let mask = &p.geometry().mask;
    let weights = p.geometry().weights.clone();
    assert_eq!(weights, vec![0.05, 0.05]);
    let sq = dt.sqrt();
    let leaf = |i: usize| DVector::from_column_slice(&z_t[i * n..(i + 1) * n]);
    let src = |k: usize, q: usize| {
        let hv = DVector::from_column_slice(hf.node(k, q));
        let fv = DVector::from_iterator(n, (0..n).map(|i| mask[i] * ff.node(k, q)[i]));
        hv * dt + fv * weights[k]
    };

    // adjoint-exact
    let m = |db: f64| DMatrix::from_diagonal_element(n, n, 1.0 - dt * a - b * db);
    let step = |up: &DVector<f64>, down: &DVector<f64>, k: usize, q: usize| (m(sq) * &a_inv * up + m(-sq) * &a_inv * down) * 0.5 - src(k, q);
    let z1: Vec<_> = (0..2).map(|q| step(&leaf(2 * q), &leaf(2 * q + 1), 1, q)).collect();
    let z0 = step(&z1[0], &z1[1], 0, 0);
    let pair = p.solve_backward(&z_t, Some(&hf), Some(&ff), BackwardMode::AdjointExact).unwrap();
    for q in 0..2 {
        for i in 0..n {
            assert_relative_eq!(pair.z.node(1, q)[i], z1[q][i], epsilon = 1e-13);
        }
    }
    for i in 0..n {
        assert_relative_eq!(pair.z0()[i], z0[i], epsilon = 1e-13);
        assert_relative_eq!(pair.big_z.node(0, 0)[i], (z1[0][i] - z1[1][i]) / (2.0 * sq), epsilon = 1e-12);
    }

    // independent
    let shifted_inv = (big_a + DMatrix::identity(n, n) * (dt * a)).try_inverse().unwrap();
    let istep = |up: &DVector<f64>, down: &DVector<f64>, k: usize, q: usize| {
        let zz = (up - down) / (2.0 * sq);
        let rhs = (up + down) * 0.5 - zz * (dt * b) - src(k, q);
        (&shifted_inv * rhs, (up - down) / (2.0 * sq))
    };
    let w1: Vec<_> = (0..2).map(|q| istep(&leaf(2 * q), &leaf(2 * q + 1), 1, q)).collect();
    let (w0, big0) = istep(&w1[0].0, &w1[1].0, 0, 0);
    let pair = p.solve_backward(&z_t, Some(&hf), Some(&ff), BackwardMode::Independent).unwrap();
    for i in 0..n {
        assert_relative_eq!(pair.z0()[i], w0[i], epsilon = 1e-12);
        assert_relative_eq!(pair.big_z.node(0, 0)[i], big0[i], epsilon = 1e-12);
        assert_relative_eq!(pair.big_z.node(1, 1)[i], w1[1].1[i], epsilon = 1e-12);
    }
}

#[test]
fn adjoint_duality_is_exact_with_adapted_coefficients() {
    let p = adapted_problem(8);
    for seed in 0..3 {
        let y0 = p.random_deterministic(100 + seed);
        let z_t = p.random_leaf_field(200 + seed);
        let h = p.random_tree_field(300 + seed);
        let f = p.random_tree_field(400 + seed);
        let r = p.duality_check(&y0, &z_t, Some(&h), Some(&f), BackwardMode::AdjointExact).unwrap();
        assert!(r.normalized <= 1e-12, "normalized residual {}", r.normalized);
    }
    let zero = vec![0.0; p.tree().leaves() * p.grid().len()];
    let r = p.duality_check(&p.random_deterministic(1), &zero, None, None, BackwardMode::AdjointExact).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
}

#[test]
fn independent_mode_is_close_to_adjoint_for_smooth_data() {
    let p = problem(9, 8, 0.2, (0.5, 0.4), (0.5, 0.2), (0.02, 0.18));
    let g = |t: f64, x: &[f64; 2], w: f64| (std::f64::consts::PI * x[0]).sin() * (1.0 + 0.5 * w + t);
    let z_t = TreeField::from_brownian(p.tree(), p.grid(), g).level(8).to_vec();
    let f = TreeField::from_brownian(p.tree(), p.grid(), |t, x, w| x[0] * (1.0 - x[0]) * (w - t).cos());
    let y0 = p.grid().eigenmode(&[1]).0;
    let r = p.duality_check(&y0, &z_t, None, Some(&f), BackwardMode::Independent).unwrap();
    assert!(r.normalized < 0.05, "independent residual {}", r.normalized);
    assert!(r.normalized > 1e-8);
}

#[test]
fn gramian_is_symmetric_and_positive() {
    let p = adapted_problem(7);
    let u = p.random_deterministic(1);
    let v = p.random_deterministic(2);
    let lu = p.gramian_apply(&u).unwrap();
    let lv = p.gramian_apply(&v).unwrap();
    let (uv, vu) = (p.grid().inner(&lu, &v), p.grid().inner(&u, &lv));
    assert!((uv - vu).abs() <= 1e-10 * uv.abs().max(vu.abs()));
    let quad = p.grid().inner(&lu, &u);
    let mass = p.observation_mass(&p.dual_forward(&u).unwrap());
    assert!(quad >= 0.0);
    assert_relative_eq!(quad, mass, max_relative = 1e-10);
    let zero = p.gramian_apply(&vec![0.0; p.grid().len()]).unwrap();
    assert!(zero.iter().all(|x| *x == 0.0));
    let (lo, hi) = p.gramian_extremes().unwrap();
    assert!(lo > 0.0 && hi >= lo);
}

#[test]
fn conjugate_residual_is_monotone_and_finite_terminating() {
    let n = 6;
    let q = DMatrix::<f64>::from_fn(n, n, |i, j| ((i * 7 + j * 3) as f64).sin());
    let a = &q * q.transpose() + DMatrix::identity(n, n) * 0.1;
    let b: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).cos()).collect();
    let apply = |x: &[f64]| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec());
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let out = conjugate_residual(apply, &b, dot, 1e-9, 50).unwrap();
    assert!(out.converged);
    assert!(out.iterations <= n + 1, "iterations {}", out.iterations);
    assert!(out.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let exact = a.lu().solve(&DVector::from_column_slice(&b)).unwrap();
    for i in 0..n {
        assert_relative_eq!(out.x[i], exact[i], epsilon = 1e-7);
    }
}

#[test]
fn null_control_of_zero_terminal_is_zero() {
    let p = problem(5, 4, 0.2, (0.3, 0.2), (0.5, 0.2), (0.0, 0.2));
    let z_t = vec![0.0; p.tree().leaves() * 5];
    let (f, r) = p.null_control(&z_t, 1e-8, 15).unwrap();
    assert_eq!(r.cg_iters, 0);
    assert_eq!(r.z0_norm, 0.0);
    assert!(f.level(0).iter().all(|v| *v == 0.0));
}

#[test]
fn null_control_on_desk_configuration() {
    let p = desk();
    let z_t = p.random_leaf_field(11);
    let (f, r) = p.null_control(&z_t, 1e-8, 15).unwrap();
    assert!(r.cg_iters <= 15, "iterations {}", r.cg_iters);
    assert!(r.relative <= 1e-6, "relative z(0) {} ({r:?})", r.relative);
    assert!(r.residuals.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.lambda_min >= -1e-12 * r.lambda_max);
    assert!(r.condition.is_finite());
    // f vanishes outside G₀ × E₁
    for k in 0..p.tree().depth() {
        for q in 0..p.tree().nodes(k) {
            for (i, v) in f.node(k, q).iter().enumerate() {
                if p.geometry().weights[k] == 0.0 || p.geometry().mask[i] == 0.0 {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }
}

#[test]
fn approximate_control_reaches_random_target() {
    let p = desk();
    let z_t = p.random_leaf_field(21);
    let h = TreeField::from_brownian(p.tree(), p.grid(), |t, x, w| (std::f64::consts::PI * x[0]).sin() * (w + t));
    let target = p.random_mode_target(23, 4);
    let norm = p.grid().norm_sq(&target).sqrt();
    let (_, r) = p.approx_control(&z_t, Some(&h), &target, 1e-2 * norm).unwrap();
    assert!(r.monotone, "curve {:?}", r.curve);
    assert!(r.achieved && r.chosen.residual <= 1e-2 * norm, "{r:?}");
    assert_eq!(r.curve.len(), 13);
}

#[test]
fn approximate_control_of_free_state_needs_no_control() {
    let p = problem(5, 4, 0.2, (0.3, 0.2), (0.5, 0.2), (0.0, 0.2));
    let z_t = p.random_leaf_field(1);
    let free = p.solve_backward(&z_t, None, None, BackwardMode::AdjointExact).unwrap().z0().to_vec();
    let (f, r) = p.approx_control(&z_t, None, &free, 1e-12).unwrap();
    assert!(r.curve.iter().all(|c| c.residual == 0.0));
    assert!(f.level(0).iter().all(|v| *v == 0.0));
}

#[test]
fn support_check_flags() {
    let p = desk();
    let zero = p.support_check(&vec![0.0; 15], None).unwrap();
    assert_eq!(zero.mass, 0.0);
    assert!(!zero.red_flag);
    let (lo, _) = p.gramian_extremes().unwrap();
    for m in 1..=3 {
        let eta = p.grid().eigenmode(&[m]).0;
        let s = p.support_check(&eta, Some(lo)).unwrap();
        assert!(s.mass > 0.0 && !s.red_flag && !s.below_lambda_min);
    }
}

#[test]
fn geometry_weights_follow_overlap_rule() {
    let grid = SpatialGrid::interval(0.0, 1.0, 7).unwrap();
    let tree = build_tree(TimeMesh::new(1.0, 4).unwrap(), 16).unwrap();
    let e = MeasurableTimeSet::new(vec![(0.1, 0.6)], 1.0).unwrap();
    let geo = ControlGeometry::new(&grid, &tree, &Ball::interval(0.5, 0.2).unwrap(), &e).unwrap();
    assert_eq!(geo.weights.len(), 4);
    assert_relative_eq!(geo.weights[0], 0.15, epsilon = 1e-15);
    assert_relative_eq!(geo.weights[1], 0.25, epsilon = 1e-15);
    assert_eq!(geo.weights[2], 0.0);
    assert_eq!(geo.weights[3], 0.0);
    let far = MeasurableTimeSet::new(vec![(0.9, 0.95)], 1.0).unwrap();
    assert!(ControlGeometry::new(&grid, &tree, &Ball::interval(0.5, 0.2).unwrap(), &far).is_err());
}
