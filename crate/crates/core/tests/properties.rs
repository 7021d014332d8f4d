use proptest::prelude::*;

use stochheat::control::{BackwardMode, ControlGeometry, ControlProblem};
use stochheat::domain::{Ball, HeatKernelWeight, SpatialGrid};
use stochheat::forward::solve_forward;
use stochheat::frequency::{compute_hdn, Localization};
use stochheat::noise::{build_tree, NoiseModel, TimeMesh};
use stochheat::observability::MeasurableTimeSet;
use stochheat::sweep::SweepCase;
use stochheat::ucp::{compute_constants, quantitative_ucp_check, EndpointMasses, UcpGeometry};

fn small_problem(seed: u64) -> ControlProblem {
    let grid = SpatialGrid::interval(0.0, 1.0, 9).unwrap();
    let tree = build_tree(TimeMesh::new(0.2, 5).unwrap(), 16).unwrap();
    let coeffs = SweepCase::new(0, seed, 1.0, 0.5).coefficients(&grid, tree.mesh()).unwrap();
    let e1 = MeasurableTimeSet::new(vec![(0.02, 0.15)], 0.2).unwrap();
    let geo = ControlGeometry::new(&grid, &tree, &Ball::interval(0.5, 0.2).unwrap(), &e1).unwrap();
    ControlProblem::new(grid, tree, coeffs, geo).unwrap()
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_solver_is_linear(u in vec_strategy(15), v in vec_strategy(15), alpha in -2.0..2.0f64, seed in 0u64..1000) {
        let grid = SpatialGrid::interval(0.0, 1.0, 15).unwrap();
        let tree = build_tree(TimeMesh::new(0.1, 4).unwrap(), 16).unwrap();
        let coeffs = SweepCase::new(0, seed, 1.0, 0.5).coefficients(&grid, tree.mesh()).unwrap();
        let noise = NoiseModel::Tree(tree);
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
        let eu = solve_forward(&u, &coeffs, &noise, &grid).unwrap();
        let ev = solve_forward(&v, &coeffs, &noise, &grid).unwrap();
        let ew = solve_forward(&w, &coeffs, &noise, &grid).unwrap();
        for s in 0..ew.states(4) {
            for i in 0..15 {
                let lin = alpha * eu.state(4, s)[i] + ev.state(4, s)[i];
                prop_assert!((ew.state(4, s)[i] - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
            }
        }
    }

    #[test]
    fn frequency_is_scale_invariant(c in 0.1..10.0f64, seed in 0u64..1000) {
        let grid = SpatialGrid::interval(0.0, 1.0, 31).unwrap();
        let tree = build_tree(TimeMesh::new(0.2, 4).unwrap(), 16).unwrap();
        let case = SweepCase::new(0, seed, 1.0, 0.5);
        let coeffs = case.coefficients(&grid, tree.mesh()).unwrap();
        let y0 = case.initial(&grid).unwrap();
        let ens = solve_forward(&y0, &coeffs, &NoiseModel::Tree(tree), &grid).unwrap();
        let w = HeatKernelWeight::new(0.2, 0.5, [0.5, 0.0], 1).unwrap();
        let a = compute_hdn(&ens, &Localization::Identity, &coeffs, &w).unwrap();
        let b = compute_hdn(&ens.scaled(c), &Localization::Identity, &coeffs, &w).unwrap();
        for k in 0..a.times.len() {
            prop_assert!((b.h[k] - c * c * a.h[k]).abs() <= 1e-10 * c * c * a.h[k].abs());
            if let (Some(na), Some(nb)) = (a.n[k], b.n[k]) {
                prop_assert!((na - nb).abs() <= 1e-10 * (1.0 + na.abs()));
            }
        }
    }

    #[test]
    fn conditional_expectation_has_tower_property(depth in 2usize..8, j in 0usize..8, seed in 0u64..1000) {
        let tree = build_tree(TimeMesh::new(1.0, depth).unwrap(), 16).unwrap();
        let j = j % depth;
        let leaves: Vec<f64> = (0..tree.leaves()).map(|i| ((i as u64 * 2654435761 + seed) % 97) as f64 - 48.0).collect();
        let mid = tree.conditional_expectation(&leaves, depth, j).unwrap();
        let two_step = tree.conditional_expectation(&mid, j, 0).unwrap()[0];
        let direct = tree.expectation(&leaves).unwrap();
        prop_assert!((two_step - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn gramian_is_symmetric(u in vec_strategy(9), v in vec_strategy(9), seed in 0u64..1000) {
        let p = small_problem(seed);
        let lu = p.gramian_apply(&u).unwrap();
        let lv = p.gramian_apply(&v).unwrap();
        let a = p.grid().inner(&lu, &v);
        let b = p.grid().inner(&u, &lv);
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + b.abs() + 1e-300));
        prop_assert!(p.grid().inner(&lu, &u) >= -1e-14);
    }

    #[test]
    fn adjoint_duality_is_exact(seed in 0u64..10_000) {
        let p = small_problem(seed);
        let y0 = p.random_deterministic(seed);
        let z_t = p.random_leaf_field(seed + 1);
        let h = p.random_tree_field(seed + 2);
        let f = p.random_tree_field(seed + 3);
        let r = p.duality_check(&y0, &z_t, Some(&h), Some(&f), BackwardMode::AdjointExact).unwrap();
        prop_assert!(r.normalized <= 1e-10);
    }

    #[test]
    fn ucp_verdict_is_scale_invariant(c in 0.01..100.0f64, seed in 0u64..1000) {
        let grid = SpatialGrid::interval(0.0, 1.0, 31).unwrap();
        let tree = build_tree(TimeMesh::new(0.5, 6).unwrap(), 16).unwrap();
        let case = SweepCase::new(0, seed, 1.0, 0.5);
        let coeffs = case.coefficients(&grid, tree.mesh()).unwrap();
        let ens = solve_forward(&case.initial(&grid).unwrap(), &coeffs, &NoiseModel::Tree(tree), &grid).unwrap();
        let ball = Ball::interval(0.5, 0.1).unwrap();
        let masses = EndpointMasses::measure(&ens, &ball);
        let geo = UcpGeometry::new(&grid, &[0.5, 0.0], 0.1, 0.5).unwrap();
        let consts = compute_constants(&masses, &geo, &coeffs.norms()).unwrap();
        let a = quantitative_ucp_check(&masses, &consts, 0.1);
        let b = quantitative_ucp_check(&masses.scaled(c), &consts, 0.1);
        prop_assert_eq!(a.pass, b.pass);
        let ma = a.ln_rhs - a.ln_lhs;
        let mb = b.ln_rhs - b.ln_lhs;
        prop_assert!((ma - mb).abs() <= 1e-9 * (1.0 + ma.abs()));
    }
}
