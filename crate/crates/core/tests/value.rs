use proptest::prelude::*;

use junction_core::geometry::{project_to_network, Branch, NetworkPoint, PlanePoint};
use junction_core::value::{
    counterexample_costs, solve_value_bar, solve_value_eps, solve_value_network, BarMethod, CostField, EdgeGridSpec,
    GridSpec, Region, Sweep, ValueProblem,
};

fn small_grid(h: f64) -> GridSpec {
    GridSpec {
        region: Region::square(1.0),
        h,
        ..GridSpec::default()
    }
}

#[test]
fn constant_cost_gives_the_discount_reciprocal_in_both_solvers() {
    for lambda in [0.5, 1.0, 3.0] {
        let prob = ValueProblem::new(lambda, CostField::Constant { value: 1.0 }).unwrap();
        let plane = solve_value_eps(&prob, 0.1, &small_grid(0.1)).unwrap();
        assert!(plane.values.iter().all(|u| (u - 1.0 / lambda).abs() <= 1e-12));
        let net = solve_value_network(&prob, &EdgeGridSpec { radius: 1.0, h: 0.05, ..EdgeGridSpec::default() }).unwrap();
        assert!((net.junction - 1.0 / lambda).abs() <= 1e-12);
        assert!(net.branches.iter().flatten().all(|u| (u - 1.0 / lambda).abs() <= 1e-12));
    }
}

#[test]
fn sweeps_agree() {
    let prob = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
    let gs = solve_value_eps(&prob, 0.1, &small_grid(0.05)).unwrap();
    let jac = solve_value_eps(&prob, 0.1, &GridSpec { sweep: Sweep::Jacobi, ..small_grid(0.05) }).unwrap();
    let diff = gs.values.iter().zip(&jac.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-8, "{diff}");
}

#[test]
fn network_value_converges_at_first_order() {
    let prob = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
    let solve = |h: f64| solve_value_network(&prob, &EdgeGridSpec { radius: 2.0, h, ..EdgeGridSpec::default() }).unwrap();
    let (a, b, c) = (solve(0.04), solve(0.02), solve(0.01));
    let probes: Vec<NetworkPoint> = Branch::EDGES
        .iter()
        .flat_map(|&br| [0.4, 1.0, 1.6].map(|r| NetworkPoint::new(br, r).unwrap()))
        .chain([NetworkPoint::JUNCTION])
        .collect();
    let change = |u: &junction_core::value::EdgeValueFunction, v: &junction_core::value::EdgeValueFunction| {
        probes.iter().map(|&p| (u.eval(p) - v.eval(p)).abs()).fold(0.0, f64::max)
    };
    let (d1, d2) = (change(&a, &b), change(&b, &c));
    assert!(d2 <= 0.75 * d1 + 1e-12, "{d1} {d2}");
    assert!(d1 <= 0.04, "{d1}");
}

#[test]
fn limit_value_is_constant_along_projection_fibres() {
    let prob = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
    let net = solve_value_network(&prob, &EdgeGridSpec { radius: 3.0, h: 0.01, ..EdgeGridSpec::default() }).unwrap();
    for (x, y) in [((1.0, 0.5), (0.866_025_403_784_438_6, 0.0)), ((-0.3, 1.2), (0.0, 1.161_895_003_862_225))] {
        let x = PlanePoint::new(x.0, x.1);
        let y = PlanePoint::new(y.0, y.1);
        assert_eq!(project_to_network(x).branch(), project_to_network(y).branch());
        let vx = solve_value_bar(&prob, x, &net, BarMethod::Projection).unwrap().value;
        let vy = solve_value_bar(&prob, y, &net, BarMethod::Projection).unwrap().value;
        assert!((vx - vy).abs() <= 1e-12, "{vx} {vy}");
    }
}

#[test]
fn cross_check_search_does_not_beat_the_network_value() {
    let prob = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
    let net = solve_value_network(&prob, &EdgeGridSpec::default()).unwrap();
    for x in [PlanePoint::new(0.7, 0.2), PlanePoint::new(-1.0, -1.5), PlanePoint::new(0.0, 0.0)] {
        let v = solve_value_bar(&prob, x, &net, BarMethod::CrossCheck { targets_per_unit: 20 }).unwrap();
        let s = v.search_value.unwrap();
        assert!(s >= v.value - 0.02, "{x:?}: search {s} below value {}", v.value);
        assert!(v.disagreement() <= 0.05, "{x:?}: {}", v.disagreement());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn value_bounded_by_cost_bound(
        lambda in 0.5f64..3.0,
        cap in 0.5f64..3.0,
        eps in prop::sample::select(vec![0.2, 0.1]),
    ) {
        let prob = ValueProblem::new(lambda, CostField::CappedNorm { cap }).unwrap();
        let v = solve_value_eps(&prob, eps, &small_grid(0.1)).unwrap();
        prop_assert!(v.values.iter().all(|u| *u >= 0.0 && *u <= cap / lambda * (1.0 + 1e-12)));
    }

    #[test]
    fn value_is_monotone_in_the_cost(c1 in 0.5f64..2.0, extra in 0.0f64..1.0) {
        let lo = ValueProblem::new(1.0, CostField::CappedNorm { cap: c1 }).unwrap();
        let hi = ValueProblem::new(1.0, CostField::CappedNorm { cap: c1 + extra }).unwrap();
        let a = solve_value_eps(&lo, 0.1, &small_grid(0.1)).unwrap();
        let b = solve_value_eps(&hi, 0.1, &small_grid(0.1)).unwrap();
        prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| *x <= *y + 1e-9));
    }

    #[test]
    fn counterexample_gap_is_strict(lambda in 0.1f64..10.0) {
        let c = counterexample_costs(lambda).unwrap();
        prop_assert!(c.upper < c.lower);
        prop_assert!((c.upper_quadrature - c.upper).abs() <= 1e-6);
    }
}
