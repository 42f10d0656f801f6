use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use junction_core::dynamics::{integrate_perturbed, ControlSchedule, IntegratorConfig};
use junction_core::geometry::{penalty, Branch, NetworkPoint, PlanePoint};
use junction_core::limits::{
    constant_control_limit, drive_on_network, gradient_flow, is_bisector, tracking_trajectory, zeno_control,
};

fn network_point() -> impl Strategy<Value = NetworkPoint> {
    prop_oneof![
        Just(NetworkPoint::JUNCTION),
        (0usize..4, 0.01f64..3.0).prop_map(|(b, r)| NetworkPoint::new(Branch::EDGES[b], r).unwrap()),
    ]
}

fn control() -> impl Strategy<Value = ControlSchedule> {
    prop::collection::vec((0.0f64..TAU, 0.0f64..=1.0), 1..=4).prop_map(|pieces| {
        let n = pieces.len();
        let breaks: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let values = pieces.iter().map(|&(t, r)| PlanePoint::new(r * t.cos(), r * t.sin())).collect();
        ControlSchedule::new(breaks, values, 1.0).unwrap()
    })
}

#[test]
fn limit_from_junction_leaves_along_the_dominant_axis() {
    let l = constant_control_limit(NetworkPoint::JUNCTION, 0.3).unwrap();
    assert_eq!(l.branch_at(1.0), Branch::E);
    let p = l.state_at(2.0);
    assert!((p.x1 - 2.0 * 0.3f64.cos()).abs() <= 1e-12 && p.x2 == 0.0);
    // bisectors leave the junction stuck
    let l = constant_control_limit(NetworkPoint::JUNCTION, 5.0 * PI / 4.0).unwrap();
    assert_eq!(l.state_at(3.0), PlanePoint::ORIGIN);
}

#[test]
fn penalized_path_follows_the_limit_from_a_branch() {
    let start = NetworkPoint::new(Branch::N, 1.0).unwrap();
    let theta = 4.5;
    let limit = constant_control_limit(start, theta).unwrap();
    let eps = 1e-4;
    let tr =
        integrate_perturbed(start.to_plane(), &ControlSchedule::direction(theta), eps, &IntegratorConfig::with_horizon(3.0))
            .unwrap();
    let err = (0..=30).map(|i| 0.1 * i as f64).map(|t| tr.state_at(t).dist(limit.state_at(t))).fold(0.0, f64::max);
    assert!(err <= 10.0 * eps.cbrt(), "{err}");
}

/// Just past the `5π/4` bisector the penalized exit from `N` still goes west; only beyond
/// `θ ≈ 4.1817` (found by bisection, independent of ε) does it continue south.
#[test]
fn penalized_exit_from_north_switches_branch_past_a_threshold() {
    let start = PlanePoint::new(0.0, 1.0);
    let exit = |theta: f64, eps: f64| {
        let tr = integrate_perturbed(start, &ControlSchedule::direction(theta), eps, &IntegratorConfig::with_horizon(3.0))
            .unwrap();
        let end = *tr.states.last().unwrap();
        if end.x1.abs() > end.x2.abs() {
            Branch::W
        } else {
            Branch::S
        }
    };
    for eps in [1e-4, 1e-5] {
        assert_eq!(exit(4.0, eps), Branch::W);
        assert_eq!(exit(4.17, eps), Branch::W);
        assert_eq!(exit(4.2, eps), Branch::S);
    }
}

#[test]
fn zeno_limit_returns_at_every_dyadic_time() {
    let (_, limit) = zeno_control(&Branch::EDGES, 10).unwrap();
    for k in 0..=10 {
        assert_eq!(limit.state_at(0.5f64.powi(k)), PlanePoint::ORIGIN, "k={k}");
    }
    let visited: std::collections::BTreeSet<_> = limit.itinerary().into_iter().collect();
    assert_eq!(visited.len(), 5);
}

#[test]
fn bisector_detection() {
    for j in 0..4 {
        assert!(is_bisector(PI / 4.0 + j as f64 * PI / 2.0));
        assert!(!is_bisector(j as f64 * PI / 2.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limit_paths_are_well_formed(start in network_point(), theta in 0.0f64..TAU) {
        let l = constant_control_limit(start, theta).unwrap();
        prop_assert!(l.validate(1.0, 1e-12).is_ok(), "{:?}", l.validate(1.0, 1e-12));
        prop_assert_eq!(l.state_at(0.0), start.to_plane());
        for i in 0..=40 {
            prop_assert_eq!(penalty(l.state_at(0.1 * i as f64)), 0.0);
        }
    }

    #[test]
    fn network_driving_respects_the_speed_bound(start in network_point(), a in control()) {
        let l = drive_on_network(start, &a, 1.0);
        prop_assert!(l.validate(1.0, 1e-12).is_ok(), "{:?}", l.validate(1.0, 1e-12));
        for i in 0..20 {
            let (t0, t1) = (0.05 * i as f64, 0.05 * (i + 1) as f64);
            prop_assert!(l.state_at(t1).dist(l.state_at(t0)) <= (t1 - t0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gradient_flow_conserves_the_hyperbola(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0) {
        let x = PlanePoint::new(x1, x2);
        let r = gradient_flow(x, 1e-24).unwrap();
        prop_assert!(r.monotone);
        prop_assert!(r.hyperbola_drift < 1e-8);
        let d: Vec<f64> = r.path.iter().map(|&z| penalty(z)).collect();
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tracked_paths_stay_on_the_network_at_bounded_speed(
        x1 in -1.0f64..1.0,
        x2 in -1.0f64..1.0,
        a in control(),
        eps in prop::sample::select(vec![1e-2, 1e-3]),
    ) {
        let tr = integrate_perturbed(PlanePoint::new(x1, x2), &a, eps, &IntegratorConfig::with_horizon(1.0)).unwrap();
        let rep = tracking_trajectory(&tr, 0.5).unwrap();
        prop_assert!(rep.speed_ok(1e-6));
        prop_assert!(rep.ratio <= rep.ratio_bound, "{} > {}", rep.ratio, rep.ratio_bound);
        prop_assert!(rep.path.iter().all(|&p| penalty(p) == 0.0));
    }
}
