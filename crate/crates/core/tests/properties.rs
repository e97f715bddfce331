use std::f64::consts::PI;

use bangbang::characteristics::{
    characteristic, closed_form_state, costate_retro, optimal_hamiltonian, parabola_constant,
};
use bangbang::isochrone::propagate_anchors;
use bangbang::model::dynamics;
use bangbang::oracle::{oracle_min_time, OracleConfig};
use bangbang::simulator::simulate;
use bangbang::synthesis::{feedback, value};
use bangbang::{BoundaryPoint, Control, Corner, Manifold, Params, RegionClass, Side, State};
use proptest::prelude::*;

fn unit() -> Params {
    Params::new(1.0, 1.0).unwrap()
}

fn target(square: bool, l: f64) -> Manifold {
    if square {
        Manifold::Square
    } else {
        Manifold::circle(l).unwrap()
    }
}

fn outside(m: &Manifold) -> impl Strategy<Value = State> + '_ {
    (-5.0..5.0f64, -5.0..5.0f64)
        .prop_map(|(a, b)| State::new(a, b))
        .prop_filter("outside the target", move |s| m.signed_distance(s) > 1e-6)
}

fn boundary_point() -> impl Strategy<Value = BoundaryPoint> {
    prop_oneof![
        (0.0..2.0 * PI).prop_map(BoundaryPoint::CircleTheta),
        (0usize..4, -0.999..0.999f64).prop_map(|(i, s)| BoundaryPoint::SquareSide { side: Side::ALL[i], s }),
        (0.0..1.0f64)
            .prop_map(|f| BoundaryPoint::SquareCorner { corner: Corner::A, theta: 0.5 * PI + f * 0.5 * PI }),
        (0.0..1.0f64)
            .prop_map(|f| BoundaryPoint::SquareCorner { corner: Corner::C, theta: 1.5 * PI + f * 0.5 * PI }),
    ]
}

fn manifold_for(b: &BoundaryPoint, l: f64) -> Manifold {
    match b {
        BoundaryPoint::CircleTheta(_) => Manifold::circle(l).unwrap(),
        _ => Manifold::Square,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn dynamics_are_odd_and_affine_in_u(x1 in -10.0..10.0f64, x2 in -10.0..10.0f64, u in -1.0..1.0f64, alpha in 0.1..4.0f64) {
        let p = Params::new(alpha, 1.0).unwrap();
        let s = State::new(x1, x2);
        let f = dynamics(&s, Control::new(u).unwrap(), &p);
        let g = dynamics(&-s, Control::new(-u).unwrap(), &p);
        prop_assert_eq!((f.dx1, f.dx2), (-g.dx1, -g.dx2));
        let fp = dynamics(&s, Control::plus(), &p);
        let fm = dynamics(&s, Control::minus(), &p);
        prop_assert!((f.dx2 - (0.5 * (1.0 + u) * fp.dx2 + 0.5 * (1.0 - u) * fm.dx2)).abs() < 1e-12);
    }

    #[test]
    fn normals_are_unit(b in boundary_point(), l in 0.2..3.0f64) {
        let m = manifold_for(&b, l);
        let n = m.outward_normal(&b).unwrap();
        prop_assert!((n.n1.hypot(n.n2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_is_antisymmetric(b in boundary_point(), l in 0.2..3.0f64, alpha in 0.2..3.0f64) {
        let p = Params::new(alpha, l).unwrap();
        let m = manifold_for(&b, l);
        let here = m.classify(&b, &p).unwrap();
        let there = m.classify(&b.antipode(), &p).unwrap();
        prop_assert_eq!(here, there);
        let s = m.boundary_state(&b).unwrap();
        let t = m.boundary_state(&b.antipode()).unwrap();
        prop_assert!((s + t).norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_vanishes_along_characteristics(b in boundary_point(), tau in 0.0..10.0f64) {
        let p = unit();
        let m = manifold_for(&b, 1.0);
        prop_assume!(m.classify(&b, &p).unwrap() == RegionClass::Up);
        let c = costate_retro(&m, &b, &p, tau).unwrap();
        let s = closed_form_state(&m, &b, &p, tau).unwrap();
        // Near a BUP angle the costate scale diverges; compare against the term sizes.
        let scale = 1.0 + (c.lambda1 * s.x2).abs() + c.lambda2.abs();
        prop_assert!(optimal_hamiltonian(&s, &c, &p).abs() < 1e-12 * scale);
    }

    #[test]
    fn arcs_keep_their_parabola(b in boundary_point(), l in 0.3..2.0f64, alpha in 0.3..3.0f64, f in 0.0..1.0f64) {
        let p = Params::new(alpha, l).unwrap();
        let m = manifold_for(&b, l);
        prop_assume!(m.classify(&b, &p).unwrap() == RegionClass::Up);
        let ch = characteristic(&m, &b, &p).unwrap();
        for arc in &ch.arcs {
            let end = if arc.tau_end.is_finite() { arc.tau_end } else { arc.tau_start + 10.0 };
            let tau = arc.tau_start + f * (end - arc.tau_start);
            let k0 = parabola_constant(&arc.start_state, arc.control, alpha);
            let s = arc.state_at(tau);
            let k = parabola_constant(&s, arc.control, alpha);
            // Cancellation error grows with the size of the two terms.
            let scale = 1.0 + s.x1.abs() + s.x2 * s.x2 / (2.0 * alpha);
            prop_assert!((k - k0).abs() < 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn value_is_centrally_symmetric(square in any::<bool>(), l in 0.3..2.5f64, x1 in -5.0..5.0f64, x2 in -5.0..5.0f64) {
        let m = target(square, l);
        let p = Params::new(1.0, l).unwrap();
        let s = State::new(x1, x2);
        prop_assume!(m.signed_distance(&s) > 0.0);
        let a = feedback(&m, &p, &s).unwrap();
        let b = feedback(&m, &p, &-s).unwrap();
        prop_assert!((a.time_to_go - b.time_to_go).abs() <= 1e-12);
        prop_assert_eq!(a.u.value(), -b.u.value());
    }

    #[test]
    fn value_is_symmetric_for_other_alpha(square in any::<bool>(), alpha in 0.5..2.0f64, x1 in -4.0..4.0f64, x2 in -4.0..4.0f64) {
        let m = target(square, 1.0);
        let p = Params::new(alpha, 1.0).unwrap();
        let s = State::new(x1, x2);
        prop_assume!(m.signed_distance(&s) > 0.0);
        let a = value(&m, &p, &s).unwrap();
        let b = value(&m, &p, &-s).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn feedback_is_bang(square in any::<bool>(), x1 in -5.0..5.0f64, x2 in -5.0..5.0f64) {
        let m = target(square, 1.0);
        let s = State::new(x1, x2);
        prop_assume!(m.signed_distance(&s) > 0.0);
        let r = feedback(&m, &unit(), &s).unwrap();
        prop_assert!(r.u.is_bang());
        prop_assert!(r.time_to_go >= 0.0);
        prop_assert_eq!(m.classify(&r.terminal_point, &unit()).unwrap(), RegionClass::Up);
    }

    #[test]
    fn isochrones_are_nested(theta in 0.01..(PI - 0.01), t1 in 0.2..4.0f64, dt in 0.2..3.0f64) {
        let m = Manifold::circle(1.0).unwrap();
        let p = unit();
        let b = [BoundaryPoint::CircleTheta(theta), BoundaryPoint::CircleTheta(theta + PI)];
        for q in propagate_anchors(&m, &p, t1 + dt, &b).unwrap() {
            prop_assert!(value(&m, &p, &q.state).unwrap() > t1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn oracle_never_beats_synthesis(square in any::<bool>(), x1 in -4.0..4.0f64, x2 in -4.0..4.0f64) {
        let m = target(square, 1.0);
        let s = State::new(x1, x2);
        prop_assume!(m.signed_distance(&s) > 1e-6);
        let cfg = OracleConfig::default();
        let v = value(&m, &unit(), &s).unwrap();
        let o = oracle_min_time(&m, &unit(), &s, &cfg).unwrap();
        prop_assert!(o >= v - cfg.refine_tol);
        let o_mirror = oracle_min_time(&m, &unit(), &-s, &cfg).unwrap();
        prop_assert!((o - o_mirror).abs() <= 1e-9);
    }

    #[test]
    fn rollouts_are_monotone_in_time(square in any::<bool>(), s0 in outside(&Manifold::Square)) {
        let m = target(square, 1.0);
        let tr = simulate(&m, &unit(), &s0, 1e-2, 50.0).unwrap();
        prop_assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        prop_assert!(tr.switch_count() <= 1);
        let last = tr.samples.last().unwrap();
        prop_assert!(m.signed_distance(&last.state).abs() <= 1e-10);
    }
}
