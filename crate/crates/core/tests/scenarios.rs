use std::f64::consts::{FRAC_PI_2, PI};

use bangbang::characteristics::{characteristic, closed_form_state, up_anchors};
use bangbang::isochrone::{isochrone_circle, propagate_anchors};
use bangbang::oracle::{oracle_grid_report, oracle_min_time, square_grid, OracleConfig};
use bangbang::synthesis::{
    discontinuity_loci, feedback, switching_curve_circle, switching_curve_square, touch_and_go_curves, value,
    Branch, LociOptions, Locus,
};
use bangbang::{BoundaryPoint, Manifold, Params, Params32, State, State32};

fn unit() -> Params {
    Params::new(1.0, 1.0).unwrap()
}

fn coarse() -> LociOptions {
    LociOptions { step: 0.1, ..LociOptions::default() }
}

#[test]
fn switching_curve_values() {
    let c = switching_curve_circle(&unit(), Branch::Upper).unwrap();
    let p = c.point(0.75 * PI).unwrap();
    assert!((p.x1 - (-(2f64.sqrt()) - 0.5)).abs() < 1e-12);
    assert!((p.x2 - (0.5 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
    assert!((c.explicit(p.x1).unwrap() - p.x2).abs() < 1e-9);
    let cc = switching_curve_square(&unit(), Branch::C).unwrap();
    assert_eq!(cc.point(-2.0).unwrap(), State::new(2.5, -2.0));
    let a = switching_curve_square(&unit(), Branch::A).unwrap();
    assert!(a.point(0.5).is_err());
}

#[test]
fn states_on_curve_a_switch_now() {
    let sq = Manifold::Square;
    let a = switching_curve_square(&unit(), Branch::A).unwrap();
    for x2 in [1.1, 1.5, 2.0, 3.0, 4.5] {
        let s = a.point(x2).unwrap();
        let r = feedback(&sq, &unit(), &s).unwrap();
        let sw = r.switch_state.expect("switch on curve A");
        assert!(sw.dist(&s) < 1e-9, "x2 = {x2}");
        assert_eq!(r.u.value(), -1.0);
    }
}

#[test]
fn boundary_states_on_the_up_have_zero_value() {
    let p = Params::new(1.0, 2.0).unwrap();
    for (m, pp) in [(Manifold::circle(2.0).unwrap(), p), (Manifold::Square, unit())] {
        for b in up_anchors(&m, &pp, 16) {
            let s = m.boundary_state(&b).unwrap();
            assert_eq!(value(&m, &pp, &s).unwrap(), 0.0, "{b}");
        }
    }
}

fn mirrored(loci: &[Locus]) -> bool {
    let (a, b) = (&loci[0], &loci[1]);
    a.id == 'a'
        && b.id == 'b'
        && a.points.len() == b.points.len()
        && a.points.iter().zip(&b.points).all(|(p, q)| p.state == -q.state)
}

#[test]
fn loci_exist_and_mirror() {
    for (m, p) in [
        (Manifold::Square, unit()),
        (Manifold::circle(1.0).unwrap(), unit()),
        (Manifold::circle(2.0).unwrap(), Params::new(1.0, 2.0).unwrap()),
    ] {
        let loci = discontinuity_loci(&m, &p, &coarse());
        assert_eq!(loci.len(), 2);
        assert!(!loci[0].points.is_empty(), "{}", m.name());
        assert!(mirrored(&loci), "{}", m.name());
    }
}

#[test]
fn loci_gaps_confirmed_by_oracle() {
    let cfg = OracleConfig::default();
    for (m, p) in
        [(Manifold::Square, unit()), (Manifold::circle(2.0).unwrap(), Params::new(1.0, 2.0).unwrap())]
    {
        let loci = discontinuity_loci(&m, &p, &coarse());
        let pts: Vec<_> = loci[0].points.iter().filter(|q| q.jump > 0.5).collect();
        assert!(!pts.is_empty());
        for q in pts.iter().step_by((pts.len() / 6).max(1)) {
            let s = q.state;
            let d = 1e-3;
            let gap = [(d, 0.0), (0.0, d)]
                .iter()
                .filter_map(|&(e1, e2)| {
                    let hi = oracle_min_time(&m, &p, &State::new(s.x1 + e1, s.x2 + e2), &cfg).ok()?;
                    let lo = oracle_min_time(&m, &p, &State::new(s.x1 - e1, s.x2 - e2), &cfg).ok()?;
                    Some((hi - lo).abs())
                })
                .fold(0.0, f64::max);
            assert!(gap > 0.5 * q.jump, "{} at {s:?}: jump {} oracle gap {gap}", m.name(), q.jump);
        }
    }
}

#[test]
fn square_locus_follows_the_grazing_parabola() {
    // Away from the vertex the jump runs along the touch-and-go parabola through D.
    let loci = discontinuity_loci(&Manifold::Square, &unit(), &coarse());
    let graze = touch_and_go_curves(&Manifold::Square, &unit(), 8, 5.0);
    assert_eq!(graze[1].id, "D");
    let on = loci[0]
        .points
        .iter()
        .filter(|q| q.state.x2 > 1.0 + 1e-6)
        .all(|q| (q.state.x1 - (-0.5 * q.state.x2 * q.state.x2 + 1.5)).abs() < 1e-6);
    assert!(on);
}

#[test]
fn flag_raised_on_a_locus() {
    let p = Params::new(1.0, 2.0).unwrap();
    let m = Manifold::circle(2.0).unwrap();
    let loci = discontinuity_loci(&m, &p, &coarse());
    let q = loci[0].points.iter().find(|q| q.jump > 0.5).unwrap();
    assert!(feedback(&m, &p, &q.state).unwrap().discontinuity_flag);
    assert!(!feedback(&m, &p, &State::new(-1.5, 3.0)).unwrap().discontinuity_flag);
}

#[test]
fn generic_isochrone_matches_closed_form() {
    let m = Manifold::circle(1.0).unwrap();
    let iso = isochrone_circle(&unit(), 1.0, 40).unwrap();
    let anchors: Vec<BoundaryPoint> = iso.points.iter().map(|q| q.anchor).collect();
    let generic = propagate_anchors(&m, &unit(), 1.0, &anchors).unwrap();
    for (a, b) in iso.points.iter().zip(&generic) {
        assert!(a.state.dist(&b.state) < 1e-9, "theta {}", a.param);
        assert_eq!(a.family, b.family);
    }
}

#[test]
fn isochrones_are_centrally_symmetric() {
    let iso = isochrone_circle(&unit(), 2.0, 25).unwrap();
    for q in &iso.points {
        let mirror = -q.state;
        assert!(iso.points.iter().any(|r| r.state.dist(&mirror) < 1e-12), "theta {}", q.param);
    }
}

#[test]
fn report_is_symmetric() {
    let m = Manifold::Square;
    let grid = square_grid(9, 4.0);
    let rep = oracle_grid_report(&m, &unit(), &grid, &OracleConfig::default(), &[], 0.0);
    let n = grid.len();
    for (i, row) in rep.rows.iter().enumerate() {
        let twin = &rep.rows[n - 1 - i];
        assert_eq!(row.state, -twin.state);
        assert_eq!(row.excluded, twin.excluded);
        match (row.oracle, twin.oracle) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
            (a, b) => assert_eq!(a.is_some(), b.is_some()),
        }
    }
    assert!(rep.max_error <= 1e-3);
}

#[test]
fn numeric_synthesis_matches_oracle() {
    let cfg = OracleConfig::default();
    for alpha in [0.5, 2.0] {
        let p = Params::new(alpha, 1.0).unwrap();
        for m in [Manifold::Square, Manifold::circle(1.0).unwrap()] {
            for s in
                [State::new(-3.0, 1.0), State::new(2.0, 2.0), State::new(0.5, -3.0), State::new(-4.0, -1.5)]
            {
                let v = value(&m, &p, &s).unwrap();
                let o = oracle_min_time(&m, &p, &s, &cfg).unwrap();
                assert!((v - o).abs() < 1e-3, "{} alpha {alpha} at {s:?}: {v} vs {o}", m.name());
            }
        }
    }
}

#[test]
fn single_precision_characteristics() {
    let p: Params32 = Params32::new(1.0, 1.0).unwrap();
    let m = Manifold32::circle(1.0).unwrap();
    let b = BoundaryPoint32::CircleTheta(FRAC_PI_2 as f32);
    let s: State32 = closed_form_state(&m, &b, &p, 1.0).unwrap();
    assert!((s.x1 + 1.5).abs() < 1e-5 && (s.x2 - 2.0).abs() < 1e-5);
    let ch = characteristic(&m, &b, &p).unwrap();
    assert!(ch.state_at(1.0).dist(&s) < 1e-5);
}

type Manifold32 = bangbang::manifold::Manifold<f32>;
type BoundaryPoint32 = bangbang::manifold::BoundaryPoint<f32>;
