//! Acceptance suite. Runs without the libtest harness and prints one line per
//! criterion; the process fails if any criterion fails.

use std::f64::consts::{FRAC_PI_3, PI};
use std::time::{Duration, Instant};

use bangbang::characteristics::{
    closed_form_state, costate_retro, numeric_retro, optimal_hamiltonian, up_anchors,
};
use bangbang::isochrone::isochrone_circle;
use bangbang::oracle::{oracle_grid_report, square_grid, OracleConfig};
use bangbang::simulator::{simulate, Termination};
use bangbang::synthesis::{
    discontinuity_loci, feedback, switching_curve_circle, switching_curve_square, touch_and_go_curves, value,
    Branch, LociOptions,
};
use bangbang::{BoundaryPoint, Manifold, Params, RegionClass, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn unit() -> Params {
    Params::new(1.0, 1.0).unwrap()
}

fn targets() -> [(Manifold, &'static str); 2] {
    [(Manifold::circle(1.0).unwrap(), "circle"), (Manifold::Square, "square")]
}

/// `count` anchors spread over all UP intervals.
fn spread_anchors(m: &Manifold, params: &Params, count: usize) -> Vec<BoundaryPoint> {
    let n_int = m.up_intervals(params).len().max(1);
    let all = up_anchors(m, params, count.div_ceil(n_int) + 1);
    (0..count).map(|i| all[i * all.len() / count]).collect()
}

fn taus(n: usize, max: f64) -> Vec<f64> {
    (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect()
}

fn up_regimes() -> Outcome {
    let start = Instant::now();
    let c1 = Manifold::circle(1.0).unwrap();
    let iv = c1.up_intervals(&unit());
    let exact = iv.len() == 2
        && (iv[0].lo, iv[0].lo_closed, iv[0].hi, iv[0].hi_closed) == (0.0, false, PI, false)
        && (iv[1].lo, iv[1].lo_closed, iv[1].hi, iv[1].hi_closed) == (PI, false, 2.0 * PI, false);
    let p2 = Params::new(1.0, 2.0).unwrap();
    let iv2 = Manifold::circle(2.0).unwrap().up_intervals(&p2);
    let ends = iv2.len() == 2
        && (iv2[0].lo - FRAC_PI_3).abs() <= 1e-12
        && (iv2[0].hi - PI).abs() <= 1e-12
        && (iv2[1].lo - 4.0 * FRAC_PI_3).abs() <= 1e-12
        && (iv2[1].hi - 2.0 * PI).abs() <= 1e-12;
    let el = start.elapsed();
    outcome(
        exact && ends && el < Duration::from_secs(1),
        format!("l=1 exact {exact}, l=2 endpoints {ends}, {el:.2?}"),
    )
}

fn hamiltonian_annihilation() -> Outcome {
    let start = Instant::now();
    let p = unit();
    let (mut closed, mut numeric) = (0.0f64, 0.0f64);
    for (m, _) in targets() {
        for b in spread_anchors(&m, &p, 100) {
            for tau in taus(100, 10.0) {
                let c = costate_retro(&m, &b, &p, tau).unwrap();
                let s = closed_form_state(&m, &b, &p, tau).unwrap();
                closed = closed.max(optimal_hamiltonian(&s, &c, &p).abs());
                let (sn, cn) = numeric_retro(&m, &b, &p, tau, 1e-3).unwrap();
                numeric = numeric.max(optimal_hamiltonian(&sn, &cn, &p).abs());
            }
        }
    }
    let el = start.elapsed();
    outcome(
        closed <= 1e-9 && numeric <= 1e-6 && el < Duration::from_secs(5),
        format!("max |H*| closed {closed:.2e}, numeric {numeric:.2e}, {el:.2?}"),
    )
}

fn closed_vs_numeric() -> Outcome {
    let p = unit();
    let mut worst = 0.0f64;
    for (m, _) in targets() {
        for b in spread_anchors(&m, &p, 100) {
            for tau in taus(101, 10.0) {
                let s = closed_form_state(&m, &b, &p, tau).unwrap();
                let (sn, _) = numeric_retro(&m, &b, &p, tau, 1e-3).unwrap();
                worst = worst.max(s.dist(&sn));
            }
        }
    }
    outcome(worst <= 1e-6, format!("sup distance {worst:.2e}"))
}

fn switching_anchors() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for l in [0.5, 1.0] {
        let p = Params::new(1.0, l).unwrap();
        let c = switching_curve_circle(&p, Branch::Upper).unwrap();
        let d = switching_curve_circle(&p, Branch::Lower).unwrap();
        // The limit itself and points approaching it.
        for eps in [0.0, 1e-10, 1e-12] {
            worst = worst.max(c.point(PI - eps).unwrap().dist(&State::new(-l, 0.0)));
            worst = worst.max(d.point(2.0 * PI - eps).unwrap().dist(&State::new(l, 0.0)));
        }
    }
    ok &= worst <= 1e-9;
    let a = switching_curve_square(&unit(), Branch::A).unwrap();
    let cc = switching_curve_square(&unit(), Branch::C).unwrap();
    let exact = a.point(1.0).unwrap() == State::new(-1.0, 1.0)
        && cc.point(-1.0).unwrap() == State::new(1.0, -1.0)
        && a.explicit(1.0) == Some(-1.0)
        && cc.explicit(-1.0) == Some(1.0);
    outcome(ok && exact, format!("circle limit gap {worst:.2e}, square anchors exact {exact}"))
}

fn touch_and_go() -> Outcome {
    let curves = touch_and_go_curves(&Manifold::Square, &unit(), 64, 5.0);
    let has = |id: &str, v: State| curves.iter().any(|c| c.id == id && c.points.contains(&v));
    let through = has("B", State::new(-1.0, -1.0)) && has("D", State::new(1.0, 1.0));
    let on_parabola = curves
        .iter()
        .filter(|c| c.id == "B")
        .flat_map(|c| c.points.iter())
        .all(|s| (s.x1 - (0.5 * s.x2 * s.x2 - 1.5)).abs() <= 1e-12);
    outcome(through && on_parabola, format!("through B and D {through}, on x1 = x2^2/2 - 3/2 {on_parabola}"))
}

fn oracle_agreement() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let grid = square_grid(41, 5.0);
    for (m, name) in targets() {
        let start = Instant::now();
        let loci = discontinuity_loci(&m, &unit(), &LociOptions::default());
        let rep = oracle_grid_report(&m, &unit(), &grid, &OracleConfig::default(), &loci, 0.025);
        let el = start.elapsed();
        pass &= rep.max_error <= 1e-3 && el < Duration::from_secs(60);
        parts.push(format!("{name} max {:.2e} over {} states in {el:.1?}", rep.max_error, rep.compared));
    }
    outcome(pass, parts.join("; "))
}

fn closed_loop() -> Outcome {
    let dt = 1e-3;
    let p = unit();
    let mut pass = true;
    let (mut worst, mut max_switches, mut runs) = (0.0f64, 0usize, 0usize);
    for (m, _) in targets() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s0 = loop {
                let s = State::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                if m.signed_distance(&s) > 0.0 {
                    break s;
                }
            };
            let v = value(&m, &p, &s0).unwrap();
            let tr = simulate(&m, &p, &s0, dt, 100.0).unwrap();
            let Termination::ReachedUp { point, t_f } = tr.termination else {
                pass = false;
                continue;
            };
            worst = worst.max((t_f - v).abs());
            max_switches = max_switches.max(tr.switch_count());
            pass &= m.classify(&point, &p).unwrap() == RegionClass::Up;
            runs += 1;
        }
    }
    pass &= worst <= 2.0 * dt && max_switches <= 1 && runs == 40;
    outcome(pass, format!("{runs} rollouts, max |t_f - value| {worst:.2e}, max switches {max_switches}"))
}

fn point_target_limit() -> Outcome {
    let l = 1e-4;
    let p = Params::new(1.0, l).unwrap();
    let m = Manifold::circle(l).unwrap();
    let u = |s: State| feedback(&m, &p, &s).unwrap().u.value();
    let mut worst = 0.0f64;
    let mut bracketed = true;
    for k in 0..=30 {
        let x2 = 0.5 + 1.5 * k as f64 / 30.0;
        let reference = -0.5 * x2 * x2;
        let (mut lo, mut hi) = (reference - 0.5, reference + 0.5);
        if u(State::new(lo, x2)) != 1.0 || u(State::new(hi, x2)) != -1.0 {
            bracketed = false;
            continue;
        }
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if u(State::new(mid, x2)) == 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((0.5 * (lo + hi) - reference).abs());
    }
    outcome(bracketed && worst <= 1e-3, format!("max distance to x1 = -x2|x2|/2: {worst:.2e}"))
}

fn isochrone_levels() -> Outcome {
    let p = unit();
    let m = Manifold::circle(1.0).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for tau in 1..=8 {
        let iso = isochrone_circle(&p, tau as f64, 200).unwrap();
        for q in &iso.points {
            worst = worst.max((value(&m, &p, &q.state).unwrap() - tau as f64).abs());
            count += 1;
        }
    }
    outcome(worst <= 1e-6, format!("{count} samples, max |value - tau| {worst:.2e}"))
}

fn symmetry() -> Outcome {
    let p = unit();
    let (mut worst, mut flips, mut checked) = (0.0f64, 0usize, 0usize);
    for (m, _) in targets() {
        for s in square_grid(41, 5.0) {
            let (Ok(a), Ok(b)) = (feedback(&m, &p, &s), feedback(&m, &p, &-s)) else { continue };
            worst = worst.max((a.time_to_go - b.time_to_go).abs());
            if a.u.value() != -b.u.value() {
                flips += 1;
            }
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-12 && flips == 0,
        format!("{checked} pairs, max value gap {worst:.2e}, control mismatches {flips}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("UP regimes", up_regimes),
        ("Hamiltonian annihilation", hamiltonian_annihilation),
        ("closed-form vs numeric characteristics", closed_vs_numeric),
        ("switching-curve anchors", switching_anchors),
        ("touch-and-go curves", touch_and_go),
        ("oracle agreement", oracle_agreement),
        ("closed-loop consistency", closed_loop),
        ("point-target limit", point_target_limit),
        ("isochrone level sets", isochrone_levels),
        ("symmetry", symmetry),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
