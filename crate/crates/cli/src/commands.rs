use std::fs;
use std::path::Path;

use bangbang::characteristics::{characteristic, flow_field, up_anchors};
use bangbang::isochrone::{isochrone_circle, isochrone_generic};
use bangbang::model::ScenarioFile;
use bangbang::oracle::{oracle_grid_report, square_grid, OracleConfig};
use bangbang::simulator::{simulate, verify_rollout, Termination};
use bangbang::synthesis::{
    discontinuity_loci, feedback, switching_curves, touch_and_go_curves, value, LociOptions,
};
use bangbang::{BoundaryPoint, Manifold, Params, Side, State, TargetKind};
use serde_json::json;

use crate::args::{Command, Common, Format, Method};
use crate::table::{Cell, Table};

#[derive(Debug)]
pub enum CliError {
    Domain(String),
    Verify(String),
    Io(String),
}

impl From<bangbang::Error> for CliError {
    fn from(e: bangbang::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Scenario {
    kind: TargetKind,
    params: Params,
    manifold: Manifold,
}

fn scenario(common: &Common) -> Result<Scenario> {
    let file = match &common.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Domain(format!("cannot read scenario {}: {e}", path.display())))?;
            ScenarioFile::from_json(&text)?
        }
        None => ScenarioFile { alpha: None, l: None, target: None },
    };
    let kind = common.target.map(TargetKind::from).or(file.target).unwrap_or(TargetKind::Circle);
    let alpha = common.alpha.or(file.alpha).unwrap_or(1.0);
    let l = common.l.or(file.l).unwrap_or(1.0);
    let params = Params::new(alpha, l)?;
    Ok(Scenario { kind, params, manifold: Manifold::for_target(kind, &params) })
}

fn render(common: &Common, t: &Table) -> String {
    match common.format {
        Format::Csv => t.to_csv(),
        Format::Json => t.to_json(),
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Table to `--out DIR/stem.ext`, or to stdout.
fn emit(common: &Common, stem: &str, t: &Table) -> Result<()> {
    let text = render(common, t);
    match &common.out {
        Some(dir) => {
            let ext = match common.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            write_file(dir, &format!("{stem}.{ext}"), &text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_anchor(text: &str) -> Result<BoundaryPoint> {
    let (kind, param) = text
        .split_once(':')
        .ok_or_else(|| CliError::Domain(format!("anchor '{text}' must look like KIND:PARAM")))?;
    let p: f64 = param
        .trim()
        .parse()
        .map_err(|_| CliError::Domain(format!("anchor parameter '{param}' is not a number")))?;
    let b = match kind.trim() {
        "circle" => BoundaryPoint::circle(p),
        "AB" => BoundaryPoint::square_side(Side::AB, p)?,
        "BC" => BoundaryPoint::square_side(Side::BC, p)?,
        "CD" => BoundaryPoint::square_side(Side::CD, p)?,
        "AD" => BoundaryPoint::square_side(Side::AD, p)?,
        "A" => BoundaryPoint::corner_cone(bangbang::Vertex::A, p)?,
        "C" => BoundaryPoint::corner_cone(bangbang::Vertex::C, p)?,
        other => {
            return Err(CliError::Domain(format!(
                "unknown anchor kind '{other}', expected circle, AB, BC, CD, AD, A or C"
            )))
        }
    };
    Ok(b)
}

fn tau_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && max >= 0.0 && max.is_finite()) {
        return Err(CliError::Domain(format!("need tau-step > 0 and tau-max >= 0, got {step} and {max}")));
    }
    let n = (max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

fn boundary_json(m: &Manifold, b: &BoundaryPoint) -> Result<serde_json::Value> {
    let s = m.boundary_state(b)?;
    Ok(json!({ "kind": b.kind(), "param": b.param(), "x1": s.x1, "x2": s.x2 }))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Up { common, samples } => {
            let sc = scenario(&common)?;
            let mut t = Table::new(&["kind", "param", "x1", "x2", "n1", "n2", "class"]);
            for s in sc.manifold.sample_boundary(&sc.params, samples) {
                t.push(vec![
                    s.kind.into(),
                    s.param.into(),
                    s.state.x1.into(),
                    s.state.x2.into(),
                    s.normal.n1.into(),
                    s.normal.n2.into(),
                    s.class.as_str().into(),
                ]);
            }
            emit(&common, "up", &t)
        }
        Command::Costate { common, anchor, tau } => {
            let sc = scenario(&common)?;
            let b = parse_anchor(&anchor)?;
            let ch = characteristic(&sc.manifold, &b, &sc.params)?;
            let c0 = ch.terminal_costate;
            let mut t = Table::new(&["anchor_kind", "anchor_param", "tau", "lambda1", "lambda2", "u"]);
            for &tau in &tau {
                if !(tau >= 0.0) {
                    return Err(CliError::Domain(format!("retrograde time must be non-negative, got {tau}")));
                }
                t.push(vec![
                    b.kind().into(),
                    b.param().into(),
                    tau.into(),
                    c0.lambda1.into(),
                    (c0.lambda2 + c0.lambda1 * tau).into(),
                    ch.arc_at(tau).control.value().into(),
                ]);
            }
            emit(&common, "costate", &t)
        }
        Command::Flow { common, anchors, tau_max, tau_step } => {
            let sc = scenario(&common)?;
            let taus = tau_grid(tau_max, tau_step)?;
            let fan = up_anchors(&sc.manifold, &sc.params, anchors);
            let mut t =
                Table::new(&["anchor_kind", "anchor_param", "tau", "x1", "x2", "lambda1", "lambda2", "u"]);
            for f in flow_field(&sc.manifold, &sc.params, &fan, &taus)? {
                t.push(vec![
                    f.anchor.kind().into(),
                    f.anchor.param().into(),
                    f.tau.into(),
                    f.state.x1.into(),
                    f.state.x2.into(),
                    f.costate.lambda1.into(),
                    f.costate.lambda2.into(),
                    f.control.value().into(),
                ]);
            }
            emit(&common, "flow", &t)
        }
        Command::SwitchCurves { common, samples, extent, touch_and_go } => {
            let sc = scenario(&common)?;
            let mut t = Table::new(&["curve_id", "x1", "x2"]);
            for c in switching_curves(&sc.manifold, &sc.params) {
                for p in c.sample(samples, extent) {
                    t.push(vec![c.branch.id().into(), p.x1.into(), p.x2.into()]);
                }
            }
            if touch_and_go {
                for c in touch_and_go_curves(&sc.manifold, &sc.params, samples, extent) {
                    for p in &c.points {
                        t.push(vec![c.id.as_str().into(), p.x1.into(), p.x2.into()]);
                    }
                }
            }
            emit(&common, "switch-curves", &t)
        }
        Command::Loci { common, extent, step } => {
            let sc = scenario(&common)?;
            if !(step > 0.0 && extent > 0.0) {
                return Err(CliError::Domain(format!(
                    "need step > 0 and extent > 0, got {step} and {extent}"
                )));
            }
            let opts = LociOptions { extent, step, ..LociOptions::default() };
            let mut t = Table::new(&["curve_id", "x1", "x2"]);
            for locus in discontinuity_loci(&sc.manifold, &sc.params, &opts) {
                for p in &locus.points {
                    t.push(vec![locus.id.to_string().into(), p.state.x1.into(), p.state.x2.into()]);
                }
            }
            emit(&common, "loci", &t)
        }
        Command::Isochrone { common, tau, samples, method } => {
            let sc = scenario(&common)?;
            let closed_ok =
                sc.kind == TargetKind::Circle && sc.params.is_unit_alpha() && sc.params.l() <= 1.0;
            let closed = match method {
                Method::Auto => closed_ok,
                Method::Closed => true,
                Method::Generic => false,
            };
            let mut t = Table::new(&["tau", "theta_or_param", "x1", "x2", "family"]);
            for &level in &tau {
                let iso = if closed {
                    if sc.kind != TargetKind::Circle {
                        return Err(CliError::Domain(
                            "closed-form isochrones exist for the circle only".into(),
                        ));
                    }
                    isochrone_circle(&sc.params, level, samples)?
                } else {
                    isochrone_generic(&sc.manifold, &sc.params, level, samples)?
                };
                for p in &iso.points {
                    t.push(vec![
                        level.into(),
                        p.param.into(),
                        p.state.x1.into(),
                        p.state.x2.into(),
                        p.family.name().into(),
                    ]);
                }
            }
            emit(&common, "isochrone", &t)
        }
        Command::Feedback { common, x1, x2 } => {
            let sc = scenario(&common)?;
            let r = feedback(&sc.manifold, &sc.params, &State::new(x1, x2))?;
            let doc = json!({
                "u": r.u.value(),
                "value": r.time_to_go,
                "terminal": boundary_json(&sc.manifold, &r.terminal_point)?,
                "switch": r.switch_state.map(|s| json!({ "x1": s.x1, "x2": s.x2 })),
                "discontinuity_flag": r.discontinuity_flag,
            });
            let text = format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"));
            print!("{text}");
            match &common.out {
                Some(dir) => write_file(dir, "feedback.json", &text),
                None => Ok(()),
            }
        }
        Command::Value { common, x1, x2 } => {
            let sc = scenario(&common)?;
            let v = value(&sc.manifold, &sc.params, &State::new(x1, x2))?;
            println!("{v}");
            match &common.out {
                Some(dir) => write_file(dir, "value.txt", &format!("{v}\n")),
                None => Ok(()),
            }
        }
        Command::Simulate { common, x1, x2, dt, tmax } => {
            let sc = scenario(&common)?;
            let traj = simulate(&sc.manifold, &sc.params, &State::new(x1, x2), dt, tmax)?;
            let mut t = Table::new(&["t", "x1", "x2", "u"]);
            for s in &traj.samples {
                t.push(vec![s.t.into(), s.state.x1.into(), s.state.x2.into(), s.u.into()]);
            }
            emit(&common, "trajectory", &t)?;
            match traj.termination {
                Termination::ReachedUp { point, t_f } => {
                    let rep = verify_rollout(&traj, &sc.manifold, &sc.params);
                    eprintln!(
                        "reached UP at {point} after t_f = {t_f}; switches {}; max value deviation {:e}",
                        traj.switch_count(),
                        rep.max_deviation
                    );
                }
                Termination::MaxTimeExceeded => eprintln!("max time {tmax} exceeded before reaching the UP"),
            }
            Ok(())
        }
        Command::Verify { common, grid, extent, band, tol } => verify(&common, grid, extent, band, tol),
    }
}

fn verify(common: &Common, grid: usize, extent: f64, band: f64, tol: f64) -> Result<()> {
    let sc = scenario(common)?;
    if grid < 2 || !(extent > 0.0) || !(band >= 0.0) {
        return Err(CliError::Domain(format!(
            "need grid >= 2, extent > 0 and band >= 0, got {grid}, {extent} and {band}"
        )));
    }
    let (m, p) = (&sc.manifold, &sc.params);
    let states = square_grid(grid, extent);
    let loci = if band > 0.0 { discontinuity_loci(m, p, &LociOptions::default()) } else { Vec::new() };
    let rep = oracle_grid_report(m, p, &states, &OracleConfig::default(), &loci, band);

    let mut t = Table::new(&["x1", "x2", "oracle", "synthesis", "delta", "excluded"]);
    for r in &rep.rows {
        t.push(vec![
            r.state.x1.into(),
            r.state.x2.into(),
            r.oracle.into(),
            r.synthesis.into(),
            r.delta.into(),
            r.excluded.map_or(Cell::Missing, |e| e.as_str().into()),
        ]);
    }

    // Central symmetry of value and control over the same grid.
    let mut symmetry_gap: f64 = 0.0;
    let mut control_mismatches = 0usize;
    for s in &states {
        if let (Ok(a), Ok(b)) = (feedback(m, p, s), feedback(m, p, &-*s)) {
            symmetry_gap = symmetry_gap.max((a.time_to_go - b.time_to_go).abs());
            if a.u.value() != -b.u.value() {
                control_mismatches += 1;
            }
        }
    }
    let excluded = rep.rows.iter().filter(|r| r.excluded.is_some()).count();
    let agree = rep.max_error <= tol;
    let symmetric = symmetry_gap <= 1e-12 && control_mismatches == 0;
    let summary = json!({
        "target": m.name(),
        "l": p.l(),
        "alpha": p.alpha(),
        "grid": grid,
        "compared": rep.compared,
        "excluded": excluded,
        "max_error": rep.max_error,
        "mean_error": rep.mean_error,
        "tolerance": tol,
        "symmetry_gap": symmetry_gap,
        "control_mismatches": control_mismatches,
        "pass": agree && symmetric,
    });
    let summary = format!("{}\n", serde_json::to_string_pretty(&summary).expect("serializable"));
    emit(common, "verify", &t)?;
    match &common.out {
        Some(dir) => {
            write_file(dir, "verify-summary.json", &summary)?;
            print!("{summary}");
        }
        None => eprint!("{summary}"),
    }
    if agree && symmetric {
        Ok(())
    } else {
        Err(CliError::Verify(format!(
            "max |value - oracle| = {:e} (tolerance {tol:e}), symmetry gap {symmetry_gap:e}, control mismatches {control_mismatches}",
            rep.max_error
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bangbang::Corner;

    #[test]
    fn anchors_parse() {
        assert_eq!(parse_anchor("circle:1").unwrap(), BoundaryPoint::CircleTheta(1.0));
        assert_eq!(parse_anchor("AD:0.5").unwrap(), BoundaryPoint::SquareSide { side: Side::AD, s: 0.5 });
        assert_eq!(
            parse_anchor("A:2").unwrap(),
            BoundaryPoint::SquareCorner { corner: Corner::A, theta: 2.0 }
        );
        assert!(parse_anchor("B:2").is_err());
        assert!(parse_anchor("AD").is_err());
        assert!(parse_anchor("AD:x").is_err());
        assert!(parse_anchor("A:0.1").is_err());
    }

    #[test]
    fn tau_grids() {
        assert_eq!(tau_grid(1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(tau_grid(1.0, 0.0).is_err());
    }
}
