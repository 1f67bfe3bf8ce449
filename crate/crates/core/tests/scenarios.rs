use std::f64::consts::PI;
use std::path::PathBuf;

use biphase::run::{run, Output};
use biphase::Error;
use biphase::scenario::{parse_scenario, serialize_scenario, Command, Scenario};

/// Every bundled scenario except the exceptional point, which is rejected on load.
fn bundled() -> Vec<(String, Scenario)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| !p.ends_with("pt_exceptional.json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let s = parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_name().unwrap().to_string_lossy().into_owned(), s)
        })
        .collect()
}

fn load(name: &str) -> Scenario {
    bundled().into_iter().find(|(n, _)| n == name).unwrap().1
}

#[test]
fn bundled_scenarios_round_trip() {
    let all = bundled();
    assert!(all.len() >= 10);
    for (name, s) in all {
        let again = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(again, s, "{name}");
    }
}

#[test]
fn exceptional_point_fails_to_load() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/pt_exceptional.json");
    let err = parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap_err();
    assert!(matches!(err, Error::DegenerateSpectrum { .. }), "{err}");
    assert_eq!(err.exit_status(), 3);
}

#[test]
fn pt_symmetric_check_suite_passes() {
    let b = run(Command::Check, &load("pt_symmetric.json")).unwrap();
    let Output::Check(c) = &b.output else { panic!() };
    assert_eq!(c.failed, 0, "{:?}", c.checks);
    assert!(c.checks.len() >= 5);
}

#[test]
fn triangle_is_an_octant() {
    let b = run(Command::Polygon, &load("triangle.json")).unwrap();
    let Output::Polygon(p) = &b.output else { panic!() };
    assert!((p.phase.re - PI / 4.0).abs() < 1e-12);
    assert!(p.phase.im.abs() < 1e-12);
}

#[test]
fn anchor_sweep_rows_follow_the_values() {
    let s = load("anchor_sweep.json");
    let values = s.sweep.as_ref().unwrap().values.clone();
    let b = run(Command::Sweep, &s).unwrap();
    let Output::Sweep(out) = &b.output else { panic!() };
    assert_eq!(out.rows.len(), values.len());
    for (k, (row, phi)) in out.rows.iter().zip(&values).enumerate() {
        assert_eq!(row.index, k);
        assert_eq!(row.value, *phi);
        assert_eq!(row.status, "ok");
        // the flip's anchored phase moves opposite to the anchor phase
        let g = row.headline.unwrap();
        let want = PI / 2.0 - phi;
        let d = (g.re - want).rem_euclid(PI);
        assert!(d.min(PI - d) < 1e-6, "row {k}: {} vs {want}", g.re);
    }
}

#[test]
fn geodesic_scenario_satisfies_the_line_integral_identity() {
    let b = run(Command::Geodesic, &load("geodesic.json")).unwrap();
    let Output::Geodesic(g) = &b.output else { panic!() };
    assert!(g.theorem_discrepancy < 1e-7);
    assert!(g.max_in_phase_residual < 1e-10);
}
