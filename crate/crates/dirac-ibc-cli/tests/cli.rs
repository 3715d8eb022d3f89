//! End-to-end tests of the command-line interface: spec files are generated
//! through the library, the binary runs as a subprocess, and exit codes plus
//! emitted artifacts are verified.

use std::path::{Path, PathBuf};
use std::process::Command;

use dirac_ibc::catalog::{ahw_outside_family, mit_bag};
use dirac_ibc::matrix::cr;
use dirac_ibc::sim::builtin::{balanced_coupling, PointSourceParams};
use dirac_ibc::sim::builtin_point_source;
use dirac_ibc::spin::weyl_rep;
use dirac_ibc::CMatrix;
use serde_json::json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirac-ibc"))
}

fn write_spec(dir: &Path, name: &str, kind: &str, payload: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    let spec = json!({
        "kind": kind,
        "schema_version": "1",
        "payload": payload,
    });
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path
}

fn reflecting_payload(an: &CMatrix, l: &CMatrix) -> serde_json::Value {
    json!({
        "an": serde_json::to_value(an).unwrap(),
        "l": serde_json::to_value(l).unwrap(),
    })
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn point_source_payload(dx: f64) -> serde_json::Value {
    let model = builtin_point_source(&PointSourceParams {
        x_max: 1.0,
        dx,
        theta: 0.0,
        n: balanced_coupling(1.0),
        mass: 0.0,
        hbar: 1.0,
        override_conditions: false,
    })
    .unwrap();
    json!({
        "model": serde_json::to_value(&model).unwrap(),
        "initial": { "kind": "point_amplitude", "sector": 0 },
    })
}

#[test]
fn check_accepts_the_bag_condition_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let bc = mit_bag(&weyl_rep(), &[0.0, 0.0, 1.0]).unwrap();
    let good = write_spec(
        dir.path(),
        "bag.json",
        "reflecting",
        reflecting_payload(&bc.split.a, &bc.l),
    );
    let (code, stdout) = run(&["check", good.to_str().unwrap()]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["ok"], true);
    assert_eq!(report["data"]["subspace_dim"], 2);

    // an all-zero mode map is not unitary between the mode spaces
    let bad = write_spec(
        dir.path(),
        "bad.json",
        "reflecting",
        reflecting_payload(&bc.split.a, &CMatrix::zeros(4, 4)),
    );
    let (code, stdout) = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, 2, "stdout: {stdout}");

    // unknown fields are schema violations
    let path = dir.path().join("typo.json");
    std::fs::write(
        &path,
        r#"{"kind":"reflecting","schema_version":"1","payload":{},"extra":1}"#,
    )
    .unwrap();
    let (code, _) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn check_accepts_maps_outside_the_parameter_family() {
    let dir = tempfile::tempdir().unwrap();
    let bc = &ahw_outside_family(0.7)[0];
    let path = write_spec(
        dir.path(),
        "outside.json",
        "reflecting",
        reflecting_payload(&bc.split.a, &bc.l),
    );
    let (code, _) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 0);

    // and converting it to the parameter matrix reports the obstruction
    let (code, stdout) = run(&["convert", "--from", "l", "--to", "t", path.to_str().unwrap()]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["data"]["result"], "no_t");
    assert!(report["data"]["denominator_abs"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn convert_zero_parameters_swaps_modes_and_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = write_spec(
        dir.path(),
        "t0.json",
        "t",
        json!({"a": 0.0, "b": [0.0, 0.0], "c": 0.0}),
    );
    let (code, stdout) = run(&["convert", "--from", "t", "--to", "l", t0.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let l: CMatrix =
        serde_json::from_value(report["data"]["payload"]["l"].clone()).unwrap();
    assert!((l[(0, 2)] - cr(1.0)).norm() < 1e-14);
    assert!((l[(3, 1)] - cr(1.0)).norm() < 1e-14);

    // l -> c with unit mode restrictions gives c = l
    let lfile = dir.path().join("l.json");
    std::fs::write(
        &lfile,
        serde_json::to_string(&report["data"]).unwrap(),
    )
    .unwrap();
    let (code, stdout) = run(&["convert", "--from", "l", "--to", "c", lfile.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let c: CMatrix =
        serde_json::from_value(report["data"]["payload"]["c"].clone()).unwrap();
    assert!(c.approx_eq(&l, 1e-12));

    // same-to-same is a usage error
    let (code, _) = run(&["convert", "--from", "t", "--to", "t", t0.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn reflect_solves_the_head_on_problem() {
    let dir = tempfile::tempdir().unwrap();
    let bc = mit_bag(&weyl_rep(), &[0.0, 0.0, 1.0]).unwrap();
    let path = write_spec(
        dir.path(),
        "bag.json",
        "reflecting",
        reflecting_payload(&bc.split.a, &bc.l),
    );
    let (code, stdout) = run(&[
        "reflect",
        "--k",
        "0,0,1",
        "--m",
        "0.5",
        "--bc",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["ok"], true);
    let coeffs: CMatrix =
        serde_json::from_value(report["data"]["reflection_coefficients"].clone()).unwrap();
    assert_eq!((coeffs.rows(), coeffs.cols()), (2, 2));

    // downward-pointing wavevector is rejected as usage
    let (code, _) = run(&[
        "reflect",
        "--k",
        "0,0,-1",
        "--bc",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn simulate_then_audit_roundtrip_and_tamper_detection() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_spec(dir.path(), "model.json", "model", point_source_payload(0.02));
    let out = dir.path().join("out");
    let (code, stdout) = run(&[
        "simulate",
        model.to_str().unwrap(),
        "--steps",
        "200",
        "--method",
        "cn",
        "--out",
        out.to_str().unwrap(),
        "--snap-every",
        "50",
    ]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(report["data"]["norm_drift"].as_f64().unwrap() < 1e-10);

    // the series is written and the total norm stays put
    let series = series_column(&out.join("series.csv"), 1);
    assert!(series.iter().all(|&v| (v - series[0]).abs() < 1e-10));

    let (code, _) = run(&["audit", out.to_str().unwrap()]);
    assert_eq!(code, 0);

    // tampering with the series is detected
    let text = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let tampered = text.replacen("e-1", "e-2", 1);
    assert_ne!(text, tampered, "tamper target not found");
    std::fs::write(out.join("series.csv"), tampered).unwrap();
    let (code, _) = run(&["audit", out.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn simulate_is_deterministic_and_supports_exact_transport() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_spec(dir.path(), "model.json", "model", point_source_payload(0.02));
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out_a, &out_b] {
        let (code, _) = run(&[
            "simulate",
            model.to_str().unwrap(),
            "--steps",
            "100",
            "--method",
            "characteristics",
            "--out",
            out.to_str().unwrap(),
            "--snap-every",
            "25",
        ]);
        assert_eq!(code, 0);
    }
    for name in ["series.csv", "snap_0.json", "snap_50.json", "snap_100.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // exact transport keeps the total norm to machine precision
    let norms = series_column(&out_a.join("series.csv"), 1);
    assert!(norms.iter().all(|&v| (v - norms[0]).abs() < 1e-12));
    // and its outputs audit cleanly under the recorded quadrature
    let (code, _) = run(&["audit", out_a.to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn model_check_reports_generator_health() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_spec(dir.path(), "model.json", "model", point_source_payload(0.05));
    let (code, stdout) = run(&["check", model.to_str().unwrap()]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["data"]["simple_conditions_hold"], true);
}

fn series_column(path: &Path, col: usize) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn check_certifies_interior_boundary_specs() {
    use dirac_ibc::ibc::IbcSpec;
    use dirac_ibc::lagrangian::mit_bag_l_weyl;
    use dirac_ibc::split::HermitianSplit;

    let dir = tempfile::tempdir().unwrap();
    let split = HermitianSplit::with_default_tol(&weyl_rep().alphas[2]).unwrap();
    let n = CMatrix::from_fn(4, 1, |i, _| {
        if i == 0 || i == 2 { cr(0.8) } else { cr(0.0) }
    });
    let spec = IbcSpec::simple(split, &mit_bag_l_weyl(), n, 1.0).unwrap();
    let path = dir.path().join("ibc.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&json!({
            "kind": "ibc",
            "schema_version": "1",
            "payload": serde_json::to_value(&spec).unwrap(),
        }))
        .unwrap(),
    )
    .unwrap();
    let (code, stdout) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["data"]["simple_conditions_hold"], true);
    assert_eq!(report["data"]["subspace_dim"], 3);

    // an all-zero product-space mode map cannot be unitary
    let mut payload = serde_json::to_value(&spec).unwrap();
    payload["Ltilde"] = serde_json::to_value(CMatrix::zeros(5, 5)).unwrap();
    let bad = dir.path().join("bad_ibc.json");
    std::fs::write(
        &bad,
        serde_json::to_string(&json!({
            "kind": "ibc",
            "schema_version": "1",
            "payload": payload,
        }))
        .unwrap(),
    )
    .unwrap();
    let (code, _) = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn convert_composes_through_the_mode_map() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = write_spec(
        dir.path(),
        "t0.json",
        "t",
        json!({"a": 0.0, "b": [0.0, 0.0], "c": 0.0}),
    );
    // with unit mode restrictions the plain form equals the mode map
    let (code, stdout) = run(&["convert", "--from", "t", "--to", "c", t0.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let c: CMatrix = serde_json::from_value(report["data"]["payload"]["c"].clone()).unwrap();
    assert!((c[(0, 2)] - cr(1.0)).norm() < 1e-13);
    assert!((c[(3, 1)] - cr(1.0)).norm() < 1e-13);
}
