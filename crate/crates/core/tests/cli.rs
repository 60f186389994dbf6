use std::process::{Command, Output};

use ostrowski_core::ostrowski::{self, Rect, SubRect, Surface};
use ostrowski_core::quad::QuadConfig;
use ostrowski_core::weight::WeightSpec;
use serde_json::Value;

fn ostrowski(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ostrowski"))
        .args(args)
        .output()
        .expect("run binary")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

const REPORT_KEYS: [&str; 21] = [
    "schema_version",
    "command",
    "function",
    "weight",
    "rect",
    "subrect",
    "point",
    "m_alpha",
    "m_beta",
    "A",
    "B",
    "sup_norm",
    "sup_norm_method",
    "defect",
    "bound",
    "ratio",
    "satisfied",
    "paper_constant",
    "derived_constant",
    "quad_evaluations",
    "tolerances",
];

/// Top-level keys in document order.
fn keys(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.strip_prefix("  \""))
        .filter_map(|l| l.split_once('"').map(|(k, _)| k.to_string()))
        .collect()
}

fn reals(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn verify_report_has_exactly_the_schema_keys() {
    let out = ostrowski(&[
        "verify",
        "--function",
        "t*s*sin(t+s)",
        "--weight",
        "linear",
        "--rect",
        "0,2,0.5,1.5",
        "--subrect",
        "0.5,1.5,0.5,1",
        "--point",
        "1,0.75",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(keys(&out), REPORT_KEYS);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(reals(&v["subrect"]), [0.5, 1.5, 0.5, 1.0]);
    for k in ["abs_tol", "rel_tol", "max_depth", "min_cell_width"] {
        assert!(v["tolerances"].get(k).is_some(), "{k}");
    }
}

#[test]
fn json_numbers_round_trip_bit_for_bit() {
    let rect = Rect::new(0.1, 1.9, 0.2, 1.3).unwrap();
    let sub = SubRect::within(&rect, 0.3, 1.7, 0.25, 1.1).unwrap();
    let p = ostrowski::EvalPoint::new(0.7, 0.45);
    let f = Surface::parse("exp(t)*sin(s)+t^2*s").unwrap();
    let w = WeightSpec::expression("1+u^2", rect.weight_domain()).unwrap();
    let lib = ostrowski::verify(&f, &w, &sub, &p, &QuadConfig::default()).unwrap();

    let out = ostrowski(&[
        "verify",
        "--function",
        "exp(t)*sin(s)+t^2*s",
        "--weight",
        "expr:1+u^2",
        "--rect",
        "0.1,1.9,0.2,1.3",
        "--subrect",
        "0.3,1.7,0.25,1.1",
        "--point",
        "0.7,0.45",
    ]);
    let v = json(&out);
    let bits = |k: &str| v[k].as_f64().unwrap().to_bits();
    assert_eq!(bits("defect"), lib.defect.to_bits());
    assert_eq!(bits("bound"), lib.bound.to_bits());
    assert_eq!(bits("ratio"), lib.ratio.to_bits());
    assert_eq!(bits("A"), lib.moments.a.to_bits());
    assert_eq!(bits("m_beta"), lib.moments.m_beta.to_bits());
    assert_eq!(bits("sup_norm"), lib.sup_norm.to_bits());
}

#[test]
fn sweep_json_is_row_major_array() {
    let out = ostrowski(&[
        "sweep",
        "--function",
        "t*s",
        "--rect",
        "0,1,0,2",
        "--grid",
        "2,3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let points: Vec<(f64, f64)> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["point"][0].as_f64().unwrap(),
                r["point"][1].as_f64().unwrap(),
            )
        })
        .collect();
    let want = [
        (0.25, 1.0 / 3.0),
        (0.25, 1.0),
        (0.25, 5.0 / 3.0),
        (0.75, 1.0 / 3.0),
        (0.75, 1.0),
        (0.75, 5.0 / 3.0),
    ];
    assert_eq!(points.len(), want.len());
    for (got, want) in points.iter().zip(want) {
        assert!((got.0 - want.0).abs() < 1e-15 && (got.1 - want.1).abs() < 1e-15);
    }
}

#[test]
fn csv_has_header_and_one_row_per_point() {
    let out = ostrowski(&[
        "sweep",
        "--function",
        "t*s",
        "--rect",
        "0,1,0,1",
        "--grid",
        "3,3",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], "x,y,defect,bound,ratio,satisfied");
    // the centre point has zero defect, printed without a sign
    assert!(lines[5].starts_with("0.5,0.5,0,"), "{}", lines[5]);
    assert!(!text.contains("-0,"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = ostrowski(&[
        "verify",
        "--function",
        "t*s",
        "--rect",
        "0,1,0,1",
        "--point",
        "mid",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["bound"], 0.0625);
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# reproducible run\nfunction = t*s\nweight = const\nrect = 0,1,0,1\npoint = 0.5,0.5\nabs_tol = 1e-11\n",
    )
    .unwrap();
    let base = ostrowski(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(base.status.code(), Some(0));
    let v = json(&base);
    assert_eq!(reals(&v["point"]), [0.5, 0.5]);
    assert_eq!(v["tolerances"]["abs_tol"], 1e-11);

    let over = ostrowski(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--point",
        "0,0",
    ]);
    assert_eq!(reals(&json(&over)["point"]), [0.0, 0.0]);
    assert_eq!(json(&over)["ratio"], 1.0);
}

#[test]
fn bad_config_line_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "function t*s\n").unwrap();
    let out = ostrowski(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:1"));
}

#[test]
fn override_sup_norm_can_expose_violation() {
    // M = 0 claims a zero bound, which the nonzero defect then violates
    let out = ostrowski(&[
        "verify",
        "--function",
        "t*s",
        "--rect",
        "0,1,0,1",
        "--point",
        "0,0",
        "--sup-norm",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["satisfied"], false);
    assert_eq!(v["sup_norm_method"], "override");
    assert!(v["ratio"].is_null());
}

#[test]
fn cubature_report() {
    let out = ostrowski(&[
        "cubature",
        "--function",
        "t^2*s^2",
        "--rect",
        "0,1,0,1",
        "--target-error",
        "1e-4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "cubature");
    assert_eq!(v["converged"], true);
    let value = v["value"].as_f64().unwrap();
    let bound = v["error_bound"].as_f64().unwrap();
    assert!((value - 1.0 / 9.0).abs() <= bound && bound <= 1e-4);
    assert_eq!(v["root_grid"], 201);
    assert_eq!(v["cell_grid"], 101);
}

#[test]
fn median_json_format() {
    let out = ostrowski(&[
        "median",
        "--weight",
        "linear",
        "--interval",
        "0,2",
        "--format",
        "json",
    ]);
    let v = json(&out);
    assert!((v["median"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-11);
    assert_eq!(v["mass"], 2.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "--function", "t*s", "--rect", "0,1,0,1"][..],
        &[
            "verify",
            "--function",
            "t*s",
            "--rect",
            "0,1,0",
            "--point",
            "mid",
        ],
        &[
            "verify",
            "--function",
            "t*q",
            "--rect",
            "0,1,0,1",
            "--point",
            "mid",
        ],
        &[
            "verify",
            "--function",
            "t*s",
            "--rect",
            "1,0,0,1",
            "--point",
            "mid",
        ],
        &[
            "verify",
            "--function",
            "t*s",
            "--weight",
            "linear",
            "--rect",
            "-1,1,0,1",
            "--point",
            "mid",
        ],
        &[
            "sweep",
            "--function",
            "t*s",
            "--rect",
            "0,1,0,1",
            "--grid",
            "1,3",
        ],
        &[
            "cubature",
            "--function",
            "t*s",
            "--rect",
            "0,1,0,1",
            "--target-error",
            "0",
        ],
        &["constants", "--case", "w1-subrect", "--rect", "0,1,0,1"],
        &["frobnicate"],
    ] {
        let out = ostrowski(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn constants_reports_both_values() {
    let out = ostrowski(&["constants", "--case", "w1-midpoint", "--rect", "0,2,0,3"]);
    let v = json(&out);
    assert_eq!(keys(&out), REPORT_KEYS);
    assert_eq!(v["paper_constant"], 6.0 / 16.0);
    assert!((v["derived_constant"].as_f64().unwrap() - 0.375).abs() < 1e-15);
    assert!(v["defect"].is_null() && v["satisfied"].is_null());
    assert!(out.stderr.is_empty());
}

#[test]
fn leading_minus_is_a_value_not_a_flag() {
    let out = ostrowski(&[
        "verify",
        "--function",
        "-t*s",
        "--rect",
        "-1,0,-1,0",
        "--point",
        "mid",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["sup_norm"], 1.0);
}
