use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;
use tempfile::TempDir;

const EUCLID: &str = r#"{"dimension": 2, "family": "riemannian", "a": [[1, 0], [0, 1]]}"#;
const FUNK: &str = r#"{"dimension": 2, "family": "funk", "funk_a": [0, 0]}"#;
const FUNK3: &str = r#"{"dimension": 3, "family": "funk"}"#;
const SPHERE: &str =
    r#"{"dimension": 2, "family": "riemannian", "a": [["4/(1+abs2(x))^2", 0], [0, "4/(1+abs2(x))^2"]]}"#;
const RANDERS_FLAT: &str = r#"{"dimension": 2, "family": "randers", "a": [[1, 0], [0, 1]], "b": [0.3, -0.1]}"#;

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Work {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn finsler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn schema(name: &str) -> JSONSchema {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name)).unwrap();
    JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let sc = schema(schema_name);
    let msgs: Vec<String> = match sc.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{schema_name}: {msgs:#?}");
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .map(|c| if c.is_empty() { f64::NAN } else { c.parse().unwrap() })
                .collect()
        })
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn euclidean_report_has_vanishing_curvature() {
    let w = Work::new();
    let spec = w.file("e.json", EUCLID);
    let pts = w.file("p.json", r#"[{"x": [0.3, -0.2], "y": [1, 2]}]"#);
    let doc = json(&finsler(&["report", s(&spec), "--points", s(&pts)]));
    assert_valid("report.schema.json", &doc);
    let p = &doc["points"][0];
    for (name, v) in p["norms"].as_object().unwrap() {
        if !matches!(name.as_str(), "g" | "h") {
            assert!(v.as_f64().unwrap() <= 1e-10, "{name} = {v}");
        }
    }
    assert_eq!(doc["seed"], Value::Null);
    assert_eq!(doc["verdicts"]["identities"], true);
    assert_eq!(doc["fits"]["relative_stretch"]["status"], "unavailable");
}

#[test]
fn funk_report_fits_minus_one() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let doc = json(&finsler(&["report", s(&spec), "--samples", "5", "--seed", "7"]));
    assert_valid("report.schema.json", &doc);
    assert_eq!(doc["points"].as_array().unwrap().len(), 5);
    for p in doc["points"].as_array().unwrap() {
        assert!(p["norms"]["Sigma"].as_f64().unwrap() > 1e-6);
    }
    let fit = &doc["fits"]["relative_stretch"]["value"];
    assert!((fit["c"].as_f64().unwrap() + 1.0).abs() <= 1e-6, "{fit}");
    assert!(fit["residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(fit["constant"], true);
    assert_eq!(doc["tolerances"]["identity"], 1e-6);
    assert_eq!(doc["tolerances"]["fit_spread"], 1e-4);
    assert_eq!(doc["seed"], 7);
}

#[test]
fn full_tensor_report_validates() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let doc = json(&finsler(&["report", s(&spec), "--samples", "1", "--full-tensors"]));
    assert_valid("report.schema.json", &doc);
    let g = &doc["points"][0]["tensors"]["g"];
    assert_eq!(g["components"].as_array().unwrap().len(), 4);
}

#[test]
fn output_is_deterministic() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let a = finsler(&["report", s(&spec), "--samples", "3", "--seed", "11"]);
    let b = finsler(&["report", s(&spec), "--samples", "3", "--seed", "11"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = finsler(&["classify", s(&spec), "--samples", "4", "--seed", "3"]);
    let d = finsler(&["classify", s(&spec), "--samples", "4", "--seed", "3"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn out_path_receives_the_document() {
    let w = Work::new();
    let spec = w.file("e.json", EUCLID);
    let out = w.path("r.json");
    let o = finsler(&["report", s(&spec), "--samples", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid("report.schema.json", &doc);
}

#[test]
fn missing_spec_exits_2_without_output() {
    let w = Work::new();
    let out = w.path("r.json");
    let o = finsler(&["report", s(&w.path("nope.json")), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    assert!(!out.exists());
    assert!(!w.path("r.json.partial").exists());
}

#[test]
fn spec_errors_exit_2_with_position() {
    let w = Work::new();
    let bad = w.file("b.json", r#"{"dimension": 2, "family": "custom", "expression": "sqrt(y1^2 + * y2^2)"}"#);
    let o = finsler(&["report", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("12"));
    assert!(o.stdout.is_empty());

    let unknown = w.file("u.json", r#"{"dimension": 2, "family": "funk", "colour": 1}"#);
    assert_eq!(code(&finsler(&["classify", s(&unknown)])), 2);
    let wrong_key = w.file("k.json", r#"{"dimension": 2, "family": "funk", "a": [[1, 0], [0, 1]]}"#);
    assert_eq!(code(&finsler(&["classify", s(&wrong_key)])), 2);
    assert_eq!(code(&finsler(&["verify", s(&bad), "--suite", "identities"])), 2);
}

#[test]
fn bad_usage_exits_2() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    assert_eq!(code(&finsler(&["verify", s(&spec), "--suite", "nonsense"])), 2);
    assert_eq!(code(&finsler(&["geodesic", s(&spec), "--x0", "0,a", "--y0", "1,0"])), 2);
    assert_eq!(code(&finsler(&["geodesic", s(&spec), "--x0", "0,0", "--y0", "1,0", "--flows", "zeta"])), 2);
    assert_eq!(code(&finsler(&["frobnicate"])), 2);
}

#[test]
fn out_of_chart_point_exits_3() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let pts = w.file("p.json", r#"[{"x": [1.5, 0], "y": [1, 0]}]"#);
    let o = finsler(&["report", s(&spec), "--points", s(&pts)]);
    assert_eq!(code(&o), 3);
    assert!(o.stdout.is_empty());
}

#[test]
fn shipped_specs_validate_against_schema() {
    for text in [EUCLID, FUNK, FUNK3, SPHERE, RANDERS_FLAT] {
        assert_valid("metric-spec.schema.json", &serde_json::from_str(text).unwrap());
    }
    let bad: Value = serde_json::from_str(r#"{"dimension": 2, "family": "funk", "b": [0, 0]}"#).unwrap();
    assert!(!schema("metric-spec.schema.json").is_valid(&bad));
}

#[test]
fn metric_echo_round_trips_as_spec_file() {
    let w = Work::new();
    let src = r#"{"dimension": 2, "family": "randers", "a": [[1, 0], [0, "1 + k*x1^2"]], "b": ["0.1*x2", 0],
                  "chart": {"kind": "ball", "center": [0, 0], "radius": 0.9}, "params": {"k": [0.5]}}"#;
    let spec = w.file("r.json", src);
    let doc = json(&finsler(&["classify", s(&spec), "--samples", "2"]));
    let echo = &doc["metric"];
    assert_valid("metric-spec.schema.json", echo);
    let again = w.file("echo.json", &echo.to_string());
    let doc2 = json(&finsler(&["classify", s(&again), "--samples", "2"]));
    assert_eq!(doc["metric"], doc2["metric"]);
    assert_eq!(doc["verdict"], doc2["verdict"]);

    let funk = json(&finsler(&["classify", s(&w.file("f.json", FUNK)), "--samples", "1"]));
    assert_valid("metric-spec.schema.json", &funk["metric"]);
}

#[test]
fn verify_funk_identities_pass() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let out = w.path("rows.csv");
    let o = finsler(&["verify", s(&spec), "--suite", "identities", "--samples", "4", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let text = fs::read_to_string(&out).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["suite", "check", "point", "t", "residual", "tolerance", "verdict", "detail"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert!(rows.len() >= 4 * 5);
    assert!(rows.iter().all(|r| &r[0] == "identities" && &r[6] != "fail"));
}

#[test]
fn verify_funk_constant_flag_reports_lambda_and_c() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK3);
    let out = w.path("rows.csv");
    let o = finsler(&["verify", s(&spec), "--suite", "constant-flag", "--samples", "3", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("lambda=-0.25"), "{text}");
    assert!(text.contains("c=-1"), "{text}");
}

#[test]
fn verify_sphere_landsberg_routes_pass() {
    let w = Work::new();
    let spec = w.file("s.json", SPHERE);
    let o = finsler(&["verify", s(&spec), "--suite", "landsberg-routes", "--samples", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_bianchi_and_theorem3_on_funk() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    assert_eq!(code(&finsler(&["verify", s(&spec), "--suite", "bianchi", "--samples", "3"])), 0);
    let o = finsler(&[
        "verify", s(&spec), "--suite", "theorem3", "--x0", "0.1,-0.2", "--y0", "0.6,0.8", "--t", "0.5", "--steps", "6",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_flows_fails_on_literal_phi_law() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let out = w.path("rows.csv");
    let o = finsler(&[
        "verify", s(&spec), "--suite", "flows", "--x0", "0.1,-0.2", "--y0", "0.6,0.8", "--t", "0.5", "--steps", "20",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 1);
    let text = fs::read_to_string(&out).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    for rec in r.records().map(Result::unwrap) {
        match &rec[1] {
            "phi_law" => {
                assert_eq!(&rec[6], "fail");
                assert!((rec[4].parse::<f64>().unwrap() - 0.5).abs() < 1e-6);
            }
            "phi_law_half" | "mu_flow" | "phi_dot_fd" => assert_eq!(&rec[6], "pass", "{rec:?}"),
            _ => {}
        }
    }
}

#[test]
fn classify_verdicts() {
    let w = Work::new();
    let e = json(&finsler(&["classify", s(&w.file("e.json", EUCLID)), "--samples", "5"]));
    assert_valid("classify.schema.json", &e);
    for flag in ["riemannian", "berwald", "landsberg", "weak_landsberg", "stretch", "r_quadratic", "weak_berwald"] {
        assert_eq!(e["verdict"][flag]["holds"], true, "{flag}");
    }

    let f = json(&finsler(&["classify", s(&w.file("f.json", FUNK)), "--samples", "5"]));
    assert_valid("classify.schema.json", &f);
    assert_eq!(f["verdict"]["landsberg"]["holds"], false);
    assert_eq!(f["verdict"]["stretch"]["holds"], false);
    assert_eq!(f["verdict"]["riemannian"]["holds"], false);

    let r = json(&finsler(&["classify", s(&w.file("r.json", RANDERS_FLAT)), "--samples", "5"]));
    assert_valid("classify.schema.json", &r);
    assert_eq!(r["verdict"]["berwald"]["holds"], true);
    assert_eq!(r["verdict"]["landsberg"]["holds"], true);
    assert_eq!(r["verdict"]["riemannian"]["holds"], false);
}

#[test]
fn classify_thresholds_are_echoed() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let doc = json(&finsler(&["classify", s(&spec), "--samples", "2", "--thresholds", "1e3"]));
    assert_eq!(doc["thresholds"]["landsberg"], 1e3);
    assert_eq!(doc["verdict"]["landsberg"]["holds"], true);
    let th = w.file("th.json", r#"{"stretch": 0.5}"#);
    let doc = json(&finsler(&["classify", s(&spec), "--samples", "2", "--thresholds", s(&th)]));
    assert_eq!(doc["thresholds"]["stretch"], 0.5);
    let bad = w.file("bad.json", r#"{"strech": 0.5}"#);
    assert_eq!(code(&finsler(&["classify", s(&spec), "--thresholds", s(&bad)])), 2);
}

#[test]
fn euclidean_geodesic_is_a_straight_line() {
    let w = Work::new();
    let spec = w.file("e.json", EUCLID);
    let o = finsler(&["geodesic", s(&spec), "--x0", "1,-2", "--y0", "0.5,3", "--t", "2", "--samples", "8"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h, ["t", "x1", "x2", "y1", "y2", "F"]);
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let t = r[0];
        assert!((r[1] - (1.0 + 0.5 * t)).abs() < 1e-10);
        assert!((r[2] - (-2.0 + 3.0 * t)).abs() < 1e-10);
        assert!((r[3] - 0.5).abs() < 1e-10 && (r[4] - 3.0).abs() < 1e-10);
    }
}

#[test]
fn funk_geodesic_phi_columns_and_summary() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let out = w.path("ts.csv");
    let o = finsler(&[
        "geodesic", s(&spec), "--x0", "0.1,-0.2", "--y0", "0.6,0.8", "--t", "1", "--samples", "6", "--unit-speed",
        "--flows", "phi,mu,c", "--c", "-1", "--out", s(&out),
    ]);
    let summary = json(&o);
    assert_valid("geodesic-summary.schema.json", &summary);
    let (h, rows) = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 7);
    let half = column(&h, &rows, "phi_law_half_residual");
    assert!(half.iter().all(|v| *v <= 1e-5), "{half:?}");
    let literal = column(&h, &rows, "phi_law_residual");
    assert!(literal.iter().all(|v| v.is_finite()));
    for v in column(&h, &rows, "c") {
        assert!((v + 1.0).abs() < 1e-6);
    }
    for v in column(&h, &rows, "mu") {
        assert!((v + 0.5).abs() < 1e-6);
    }
    assert!(summary["flows"]["max_phi_law_half_residual"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn sphere_parallelogram_defects_vanish() {
    let w = Work::new();
    let spec = w.file("s.json", SPHERE);
    let hol = w.path("hol.csv");
    let sum = w.path("sum.json");
    let o = finsler(&[
        "geodesic", s(&spec), "--x0", "0.2,0.1", "--y0", "1,0", "--t", "0.5", "--samples", "4",
        "--parallelogram", "1,0;0,1;0.3,1;0.05,0.1,0.2", "--out", s(&w.path("ts.csv")),
        "--summary", s(&sum), "--holonomy-out", s(&hol),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&sum).unwrap()).unwrap();
    assert_valid("geodesic-summary.schema.json", &doc);
    let (h, rows) = csv_rows(&fs::read_to_string(&hol).unwrap());
    assert_eq!(h, ["eps", "delta", "w1", "w2"]);
    assert_eq!(rows.len(), 3);
    assert!(column(&h, &rows, "delta").iter().all(|d| *d <= 1e-9));
}

#[test]
fn funk_backward_geodesic_exits_3_with_time() {
    let w = Work::new();
    let spec = w.file("f.json", FUNK);
    let out = w.path("ts.csv");
    let o = finsler(&["geodesic", s(&spec), "--x0", "0,0", "--y0", "1,0", "--t", "-2", "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    let t: f64 = err
        .split("t = ")
        .nth(1)
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((t + std::f64::consts::LN_2).abs() < 1e-3, "{err}");
    assert!(!out.exists());
}
