use std::process::{Command, Output};

fn finsler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut a = args.to_vec();
    a.push("--json");
    let o = finsler(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn temp_manifest(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("finsler-cli-{}-{name}.toml", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&finsler(&["validate", "euclidean"])), 0);
    assert_eq!(code(&finsler(&["validate", "/definitely/not/here.toml"])), 1);
    let garbage = temp_manifest("garbage", "[geometry\n");
    assert_eq!(code(&finsler(&["validate", &garbage])), 2);
    let degenerate = temp_manifest(
        "degenerate",
        "[geometry]\nname = \"deg\"\ndim = 2\nkind = \"finsler\"\nF = \"y1\"\n[domain]\nx1 = [-1.0, 1.0]\nx2 = [-1.0, 1.0]\ny_annulus = [0.5, 2.0]\n",
    );
    let o = finsler(&["validate", &degenerate]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("F3-NONDEGENERATE    FAIL") || stdout(&o).lines().any(|l| l.starts_with("F3-NONDEGENERATE") && l.contains("FAIL")));
    assert_eq!(code(&finsler(&["projective", "euclidean", "--factor", "y1 +* 2"])), 2);
    assert_eq!(code(&finsler(&["frame2d", "flat-spray"])), 3);
}

#[test]
fn identities_table_is_all_pass() {
    let o = finsler(&["identities", "euclidean", "--samples", "10"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("[identities]") && out.contains("BIANCHI-DIFF"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn report_schema() {
    let doc = json(&["report", "randers-variable", "--samples", "6", "--seed", "3"]);
    assert_eq!(doc["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["spec"]["name"], "randers-variable");
    assert_eq!((doc["samples"].as_u64(), doc["seed"].as_u64()), (Some(6), Some(3)));
    let sections: Vec<&String> = doc["sections"].as_object().unwrap().keys().collect();
    assert_eq!(sections, ["validation", "identities", "classification", "twodim"]);
    for sec in sections {
        let entries = doc["sections"][sec].get("entries").or(doc["sections"][sec].get("verdicts")).unwrap();
        for e in entries.as_array().unwrap() {
            for key in ["id", "paper_anchor", "residual", "tolerance", "pass", "witness_point"] {
                assert!(e.get(key).is_some(), "{sec}: {e} lacks {key}");
            }
        }
    }
}

#[test]
fn classify_half_plane() {
    let doc = json(&["classify", "poincare-half-plane", "--samples", "20"]);
    let c = &doc["sections"]["classification"];
    let holds = |id: &str| c["verdicts"].as_array().unwrap().iter().find(|v| v["id"] == id).unwrap()["pass"].as_bool().unwrap();
    assert!(holds("riemannian") && holds("berwald") && holds("isotropic") && holds("constant_curvature"));
    assert!((c["scalar_curvature"]["mean"].as_f64().unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn rapcsak_and_frame2d_columns() {
    let o = finsler(&["rapcsak", "flat-spray", "funk-disk", "--samples", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("R1") && out.contains("P = SF/(2F)") && out.contains("projectively related: true"));
    let o = finsler(&["frame2d", "randers-variable", "--samples", "3"]);
    let out = stdout(&o);
    assert!(out.contains("kappa") && out.contains(" I ") && out.contains("berwald identity"));
}

#[test]
fn geodesic_csv() {
    let csv = std::env::temp_dir().join(format!("finsler-cli-{}-geo.csv", std::process::id()));
    let path = csv.display().to_string();
    let doc = json(&["geodesic", "poincare-half-plane", "--x0", "0,1", "--y0", "1,0", "--t", "1", "--steps", "1000", "--csv", &path]);
    let g = &doc["sections"]["geodesic"];
    assert_eq!(g["steps_taken"], 1000);
    assert!(g["energy_drift"].as_f64().unwrap() < 1e-9);
    let x = g["endpoint"]["x"].as_array().unwrap();
    assert!((x[0].as_f64().unwrap() - 1f64.tanh()).abs() < 1e-6);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("t,x1,x2,y1,y2,E,F"));
    assert_eq!(text.lines().count(), 1002);
}
