use std::process::{Command, Output};

use serde_json::Value;

fn wickworks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wickworks"))
        .args(args)
        .env_remove("WICKWORKS_BUDGET")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = wickworks(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn hermite_rows() {
    let v = json(&["hermite", "4"]);
    assert_eq!(v["schema"], "wickworks.hermite/1");
    assert_eq!(v["rows"][4]["polynomial"], "1x^4 -6x^2 +3");
    assert_eq!(v["rows"][0]["polynomial"], "1");
    let ten = json(&["hermite", "10"]);
    assert_eq!(
        ten["rows"][10]["polynomial"],
        "1x^10 -45x^8 +630x^6 -3150x^4 +4725x^2 -945"
    );
    let scaled = json(&["hermite", "2", "--sigma2", "1/3"]);
    assert_eq!(scaled["rows"][2]["polynomial"], "1x^2 -1/3");
}

#[test]
fn bad_flags_exit_two_with_usage() {
    for args in [
        vec!["hermite", "65"],
        vec!["hermite", "3", "--format", "dot"],
        vec!["--nope", "hermite", "2"],
        vec!["hermite", "x"],
        vec!["field", "gff"],
        vec!["field", "pink", "--seed", "1"],
        vec!["phi4", "--order", "9"],
        vec!["phi4", "--mc", "--alpha", "0.1"],
        vec!["verify", "--seed", "1", "--only", "19"],
        vec!["hermite", "2", "--threads", "0"],
    ] {
        let o = wickworks(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("Usage"), "{args:?}: {err}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn budget_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_wickworks"))
        .args(["hermite", "1"])
        .env("WICKWORKS_BUDGET", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_wickworks"))
        .args(["diagrams", "4"])
        .env("WICKWORKS_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn diagram_listings() {
    let v = json(&["diagrams", "2"]);
    assert_eq!(v["schema"], "wickworks.diagrams/1");
    assert_eq!(v["classes"].as_array().unwrap().len(), 1);
    assert_eq!(v["classes"][0]["count"], "24");
    assert!(json(&["diagrams", "1"])["classes"]
        .as_array()
        .unwrap()
        .is_empty());
    let c = json(&["diagrams", "3", "--connected"]);
    assert_eq!(c["classes"].as_array().unwrap().len(), 1);
    assert_eq!(c["classes"][0]["count"], "1728");
    let dot = wickworks(&["diagrams", "2", "--format", "dot"]);
    assert!(String::from_utf8_lossy(&dot.stdout).contains("graph g0 {"));
    let odd = wickworks(&["diagrams", "1", "--arity", "3"]);
    assert_eq!(odd.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&odd.stderr).contains("parity"));
}

#[test]
fn phi4_reports() {
    let v = json(&["phi4", "--d", "1", "--N", "8", "--order", "3"]);
    assert_eq!(v["schema"], "wickworks.phi4/1");
    let coeffs = v["partition_ratio"]["coefficients"].as_array().unwrap();
    assert_eq!(coeffs[2]["diagrams"][0]["coefficient"], "12");
    assert_eq!(coeffs[3]["diagrams"][0]["coefficient"], "-288");
    assert!(v.get("counterterms").is_none());
    let d3 = json(&[
        "phi4", "--d", "3", "--N", "4", "--order", "2", "--alpha", "0.1",
    ]);
    let ct = &d3["counterterms"];
    assert_eq!(ct["alpha"], 0.1);
    assert!(ct["beta2"].as_f64().unwrap() > 48.0);
    let mc = json(&[
        "phi4",
        "--mc",
        "--alpha",
        "0.05",
        "--samples",
        "3000",
        "--seed",
        "5",
        "--N",
        "4",
    ]);
    assert!(mc["mc"]["stderr"].as_f64().unwrap() > 0.0);
    assert_eq!(mc["mc"]["seed"], 5);
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        vec![
            "field", "gff", "--d", "2", "--N", "3", "--seed", "11", "--format", "csv",
        ],
        vec!["field", "white", "--seed", "2"],
        vec![
            "phi4",
            "--mc",
            "--alpha",
            "0.05",
            "--samples",
            "3000",
            "--seed",
            "5",
            "--N",
            "4",
        ],
        vec!["verify", "--seed", "3", "--only", "8,12"],
    ] {
        let a = wickworks(&args);
        let b = wickworks(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let one = wickworks(&[
        "--threads",
        "1",
        "phi4",
        "--mc",
        "--alpha",
        "0.05",
        "--samples",
        "9000",
        "--seed",
        "5",
        "--N",
        "4",
    ]);
    let three = wickworks(&[
        "--threads",
        "3",
        "phi4",
        "--mc",
        "--alpha",
        "0.05",
        "--samples",
        "9000",
        "--seed",
        "5",
        "--N",
        "4",
    ]);
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn field_file_output() {
    let dir = std::env::temp_dir().join(format!("wickworks-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("white.csv");
    let p = path.to_str().unwrap();
    let o = wickworks(&[
        "field", "white", "--d", "2", "--N", "2", "--seed", "4", "--format", "csv", "--out", p,
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["profile"], "white");
    assert_eq!(header["schema"], "wickworks.field/1");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gff_sample_variance_tracks_c_n() {
    let c_n = wickworks::torusfield::c_variance(1, 8).unwrap();
    let mut acc = 0.0;
    let runs = 400;
    for seed in 0..runs {
        let v = json(&[
            "field",
            "gff",
            "--N",
            "8",
            "--grid",
            "17",
            "--seed",
            &seed.to_string(),
        ]);
        let x0 = v["values"][0].as_f64().unwrap();
        acc += x0 * x0;
    }
    let est = acc / runs as f64;
    // the χ² spread of 400 draws is √(2/400) ≈ 7%
    assert!((est - c_n).abs() < 0.3 * c_n, "{est} vs {c_n}");
}

#[test]
fn verify_runs_selected_criteria() {
    let v = json(&["verify", "--seed", "20240601", "--only", "1,11,18"]);
    assert_eq!(v["schema"], "wickworks.verify/1");
    assert_eq!(v["passed"], 3);
    assert!(v["criteria"][0].get("seconds").is_none());
}
