use std::process::{Command, Output};

fn condenser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condenser"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn cap_tree_exact() {
    let out = condenser(&["cap-tree", "--set", "shadow:4,11", "--exact"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["exact"], "1/6");
    assert!((v["capacity"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn cap_cond_text() {
    let out = condenser(&["cap-cond", "--set", "full", "--n-max", "3", "--format", "text"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0\t0.5\n1\t1\n2\t2\n3\t4\n");
}

#[test]
fn extremal_and_measure() {
    let flux = json(&condenser(&["extremal", "--set", "shadow:1,0"]));
    assert_eq!(flux[0]["vertex"], serde_json::json!([0, 0]));
    assert!(flux[0]["H"].is_number());
    let mu = json(&condenser(&["extremal", "--set", "full", "--measure"]));
    assert_eq!(mu[0]["mass"], 0.5);
}

#[test]
fn build_set_and_equal_split() {
    let v = json(&condenser(&["build-set", "--eps", "0.3333333333333333", "--tol", "1e-12"]));
    assert_eq!(v["t"], "1/2^1");
    let fam = json(&condenser(&["equal-split", "--eps", "0.25", "--n", "3"]));
    assert_eq!(fam["e"].as_array().unwrap().len(), 4);
    assert_eq!(fam["bound_R"], 0.5);
}

#[test]
fn solve_disc_with_field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let out = condenser(&[
        "solve-disc",
        "--set",
        "full",
        "--grid-angular",
        "64",
        "--grid-radial",
        "40",
        "--dump-field",
        field.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    let cap = v["capacity"].as_f64().unwrap();
    assert!((cap * 2f64.ln() - 1.0).abs() < 0.02);
    let csv = std::fs::read_to_string(field).unwrap();
    assert_eq!(csv.lines().next(), Some("rho,theta,u"));
    assert_eq!(csv.lines().count(), 1 + 41 * 64);
}

#[test]
fn experiment_exit_codes() {
    let pass = condenser(&["experiment", "plateau", "--eps", "0.25", "--n-max", "5", "--exact"]);
    assert_eq!(pass.status.code(), Some(0));
    assert_eq!(json(&pass)["verdict"]["passed"], true);

    let fail = condenser(&["experiment", "blowup", "--set", "full", "--n-max", "4"]);
    assert_eq!(fail.status.code(), Some(1));

    let bad = condenser(&["experiment", "blowup", "--set", "empty"]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = condenser(&["cap-tree", "--set", "nonsense"]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = condenser(&["experiment", "plateau", "--eps", "0.7"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn experiment_csv_out_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("lb.csv");
    let plot = dir.path().join("lb.dat");
    let out = condenser(&[
        "experiment",
        "lowerbound",
        "--eps",
        "0.2",
        "--samples",
        "10",
        "--seed",
        "3",
        "--format",
        "csv",
        "--out",
        report.to_str().unwrap(),
        "--plot",
        "n,lower_bound",
        "--plot-out",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(report).unwrap();
    assert!(csv.starts_with("# name: lowerbound"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 9);
    assert_eq!(std::fs::read_to_string(plot).unwrap().lines().count(), 1 + 9);
}

#[test]
fn lowerbound_requires_a_seed() {
    let out = condenser(&["experiment", "lowerbound", "--eps", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
}
