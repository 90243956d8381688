use std::path::PathBuf;
use std::process::{Command, Output};

use schottky_core::io::{MatrixFile, ReportFile};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schottky"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("schottky-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_exact_family_is_in_locus() {
    let o = run(&["check", "--zoo", "rm_tau", "--tau", "1+1i"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("verdict: in_locus"));
    assert!(text.contains("precision: 1e-10"));
    let dmin: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("delta_min: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dmin < 1e-10);
}

#[test]
fn check_perturbed_family_is_not_in_locus() {
    let o = run(&["check", "--zoo", "rm_tau", "--tau", "1+1i", "--perturb-diag", "0.1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: not_in_locus"));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(run(&["check", "definitely-missing.json"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--zoo", "no_such_curve"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--zoo", "rm_tau", "--delta", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--zoo", "rm_tau", "--strategy", "sideways"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let bad = scratch("asymmetric.json");
    std::fs::write(
        &bad,
        r#"{"g": 2, "re": [[0.0, 0.1], [0.0, 0.0]], "im": [[1.0, 0.0], [0.0, 1.0]]}"#,
    )
    .unwrap();
    assert_eq!(run(&["reduce", bad.to_str().unwrap()]).status.code(), Some(2));
    let ragged = scratch("ragged.json");
    std::fs::write(&ragged, r#"{"g": 2, "re": [[0.0]], "im": [[1.0, 0.0], [0.0, 1.0]]}"#).unwrap();
    assert_eq!(run(&["check", ragged.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn low_genus_check_is_an_input_error() {
    let path = scratch("g2.json");
    std::fs::write(&path, r#"{"g": 2, "re": [[0.0, 0.0], [0.0, 0.0]], "im": [[1.0, 0.0], [0.0, 1.0]]}"#)
        .unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("genus"));
}

#[test]
fn json_report_round_trips_and_is_reproducible() {
    let a = scratch("report_a.json");
    let b = scratch("report_b.json");
    for p in [&a, &b] {
        let o = run(&["check", "--zoo", "rm_tau", "--seed", "7", "--json", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let ra = ReportFile::read(&a).unwrap();
    let rb = ReportFile::read(&b).unwrap();
    assert_eq!(ra.without_timing(), rb.without_timing());
    assert_eq!(ra.config.seed, 7);
    assert!(ra.verdict.in_locus);
    let again: ReportFile = serde_json::from_str(&serde_json::to_string(&ra).unwrap()).unwrap();
    assert_eq!(again, ra);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let one = scratch("threads_1.json");
    let two = scratch("threads_2.json");
    for (p, n) in [(&one, "1"), (&two, "3")] {
        let o = bin()
            .args(["check", "--zoo", "rm_tau", "--json", p.to_str().unwrap()])
            .env("SCHOTTKY_THREADS", n)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
    }
    let a = ReportFile::read(&one).unwrap().without_timing();
    let b = ReportFile::read(&two).unwrap().without_timing();
    assert_eq!(a, b);
    let bad = bin().args(["zoo"]).env("SCHOTTKY_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reduce_identity_is_unchanged_and_printed_fricke_macbeath_is_reduced() {
    let id = scratch("identity.json");
    std::fs::write(
        &id,
        r#"{"g": 3, "re": [[0,0,0],[0,0,0],[0,0,0]], "im": [[1,0,0],[0,1,0],[0,0,1]], "name": "id"}"#,
    )
    .unwrap();
    let out = scratch("identity_reduced.json");
    let o = run(&["reduce", id.to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let red: MatrixFile = serde_json::from_value(v["reduced"].clone()).unwrap();
    assert_eq!(red.to_matrix().unwrap(), MatrixFile::read(&id).unwrap().to_matrix().unwrap());
    assert_eq!(v["output_ymin"].as_f64().unwrap(), 1.0);

    let fm = scratch("fm.json");
    assert_eq!(run(&["zoo", "fricke_macbeath", "--out", fm.to_str().unwrap()]).status.code(), Some(0));
    let out = scratch("fm_reduced.json");
    let o = run(&["reduce", fm.to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["output_ymin"].as_f64().unwrap() >= 0.75f64.sqrt() - 1e-9);
}

#[test]
fn igusa_exit_codes() {
    let o = run(&["igusa", "--zoo", "rm_tau"]);
    assert_eq!(o.status.code(), Some(0));
    let abs: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("abs_sigma: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(abs <= 1e-12);
    assert_eq!(run(&["igusa", "--zoo", "rm_tau", "--perturb-diag", "0.1"]).status.code(), Some(1));
    let o = run(&["igusa", "--zoo", "fermat5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("genus"));
}

#[test]
fn igusa_on_printed_bring_is_small_relative_to_perturbation() {
    let value = |args: &[&str]| -> f64 {
        stdout(&run(args))
            .lines()
            .find_map(|l| l.strip_prefix("abs_sigma: "))
            .unwrap()
            .parse()
            .unwrap()
    };
    let bring = value(&["igusa", "--zoo", "bring"]);
    let pert = value(&["igusa", "--zoo", "rm_tau", "--perturb-diag", "0.1"]);
    assert!(bring / pert <= 1e-3, "{bring} vs {pert}");
}

#[test]
fn sweep_writes_csv_with_header() {
    let path = scratch("sweep.csv");
    let o = run(&["sweep", "--zoo", "rm_tau", "--s-grid", "0,1e-13,1e-3", "--csv", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["s", "best_residual", "delta_min", "converged_fraction"]);
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][1] <= 1e-12);
    assert!(rows[1][1] <= 1e-11);
    assert!(rows[2][1] > rows[1][1]);
    assert_eq!(rows[0][3], 1.0);
}

#[test]
fn sweep_rejects_malformed_grids() {
    for grid in ["", "1e-3,,2", "abc", "log:3:1", "log:-3"] {
        let o = run(&["sweep", "--s-grid", grid]);
        assert_eq!(o.status.code(), Some(2), "grid {grid:?}");
    }
}

#[test]
fn zoo_lists_and_exports() {
    let o = run(&["zoo"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["bring", "fermat5", "fricke_macbeath", "rm_tau"] {
        assert!(text.contains(name));
    }
    let o = run(&["zoo", "hyperelliptic5"]);
    let f: MatrixFile = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(f.g, 5);
    assert_eq!(f.stated_accuracy, Some(1e-15));
}
