//! End-to-end checks of the `elnet` binary: exit codes, file formats,
//! reproducibility, and config precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn elnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn gen_small(dir: &Path, out: &str, seed: &str) {
    let out = elnet(
        dir,
        &[
            "gen", "--out", out, "--m", "40", "--n", "120", "--n0", "4", "--seed", seed,
        ],
    );
    assert_ok(&out);
}

#[test]
fn gen_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d1", "7");
    gen_small(tmp.path(), "d2", "7");
    gen_small(tmp.path(), "d3", "8");
    let a1 = fs::read(tmp.path().join("d1/A.bin")).unwrap();
    let a2 = fs::read(tmp.path().join("d2/A.bin")).unwrap();
    let a3 = fs::read(tmp.path().join("d3/A.bin")).unwrap();
    assert_eq!(a1, a2, "same seed must give identical bytes");
    assert_ne!(a1, a3);
    let b1 = fs::read(tmp.path().join("d1/b.txt")).unwrap();
    let b2 = fs::read(tmp.path().join("d2/b.txt")).unwrap();
    assert_eq!(b1, b2);
}

#[test]
fn gen_prints_snr_and_rho() {
    let tmp = tempfile::tempdir().unwrap();
    let out = elnet(
        tmp.path(),
        &[
            "gen", "--out", "d", "--m", "60", "--n", "100", "--n0", "5", "--seed", "3",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("realized snr"), "{stdout}");
    assert!(stdout.contains("rho_hat"), "{stdout}");
}

#[test]
fn solve_at_lambda_max_writes_empty_solution() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "5");
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r", "--data", "d", "--alpha", "1.0", "--clambda", "1.0",
        ],
    );
    assert_ok(&out);
    let sol = fs::read_to_string(tmp.path().join("r/solution.txt")).unwrap();
    assert!(sol.is_empty(), "expected no active features, got: {sol}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["r"], 0);
    assert_eq!(summary["converged"], true);
}

#[test]
fn solve_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "11");

    // usage error: no penalty given
    let out = elnet(tmp.path(), &["solve", "--out", "r0", "--data", "d"]);
    assert_eq!(out.status.code(), Some(1));

    // non-convergence: starved iteration budget still writes the summary
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r1", "--data", "d", "--alpha", "0.8", "--clambda", "0.3",
            "--max-outer", "1", "--max-inner", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r1/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["converged"], false);

    // success
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r2", "--data", "d", "--alpha", "0.8", "--clambda", "0.3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn oracle_check_reports_small_gap() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "13");
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r", "--data", "d", "--alpha", "0.7", "--clambda", "0.4",
            "--oracle-check",
        ],
    );
    assert_ok(&out);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/summary.json")).unwrap())
            .unwrap();
    let gap = summary["oracle_check"]["relative_gap"].as_f64().unwrap();
    assert!(gap <= 1e-6, "oracle gap {gap}");
}

#[test]
fn config_file_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "17");
    fs::write(tmp.path().join("elnet.conf"), "sigma-factor=9\nseed=4\n").unwrap();

    // file value applies
    let out = elnet(
        tmp.path(),
        &[
            "--config", "elnet.conf", "solve", "--out", "r1", "--data", "d", "--alpha", "0.8",
            "--clambda", "0.5",
        ],
    );
    assert_ok(&out);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r1/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["sigma_factor"], 9.0);
    assert_eq!(summary["config"]["seed"], 4);

    // explicit flag overrides the file
    let out = elnet(
        tmp.path(),
        &[
            "--config", "elnet.conf", "solve", "--out", "r2", "--data", "d", "--alpha", "0.8",
            "--clambda", "0.5", "--sigma-factor", "3",
        ],
    );
    assert_ok(&out);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r2/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["sigma_factor"], 3.0);
}

#[test]
fn single_point_path_matches_solve() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "19");
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "rs", "--data", "d", "--alpha", "0.8", "--clambda", "1.0",
        ],
    );
    assert_ok(&out);
    let out = elnet(
        tmp.path(),
        &[
            "path", "--out", "rp", "--data", "d", "--alpha", "0.8", "--n-lambda", "1",
        ],
    );
    assert_ok(&out);
    let report = fs::read_to_string(tmp.path().join("rp/report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one point: {report}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("rs/summary.json")).unwrap())
            .unwrap();
    // both solve the c = 1 point: no active features
    assert!(lines[1].starts_with("0.8,1,"));
    assert_eq!(summary["r"], 0);
}

#[test]
fn path_cold_check_and_report_columns() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "23");
    let out = elnet(
        tmp.path(),
        &[
            "path", "--out", "rp", "--data", "d", "--alpha", "0.9", "--n-lambda", "10",
            "--c-min", "0.2", "--cold-check",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cold check"), "{stdout}");
    let report = fs::read_to_string(tmp.path().join("rp/report.csv")).unwrap();
    assert!(report.starts_with(
        "alpha,c_lambda,lambda1,lambda2,r,rss,nu,gcv,ebic,cv_mean,cv_se\
         ,outer_iters,inner_iters,wall_time_s,converged,debias_ridge_fallback"
    ));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("rp/summary.json")).unwrap())
            .unwrap();
    let gap = summary["warm_vs_cold_gap"].as_f64().unwrap();
    assert!(gap <= 1e-6, "warm vs cold gap {gap}");
}

#[test]
fn tune_emits_cv_columns_and_chosen_models() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "29");
    let out = elnet(
        tmp.path(),
        &[
            "tune", "--out", "rt", "--data", "d", "--alpha-list", "0.9,0.6", "--n-lambda", "6",
            "--c-min", "0.3", "--cv-folds", "4", "--seed", "2",
        ],
    );
    assert_ok(&out);
    let report = fs::read_to_string(tmp.path().join("rt/report.csv")).unwrap();
    // every data row carries a cv value
    for line in report.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(!fields[9].is_empty(), "cv_mean missing in: {line}");
        assert!(!fields[10].is_empty(), "cv_se missing in: {line}");
    }
    // two alphas in the report
    assert!(report.lines().skip(1).any(|l| l.starts_with("0.9,")));
    assert!(report.lines().skip(1).any(|l| l.starts_with("0.6,")));
    for criterion in ["gcv", "ebic", "cv"] {
        assert!(
            tmp.path()
                .join(format!("rt/chosen_{criterion}_alpha0.9.txt"))
                .exists(),
            "missing chosen model file for {criterion}"
        );
    }
}

#[test]
fn bench_reps_one_leaves_se_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let out = elnet(
        tmp.path(),
        &[
            "bench", "--out", "rb", "--preset", "sim3", "--n-list", "150", "--reps", "1",
            "--oracle-reps", "0", "--m", "30",
        ],
    );
    assert_ok(&out);
    let table = fs::read_to_string(tmp.path().join("rb/bench.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    // se_time, oracle columns and speedup are empty with one rep and no oracle
    assert_eq!(fields[7], "1");
    assert!(fields[9].is_empty(), "se must be empty: {}", lines[1]);
    assert!(fields[16].is_empty(), "speedup must be empty: {}", lines[1]);
}

#[test]
fn libsvm_input_and_run_records() {
    let tmp = tempfile::tempdir().unwrap();
    let mut content = String::new();
    // 12 rows, 3 features, y roughly 2*x1 - x2
    for i in 0..12 {
        let x1 = (i as f64) / 3.0 - 2.0;
        let x2 = ((i * 7 % 5) as f64) - 2.0;
        let x3 = ((i * 3 % 4) as f64) / 2.0;
        let y = 2.0 * x1 - x2 + 0.05 * ((i % 3) as f64);
        content.push_str(&format!("{y} 1:{x1} 2:{x2} 3:{x3}\n"));
    }
    fs::write(tmp.path().join("data.svm"), content).unwrap();
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r", "--libsvm", "data.svm", "--lambda1", "0.5", "--lambda2",
            "0.5",
        ],
    );
    assert_ok(&out);
    let records = fs::read_to_string(tmp.path().join("r/run_records.jsonl")).unwrap();
    let record: serde_json::Value = serde_json::from_str(records.lines().next().unwrap()).unwrap();
    assert_eq!(record["command"], "solve");
    assert!(record["dataset"].as_str().unwrap().contains("data.svm"));
    assert!(record["wall_seconds"].as_f64().unwrap() > 0.0);

    // appending: a second run adds a line
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r", "--libsvm", "data.svm", "--lambda1", "0.5", "--lambda2",
            "0.5",
        ],
    );
    assert_ok(&out);
    let records = fs::read_to_string(tmp.path().join("r/run_records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 2);
}

#[test]
fn per_observation_loss_scale_matches_manual_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    gen_small(tmp.path(), "d", "37");
    // per-observation lambda of 0.4/0.2 on m=40 rows equals unit-scale 16/8
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r1", "--data", "d", "--lambda1", "0.4", "--lambda2", "0.2",
            "--loss-scale", "per-observation",
        ],
    );
    assert_ok(&out);
    let out = elnet(
        tmp.path(),
        &[
            "solve", "--out", "r2", "--data", "d", "--lambda1", "16", "--lambda2", "8",
        ],
    );
    assert_ok(&out);
    let s1: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r1/summary.json")).unwrap())
            .unwrap();
    let s2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r2/summary.json")).unwrap())
            .unwrap();
    assert_eq!(s1["r"], s2["r"]);
    let unit = s1["objective_unit_scale"].as_f64().unwrap();
    let scaled = s1["objective"].as_f64().unwrap();
    assert!((unit / 40.0 - scaled).abs() <= 1e-12 * (1.0 + scaled.abs()));
    assert_eq!(
        s1["objective_unit_scale"].as_f64().unwrap().to_bits(),
        s2["objective_unit_scale"].as_f64().unwrap().to_bits()
    );
}
