use std::path::Path;
use std::process::{Command, Output};

use hankelx::commands::gen::{self, GenConfig, GenMeta, Kind};
use hankelx_core::hankel::WeightedSignal;
use hankelx_core::io::{encode_signal, pattern_from_csv, read_signal};
use serde_json::Value;

fn hankelx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hankelx"))
        .args(args)
        .current_dir(dir)
        .env_remove("HANKELX_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn gen_is_deterministic_and_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["gen", "--kind", "spectral", "--n", "255", "--r", "5", "--kappa", "10", "--seed", "7"];
    for name in ["a", "b"] {
        let out = hankelx(&[&base[..], &["--out", name, "alpha=0.1", "m=150"]].concat(), dir.path());
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["truth.hnkz", "observed.hnkz", "pattern.csv", "outliers.hnkz", "meta.json"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }

    let cfg = GenConfig {
        n: Some(255),
        r: Some(5),
        kappa: 10.0,
        seed: 7,
        alpha: 0.1,
        m: Some(150),
        ..GenConfig::default()
    };
    let (instance, meta) = gen::build(&cfg).unwrap();
    let truth = read_signal(&dir.path().join("a/truth.hnkz")).unwrap();
    assert_eq!(truth, instance.truth);
    let pattern = pattern_from_csv(&std::fs::read_to_string(dir.path().join("a/pattern.csv")).unwrap()).unwrap();
    assert_eq!(pattern, instance.pattern);
    // files hold raw values, so reweighting on load may round once
    let observed = WeightedSignal::new(instance.truth.shape, instance.corrupted.f.clone()).unwrap();
    assert_eq!(std::fs::read(dir.path().join("a/observed.hnkz")).unwrap(), encode_signal(&observed));
    let loaded = read_signal(&dir.path().join("a/observed.hnkz")).unwrap();
    for (a, b) in loaded.z.iter().zip(&observed.z) {
        assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm());
    }
    let stored: GenMeta = serde_json::from_value(json(&dir.path().join("a/meta.json"))).unwrap();
    assert_eq!(stored, meta);
    assert_eq!(meta.outliers, 15);
}

#[test]
fn gen_array_records_condition_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = hankelx(&["gen", "--kind", "doa", "--n", "4096", "--thetas", "87,87.1,87.3", "--out", "d"], dir.path());
    assert_eq!(code(&out), 0);
    let meta = json(&dir.path().join("d/meta.json"));
    assert_eq!(meta["kind"], "doa");
    assert_eq!(meta["r"], 3);
    let kappa = meta["condition_number"].as_f64().unwrap();
    let (_, direct) = gen::build(&GenConfig { kind: Kind::Doa, ..GenConfig::default() }).unwrap();
    assert_eq!(kappa, direct.condition_number);
    assert!(kappa > 1.0);
}

#[test]
fn invalid_configurations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen", "--n", "255", "--r", "128"],
        vec!["gen", "bogus=1"],
        vec!["gen", "--kind", "wave"],
        vec!["gen", "m=10", "p=0.5"],
        vec!["converge", "kappas=[]"],
        vec!["phase", "x=m", "y=m"],
        vec!["doa", "trials=0"],
        vec!["recover", "--input", "missing"],
        vec!["recover"],
        vec!["gen", "--config", "absent.json"],
        vec!["teleport"],
        vec![],
    ] {
        let out = hankelx(&args, dir.path());
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!dir.path().join("hankelx-out").exists());
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = hankelx(&["--help"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("usage: hankelx"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"n": 101, "r": 2, "kappa": 3, "seed": 1}"#).unwrap();
    let out = hankelx(&["gen", "--config", "c.json", "--seed", "9", "r=3", "--out", "o"], dir.path());
    assert_eq!(code(&out), 0);
    let meta = json(&dir.path().join("o/meta.json"));
    assert_eq!(meta["n"], 101);
    assert_eq!(meta["r"], 3);
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["kappa"], 3.0);
}

#[test]
fn thread_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_hankelx"));
        cmd.args(["phase", "ms=125", "alphas=0", "trials=1", "r=2", "--out", "p"]);
        if let Some(t) = flag {
            cmd.args(["--threads", t]);
        }
        cmd.current_dir(dir.path()).env("HANKELX_THREADS", "zero").output().unwrap()
    };
    assert_eq!(code(&run(None)), 2);
    assert_eq!(code(&run(Some("2"))), 0);
}

#[test]
fn recover_clean_instance() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hankelx(&["gen", "--n", "255", "--r", "5", "--seed", "3", "--out", "g"], dir.path())), 0);
    let out = hankelx(&["recover", "--input", "g", "--out", "r"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("r/summary.json"));
    assert_eq!(summary["success"], true);
    assert!(summary["err"].as_f64().unwrap() <= 1e-5, "{summary}");
    assert_eq!(summary["termination"], "residual_tolerance");
    let text = std::fs::read_to_string(dir.path().join("r/summary.json")).unwrap();
    let order = ["solver", "n", "m", "r", "alpha", "success", "err", "iters", "seconds", "termination", "residual"];
    let positions: Vec<usize> = order.iter().map(|k| text.find(&format!("\"{k}\":")).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");

    let rows = csv_rows(&dir.path().join("r/trace.csv"));
    assert_eq!(rows[0], ["iter", "residual", "err", "ms"]);
    assert_eq!(rows.len() as u64, summary["iters"].as_u64().unwrap() + 2);
}

#[test]
fn recover_without_truth_or_meta() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hankelx(&["gen", "--n", "127", "--r", "2", "p=0.7", "--out", "g"], dir.path())), 0);
    let out = hankelx(
        &["recover", "observed=g/observed.hnkz", "pattern=g/pattern.csv", "r=2", "solver=plaingd", "--out", "r"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("r/summary.json"));
    assert_eq!(summary["solver"], "plaingd");
    assert!(summary["err"].is_null());
    let rows = csv_rows(&dir.path().join("r/trace.csv"));
    assert!(rows[1][2].is_empty());
}

#[test]
fn recover_pathological_corruption_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hankelx(&["gen", "--n", "255", "--r", "5", "alpha=0.9", "--out", "g"], dir.path())), 0);
    let out = hankelx(&["recover", "--input", "g", "--out", "r"], dir.path());
    assert_eq!(code(&out), 0);
    let summary = json(&dir.path().join("r/summary.json"));
    assert_eq!(summary["success"], false);
    assert!(summary["err"].as_f64().unwrap() > 1e-3);
}

#[test]
fn converge_separates_solvers_at_high_condition_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = hankelx(
        &["converge", "n=1023", "kappas=1,2000", "trials=2", "max_iters=300", "--out", "c"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let runs = csv_rows(&dir.path().join("c/converge_trials.csv"));
    assert_eq!(runs[0], ["solver", "kappa", "trial", "seed", "success", "err", "iters", "seconds", "termination"]);
    assert_eq!(runs.len(), 1 + 2 * 2 * 2);
    let cell = |solver: &str, kappa: &str| -> Vec<&Vec<String>> {
        runs[1..].iter().filter(|r| r[0] == solver && r[1] == kappa).collect()
    };
    assert!(cell("hsnld", "2000.0").iter().all(|r| r[4] == "true"));
    assert!(cell("plaingd", "2000.0").iter().all(|r| r[8] == "max_iterations"));
    let iters = |rows: Vec<&Vec<String>>| rows.iter().map(|r| r[6].parse::<f64>().unwrap()).sum::<f64>();
    let (h, g) = (iters(cell("hsnld", "1.0")), iters(cell("plaingd", "1.0")));
    assert!(g <= 3.0 * h && h <= 3.0 * g, "hsnld {h}, plaingd {g}");

    let curves = csv_rows(&dir.path().join("c/converge.csv"));
    assert_eq!(curves[0], ["solver", "kappa", "iter", "trials", "err", "residual", "ms"]);
    assert!(curves[1..].iter().any(|r| r[0] == "plaingd" && r[2] == "300"));
}

#[test]
fn phase_single_cell_and_easiest_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = hankelx(&["phase", "ms=125", "alphas=0", "r=3", "--out", "p"], dir.path());
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&dir.path().join("p/phase.csv"));
    assert_eq!(rows, [vec!["x", "y", "successes", "trials"], vec!["125.0", "0.0", "20", "20"]]);
}

#[test]
fn phase_failed_cells_count_as_failures() {
    let dir = tempfile::tempdir().unwrap();
    // m above n and rank above n/2 cannot be set up
    let out = hankelx(&["phase", "x=r", "y=m", "ranks=2,70", "ms=125,500", "trials=2", "--out", "p"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("p/phase.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1], ["2.0", "125.0", "2", "2"]);
    for row in &rows[2..] {
        assert_eq!(row[2], "0");
    }
}

#[test]
fn doa_variants() {
    let dir = tempfile::tempdir().unwrap();
    let out = hankelx(&["doa", "p=1", "alpha=0", "--out", "full"], dir.path());
    assert_eq!(code(&out), 0);
    let summary = json(&dir.path().join("full/summary.json"));
    assert_eq!(summary["success"], true);
    assert!(summary["iters"].as_u64().unwrap() <= 40);

    let out = hankelx(&["doa", "r=1", "--out", "low"], dir.path());
    assert_eq!(code(&out), 0);
    let summary = json(&dir.path().join("low/summary.json"));
    assert_eq!(summary["success"], false);

    let out = hankelx(&["doa", "trials=3", "--out", "many"], dir.path());
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&dir.path().join("many/trials.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][1], "0");
}
