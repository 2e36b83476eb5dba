//! The `mmlindley` binary end to end: exit codes, reports and CSV files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmlindley"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(name)).unwrap()).unwrap()
}

/// A copy of a shipped config with its `[sim]` block replaced.
fn with_sim(name: &str, sim: &str, dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(config(name)).unwrap();
    let head = text.split("[sim]").next().unwrap();
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, format!("{head}[sim]\n{sim}")).unwrap();
    path
}

#[test]
fn solve_two_state_model2_reports_normalization_pass() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["solve", config("model2_two_state").to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "model2_two_state.solve.json");
    assert_eq!(r["status"], "solved");
    let check = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "max |Phi(0) - pi|")
        .unwrap();
    assert_eq!(check["pass"], true);
    assert_eq!(check["tolerance"], 1e-10);
    // The text report sits next to the JSON one.
    let text = std::fs::read_to_string(out.path().join("model2_two_state.solve.txt")).unwrap();
    assert!(text.contains("pass max |Phi(0) - pi|"));
}

#[test]
fn every_check_names_its_tolerance() {
    let out = tempfile::tempdir().unwrap();
    for name in ["model1_two_state", "model1_special", "model2_three_states"] {
        let o = run(&["solve", config(name).to_str().unwrap()], out.path());
        assert_eq!(o.status.code(), Some(0), "{name}");
        let r = report(out.path(), &format!("{name}.solve.json"));
        for c in r["checks"].as_array().unwrap() {
            assert!(c["tolerance"].is_number(), "{name}: {c}");
            assert_eq!(c["pass"], true, "{name}: {c}");
        }
    }
}

#[test]
fn p3_zero_is_unstable() {
    let out = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("model1_two_state")).unwrap();
    let text = text
        .replace("p1 = 0.3333333333333333", "p1 = 0.5")
        .replace("p2 = 0.3333333333333333", "p2 = 0.5")
        .replace("p3 = 0.3333333333333334", "p3 = 0.0");
    let path = out.path().join("no_negative.toml");
    std::fs::write(&path, text).unwrap();
    let o = run(&["solve", path.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(2));
    let r = report(out.path(), "no_negative.solve.json");
    assert_eq!(r["status"], "unstable");
    assert_eq!(r["stability"]["stable"], false);
}

#[test]
fn malformed_config_exits_1_with_paths() {
    let out = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("model2_two_state"))
        .unwrap()
        .replace("arrival_rate = 3.0", "arrival_rate = \"three\"")
        .replace("p = 0.5", "p = 1.5");
    let path = out.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = run(&["solve", path.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("state[1].arrival_rate: expected a number"), "{err}");
    assert!(err.contains("v_law.p"), "{err}");
}

#[test]
fn compare_passes_and_writes_the_csv() {
    let out = tempfile::tempdir().unwrap();
    let path = with_sim("model2_two_state", "n_steps = 2_000_000\nseed = 11\n", out.path());
    let o = run(&["compare", path.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("model2_two_state.compare.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("quantity,state,analytic,simulated,stderr,z_score,pass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 + 3 * 2);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn corrupted_unknowns_fail_the_mean_rows() {
    let out = tempfile::tempdir().unwrap();
    for name in ["model2_two_state", "model1_two_state"] {
        let path = with_sim(name, "n_steps = 2_000_000\n", out.path());
        let o = run(&["compare", path.to_str().unwrap(), "--corrupt-unknowns", "1.5"], out.path());
        assert_eq!(o.status.code(), Some(4), "{name}");
        let csv = std::fs::read_to_string(out.path().join(format!("{name}.compare.csv"))).unwrap();
        let means: Vec<&str> = csv.lines().filter(|l| l.starts_with("mean,")).collect();
        assert!(!means.is_empty());
        assert!(means.iter().all(|r| r.ends_with(",false")), "{name}: {means:?}");
    }
}

#[test]
fn empty_sim_block_uses_defaults() {
    let out = tempfile::tempdir().unwrap();
    let path = with_sim("model1_single_state", "", out.path());
    let o = run(&["compare", path.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "model1_single_state.compare.json");
    assert_eq!(r["simulation"]["steps"], 1_000_000);
    assert_eq!(r["simulation"]["replications"], 16);
    assert!(out.path().join("model1_single_state.compare.csv").exists());
}

#[test]
fn seed_flag_changes_the_simulation() {
    let out = tempfile::tempdir().unwrap();
    let path = with_sim("model2_mg1", "n_steps = 200_000\n", out.path());
    let mut csvs = Vec::new();
    for seed in ["1", "1", "2"] {
        let o = run(&["compare", path.to_str().unwrap(), "--seed", seed], out.path());
        assert_eq!(o.status.code(), Some(0));
        csvs.push(std::fs::read(out.path().join("model2_mg1.compare.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_ne!(csvs[0], csvs[2]);
}

#[test]
fn sweeps_write_sorted_csvs() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep-model2", config("model2_two_state").to_str().unwrap(), "--p", "0.9,0.1", "--u", "2,1"],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("model2_two_state.sweep-model2.csv")).unwrap();
    let keys: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    assert_eq!(keys, vec![(0.1, 1.0), (0.1, 2.0), (0.9, 1.0), (0.9, 2.0)]);

    let o = run(&["sweep-model1", config("model1_two_state").to_str().unwrap(), "--u", "0.01,1"], out.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("model1_two_state.sweep-model1.csv")).unwrap();
    assert!(csv.starts_with("u,mean_auto,mean_indep\n"));
    // Service times shrink with u, and so does the workload.
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(first[1] < 1e-3 && first[2] < 1e-3);
}

#[test]
fn p_close_to_zero_matches_the_alternating_path() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep-model2", config("model2_two_state").to_str().unwrap(), "--p", "0.0001", "--u", "1,3"],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("model2_two_state.sweep-model2.csv")).unwrap();
    let near: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();

    let text = std::fs::read_to_string(config("model2_two_state")).unwrap().replace("p = 0.5", "p = 0.0");
    let path = out.path().join("alternating.toml");
    std::fs::write(&path, text).unwrap();
    let cfg = mmlindley::cli::load_config(&path).unwrap();
    for (k, u) in [1.0, 3.0].into_iter().enumerate() {
        let mmlindley::cli::Instance::Model2(spec) = cfg.build_with(None, u).unwrap() else { unreachable!() };
        let sol = mmlindley::model2::assemble_unknowns(&spec).unwrap();
        assert_eq!(sol.path, mmlindley::model2::Model2Path::Alternating);
        let exact: f64 = mmlindley::model2::moments(&sol, 1).unwrap()[1].iter().sum();
        assert!((near[k] - exact).abs() < 1e-3, "u = {u}: {} vs {exact}", near[k]);
    }
}

#[test]
fn simulate_writes_a_report() {
    let out = tempfile::tempdir().unwrap();
    let path = with_sim("model2_decay", "n_steps = 1_000_000\nkeep_samples = true\n", out.path());
    let o = run(&["simulate", path.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "model2_decay.simulate.json");
    assert!(r["simulation"]["tail_slope"]["slope"].as_f64().unwrap() < 0.0);
}
