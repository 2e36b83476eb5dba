//! Commands behind the `mmlindley` binary: solve an instance file, compare
//! it against simulation, simulate it, or sweep the scale `u` of the
//! service times.
//!
//! Every command writes `<stem>.<command>.json` and `<stem>.<command>.txt`
//! into the output directory; `compare` and the sweeps also write a CSV.

mod config;
mod report;

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    load_config, parse_config, Instance, InstanceConfig, ModelKind, SolverConfig, StateConfig, VLawConfig,
    DEFAULT_R_MAX, DEFAULT_TOL,
};
pub use report::{
    comparison_csv, sig10, Check, ComparisonRow, Outputs, RunReport, SolutionSummary, StabilityReport, TransformRow,
    Z_THRESHOLD,
};

use crate::error::{ConfigIssue, Error, Result};
use crate::model1::{
    assemble_and_solve_coefficients, check_stability_model1, mean_workload, mean_workload_closed_form,
    mean_workload_numerical, solve_model1_special, Model1Solution, Model1SpecialSolution, B0_TOLERANCE,
    MEAN_CROSS_CHECK,
};
use crate::model2::{
    assemble_unknowns, check_moments, check_stability_model2, decay_profile, evaluate_phi2, moments, numerical_moments,
    unchecked_moments,
    Model2Solution, FUN_TOLERANCE,
};
use crate::simulate::{simulate_model1, simulate_model1_special, simulate_model2, SimEstimate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

/// `‖Φ_W(0) − π‖∞` tolerance for Model I.
pub const NORMALIZATION_TOL_MODEL1: f64 = 1e-8;
/// `‖Φ_W(0) − π‖∞` tolerance for Model II.
pub const NORMALIZATION_TOL_MODEL2: f64 = 1e-10;
/// Relative agreement of recursion moments with central differences.
pub const MOMENT_CHECK_TOL: f64 = 1e-4;
/// Residual of the `p3 = 1` coefficient system.
pub const SPECIAL_SYSTEM_TOL: f64 = 1e-8;

/// Flags shared by every command.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Replaces `sim.seed`.
    pub seed: Option<u64>,
    /// Replaces `solver.tol`.
    pub tol: Option<f64>,
    /// Multiplies every solved unknown before reporting. A negative control
    /// for the oracle comparison.
    pub corrupt_unknowns: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("."),
            seed: None,
            tol: None,
            corrupt_unknowns: None,
        }
    }
}

/// Exit code for an error that stopped a command before it produced a report.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::InvalidSimConfig(_) => EXIT_CONFIG,
        Error::Unstable(_) => EXIT_UNSTABLE,
        _ => EXIT_SOLVER,
    }
}

/// Default sweep grid `u ∈ {1, 1.5, …, 5}`.
pub fn default_u_grid() -> Vec<f64> {
    (0..9).map(|k| 1.0 + 0.5 * k as f64).collect()
}

/// Default sweep grid `p ∈ {0.1, …, 0.9}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

/// A solved instance of any of the three kinds.
#[derive(Debug, Clone)]
pub enum Solved {
    Model1(Box<Model1Solution>),
    Model1Special(Box<Model1SpecialSolution>),
    Model2(Box<Model2Solution>),
}

impl Solved {
    pub fn phi(&self, s: f64) -> Result<Vec<f64>> {
        let z = Complex64::new(s, 0.0);
        let v = match self {
            Solved::Model1(sol) => sol.phi(z)?,
            Solved::Model1Special(sol) => sol.phi(z)?,
            Solved::Model2(sol) => evaluate_phi2(sol, z)?,
        };
        Ok(v.iter().map(|x| x.re).collect())
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

fn write_file(opts: &RunOptions, name: &str, content: &str, report: &mut RunReport) -> Result<()> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let path = opts.out_dir.join(name);
    std::fs::write(&path, content)?;
    report.files.push(path.display().to_string());
    Ok(())
}

/// Writes the JSON and text renderings of `report`.
fn write_report(opts: &RunOptions, base: &str, report: &mut RunReport) -> Result<()> {
    let json = opts.out_dir.join(format!("{base}.json"));
    let text = opts.out_dir.join(format!("{base}.txt"));
    report.files.push(json.display().to_string());
    report.files.push(text.display().to_string());
    std::fs::create_dir_all(&opts.out_dir)?;
    std::fs::write(&json, report.to_json())?;
    std::fs::write(&text, report.to_text())?;
    Ok(())
}

fn load(path: &Path, opts: &RunOptions) -> Result<InstanceConfig> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = opts.seed {
        cfg.sim.seed = seed;
    }
    if let Some(tol) = opts.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::Config(vec![ConfigIssue::new("--tol", format!("{tol} is not in (0, 1)"))]));
        }
        cfg.solver.tol = tol;
    }
    Ok(cfg)
}

fn max_abs_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    max_abs_gap(a, b) / scale
}

fn fail(report: &mut RunReport, status: &str, code: i32, e: &Error) {
    report.status = status.into();
    report.exit_code = code;
    report.error = Some(e.to_string());
}

/// Runs the stability gate and the solver, filling `report`. Returns the
/// solution when the instance was solved.
pub fn analyze(cfg: &InstanceConfig, opts: &RunOptions, report: &mut RunReport) -> Result<Option<Solved>> {
    let instance = cfg.build()?;
    let outcome = match &instance {
        Instance::Model1(spec) => {
            let st = check_stability_model1(spec);
            report.stability = Some(StabilityReport {
                stable: st.stable,
                rho: None,
                probe_frequency: st.probe_frequency,
                closed_form: st.closed_form,
                reason: st.reason.clone(),
            });
            if !st.stable {
                fail(report, "unstable", EXIT_UNSTABLE, &Error::Unstable(st.reason));
                return Ok(None);
            }
            assemble_and_solve_coefficients(spec).map(|mut sol| {
                sol.truncation_tolerance = cfg.solver.tol;
                Solved::Model1(Box::new(sol))
            })
        }
        Instance::Model1Special(spec) => {
            let drop = spec.positive_drop_probability();
            let stable = drop.is_none_or(|p| p > 0.0);
            let reason = match drop {
                Some(p) if p > 0.0 => format!("P(S < A) = {p:.6} > 0"),
                Some(p) => format!("P(S < A) = {p} so W never returns to 0"),
                None => "P(S < A) not available; relying on the solver checks".into(),
            };
            report.stability = Some(StabilityReport {
                stable,
                rho: None,
                probe_frequency: None,
                closed_form: drop,
                reason: reason.clone(),
            });
            if !stable {
                fail(report, "unstable", EXIT_UNSTABLE, &Error::Unstable(reason));
                return Ok(None);
            }
            solve_model1_special(spec).map(|sol| Solved::Model1Special(Box::new(sol)))
        }
        Instance::Model2(spec) => {
            let st = check_stability_model2(spec);
            report.stability = Some(StabilityReport {
                stable: st.stable,
                rho: Some(st.rho),
                probe_frequency: None,
                closed_form: None,
                reason: st.reason.clone(),
            });
            if !st.stable {
                fail(report, "unstable", EXIT_UNSTABLE, &Error::Unstable(st.reason));
                return Ok(None);
            }
            assemble_unknowns(spec).map(|sol| Solved::Model2(Box::new(sol)))
        }
    };
    let solved = match outcome {
        Ok(s) => s,
        Err(e @ Error::Unstable(_)) => {
            fail(report, "unstable", EXIT_UNSTABLE, &e);
            return Ok(None);
        }
        Err(e) => {
            fail(report, "solver_failure", EXIT_SOLVER, &e);
            return Ok(None);
        }
    };
    let solved = match (solved, opts.corrupt_unknowns) {
        (Solved::Model1(sol), Some(f)) => Solved::Model1(Box::new(sol.with_scaled_unknowns(f))),
        (Solved::Model2(sol), Some(f)) => Solved::Model2(Box::new(sol.with_scaled_unknowns(f))),
        (Solved::Model1Special(mut sol), Some(f)) => {
            for k in &mut sol.numerators {
                *k = k.scale(Complex64::new(f, 0.0));
            }
            Solved::Model1Special(sol)
        }
        (s, None) => s,
    };
    match summarize(cfg, &solved, opts.corrupt_unknowns.is_some(), report) {
        Ok(()) => {
            report.status = "solved".into();
            if report.checks.iter().any(|c| !c.pass) {
                report.status = "solver_failure".into();
                report.exit_code = EXIT_SOLVER;
            }
            Ok(Some(solved))
        }
        Err(e) => {
            fail(report, "solver_failure", EXIT_SOLVER, &e);
            Ok(None)
        }
    }
}

fn transform_rows(solved: &Solved, points: &[f64]) -> Result<Vec<TransformRow>> {
    points
        .iter()
        .map(|&s| {
            Ok(TransformRow {
                s,
                by_state: solved.phi(s)?,
            })
        })
        .collect()
}

/// Fills the solution summary, outputs and checks.
fn summarize(cfg: &InstanceConfig, solved: &Solved, corrupted: bool, report: &mut RunReport) -> Result<()> {
    let mut outputs = Outputs::default();
    let mut checks = Vec::new();
    let summary = match solved {
        Solved::Model1(sol) => {
            let d = &sol.diagnostics;
            checks.push(Check::at_most("max |Phi(0) - pi|", d.normalization_error, NORMALIZATION_TOL_MODEL1));
            checks.push(Check::at_most("b0 residual on the verification grid", d.b0_residual, B0_TOLERANCE));
            // A corrupted solution no longer satisfies the cross-check, so
            // it reports the closed form alone.
            outputs.mean_by_state = if corrupted {
                mean_workload_closed_form(sol)?
            } else {
                let closed = mean_workload_closed_form(sol)?;
                let numeric = mean_workload_numerical(sol)?;
                checks.push(Check::at_most(
                    "mean: closed form vs central difference (relative)",
                    relative_gap(&numeric, &closed),
                    MEAN_CROSS_CHECK,
                ));
                mean_workload(sol)?
            };
            SolutionSummary {
                path: None,
                roots: sol.delta_roots.zeros.clone(),
                condition: d.condition,
                system_residual: d.system_residual,
                residuals: vec![
                    ("b0 residual".into(), d.b0_residual),
                    ("normalization error".into(), d.normalization_error),
                    ("null vector residual".into(), d.null_vector_residual),
                    ("max imaginary part".into(), d.max_imaginary),
                ],
                warnings: Vec::new(),
            }
        }
        Solved::Model1Special(sol) => {
            let phi0 = solved.phi(0.0)?;
            let pi = sol.spec.chain.stationary();
            checks.push(Check::at_most("max |Phi(0) - pi|", max_abs_gap(&phi0, pi), NORMALIZATION_TOL_MODEL1));
            checks.push(Check::at_most("coefficient system residual", sol.system_residual, SPECIAL_SYSTEM_TOL));
            outputs.mean_by_state = sol.mean();
            outputs.atom_at_zero = Some(sol.atom_at_zero());
            SolutionSummary {
                path: Some("p3 = 1".into()),
                roots: sol.service_poles.iter().map(|g| g.center).collect(),
                condition: sol.condition,
                system_residual: sol.system_residual,
                residuals: Vec::new(),
                warnings: Vec::new(),
            }
        }
        Solved::Model2(sol) => {
            let d = &sol.diagnostics;
            let phi0 = solved.phi(0.0)?;
            let pi = sol.spec.chain.stationary();
            checks.push(Check::at_most("max |Phi(0) - pi|", max_abs_gap(&phi0, pi), NORMALIZATION_TOL_MODEL2));
            checks.push(Check::at_most("fun residual on the verification grid", d.fun_residual, FUN_TOLERANCE));
            let m = unchecked_moments(sol, cfg.solver.r_max)?;
            let (m1, m2) = numerical_moments(sol)?;
            let sane = check_moments(&m).is_ok();
            checks.push(Check::at_most("moment sign and Jensen violations", if sane { 0.0 } else { 1.0 }, 0.0));
            checks.push(Check::at_most("m1: recursion vs central difference (relative)", relative_gap(&m[1], &m1), MOMENT_CHECK_TOL));
            checks.push(Check::at_most("m2: recursion vs central difference (relative)", relative_gap(&m[2], &m2), MOMENT_CHECK_TOL));
            outputs.mean_by_state = m[1].clone();
            outputs.moments = Some(m);
            match decay_profile(sol) {
                Ok(dp) => outputs.decay = Some(dp),
                Err(e) => outputs.decay_error = Some(e.to_string()),
            }
            SolutionSummary {
                path: Some(format!("{:?}", sol.path)),
                roots: sol.roots.clone(),
                condition: d.condition,
                system_residual: d.system_residual,
                residuals: vec![
                    ("fun residual".into(), d.fun_residual),
                    ("null orthogonality".into(), d.null_orthogonality),
                    ("evaluator consistency".into(), d.consistency),
                    ("normalization error".into(), d.normalization_error),
                    ("max imaginary part".into(), d.max_imaginary),
                ],
                warnings: sol.warnings.clone(),
            }
        }
    };
    outputs.mean_total = outputs.mean_by_state.iter().sum();
    outputs.transform = transform_rows(solved, &cfg.solver.probe_points)?;
    report.solution = Some(summary);
    report.outputs = Some(outputs);
    report.checks = checks;
    Ok(())
}

fn simulate_instance(cfg: &InstanceConfig) -> Result<SimEstimate> {
    match cfg.build()? {
        Instance::Model1(spec) => simulate_model1(&spec, &cfg.sim),
        Instance::Model1Special(spec) => simulate_model1_special(&spec, &cfg.sim),
        Instance::Model2(spec) => simulate_model2(&spec, &cfg.sim),
    }
}

/// `solve <config>`: stability gate, solver, diagnostics and outputs.
pub fn cmd_solve(config_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let cfg = load(config_path, opts)?;
    let mut report = RunReport::new("solve", &config_path.display().to_string(), cfg.label.clone(), cfg.model.name());
    analyze(&cfg, opts, &mut report)?;
    write_report(opts, &format!("{}.solve", stem(config_path)), &mut report)?;
    Ok(report)
}

/// Analytic versus simulated rows: per-state means, then the transform at
/// every simulated probe point.
pub fn comparison_rows(solved: &Solved, mean_by_state: &[f64], sim: &SimEstimate) -> Result<Vec<ComparisonRow>> {
    let row = |quantity: String, state: usize, analytic: f64, est: &crate::simulate::Estimate| {
        let z = est.z_score(analytic);
        ComparisonRow {
            quantity,
            state,
            analytic,
            simulated: est.value,
            stderr: est.stderr,
            z_score: z,
            pass: z.abs() <= Z_THRESHOLD,
        }
    };
    let mut rows = Vec::new();
    for (i, est) in sim.mean_by_state.iter().enumerate() {
        rows.push(row("mean".into(), i, mean_by_state[i], est));
    }
    for t in &sim.transform_by_state {
        let analytic = solved.phi(t.s)?;
        for (i, est) in t.by_state.iter().enumerate() {
            rows.push(row(format!("transform(s={})", t.s), i, analytic[i], est));
        }
    }
    Ok(rows)
}

/// `compare <config>`: the solver against the simulator. Exit code 4 when
/// any row has `|z| > 3`.
pub fn cmd_compare(config_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let cfg = load(config_path, opts)?;
    let mut report = RunReport::new("compare", &config_path.display().to_string(), cfg.label.clone(), cfg.model.name());
    let base = stem(config_path);
    if let Some(solved) = analyze(&cfg, opts, &mut report)? {
        match simulate_instance(&cfg) {
            Ok(sim) => {
                let means = report.outputs.as_ref().map(|o| o.mean_by_state.clone()).unwrap_or_default();
                match comparison_rows(&solved, &means, &sim) {
                    Ok(rows) => {
                        report.comparison = rows;
                        write_file(opts, &format!("{base}.compare.csv"), &comparison_csv(&report.comparison), &mut report)?;
                        if report.comparison.iter().any(|r| !r.pass) {
                            report.status = "oracle_failure".into();
                            report.exit_code = EXIT_ORACLE;
                        }
                    }
                    Err(e) => fail(&mut report, "solver_failure", EXIT_SOLVER, &e),
                }
                report.simulation = Some(sim);
            }
            Err(e) => fail(&mut report, "simulation_failure", exit_code(&e), &e),
        }
    }
    write_report(opts, &format!("{base}.compare"), &mut report)?;
    Ok(report)
}

/// `simulate <config>`: the raw recursion alone.
pub fn cmd_simulate(config_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let cfg = load(config_path, opts)?;
    let mut report = RunReport::new("simulate", &config_path.display().to_string(), cfg.label.clone(), cfg.model.name());
    match simulate_instance(&cfg) {
        Ok(sim) => report.simulation = Some(sim),
        Err(e) => fail(&mut report, "simulation_failure", exit_code(&e), &e),
    }
    write_report(opts, &format!("{}.simulate", stem(config_path)), &mut report)?;
    Ok(report)
}

/// One row of `sweep-model1`.
#[derive(Debug, Clone, Serialize)]
pub struct Sweep1Row {
    pub u: f64,
    /// Total mean workload under `P = [[0, 1], [1, 0]]`.
    pub mean_auto: f64,
    /// Total mean workload under `P = [[0.5, 0.5], [0.5, 0.5]]`.
    pub mean_indep: f64,
    pub note: Option<String>,
}

/// One row of `sweep-model2`.
#[derive(Debug, Clone, Serialize)]
pub struct Sweep2Row {
    pub p: f64,
    pub u: f64,
    /// `Σ_i m_{1,i}`.
    pub mean_wait: f64,
    pub note: Option<String>,
}

/// Output of a sweep: the rows, the CSV text and the run report.
#[derive(Debug, Clone)]
pub struct SweepOutput<R> {
    pub rows: Vec<R>,
    pub csv: String,
    pub report: RunReport,
}

fn check_grid(values: &[f64], name: &str, open_unit: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(vec![ConfigIssue::new(format!("--{name}"), "empty grid")]));
    }
    for &x in values {
        let ok = if open_unit { x > 0.0 && x < 1.0 } else { x.is_finite() && x > 0.0 };
        if !ok {
            let range = if open_unit { "(0, 1)" } else { "(0, inf)" };
            return Err(Error::Config(vec![ConfigIssue::new(format!("--{name}"), format!("{x} is not in {range}"))]));
        }
    }
    Ok(())
}

fn model1_total_mean(cfg: &InstanceConfig, chain: &[Vec<f64>], u: f64) -> Result<f64> {
    let Instance::Model1(spec) = cfg.build_with(Some(chain), u)? else {
        unreachable!("checked by the caller")
    };
    let mut sol = assemble_and_solve_coefficients(&spec)?;
    sol.truncation_tolerance = cfg.solver.tol;
    Ok(mean_workload(&sol)?.iter().sum())
}

fn model2_total_mean(cfg: &InstanceConfig, p: f64, u: f64) -> Result<f64> {
    let Instance::Model2(spec) = cfg.with_p(p).build_with(None, u)? else {
        unreachable!("checked by the caller")
    };
    let sol = assemble_unknowns(&spec)?;
    Ok(moments(&sol, 1)?[1].iter().sum())
}

fn sweep_note(results: &[&Result<f64>]) -> (Vec<f64>, Option<String>) {
    let values = results.iter().map(|r| *r.as_ref().unwrap_or(&f64::NAN)).collect();
    let notes: Vec<String> = results
        .iter()
        .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
        .collect();
    (values, (!notes.is_empty()).then(|| notes.join("; ")))
}

/// `sweep-model1 <config> --u <grid>`: total mean workload of a two-state
/// Model I instance with every service time multiplied by `u`, under the
/// alternating chain and under the independent chain. Failed cells hold
/// `NaN` and the reason is listed in the report.
pub fn cmd_sweep_model1(config_path: &Path, u_grid: &[f64], opts: &RunOptions) -> Result<SweepOutput<Sweep1Row>> {
    let cfg = load(config_path, opts)?;
    if cfg.model != ModelKind::Model1 || cfg.states() != 2 {
        return Err(Error::Config(vec![ConfigIssue::new(
            "model",
            "sweep-model1 needs a two-state model1 instance",
        )]));
    }
    check_grid(u_grid, "u", false)?;
    let auto = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let indep = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let mut rows: Vec<Sweep1Row> = u_grid
        .par_iter()
        .map(|&u| {
            let a = model1_total_mean(&cfg, &auto, u);
            let b = model1_total_mean(&cfg, &indep, u);
            let (v, note) = sweep_note(&[&a, &b]);
            Sweep1Row {
                u,
                mean_auto: v[0],
                mean_indep: v[1],
                note,
            }
        })
        .collect();
    rows.sort_by(|x, y| x.u.total_cmp(&y.u));
    let mut csv = String::from("u,mean_auto,mean_indep\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{}\n", sig10(r.u), sig10(r.mean_auto), sig10(r.mean_indep)));
    }
    let notes = rows.iter().filter_map(|r| r.note.as_ref().map(|n| format!("u = {}: {n}", r.u))).collect();
    let report = finish_sweep("sweep-model1", config_path, &cfg, &csv, notes, opts)?;
    Ok(SweepOutput { rows, csv, report })
}

/// `sweep-model2 <config> --p <grid> --u <grid>`: total mean waiting time of
/// a Model II instance with `P(V = 1) = p`, every service time multiplied
/// by `u` and every `D` rate divided by `u`.
pub fn cmd_sweep_model2(
    config_path: &Path,
    p_grid: &[f64],
    u_grid: &[f64],
    opts: &RunOptions,
) -> Result<SweepOutput<Sweep2Row>> {
    let cfg = load(config_path, opts)?;
    if cfg.model != ModelKind::Model2 {
        return Err(Error::Config(vec![ConfigIssue::new("model", "sweep-model2 needs a model2 instance")]));
    }
    check_grid(p_grid, "p", true)?;
    check_grid(u_grid, "u", false)?;
    let cells: Vec<(f64, f64)> = p_grid.iter().flat_map(|&p| u_grid.iter().map(move |&u| (p, u))).collect();
    let mut rows: Vec<Sweep2Row> = cells
        .par_iter()
        .map(|&(p, u)| {
            let m = model2_total_mean(&cfg, p, u);
            let (v, note) = sweep_note(&[&m]);
            Sweep2Row {
                p,
                u,
                mean_wait: v[0],
                note,
            }
        })
        .collect();
    rows.sort_by(|x, y| x.p.total_cmp(&y.p).then(x.u.total_cmp(&y.u)));
    let mut csv = String::from("p,u,mean_wait\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{}\n", sig10(r.p), sig10(r.u), sig10(r.mean_wait)));
    }
    let notes = rows
        .iter()
        .filter_map(|r| r.note.as_ref().map(|n| format!("p = {}, u = {}: {n}", r.p, r.u)))
        .collect();
    let report = finish_sweep("sweep-model2", config_path, &cfg, &csv, notes, opts)?;
    Ok(SweepOutput { rows, csv, report })
}

fn finish_sweep(
    command: &str,
    config_path: &Path,
    cfg: &InstanceConfig,
    csv: &str,
    notes: Vec<String>,
    opts: &RunOptions,
) -> Result<RunReport> {
    let mut report = RunReport::new(command, &config_path.display().to_string(), cfg.label.clone(), cfg.model.name());
    if !notes.is_empty() {
        report.status = "ok with failed cells".into();
        report.error = Some(notes.join("\n"));
    }
    let base = format!("{}.{command}", stem(config_path));
    write_file(opts, &format!("{base}.csv"), csv, &mut report)?;
    write_report(opts, &base, &mut report)?;
    Ok(report)
}
