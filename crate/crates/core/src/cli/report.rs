//! Run reports (text and JSON side by side) and CSV formatting.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::model2::DecayProfile;
use crate::simulate::SimEstimate;

/// Largest `|z|` accepted by the oracle comparison.
pub const Z_THRESHOLD: f64 = 3.0;

/// Stability verdict with whichever evidence the model provides.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub rho: Option<f64>,
    pub probe_frequency: Option<f64>,
    pub closed_form: Option<f64>,
    pub reason: String,
}

/// Roots, conditioning and residual maxima of a solve.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolutionSummary {
    pub path: Option<String>,
    pub roots: Vec<Complex64>,
    pub condition: f64,
    pub system_residual: f64,
    /// Named residual maxima, in a fixed order.
    pub residuals: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformRow {
    pub s: f64,
    pub by_state: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Outputs {
    /// `E[W 1{Z = i}]`.
    pub mean_by_state: Vec<f64>,
    pub mean_total: f64,
    /// `m̃_r` for `r = 0..=r_max` (Model II).
    pub moments: Option<Vec<Vec<f64>>>,
    pub transform: Vec<TransformRow>,
    /// `P(W = 0, Z = i)` when available.
    pub atom_at_zero: Option<Vec<f64>>,
    pub decay: Option<DecayProfile>,
    pub decay_error: Option<String>,
}

/// One pass/fail entry with the tolerance it was judged against.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

/// One row of the analytic versus simulated table.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub state: usize,
    pub analytic: f64,
    pub simulated: f64,
    pub stderr: f64,
    pub z_score: f64,
    /// `|z| ≤ Z_THRESHOLD`.
    pub pass: bool,
}

/// Everything one command produced. Serialized as a single JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: String,
    pub label: Option<String>,
    pub model: String,
    pub status: String,
    pub exit_code: i32,
    pub stability: Option<StabilityReport>,
    pub solution: Option<SolutionSummary>,
    pub outputs: Option<Outputs>,
    pub checks: Vec<Check>,
    /// Tolerance on `|z|` used by every comparison row.
    pub z_threshold: f64,
    pub comparison: Vec<ComparisonRow>,
    pub simulation: Option<SimEstimate>,
    pub error: Option<String>,
    /// Files written by the run.
    pub files: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: &str, label: Option<String>, model: &str) -> Self {
        Self {
            command: command.into(),
            config: config.into(),
            label,
            model: model.into(),
            status: "ok".into(),
            exit_code: 0,
            stability: None,
            solution: None,
            outputs: None,
            checks: Vec::new(),
            z_threshold: Z_THRESHOLD,
            comparison: Vec::new(),
            simulation: None,
            error: None,
            files: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable rendering of the same content.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "command : {}", self.command);
        let _ = writeln!(w, "config  : {}", self.config);
        if let Some(label) = &self.label {
            let _ = writeln!(w, "label   : {label}");
        }
        let _ = writeln!(w, "model   : {}", self.model);
        let _ = writeln!(w, "status  : {} (exit {})", self.status, self.exit_code);
        if let Some(e) = &self.error {
            let _ = writeln!(w, "error   : {e}");
        }
        if let Some(st) = &self.stability {
            let _ = writeln!(w, "\n[stability]");
            let _ = writeln!(w, "stable  : {}", st.stable);
            if let Some(rho) = st.rho {
                let _ = writeln!(w, "rho     : {rho:.10}");
            }
            if let Some(f) = st.probe_frequency {
                let _ = writeln!(w, "P(Y<=0) probe       : {f:.6}");
            }
            if let Some(f) = st.closed_form {
                let _ = writeln!(w, "P(Y<=0) closed form : {f:.10}");
            }
            let _ = writeln!(w, "reason  : {}", st.reason);
        }
        if let Some(sol) = &self.solution {
            let _ = writeln!(w, "\n[solution]");
            if let Some(p) = &sol.path {
                let _ = writeln!(w, "path      : {p}");
            }
            for (k, r) in sol.roots.iter().enumerate() {
                let _ = writeln!(w, "root {k:<4} : {:.10} {:+.10}i", r.re, r.im);
            }
            let _ = writeln!(w, "condition : {:.3e}", sol.condition);
            let _ = writeln!(w, "system residual : {:.3e}", sol.system_residual);
            for (name, v) in &sol.residuals {
                let _ = writeln!(w, "{name} : {v:.3e}");
            }
            for warning in &sol.warnings {
                let _ = writeln!(w, "warning   : {warning}");
            }
        }
        if let Some(o) = &self.outputs {
            let _ = writeln!(w, "\n[outputs]");
            let _ = writeln!(w, "mean by state : {}", join(&o.mean_by_state));
            let _ = writeln!(w, "mean total    : {}", sig10(o.mean_total));
            if let Some(m) = &o.moments {
                for (r, row) in m.iter().enumerate() {
                    let _ = writeln!(w, "moment {r}      : {}", join(row));
                }
            }
            for t in &o.transform {
                let _ = writeln!(w, "{:<14}: {}", format!("Phi({})", t.s), join(&t.by_state));
            }
            if let Some(a) = &o.atom_at_zero {
                let _ = writeln!(w, "P(W=0, Z=i)   : {}", join(a));
            }
            if let Some(d) = &o.decay {
                let _ = writeln!(w, "decay rate R  : {}", sig10(d.r));
                if !d.c.is_empty() {
                    let _ = writeln!(w, "decay C       : {}", join(&d.c));
                }
                if let Some(c) = &d.caveat {
                    let _ = writeln!(w, "decay caveat  : {c}");
                }
            }
            if let Some(e) = &o.decay_error {
                let _ = writeln!(w, "decay         : {e}");
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(w, "\n[checks]");
            for c in &self.checks {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                let _ = writeln!(w, "{verdict} {} = {:.3e} (tolerance {:.1e})", c.name, c.value, c.tolerance);
            }
        }
        if !self.comparison.is_empty() {
            let _ = writeln!(w, "\n[comparison] pass when |z| <= {}", self.z_threshold);
            out.push_str(&comparison_csv(&self.comparison));
        }
        if let Some(sim) = &self.simulation {
            let w = &mut out;
            let _ = writeln!(w, "\n[simulation] {} steps, {} replications", sim.steps, sim.replications);
            let _ = writeln!(w, "visit frequencies : {}", join(&sim.visit_frequencies));
            for (i, e) in sim.mean_by_state.iter().enumerate() {
                let _ = writeln!(w, "mean state {i}      : {} +- {}", sig10(e.value), sig10(e.stderr));
            }
            for t in &sim.transform_by_state {
                for (i, e) in t.by_state.iter().enumerate() {
                    let _ = writeln!(w, "Phi_{i}({})        : {} +- {}", t.s, sig10(e.value), sig10(e.stderr));
                }
            }
            if let Some(t) = &sim.tail_slope {
                let _ = writeln!(w, "tail slope        : {} +- {}", sig10(t.slope), sig10(t.stderr));
            }
        }
        if !self.files.is_empty() {
            let _ = writeln!(out, "\n[files]");
            for f in &self.files {
                let _ = writeln!(out, "{f}");
            }
        }
        out
    }
}

/// A float with 10 significant digits.
pub fn sig10(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9e}")
    } else {
        format!("{x}")
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| sig10(*x)).collect::<Vec<_>>().join(", ")
}

/// `quantity,state,analytic,simulated,stderr,z_score,pass`.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("quantity,state,analytic,simulated,stderr,z_score,pass\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.quantity,
            r.state,
            sig10(r.analytic),
            sig10(r.simulated),
            sig10(r.stderr),
            sig10(r.z_score),
            r.pass
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig10(1.0 / 3.0), "3.333333333e-1");
        assert_eq!(sig10(-12345.678901234), "-1.234567890e4");
        assert_eq!(sig10(f64::NAN), "NaN");
    }

    #[test]
    fn csv_header_and_row() {
        let row = ComparisonRow {
            quantity: "mean".into(),
            state: 1,
            analytic: 0.5,
            simulated: 0.5,
            stderr: 0.01,
            z_score: 0.0,
            pass: true,
        };
        let csv = comparison_csv(&[row]);
        assert_eq!(
            csv,
            "quantity,state,analytic,simulated,stderr,z_score,pass\nmean,1,5.000000000e-1,5.000000000e-1,1.000000000e-2,0.000000000e0,true\n"
        );
    }
}
