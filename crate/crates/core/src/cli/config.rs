//! Instance files: a TOML tree validated key by key so every problem is
//! reported with the path of the offending entry.

use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{ConfigIssue, Error, Result};
use crate::model1::{Model1SpecialSpec, Model1Spec};
use crate::model2::Model2Spec;
use crate::probcore::{GeneralLst, Law, ModulationChain, NegativeMultiplierLaw, RationalLst};
use crate::simulate::SimConfig;

/// Default order of the highest Model II moment in reports.
pub const DEFAULT_R_MAX: usize = 4;
/// Default series truncation tolerance for Model I.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Model1,
    Model1Special,
    Model2,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Model1 => "model1",
            ModelKind::Model1Special => "model1_special",
            ModelKind::Model2 => "model2",
        }
    }
}

/// Per-state laws and rates, as read from one `[[state]]` entry.
#[derive(Debug, Clone, Serialize)]
pub struct StateConfig {
    /// `S` given the state.
    pub service: Law,
    /// `A` given the state (Model I).
    pub interarrival: Option<Law>,
    /// `λ`, the rate of `A` (Model II).
    pub arrival_rate: Option<f64>,
    /// `μ`, the rate of `D` (Model II).
    pub d_rate: Option<f64>,
    /// `C` given the state (Model II).
    pub c: Option<Law>,
}

/// The law of the multiplier `V`.
#[derive(Debug, Clone, Serialize)]
pub struct VLawConfig {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub a: f64,
    /// `(value, weight)` atoms of `V⁻`.
    pub atoms: Vec<(f64, f64)>,
    /// `P(V = 1)` in Model II.
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Model I series truncation tolerance.
    pub tol: f64,
    /// Highest moment order reported for Model II.
    pub r_max: usize,
    /// Points `s` at which the report lists `Φ_W(s)`.
    pub probe_points: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            r_max: DEFAULT_R_MAX,
            probe_points: vec![0.5, 1.0, 2.0],
        }
    }
}

/// A validated instance file.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceConfig {
    pub label: Option<String>,
    pub model: ModelKind,
    pub chain: Vec<Vec<f64>>,
    pub states: Vec<StateConfig>,
    pub v_law: VLawConfig,
    pub solver: SolverConfig,
    pub sim: SimConfig,
}

/// A built instance ready for the solvers.
#[derive(Debug, Clone)]
pub enum Instance {
    Model1(Model1Spec),
    Model1Special(Model1SpecialSpec),
    Model2(Model2Spec),
}

/// Reads and validates an instance file.
pub fn load_config(path: &Path) -> Result<InstanceConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(vec![ConfigIssue::new(path.display().to_string(), e.to_string())])
    })?;
    parse_config(&text)
}

/// Validates an instance given as TOML text.
pub fn parse_config(text: &str) -> Result<InstanceConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![ConfigIssue::new("<document>", e.message())]))?;
    let mut w = Walker::default();
    let config = w.instance(&table);
    match config {
        Some(c) if w.issues.is_empty() => {
            // Building the specs runs the remaining cross-field checks.
            c.build().map_err(|e| match e {
                Error::Config(issues) => Error::Config(issues),
                other => Error::Config(vec![ConfigIssue::new("<instance>", other.to_string())]),
            })?;
            Ok(c)
        }
        _ => Err(Error::Config(w.issues)),
    }
}

fn issue(path: impl Into<String>, e: impl ToString) -> Error {
    Error::Config(vec![ConfigIssue::new(path, e.to_string())])
}

impl InstanceConfig {
    pub fn states(&self) -> usize {
        self.chain.len()
    }

    pub fn build(&self) -> Result<Instance> {
        self.build_with(None, 1.0)
    }

    /// Builds the instance with an optional replacement chain and with every
    /// service time (and, in Model II, every `D`) multiplied by `u`.
    pub fn build_with(&self, chain: Option<&[Vec<f64>]>, u: f64) -> Result<Instance> {
        let chain = ModulationChain::new(chain.unwrap_or(&self.chain).to_vec()).map_err(|e| issue("chain", e))?;
        let service_law = |i: usize| self.states[i].service.scaled(u);
        let v = &self.v_law;
        let v_negative = || NegativeMultiplierLaw::new(v.atoms.clone()).map_err(|e| issue("v_law.atoms", e));
        Ok(match self.model {
            ModelKind::Model1 | ModelKind::Model1Special => {
                let mut service = Vec::new();
                for i in 0..self.states() {
                    service.push(RationalLst::from_law(service_law(i)).map_err(|e| issue(format!("state[{i}].service"), e))?);
                }
                let interarrival_law = |i: usize| self.states[i].interarrival.clone().expect("validated");
                if self.model == ModelKind::Model1 {
                    let mut interarrival = Vec::new();
                    for i in 0..self.states() {
                        interarrival.push(
                            RationalLst::from_law(interarrival_law(i))
                                .map_err(|e| issue(format!("state[{i}].interarrival"), e))?,
                        );
                    }
                    let spec = Model1Spec::new(chain, service, interarrival, (v.p1, v.p2, v.p3), v.a, v_negative()?)
                        .map_err(|e| issue("v_law", e))?;
                    Instance::Model1(spec)
                } else {
                    let mut interarrival = Vec::new();
                    for i in 0..self.states() {
                        interarrival.push(
                            GeneralLst::from_law(interarrival_law(i))
                                .map_err(|e| issue(format!("state[{i}].interarrival"), e))?,
                        );
                    }
                    Instance::Model1Special(
                        Model1SpecialSpec::new(chain, service, interarrival, v_negative()?).map_err(|e| issue("state", e))?,
                    )
                }
            }
            ModelKind::Model2 => {
                let n = self.states();
                let mut beta = Vec::new();
                let mut c_star = Vec::new();
                for i in 0..n {
                    beta.push(GeneralLst::from_law(service_law(i)).map_err(|e| issue(format!("state[{i}].service"), e))?);
                    let c = self.states[i].c.clone().expect("validated");
                    c_star.push(GeneralLst::from_law(c).map_err(|e| issue(format!("state[{i}].c"), e))?);
                }
                let lambda = self.states.iter().map(|s| s.arrival_rate.expect("validated")).collect();
                let mu = self.states.iter().map(|s| s.d_rate.expect("validated") / u).collect();
                Instance::Model2(Model2Spec::new(chain, lambda, mu, beta, c_star, v.p).map_err(|e| issue("state", e))?)
            }
        })
    }

    /// The same instance with `P(V = 1)` replaced (Model II).
    pub fn with_p(&self, p: f64) -> Self {
        let mut out = self.clone();
        out.v_law.p = p;
        out
    }
}

/// Collects issues while reading the tree.
#[derive(Default)]
struct Walker {
    issues: Vec<ConfigIssue>,
}

const TOP_KEYS: &[&str] = &["model", "label", "chain", "state", "v_law", "solver", "sim"];

impl Walker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue::new(path, message));
    }

    fn unknown_keys(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                self.push(full, format!("unknown key (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn number(&mut self, value: &Value, path: &str) -> Option<f64> {
        match value {
            Value::Float(x) => Some(*x),
            Value::Integer(k) => Some(*k as f64),
            other => {
                self.push(path, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn required_number(&mut self, table: &Table, key: &str, path: &str) -> Option<f64> {
        let full = format!("{path}.{key}");
        match table.get(key) {
            Some(v) => self.number(v, &full),
            None => {
                self.push(full, "missing required key");
                None
            }
        }
    }

    fn optional_number(&mut self, table: &Table, key: &str, path: &str) -> Option<Option<f64>> {
        match table.get(key) {
            Some(v) => self.number(v, &format!("{path}.{key}")).map(Some),
            None => Some(None),
        }
    }

    fn law(&mut self, table: &Table, key: &str, path: &str) -> Option<Law> {
        let full = format!("{path}.{key}");
        let Some(value) = table.get(key) else {
            self.push(full, "missing required distribution block");
            return None;
        };
        match value.clone().try_into::<Law>() {
            Ok(law) => match law.validate() {
                Ok(()) => Some(law),
                Err(e) => {
                    self.push(full, e.to_string());
                    None
                }
            },
            Err(e) => {
                self.push(full, e.message().to_string());
                None
            }
        }
    }

    fn instance(&mut self, root: &Table) -> Option<InstanceConfig> {
        self.unknown_keys(root, "", TOP_KEYS);
        let model = match root.get("model") {
            Some(Value::String(s)) => match s.as_str() {
                "model1" => Some(ModelKind::Model1),
                "model1_special" => Some(ModelKind::Model1Special),
                "model2" => Some(ModelKind::Model2),
                other => {
                    self.push("model", format!("unknown model `{other}` (expected model1, model1_special or model2)"));
                    None
                }
            },
            Some(other) => {
                self.push("model", format!("expected a string, found {}", other.type_str()));
                None
            }
            None => {
                self.push("model", "missing required key");
                None
            }
        };
        let label = match root.get("label") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.push("label", format!("expected a string, found {}", other.type_str()));
                None
            }
            None => None,
        };
        let chain = self.chain(root.get("chain"));
        let model = model?;
        let states = self.states(root.get("state"), model, chain.as_ref().map(Vec::len));
        let v_law = self.v_law(root.get("v_law"), model);
        let solver = self.solver(root.get("solver"));
        let sim = self.sim(root.get("sim"));
        Some(InstanceConfig {
            label,
            model,
            chain: chain?,
            states: states?,
            v_law: v_law?,
            solver: solver?,
            sim: sim?,
        })
    }

    fn chain(&mut self, value: Option<&Value>) -> Option<Vec<Vec<f64>>> {
        let Some(value) = value else {
            self.push("chain", "missing required key");
            return None;
        };
        let Value::Array(rows) = value else {
            self.push("chain", "expected an array of rows");
            return None;
        };
        let mut out = Vec::new();
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            let Value::Array(entries) = row else {
                self.push(format!("chain[{i}]"), "expected an array of numbers");
                ok = false;
                continue;
            };
            let mut r = Vec::new();
            for (j, x) in entries.iter().enumerate() {
                match self.number(x, &format!("chain[{i}][{j}]")) {
                    Some(v) => r.push(v),
                    None => ok = false,
                }
            }
            out.push(r);
        }
        if !ok {
            return None;
        }
        if let Err(e) = ModulationChain::new(out.clone()) {
            self.push("chain", e.to_string());
            return None;
        }
        Some(out)
    }

    fn states(&mut self, value: Option<&Value>, model: ModelKind, n: Option<usize>) -> Option<Vec<StateConfig>> {
        let Some(value) = value else {
            self.push("state", "missing required `[[state]]` entries");
            return None;
        };
        let Value::Array(entries) = value else {
            self.push("state", "expected an array of tables (`[[state]]`)");
            return None;
        };
        if let Some(n) = n {
            if entries.len() != n {
                self.push("state", format!("{} entries but the chain has {n} states", entries.len()));
            }
        }
        let allowed: &[&str] = match model {
            ModelKind::Model1 | ModelKind::Model1Special => &["service", "interarrival"],
            ModelKind::Model2 => &["service", "arrival_rate", "d_rate", "c"],
        };
        let mut out = Vec::new();
        let mut ok = true;
        for (i, entry) in entries.iter().enumerate() {
            let path = format!("state[{i}]");
            let Value::Table(t) = entry else {
                self.push(path, "expected a table");
                ok = false;
                continue;
            };
            self.unknown_keys(t, &path, allowed);
            let service = self.law(t, "service", &path);
            let state = match model {
                ModelKind::Model1 | ModelKind::Model1Special => {
                    let interarrival = self.law(t, "interarrival", &path);
                    service.zip(interarrival).map(|(service, a)| StateConfig {
                        service,
                        interarrival: Some(a),
                        arrival_rate: None,
                        d_rate: None,
                        c: None,
                    })
                }
                ModelKind::Model2 => {
                    let lambda = self.required_number(t, "arrival_rate", &path);
                    let mu = self.required_number(t, "d_rate", &path);
                    let c = self.law(t, "c", &path);
                    for (key, rate) in [("arrival_rate", lambda), ("d_rate", mu)] {
                        if let Some(r) = rate {
                            if !(r.is_finite() && r > 0.0) {
                                self.push(format!("{path}.{key}"), format!("rate must be positive, got {r}"));
                            }
                        }
                    }
                    match (service, lambda, mu, c) {
                        (Some(service), Some(l), Some(m), Some(c)) => Some(StateConfig {
                            service,
                            interarrival: None,
                            arrival_rate: Some(l),
                            d_rate: Some(m),
                            c: Some(c),
                        }),
                        _ => None,
                    }
                }
            };
            match state {
                Some(s) => out.push(s),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn v_law(&mut self, value: Option<&Value>, model: ModelKind) -> Option<VLawConfig> {
        let empty = Table::new();
        let t = match value {
            Some(Value::Table(t)) => t,
            Some(_) => {
                self.push("v_law", "expected a table");
                return None;
            }
            None if model == ModelKind::Model1Special => &empty,
            None => {
                self.push("v_law", "missing required table");
                return None;
            }
        };
        let mut out = VLawConfig {
            p1: 0.0,
            p2: 0.0,
            p3: 1.0,
            a: 0.5,
            atoms: vec![(-1.0, 1.0)],
            p: 0.0,
        };
        match model {
            ModelKind::Model1 => {
                self.unknown_keys(t, "v_law", &["p1", "p2", "p3", "a", "atoms"]);
                let p1 = self.required_number(t, "p1", "v_law");
                let p2 = self.required_number(t, "p2", "v_law");
                let p3 = self.required_number(t, "p3", "v_law");
                let a = self.required_number(t, "a", "v_law");
                // With p3 = 0 the negative branch is never used.
                let atoms = if t.contains_key("atoms") || p3 != Some(0.0) {
                    self.atoms(t)
                } else {
                    Some(out.atoms.clone())
                };
                out.p1 = p1?;
                out.p2 = p2?;
                out.p3 = p3?;
                out.a = a?;
                out.atoms = atoms?;
            }
            ModelKind::Model1Special => {
                self.unknown_keys(t, "v_law", &["atoms"]);
                out.atoms = self.atoms(t)?;
            }
            ModelKind::Model2 => {
                self.unknown_keys(t, "v_law", &["p"]);
                let p = self.required_number(t, "p", "v_law")?;
                if !(0.0..=1.0).contains(&p) {
                    self.push("v_law.p", format!("{p} is not a probability"));
                    return None;
                }
                out.p = p;
            }
        }
        Some(out)
    }

    fn atoms(&mut self, t: &Table) -> Option<Vec<(f64, f64)>> {
        let Some(value) = t.get("atoms") else {
            self.push("v_law.atoms", "missing required key");
            return None;
        };
        let Value::Array(items) = value else {
            self.push("v_law.atoms", "expected an array of `{ value, weight }` tables");
            return None;
        };
        let mut out = Vec::new();
        let mut ok = true;
        for (k, item) in items.iter().enumerate() {
            let path = format!("v_law.atoms[{k}]");
            let Value::Table(a) = item else {
                self.push(path, "expected a `{ value, weight }` table");
                ok = false;
                continue;
            };
            self.unknown_keys(a, &path, &["value", "weight"]);
            match (self.required_number(a, "value", &path), self.required_number(a, "weight", &path)) {
                (Some(v), Some(w)) => out.push((v, w)),
                _ => ok = false,
            }
        }
        if !ok {
            return None;
        }
        if let Err(e) = NegativeMultiplierLaw::new(out.clone()) {
            self.push("v_law.atoms", e.to_string());
            return None;
        }
        Some(out)
    }

    fn solver(&mut self, value: Option<&Value>) -> Option<SolverConfig> {
        let mut out = SolverConfig::default();
        let t = match value {
            None => return Some(out),
            Some(Value::Table(t)) => t,
            Some(_) => {
                self.push("solver", "expected a table");
                return None;
            }
        };
        self.unknown_keys(t, "solver", &["tol", "r_max", "probe_points"]);
        if let Some(tol) = self.optional_number(t, "tol", "solver")? {
            if !(tol > 0.0 && tol < 1.0) {
                self.push("solver.tol", format!("tolerance {tol} is not in (0, 1)"));
                return None;
            }
            out.tol = tol;
        }
        match t.get("r_max") {
            None => {}
            Some(Value::Integer(k)) if (2..=12).contains(k) => out.r_max = *k as usize,
            Some(_) => {
                self.push("solver.r_max", "expected an integer between 2 and 12");
                return None;
            }
        }
        if let Some(v) = t.get("probe_points") {
            let Value::Array(items) = v else {
                self.push("solver.probe_points", "expected an array of numbers");
                return None;
            };
            let mut points = Vec::new();
            for (k, x) in items.iter().enumerate() {
                let path = format!("solver.probe_points[{k}]");
                let x = self.number(x, &path)?;
                if !(x.is_finite() && x >= 0.0) {
                    self.push(path, format!("{x} is not a nonnegative number"));
                    return None;
                }
                points.push(x);
            }
            out.probe_points = points;
        }
        Some(out)
    }

    fn sim(&mut self, value: Option<&Value>) -> Option<SimConfig> {
        let Some(value) = value else {
            return Some(SimConfig::default());
        };
        let cfg = match value.clone().try_into::<SimConfig>() {
            Ok(c) => c,
            Err(e) => {
                self.push("sim", e.message().to_string());
                return None;
            }
        };
        if let Err(e) = cfg.validate() {
            self.push("sim", e.to_string());
            return None;
        }
        Some(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL2: &str = r#"
model = "model2"
chain = [[0.2, 0.8], [0.6, 0.4]]

[[state]]
service = { kind = "exponential", rate = 10.0 }
arrival_rate = 2.0
d_rate = 10.0
c = { kind = "exponential", rate = 8.0 }

[[state]]
service = { kind = "exponential", rate = 8.0 }
arrival_rate = 3.0
d_rate = 8.0
c = { kind = "exponential", rate = 6.0 }

[v_law]
p = 0.5
"#;

    fn paths(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(issues)) => issues.into_iter().map(|i| i.path).collect(),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn valid_model2_file_builds() {
        let cfg = parse_config(MODEL2).unwrap();
        assert_eq!(cfg.model, ModelKind::Model2);
        assert_eq!(cfg.sim, SimConfig::default());
        let Instance::Model2(spec) = cfg.build().unwrap() else { panic!() };
        assert_eq!(spec.lambda, vec![2.0, 3.0]);
    }

    #[test]
    fn u_scaling_stretches_service_and_d() {
        let cfg = parse_config(MODEL2).unwrap();
        let Instance::Model2(spec) = cfg.build_with(None, 2.0).unwrap() else { panic!() };
        assert_eq!(spec.mu, vec![5.0, 4.0]);
        assert!((spec.beta[0].mean() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn errors_name_their_paths() {
        let bad_rate = MODEL2.replacen("rate = 8.0 }\narrival_rate = 3.0", "rate = -8.0 }\narrival_rate = 3.0", 1);
        assert_eq!(paths(&bad_rate), vec!["state[1].service"]);
        let missing = MODEL2.replace("d_rate = 8.0\n", "");
        assert_eq!(paths(&missing), vec!["state[1].d_rate"]);
        let typo = MODEL2.replace("p = 0.5", "p = 0.5\nq = 0.5");
        assert_eq!(paths(&typo), vec!["v_law.q"]);
        let kind = MODEL2.replacen("\"exponential\", rate = 10.0", "\"weibull\", rate = 10.0", 1);
        assert_eq!(paths(&kind), vec!["state[0].service"]);
        let sim = format!("{MODEL2}\n[sim]\nn_step = 5\n");
        assert_eq!(paths(&sim), vec!["sim"]);
        assert_eq!(paths("model = [1"), vec!["<document>"]);
    }

    #[test]
    fn chain_and_state_counts_must_agree() {
        let text = MODEL2.replace("[[0.2, 0.8], [0.6, 0.4]]", "[[0.2, 0.8, 0.0], [0.6, 0.4, 0.0], [0.0, 0.0, 1.0]]");
        assert!(paths(&text).contains(&"state".to_string()) || paths(&text).contains(&"chain".to_string()));
    }

    #[test]
    fn empty_sim_block_uses_defaults() {
        let cfg = parse_config(&format!("{MODEL2}\n[sim]\n")).unwrap();
        assert_eq!(cfg.sim, SimConfig::default());
    }
}
