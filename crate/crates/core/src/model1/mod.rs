//! Model I: `W_{n+1} = [V_n W_n + S_n − A_{n+1}]^+` with `V_n = 1` w.p. `p1`,
//! `V_n = a ∈ (0, 1)` w.p. `p2`, and `V_n < 0` w.p. `p3`, where `S` and `A`
//! have rational transforms modulated by the background chain.
//!
//! The transform vector solves `Φ(s) = R(s) Φ(as) + Ṽ(s)`, whose iterate
//! series is linear in the unknown polynomial coefficients `c_{ω,j}`. Those
//! are pinned down by one equation per zero of `det(I − p1 F(s))` in the
//! right half-plane and one per service-time pole.

mod series;
pub(crate) mod solve;
mod special;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyalg::CMatrix;
use crate::probcore::{Law, Lst, ModulationChain, NegativeMultiplierLaw, RationalLst};

pub use series::{evaluate_phi_series, Layout, SeriesOperators, ASSEMBLY_TOL, EVALUATION_TOL, MAX_TERMS};
pub use solve::{
    assemble_and_solve_coefficients, find_delta_roots, mean_workload, mean_workload_closed_form,
    mean_workload_numerical, verification_grid, Model1Diagnostics, Model1Solution, B0_TOLERANCE, MEAN_CROSS_CHECK,
};
pub use special::{solve_model1_special, Model1SpecialSolution, Model1SpecialSpec};

/// Seed of the Monte Carlo stability probe.
pub const PROBE_SEED: u64 = 0xC0FFEE;
/// Draws of `Y` in the stability probe.
pub const PROBE_DRAWS: usize = 100_000;

/// A full Model I instance.
#[derive(Debug, Clone)]
pub struct Model1Spec {
    pub chain: ModulationChain,
    /// `Φ_{B,i}`, transform of `S_n` given `Z_n = i`.
    pub service: Vec<RationalLst>,
    /// `Φ_{A,j}`, transform of `A_{n+1}` given `Z_{n+1} = j`.
    pub interarrival: Vec<RationalLst>,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub a: f64,
    pub v_negative: NegativeMultiplierLaw,
}

impl Model1Spec {
    pub fn new(
        chain: ModulationChain,
        service: Vec<RationalLst>,
        interarrival: Vec<RationalLst>,
        (p1, p2, p3): (f64, f64, f64),
        a: f64,
        v_negative: NegativeMultiplierLaw,
    ) -> Result<Self> {
        let n = chain.states();
        if service.len() != n || interarrival.len() != n {
            return Err(Error::InvalidSpec(format!(
                "{n} states but {} service and {} interarrival transforms",
                service.len(),
                interarrival.len()
            )));
        }
        for (name, p) in [("p1", p1), ("p2", p2), ("p3", p3)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidSpec(format!("{name} = {p} is not a probability")));
            }
        }
        if (p1 + p2 + p3 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("p1 + p2 + p3 = {}, expected 1", p1 + p2 + p3)));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidSpec(format!("a = {a} is not in (0, 1)")));
        }
        Ok(Self {
            chain,
            service,
            interarrival,
            p1,
            p2,
            p3,
            a,
            v_negative,
        })
    }

    pub fn states(&self) -> usize {
        self.chain.states()
    }

    /// `Σ_k m_k`, the total number of service-time poles.
    pub fn service_degree(&self) -> usize {
        self.service.iter().map(RationalLst::degree).sum()
    }

    /// `Σ_j l_j`, the number of zeros of `det(I − p1 F)` in `Re(s) > 0`.
    pub fn interarrival_degree(&self) -> usize {
        self.interarrival.iter().map(RationalLst::degree).sum()
    }

    /// Half-width of the zero-search rectangle: ten times the largest rate
    /// scale plus ten.
    pub fn search_bound(&self) -> f64 {
        let scale = self
            .service
            .iter()
            .chain(&self.interarrival)
            .flat_map(|l| l.denominator_roots().iter().map(|r| r.norm()))
            .fold(1.0, f64::max);
        10.0 * scale + 10.0
    }
}

/// Outcome of the Model I stability gate.
#[derive(Debug, Clone, Serialize)]
pub struct Model1Stability {
    pub stable: bool,
    pub p3: f64,
    /// Fraction of probe draws with `Y ≤ 0`, when every law can be sampled.
    pub probe_frequency: Option<f64>,
    /// `Σ_i Σ_j π_i p_ij β_i(λ_j)` when all interarrival laws are exponential.
    pub closed_form: Option<f64>,
    pub reason: String,
}

/// `P(Y ≤ 0)` in closed form when every `A_j` is exponential.
fn closed_form_nonpositive(spec: &Model1Spec) -> Option<f64> {
    let n = spec.states();
    let rates: Option<Vec<f64>> = spec
        .interarrival
        .iter()
        .map(|l| match l.law() {
            Some(Law::Exponential { rate }) => Some(*rate),
            _ => None,
        })
        .collect();
    let rates = rates?;
    let mut total = 0.0;
    for i in 0..n {
        for (j, &lambda) in rates.iter().enumerate() {
            let beta = spec.service[i].value(Complex64::new(lambda, 0.0)).re;
            total += spec.chain.pi(i) * spec.chain.p(i, j) * beta;
        }
    }
    Some(total)
}

/// Frequency of `{S − A ≤ 0}` over [`PROBE_DRAWS`] stationary draws, `None`
/// if a law has no sampler.
pub(crate) fn probe_nonpositive(
    chain: &ModulationChain,
    sample_s: &dyn Fn(usize, &mut ChaCha8Rng) -> Result<f64>,
    sample_a: &dyn Fn(usize, &mut ChaCha8Rng) -> Result<f64>,
) -> Option<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let n = chain.states();
    let mut hits = 0usize;
    for _ in 0..PROBE_DRAWS {
        let u: f64 = rng.random();
        let i = pick(chain.stationary(), u);
        let v: f64 = rng.random();
        let j = pick(&chain.transition()[i], v);
        debug_assert!(j < n);
        let s = sample_s(i, &mut rng).ok()?;
        let a = sample_a(j, &mut rng).ok()?;
        if s - a <= 0.0 {
            hits += 1;
        }
    }
    Some(hits as f64 / PROBE_DRAWS as f64)
}

pub(crate) fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Stable when `p3 > 0` and `Y ≤ 0` has positive probability, judged by
/// the closed form when available and by the probe otherwise.
pub fn check_stability_model1(spec: &Model1Spec) -> Model1Stability {
    let closed_form = closed_form_nonpositive(spec);
    let probe_frequency = probe_nonpositive(
        &spec.chain,
        &|i, rng| spec.service[i].sample(rng),
        &|j, rng| spec.interarrival[j].sample(rng),
    );
    let (stable, reason) = if !(spec.p3 > 0.0) {
        (false, "p3 = 0: no negative multiplier, outside this solver's scope".to_string())
    } else if let Some(pc) = closed_form {
        if pc > 0.0 {
            (true, format!("P(V < 0) = {} and P(Y <= 0) = {pc:.6} > 0", spec.p3))
        } else {
            (false, "P(Y <= 0) = 0".to_string())
        }
    } else {
        match probe_frequency {
            Some(f) if f > 0.0 => (true, format!("probe observed Y <= 0 with frequency {f:.5}")),
            Some(_) => (false, "probe never observed Y <= 0".to_string()),
            None => (true, "P(V < 0) > 0; P(Y <= 0) not probed (no sampler)".to_string()),
        }
    };
    Model1Stability {
        stable,
        p3: spec.p3,
        probe_frequency,
        closed_form,
        reason,
    }
}

/// `H_ij(s) = Φ_{B,i}(s) Φ_{A,j}(−s)`.
pub fn build_h1(spec: &Model1Spec, s: Complex64) -> Result<CMatrix> {
    let n = spec.states();
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        let b = spec.service[i].eval(s)?;
        for j in 0..n {
            h[(i, j)] = b * spec.interarrival[j].eval(-s)?;
        }
    }
    Ok(h)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn two_state(p: Vec<Vec<f64>>, u: f64, probs: (f64, f64, f64)) -> Model1Spec {
        Model1Spec::new(
            ModulationChain::new(p).unwrap(),
            vec![
                RationalLst::exponential(10.0 / u).unwrap(),
                RationalLst::exponential(8.0 / u).unwrap(),
            ],
            vec![RationalLst::exponential(2.0).unwrap(), RationalLst::exponential(3.0).unwrap()],
            probs,
            0.2,
            NegativeMultiplierLaw::single(-1.0).unwrap(),
        )
        .unwrap()
    }

    fn third() -> (f64, f64, f64) {
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    }

    #[test]
    fn h1_entries() {
        let single = Model1Spec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![RationalLst::exponential(10.0).unwrap()],
            vec![RationalLst::exponential(2.0).unwrap()],
            third(),
            0.5,
            NegativeMultiplierLaw::single(-1.0).unwrap(),
        )
        .unwrap();
        let h = build_h1(&single, Complex64::new(1.0, 0.0)).unwrap();
        assert!((h[(0, 0)] - 20.0 / 11.0).norm() < 1e-14);

        let spec = two_state(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 1.0, third());
        let h0 = build_h1(&spec, Complex64::new(0.0, 0.0)).unwrap();
        assert!(h0.iter().all(|z| (z - 1.0).norm() < 1e-15));
        let h1 = build_h1(&spec, Complex64::new(1.0, 0.0)).unwrap();
        assert!((h1[(0, 1)] - 15.0 / 11.0).norm() < 1e-14);
        assert!(matches!(build_h1(&spec, Complex64::new(2.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn stability_gate() {
        let spec = two_state(vec![vec![0.2, 0.8], vec![0.6, 0.4]], 1.0, third());
        let report = check_stability_model1(&spec);
        assert!(report.stable);
        // Σ π_i p_ij μ_i/(μ_i + λ_j) evaluated directly.
        let pi = [3.0 / 7.0, 4.0 / 7.0];
        let p = [[0.2, 0.8], [0.6, 0.4]];
        let mu = [10.0, 8.0];
        let lambda = [2.0, 3.0];
        let mut expected = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                expected += pi[i] * p[i][j] * mu[i] / (mu[i] + lambda[j]);
            }
        }
        assert!((report.closed_form.unwrap() - expected).abs() < 1e-12);
        let freq = report.probe_frequency.unwrap();
        assert!((freq - expected).abs() < 5.0 * (expected * (1.0 - expected) / 1e5).sqrt());

        let no_negative = two_state(vec![vec![0.2, 0.8], vec![0.6, 0.4]], 1.0, (0.5, 0.5, 0.0));
        assert!(!check_stability_model1(&no_negative).stable);

        let single = Model1Spec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![RationalLst::exponential(10.0).unwrap()],
            vec![RationalLst::exponential(2.0).unwrap()],
            third(),
            0.5,
            NegativeMultiplierLaw::single(-1.0).unwrap(),
        )
        .unwrap();
        assert!((check_stability_model1(&single).closed_form.unwrap() - 10.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let chain = ModulationChain::new(vec![vec![1.0]]).unwrap();
        let b = vec![RationalLst::exponential(1.0).unwrap()];
        let atom = NegativeMultiplierLaw::single(-1.0).unwrap();
        assert!(Model1Spec::new(chain.clone(), b.clone(), b.clone(), (0.5, 0.5, 0.5), 0.5, atom.clone()).is_err());
        assert!(Model1Spec::new(chain.clone(), b.clone(), b.clone(), (0.2, 0.3, 0.5), 1.0, atom.clone()).is_err());
        assert!(Model1Spec::new(chain, b.clone(), vec![], (0.2, 0.3, 0.5), 0.5, atom).is_err());
    }
}
