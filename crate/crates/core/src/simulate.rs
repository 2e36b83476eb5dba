//! Monte Carlo oracle: runs the raw recursions with the exact conditional
//! dependence on the background chain and reports replication-based
//! standard errors.
//!
//! At each step the next state `Z_{n+1}` is drawn from row `Z_n` of `P`;
//! quantities indexed by `n` (`S_n`, `C_n`) use `Z_n` and those indexed by
//! `n + 1` (`A_{n+1}`, `D_{n+1}`) use `Z_{n+1}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model1::{Model1SpecialSpec, Model1Spec};
use crate::model2::Model2Spec;
use crate::probcore::ModulationChain;

/// Default number of recorded steps, summed over replications.
pub const DEFAULT_STEPS: u64 = 1_000_000;
pub const DEFAULT_BURN_IN: u64 = 10_000;
pub const DEFAULT_REPLICATIONS: usize = 16;
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Minimum number of samples between the 50th and 99th percentiles.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Simulation settings. `n_steps` is the number of recorded steps summed
/// over all replications; each replication also discards `burn_in` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub replications: usize,
    /// Points `s` at which `E[e^{−sW} 1{Z = i}]` is estimated.
    pub probe_points: Vec<f64>,
    /// Keep the recorded workloads for tail estimation.
    pub keep_samples: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_steps: DEFAULT_STEPS,
            burn_in: DEFAULT_BURN_IN,
            seed: DEFAULT_SEED,
            replications: DEFAULT_REPLICATIONS,
            probe_points: vec![0.5, 1.0, 2.0],
            keep_samples: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidSimConfig("replications must be at least 1".into()));
        }
        if self.n_steps < self.replications as u64 {
            return Err(Error::InvalidSimConfig(format!(
                "n_steps = {} is smaller than replications = {}",
                self.n_steps, self.replications
            )));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::InvalidSimConfig(format!(
                "burn_in = {} must be below n_steps = {}",
                self.burn_in, self.n_steps
            )));
        }
        if let Some(s) = self.probe_points.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidSimConfig(format!("probe point {s} is not a nonnegative number")));
        }
        Ok(())
    }

    fn steps_per_replication(&self) -> u64 {
        self.n_steps / self.replications as u64
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Mean and standard error of replication-level values.
    pub fn from_replications(values: &[f64]) -> Self {
        let r = values.len() as f64;
        let value = values.iter().sum::<f64>() / r;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        } else {
            f64::NAN
        };
        Self { value, stderr }
    }

    /// `(analytic − value) / stderr`; zero when both agree exactly.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let gap = analytic - self.value;
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }
}

/// Estimated transform at one probe point.
#[derive(Debug, Clone, Serialize)]
pub struct TransformEstimate {
    pub s: f64,
    pub by_state: Vec<Estimate>,
}

/// Least-squares slope of the log survival function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEstimate {
    pub slope: f64,
    pub stderr: f64,
    /// Approximate 95% interval from the replication spread.
    pub ci: (f64, f64),
    pub x50: f64,
    pub x99: f64,
}

/// Everything the simulator estimates.
#[derive(Debug, Clone, Serialize)]
pub struct SimEstimate {
    /// `E[W 1{Z = i}]`.
    pub mean_by_state: Vec<Estimate>,
    pub transform_by_state: Vec<TransformEstimate>,
    pub visit_frequencies: Vec<f64>,
    pub tail_slope: Option<TailEstimate>,
    pub steps: u64,
    pub replications: usize,
    #[serde(skip)]
    pub samples: Option<Vec<Vec<f64>>>,
}

impl SimEstimate {
    pub fn transform_at(&self, s: f64) -> Option<&[Estimate]> {
        self.transform_by_state
            .iter()
            .find(|t| t.s == s)
            .map(|t| t.by_state.as_slice())
    }
}

/// `[x]^+ = max(x, 0)`.
pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// `[x]^- = min(x, 0)`, so that `e^{−s[x]^+} + e^{−s[x]^-} = e^{−sx} + 1`.
pub fn negative_part(x: f64) -> f64 {
    x.min(0.0)
}

/// One transition `(Z_n, W_n) → (Z_{n+1}, W_{n+1})`.
trait Recursion: Sync {
    fn chain(&self) -> &ModulationChain;
    fn step(&self, z: usize, w: f64, rng: &mut ChaCha8Rng) -> Result<(usize, f64)>;
}

fn next_state(chain: &ModulationChain, z: usize, rng: &mut ChaCha8Rng) -> usize {
    crate::model1::pick(&chain.transition()[z], rng.random())
}

/// `V_n` for Model I: `1`, `a`, or a negative atom.
fn model1_multiplier(p1: f64, p2: f64, a: f64, atoms: &crate::probcore::NegativeMultiplierLaw, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    if u < p1 {
        1.0
    } else if u < p1 + p2 {
        a
    } else {
        atoms.sample(rng)
    }
}

impl Recursion for Model1Spec {
    fn chain(&self) -> &ModulationChain {
        &self.chain
    }

    fn step(&self, z: usize, w: f64, rng: &mut ChaCha8Rng) -> Result<(usize, f64)> {
        let next = next_state(&self.chain, z, rng);
        let s = self.service[z].sample(rng)?;
        let a = self.interarrival[next].sample(rng)?;
        let v = model1_multiplier(self.p1, self.p2, self.a, &self.v_negative, rng);
        Ok((next, positive_part(v * w + s - a)))
    }
}

impl Recursion for Model1SpecialSpec {
    fn chain(&self) -> &ModulationChain {
        &self.chain
    }

    fn step(&self, z: usize, w: f64, rng: &mut ChaCha8Rng) -> Result<(usize, f64)> {
        let next = next_state(&self.chain, z, rng);
        let s = self.service[z].sample(rng)?;
        let a = self.interarrival[next].sample(rng)?;
        let v = self.v_negative.sample(rng);
        Ok((next, positive_part(v * w + s - a)))
    }
}

impl Recursion for Model2Spec {
    fn chain(&self) -> &ModulationChain {
        &self.chain
    }

    fn step(&self, z: usize, w: f64, rng: &mut ChaCha8Rng) -> Result<(usize, f64)> {
        let next = next_state(&self.chain, z, rng);
        let u: f64 = rng.random();
        let x = if u < self.p {
            let s = self.beta[z].sample(rng)?;
            let a = rng.sample::<f64, _>(rand_distr::Exp1) / self.lambda[next];
            w + s - a
        } else {
            let c = self.c_star[z].sample(rng)?;
            let d = rng.sample::<f64, _>(rand_distr::Exp1) / self.mu[next];
            d - c - w
        };
        Ok((next, positive_part(x)))
    }
}

struct Replication {
    mean: Vec<f64>,
    transform: Vec<Vec<f64>>,
    visits: Vec<f64>,
    samples: Option<Vec<f64>>,
}

fn run_replication<R: Recursion + ?Sized>(model: &R, cfg: &SimConfig, r: usize) -> Result<Replication> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(r as u64);
    let chain = model.chain();
    let n = chain.states();
    let mut z = crate::model1::pick(chain.stationary(), rng.random());
    let mut w = 0.0;
    for _ in 0..cfg.burn_in {
        (z, w) = model.step(z, w, &mut rng)?;
    }
    let steps = cfg.steps_per_replication();
    let mut mean = vec![0.0; n];
    let mut transform = vec![vec![0.0; n]; cfg.probe_points.len()];
    let mut visits = vec![0.0; n];
    let mut samples = cfg.keep_samples.then(|| Vec::with_capacity(steps as usize));
    for _ in 0..steps {
        (z, w) = model.step(z, w, &mut rng)?;
        debug_assert!(w >= 0.0);
        mean[z] += w;
        visits[z] += 1.0;
        for (k, &s) in cfg.probe_points.iter().enumerate() {
            transform[k][z] += (-s * w).exp();
        }
        if let Some(buf) = samples.as_mut() {
            buf.push(w);
        }
    }
    let scale = 1.0 / steps as f64;
    let normalize = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x *= scale);
    normalize(&mut mean);
    normalize(&mut visits);
    transform.iter_mut().for_each(normalize);
    Ok(Replication {
        mean,
        transform,
        visits,
        samples,
    })
}

fn check_samplers<R: Recursion + ?Sized>(model: &R) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let chain = model.chain();
    for z in 0..chain.states() {
        // One step from every state exercises every per-state sampler that
        // can be reached.
        for _ in 0..64 {
            model.step(z, 1.0, &mut rng)?;
        }
    }
    Ok(())
}

fn simulate<R: Recursion + ?Sized>(model: &R, cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    check_samplers(model)?;
    let n = model.chain().states();
    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(model, cfg, r))
        .collect::<Result<_>>()?;
    let column = |f: &dyn Fn(&Replication) -> f64| -> Estimate {
        Estimate::from_replications(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let mean_by_state = (0..n).map(|i| column(&|r| r.mean[i])).collect();
    let transform_by_state = cfg
        .probe_points
        .iter()
        .enumerate()
        .map(|(k, &s)| TransformEstimate {
            s,
            by_state: (0..n).map(|i| column(&|r| r.transform[k][i])).collect(),
        })
        .collect();
    let visit_frequencies = (0..n).map(|i| column(&|r| r.visits[i]).value).collect();
    let samples: Option<Vec<Vec<f64>>> = if cfg.keep_samples {
        Some(reps.into_iter().map(|r| r.samples.unwrap_or_default()).collect())
    } else {
        None
    };
    let tail_slope = samples.as_ref().and_then(|s| tail_decay_estimate(s).ok());
    Ok(SimEstimate {
        mean_by_state,
        transform_by_state,
        visit_frequencies,
        tail_slope,
        steps: cfg.steps_per_replication() * cfg.replications as u64,
        replications: cfg.replications,
        samples,
    })
}

/// Simulates `W_{n+1} = [V_n W_n + S_n − A_{n+1}]^+`.
pub fn simulate_model1(spec: &Model1Spec, cfg: &SimConfig) -> Result<SimEstimate> {
    simulate(spec, cfg)
}

/// Simulates the `p3 = 1` recursion with general interarrival laws.
pub fn simulate_model1_special(spec: &Model1SpecialSpec, cfg: &SimConfig) -> Result<SimEstimate> {
    simulate(spec, cfg)
}

/// Simulates `W_{n+1} = [V_n W_n + Y_n(V_n)]^+` with `V ∈ {1, −1}`.
pub fn simulate_model2(spec: &Model2Spec, cfg: &SimConfig) -> Result<SimEstimate> {
    simulate(spec, cfg)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[k]
}

/// Slope of `log P(W > x)` over `x ∈ [x50, x99]` of one sample set.
fn tail_slope(samples: &[f64]) -> Result<(f64, f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (x50, x99) = (quantile(&sorted, 0.5), quantile(&sorted, 0.99));
    let lo = sorted.partition_point(|&x| x < x50);
    let hi = sorted.partition_point(|&x| x <= x99);
    if !(x99 > x50) || hi.saturating_sub(lo) < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail(hi.saturating_sub(lo)));
    }
    let total = sorted.len() as f64;
    let points = 200;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..points {
        let x = x50 + (x99 - x50) * k as f64 / (points - 1) as f64;
        let above = (sorted.len() - sorted.partition_point(|&y| y <= x)) as f64;
        let y = (above / total).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let m = points as f64;
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok((slope, x50, x99))
}

/// Tail slope over the pooled samples with a replication-spread interval.
pub fn tail_decay_estimate(replications: &[Vec<f64>]) -> Result<TailEstimate> {
    let pooled: Vec<f64> = replications.iter().flatten().copied().collect();
    let (slope, x50, x99) = tail_slope(&pooled)?;
    let per_rep: Vec<f64> = replications
        .iter()
        .map(|r| tail_slope(r).map(|t| t.0))
        .collect::<Result<_>>()
        .unwrap_or_default();
    let stderr = if per_rep.len() > 1 {
        Estimate::from_replications(&per_rep).stderr
    } else {
        f64::NAN
    };
    Ok(TailEstimate {
        slope,
        stderr,
        ci: (slope - 1.96 * stderr, slope + 1.96 * stderr),
        x50,
        x99,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model1::tests::two_state;
    use crate::probcore::{GeneralLst, NegativeMultiplierLaw, RationalLst};
    use rand_distr::{Distribution, Exp};

    fn small(seed: u64) -> SimConfig {
        SimConfig {
            n_steps: 200_000,
            burn_in: 1_000,
            seed,
            replications: 8,
            probe_points: vec![0.5, 1.0, 2.0],
            keep_samples: false,
        }
    }

    #[test]
    fn reflection_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(-20.0..20.0);
            let lhs = (-positive_part(x)).exp() + (-negative_part(x)).exp();
            let rhs = (-x).exp() + 1.0;
            assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small(1);
        cfg.burn_in = cfg.n_steps;
        assert!(cfg.validate().is_err());
        cfg = small(1);
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
        assert!(small(1).validate().is_ok());
    }

    #[test]
    fn deterministic_for_a_fixed_seed() {
        let spec = two_state(vec![vec![0.2, 0.8], vec![0.6, 0.4]], 1.0, (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0));
        let a = simulate_model1(&spec, &small(11)).unwrap();
        let b = simulate_model1(&spec, &small(11)).unwrap();
        let c = simulate_model1(&spec, &small(12)).unwrap();
        let bits = |e: &SimEstimate| e.mean_by_state.iter().map(|x| x.value.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn visits_match_the_stationary_law() {
        let spec = two_state(vec![vec![0.2, 0.8], vec![0.6, 0.4]], 1.0, (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0));
        let est = simulate_model1(&spec, &small(5)).unwrap();
        assert!((est.visit_frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((est.visit_frequencies[0] - 3.0 / 7.0).abs() < 5e-3);
    }

    #[test]
    fn zero_service_gives_zero_workload() {
        let spec = Model1Spec::new(
            ModulationChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            vec![RationalLst::zero(), RationalLst::zero()],
            vec![RationalLst::exponential(1.0).unwrap(), RationalLst::exponential(2.0).unwrap()],
            (0.3, 0.3, 0.4),
            0.5,
            NegativeMultiplierLaw::single(-1.0).unwrap(),
        )
        .unwrap();
        let est = simulate_model1(&spec, &small(2)).unwrap();
        assert!(est.mean_by_state.iter().all(|m| m.value == 0.0));
    }

    /// With `p = 1` and one state the recursion is the M/M/1 waiting time,
    /// whose mean is `ρ / (μ − λ)` with `ρ = λ/μ`.
    #[test]
    fn model2_pure_lindley_matches_mm1() {
        let (lambda, mu) = (2.0, 5.0);
        let spec = Model2Spec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![lambda],
            vec![1.0],
            vec![GeneralLst::exponential(mu).unwrap()],
            vec![GeneralLst::exponential(1.0).unwrap()],
            1.0,
        )
        .unwrap();
        let est = simulate_model2(&spec, &small(9)).unwrap();
        let expected = (lambda / mu) / (mu - lambda);
        let m = est.mean_by_state[0];
        assert!((m.value - expected).abs() < 4.0 * m.stderr, "{m:?} vs {expected}");
    }

    /// With `p = 0` and one state the recursion alternates
    /// `W' = [D − C − W]^+`; an independent loop must agree.
    #[test]
    fn model2_alternating_matches_direct_loop() {
        let spec = Model2Spec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![1.0],
            vec![1.5],
            vec![GeneralLst::exponential(3.0).unwrap()],
            vec![GeneralLst::exponential(4.0).unwrap()],
            0.0,
        )
        .unwrap();
        let est = simulate_model2(&spec, &small(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (d, c) = (Exp::new(1.5).unwrap(), Exp::new(4.0).unwrap());
        let mut w: f64 = 0.0;
        let mut total = 0.0;
        let steps = 400_000;
        for _ in 0..steps {
            w = (d.sample(&mut rng) - c.sample(&mut rng) - w).max(0.0);
            total += w;
        }
        let direct = total / steps as f64;
        let m = est.mean_by_state[0];
        assert!((m.value - direct).abs() < 4.0 * m.stderr + 0.01 * direct, "{m:?} vs {direct}");
    }

    #[test]
    fn tail_slope_of_exponential_samples() {
        let dist = Exp::new(9.099).unwrap();
        let reps: Vec<Vec<f64>> = (0..8)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(r);
                (0..100_000).map(|_| dist.sample(&mut rng)).collect()
            })
            .collect();
        let t = tail_decay_estimate(&reps).unwrap();
        assert!(t.ci.0 < -9.099 && -9.099 < t.ci.1, "{t:?}");
        assert!((t.slope + 9.099).abs() < 0.1);
    }

    #[test]
    fn tail_estimate_rejects_degenerate_samples() {
        assert!(matches!(
            tail_decay_estimate(&[vec![0.0; 200_000]]),
            Err(Error::InsufficientTail(_))
        ));
    }

    #[test]
    fn tail_interval_shrinks_with_more_replications() {
        let dist = Exp::new(2.0).unwrap();
        let make = |count: u64| -> Vec<Vec<f64>> {
            (0..count)
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 + r);
                    (0..20_000).map(|_| dist.sample(&mut rng)).collect()
                })
                .collect()
        };
        let narrow = tail_decay_estimate(&make(32)).unwrap();
        let wide = tail_decay_estimate(&make(8)).unwrap();
        let ratio = (narrow.ci.1 - narrow.ci.0) / (wide.ci.1 - wide.ci.0);
        assert!(ratio > 0.3 && ratio < 0.75, "{ratio}");
    }
}
