//! Closed-form nonnegative laws shared by the analytic solvers and the
//! simulator: each knows its transform, its moments, a sampler and, when one
//! exists, its rational transform.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    /// Deterministic value `at ≥ 0`; `at = 0` is the zero variable.
    PointMass { at: f64 },
    Exponential { rate: f64 },
    Erlang { phases: usize, rate: f64 },
    /// `Σ_k weights[k−1] · Erlang(k, rate)`.
    ErlangMixture { weights: Vec<f64>, rate: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidLst("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidLst(format!("negative weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidLst(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidLst(format!("rate must be positive, got {rate}")));
    }
    Ok(())
}

/// Rising factorial `k (k+1) ⋯ (k+r−1)`.
fn rising(k: usize, r: usize) -> f64 {
    (0..r).map(|i| (k + i) as f64).product()
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|i| i as f64).product()
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        match self {
            Law::PointMass { at } => {
                if !(at.is_finite() && *at >= 0.0) {
                    return Err(Error::InvalidLst(format!("point mass at {at} is not nonnegative")));
                }
            }
            Law::Exponential { rate } => check_rate(*rate)?,
            Law::Erlang { phases, rate } => {
                check_rate(*rate)?;
                if *phases == 0 {
                    return Err(Error::InvalidLst("Erlang needs at least one phase".into()));
                }
            }
            Law::ErlangMixture { weights, rate } => {
                check_rate(*rate)?;
                check_weights(weights)?;
            }
            Law::HyperExponential { weights, rates } => {
                check_weights(weights)?;
                if weights.len() != rates.len() {
                    return Err(Error::InvalidLst("weights and rates differ in length".into()));
                }
                for &r in rates {
                    check_rate(r)?;
                }
            }
        }
        Ok(())
    }

    pub fn lst(&self, s: Complex64) -> Complex64 {
        let erlang = |k: usize, rate: f64| (Complex64::new(rate, 0.0) / (s + rate)).powu(k as u32);
        match self {
            Law::PointMass { at } => (-s * *at).exp(),
            Law::Exponential { rate } => erlang(1, *rate),
            Law::Erlang { phases, rate } => erlang(*phases, *rate),
            Law::ErlangMixture { weights, rate } => weights
                .iter()
                .enumerate()
                .map(|(k, &w)| erlang(k + 1, *rate) * w)
                .sum(),
            Law::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(&w, &r)| erlang(1, r) * w)
                .sum(),
        }
    }

    /// `E[X^r]`.
    pub fn moment(&self, r: usize) -> f64 {
        match self {
            Law::PointMass { at } => at.powi(r as i32),
            Law::Exponential { rate } => factorial(r) / rate.powi(r as i32),
            Law::Erlang { phases, rate } => rising(*phases, r) / rate.powi(r as i32),
            Law::ErlangMixture { weights, rate } => weights
                .iter()
                .enumerate()
                .map(|(k, &w)| w * rising(k + 1, r) / rate.powi(r as i32))
                .sum(),
            Law::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(&w, &q)| w * factorial(r) / q.powi(r as i32))
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// The law of `factor · X` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Law {
        match self {
            Law::PointMass { at } => Law::PointMass { at: at * factor },
            Law::Exponential { rate } => Law::Exponential { rate: rate / factor },
            Law::Erlang { phases, rate } => Law::Erlang {
                phases: *phases,
                rate: rate / factor,
            },
            Law::ErlangMixture { weights, rate } => Law::ErlangMixture {
                weights: weights.clone(),
                rate: rate / factor,
            },
            Law::HyperExponential { weights, rates } => Law::HyperExponential {
                weights: weights.clone(),
                rates: rates.iter().map(|r| r / factor).collect(),
            },
        }
    }

    /// Largest ζ such that the transform is analytic on `Re(s) > −ζ`.
    pub fn analyticity_margin(&self) -> f64 {
        match self {
            Law::PointMass { .. } => f64::INFINITY,
            Law::Exponential { rate } | Law::Erlang { rate, .. } | Law::ErlangMixture { rate, .. } => *rate,
            Law::HyperExponential { rates, .. } => rates.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let exp = |rng: &mut R, rate: f64| -> f64 {
            let e: f64 = rng.sample(Exp1);
            e / rate
        };
        match self {
            Law::PointMass { at } => *at,
            Law::Exponential { rate } => exp(rng, *rate),
            Law::Erlang { phases, rate } => (0..*phases).map(|_| exp(rng, *rate)).sum(),
            Law::ErlangMixture { weights, rate } => {
                let k = pick(rng, weights) + 1;
                (0..k).map(|_| exp(rng, *rate)).sum()
            }
            Law::HyperExponential { weights, rates } => {
                let i = pick(rng, weights);
                exp(rng, rates[i])
            }
        }
    }

    /// `(numerator, monic denominator, denominator roots)` when the transform
    /// is rational.
    pub fn rational_parts(&self) -> Option<Result<(Poly, Poly, Vec<Complex64>)>> {
        let c = |x: f64| Complex64::new(x, 0.0);
        let erlang_parts = |weights: &[f64], rate: f64| -> Result<(Poly, Poly, Vec<Complex64>)> {
            let phases = weights.iter().rposition(|&w| w > 0.0).map_or(1, |k| k + 1);
            let base = Poly::from_real(&[rate, 1.0])?;
            let mut num = Poly::constant(c(0.0));
            for (k, &w) in weights.iter().enumerate().take(phases) {
                if w == 0.0 {
                    continue;
                }
                let mut term = Poly::constant(c(w * rate.powi(k as i32 + 1)));
                for _ in 0..(phases - k - 1) {
                    term = term.mul(&base)?;
                }
                num = num.add(&term)?;
            }
            let roots = vec![c(-rate); phases];
            Ok((num, Poly::from_roots(&roots)?, roots))
        };
        match self {
            Law::PointMass { at } if *at == 0.0 => {
                Some(Ok((Poly::constant(c(1.0)), Poly::constant(c(1.0)), vec![])))
            }
            Law::PointMass { .. } => None,
            Law::Exponential { rate } => Some(erlang_parts(&[1.0], *rate)),
            Law::Erlang { phases, rate } => {
                let mut w = vec![0.0; *phases];
                w[phases - 1] = 1.0;
                Some(erlang_parts(&w, *rate))
            }
            Law::ErlangMixture { weights, rate } => Some(erlang_parts(weights, *rate)),
            Law::HyperExponential { weights, rates } => Some((|| {
                // Merge equal rates so the denominator has simple roots.
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (&w, &r) in weights.iter().zip(rates) {
                    if w == 0.0 {
                        continue;
                    }
                    match merged.iter_mut().find(|(_, q)| *q == r) {
                        Some(entry) => entry.0 += w,
                        None => merged.push((w, r)),
                    }
                }
                let roots: Vec<Complex64> = merged.iter().map(|&(_, r)| c(-r)).collect();
                let mut num = Poly::constant(c(0.0));
                for (i, &(w, r)) in merged.iter().enumerate() {
                    let others: Vec<Complex64> = roots
                        .iter()
                        .enumerate()
                        .filter(|&(m, _)| m != i)
                        .map(|(_, &x)| x)
                        .collect();
                    num = num.add(&Poly::from_roots(&others)?.scale(c(w * r)))?;
                }
                Ok((num, Poly::from_roots(&roots)?, roots))
            })()),
        }
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn moments_match_sample_means() {
        let laws = [
            Law::Exponential { rate: 2.0 },
            Law::Erlang { phases: 3, rate: 4.0 },
            Law::ErlangMixture { weights: vec![0.3, 0.0, 0.7], rate: 5.0 },
            Law::HyperExponential { weights: vec![0.4, 0.6], rates: vec![1.0, 6.0] },
            Law::PointMass { at: 0.25 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for law in &laws {
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let m1 = xs.iter().sum::<f64>() / n as f64;
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let sd = (law.moment(2) - law.mean().powi(2)).max(0.0).sqrt();
            assert!((m1 - law.mean()).abs() <= 5.0 * sd / (n as f64).sqrt() + 1e-12, "{law:?}");
            assert!((m2 - law.moment(2)).abs() < 0.05 * law.moment(2) + 1e-12, "{law:?}");
        }
    }

    #[test]
    fn rational_parts_reproduce_closed_form() {
        let laws = [
            Law::Exponential { rate: 2.0 },
            Law::Erlang { phases: 3, rate: 4.0 },
            Law::ErlangMixture { weights: vec![0.3, 0.0, 0.7, 0.0], rate: 5.0 },
            Law::HyperExponential { weights: vec![0.4, 0.6], rates: vec![1.0, 6.0] },
            Law::PointMass { at: 0.0 },
        ];
        let points = [Complex64::new(0.0, 0.0), Complex64::new(0.7, -1.3), Complex64::new(3.0, 2.0)];
        for law in &laws {
            let (num, den, roots) = law.rational_parts().unwrap().unwrap();
            for &s in &points {
                let r = num.eval(s) / den.eval(s);
                assert!((r - law.lst(s)).norm() < 1e-12, "{law:?} at {s}");
            }
            assert_eq!(roots.len(), den.degree());
        }
        assert!(Law::PointMass { at: 1.0 }.rational_parts().is_none());
    }

    #[test]
    fn mixture_degree_ignores_trailing_zero_weights() {
        let law = Law::ErlangMixture { weights: vec![0.5, 0.5, 0.0], rate: 1.0 };
        let (_, den, _) = law.rational_parts().unwrap().unwrap();
        assert_eq!(den.degree(), 2);
    }
}
