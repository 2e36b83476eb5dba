use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-10;

/// The background chain `Z_n`: transition matrix and its stationary law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationChain {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl ModulationChain {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        validate_stochastic(&transition)?;
        let stationary = stationary_distribution(&transition)?;
        Ok(Self {
            transition,
            stationary,
        })
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    /// `p_{i,j}`.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.transition[i][j]
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn pi(&self, i: usize) -> f64 {
        self.stationary[i]
    }

    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.states();
        DMatrix::from_fn(n, n, |i, j| self.transition[i][j])
    }

    /// `‖πP − π‖∞`.
    pub fn fixed_point_residual(&self) -> f64 {
        let n = self.states();
        (0..n)
            .map(|j| {
                let v: f64 = (0..n).map(|i| self.stationary[i] * self.transition[i][j]).sum();
                (v - self.stationary[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn validate_stochastic(p: &[Vec<f64>]) -> Result<()> {
    let n = p.len();
    if n == 0 {
        return Err(Error::InvalidChain("empty matrix".into()));
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidChain(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(x) = row.iter().find(|x| !x.is_finite() || **x < 0.0 || **x > 1.0) {
            return Err(Error::InvalidChain(format!("row {i} has entry {x} outside [0, 1]")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidChain(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

fn reachable_from(p: &[Vec<f64>], start: usize, transpose: bool) -> Vec<bool> {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let w = if transpose { p[j][i] } else { p[i][j] };
            if w > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Checks irreducibility by reachability closure from state 0, forwards and
/// backwards.
pub fn check_irreducible(p: &[Vec<f64>]) -> Result<()> {
    for transpose in [false, true] {
        let seen = reachable_from(p, 0, transpose);
        let missing: Vec<usize> = (0..p.len()).filter(|&j| !seen[j]).collect();
        if !missing.is_empty() {
            if transpose {
                // Some state cannot reach 0; report the states unreachable from it.
                let from = missing[0];
                let seen = reachable_from(p, from, false);
                let unreachable = (0..p.len()).filter(|&j| !seen[j]).collect();
                return Err(Error::Reducible { from, unreachable });
            }
            return Err(Error::Reducible {
                from: 0,
                unreachable: missing,
            });
        }
    }
    Ok(())
}

/// Solves `πP = π`, `Σπ = 1` for an irreducible row-stochastic `P`.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    validate_stochastic(p)?;
    check_irreducible(p)?;
    let n = p.len();
    // (P^T - I) π = 0 with the last equation replaced by normalization.
    let mut a = DMatrix::from_fn(n, n, |i, j| p[j][i] - if i == j { 1.0 } else { 0.0 });
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    let pi: Vec<f64> = pi.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.iter().map(|x| x / total).collect();
    if pi.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidChain("stationary vector has a zero entry".into()));
    }
    let chain = ModulationChain {
        transition: p.to_vec(),
        stationary: pi.clone(),
    };
    let residual = chain.fixed_point_residual();
    if residual > FIXED_POINT_TOL {
        return Err(Error::Residual {
            what: "‖πP − π‖∞".into(),
            value: residual,
            tolerance: FIXED_POINT_TOL,
        });
    }
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cesàro-free oracle: power iteration on the lazy chain (I + P)/2, which
    /// shares π with P and is aperiodic.
    fn power_iteration(p: &[Vec<f64>]) -> Vec<f64> {
        let n = p.len();
        let mut x = vec![1.0 / n as f64; n];
        for _ in 0..100_000 {
            let mut y = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    let lazy = 0.5 * p[i][j] + if i == j { 0.5 } else { 0.0 };
                    y[j] += x[i] * lazy;
                }
            }
            let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = y;
            if diff < 1e-16 {
                break;
            }
        }
        x
    }

    #[test]
    fn flip_flop_is_uniform() {
        let pi = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-14 && (pi[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_state_matches_power_iteration() {
        let p = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        let oracle = power_iteration(&p);
        assert!((oracle[0] - 3.0 / 7.0).abs() < 1e-12);
        let pi = stationary_distribution(&p).unwrap();
        for (a, b) in pi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((pi[1] - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_state() {
        assert_eq!(stationary_distribution(&[vec![1.0]]).unwrap(), vec![1.0]);
    }

    #[test]
    fn reducible_chain_names_unreachable_states() {
        let p = vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        match stationary_distribution(&p) {
            Err(Error::Reducible { from: 0, unreachable }) => assert_eq!(unreachable, vec![2]),
            other => panic!("unexpected {other:?}"),
        }
        // State 1 is transient: reachable from 0 but cannot return.
        let p = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        match stationary_distribution(&p) {
            Err(Error::Reducible { from: 0, unreachable }) => assert_eq!(unreachable, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
        let p = vec![vec![0.5, 0.5], vec![0.0, 1.0]];
        match stationary_distribution(&p) {
            Err(Error::Reducible { from: 1, unreachable }) => assert_eq!(unreachable, vec![0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(matches!(
            ModulationChain::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]),
            Err(Error::InvalidChain(_))
        ));
        assert!(matches!(
            ModulationChain::new(vec![vec![1.2, -0.2], vec![0.5, 0.5]]),
            Err(Error::InvalidChain(_))
        ));
    }

    #[test]
    fn three_state_fixed_point() {
        let chain = ModulationChain::new(vec![
            vec![0.1, 0.6, 0.3],
            vec![0.4, 0.4, 0.2],
            vec![0.7, 0.0, 0.3],
        ])
        .unwrap();
        assert!(chain.fixed_point_residual() < 1e-12);
        let oracle = power_iteration(chain.transition());
        for (a, b) in chain.stationary().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
