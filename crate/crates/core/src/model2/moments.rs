//! Steady-state moments and the exponential decay profile.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::build_g;
use super::solve::{evaluate_phi2, root_function, search_bound, Model2Path, Model2Solution};
use crate::error::{Error, Result};
use crate::polyalg::{adjugate, determinant, find_zeros_in_rect, solve_dense, CMatrix, CVector};

/// Slack in the Jensen check `m̃₂·1 ≥ (m̃₁·1)² / (m̃₀·1)`.
pub const JENSEN_SLACK: f64 = 1e-9;
/// Offset of the decay search from the edge of the analyticity region.
pub const REGION_MARGIN: f64 = 1e-6;
/// Points on the circle for Taylor coefficients at the origin.
const TAYLOR_POINTS: usize = 64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `m̃_r = (E[W^r 1{Z = i}])_i` for `r = 0..=r_max`, rejected when a
/// moment is negative or the Jensen bound fails.
pub fn moments(solution: &Model2Solution, r_max: usize) -> Result<Vec<Vec<f64>>> {
    let out = unchecked_moments(solution, r_max)?;
    check_moments(&out)?;
    Ok(out)
}

/// The same moments without the sign and Jensen checks. See `check_moments`.
pub fn unchecked_moments(solution: &Model2Solution, r_max: usize) -> Result<Vec<Vec<f64>>> {
    Ok(match solution.path {
        Model2Path::General => recursion(solution, r_max)?,
        Model2Path::Alternating => alternating(solution, r_max),
        Model2Path::PureLindley => taylor_at_origin(solution, r_max)?,
    })
}

/// Coefficients of `Φᵀ(s) G(s)(M + sI) = −qπᵀΛM + s k̃₁ + s² k̃₂` matched
/// power by power with `Φ(s) = Σ_n (−1)^n m̃_n s^n / n!`.
fn recursion(solution: &Model2Solution, r_max: usize) -> Result<Vec<Vec<f64>>> {
    let spec = &solution.spec;
    let n = spec.states();
    let p = spec.p;
    let lambda = CMatrix::from_fn(n, n, |i, j| if i == j { c(spec.lambda[i]) } else { c(0.0) });
    let m = CMatrix::from_fn(n, n, |i, j| if i == j { c(spec.mu[i]) } else { c(0.0) });
    let p_lambda = CMatrix::from_fn(n, n, |i, j| c(spec.chain.p(i, j))) * &lambda;
    // b_{k,i} = (−1)^k γ_{k,i} / k!, the Taylor coefficients of β*_i.
    let mut b = vec![vec![0.0; n]; r_max + 1];
    for (k, row) in b.iter_mut().enumerate() {
        for (i, x) in row.iter_mut().enumerate() {
            let gamma = spec.beta[i].moment(k).ok_or(Error::MissingMoment { order: k, state: i })?;
            *x = (-1.0f64).powi(k as i32) * gamma / factorial(k);
        }
    }
    let g_coeff = |k: usize| -> CMatrix {
        let diag = CMatrix::from_fn(n, n, |i, j| if i == j { c(p * b[k][i]) } else { c(0.0) });
        let mut g = diag * &p_lambda;
        if k == 0 {
            g -= &lambda;
        } else if k == 1 {
            g += CMatrix::identity(n, n);
        }
        g
    };
    let a_coeff = |k: usize| -> CMatrix {
        let mut a = g_coeff(k) * &m;
        if k >= 1 {
            a += g_coeff(k - 1);
        }
        a
    };
    let a: Vec<CMatrix> = (0..=r_max).map(a_coeff).collect();
    let a0t = a[0].transpose();
    let rhs = |k: usize| -> CVector {
        CVector::from_fn(n, |j, _| match k {
            0 => c(-spec.q() * spec.chain.pi(j) * spec.lambda[j] * spec.mu[j]),
            1 => c(solution.k1[j]),
            2 => c(solution.k2[j]),
            _ => c(0.0),
        })
    };
    let mut phi: Vec<CVector> = Vec::with_capacity(r_max + 1);
    for k in 0..=r_max {
        let mut r = rhs(k);
        for (jdx, prev) in phi.iter().enumerate() {
            r -= a[k - jdx].transpose() * prev;
        }
        phi.push(solve_dense(&a0t, &r)?.x);
    }
    Ok(phi
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let scale = (-1.0f64).powi(k as i32) * factorial(k);
            v.iter().map(|z| scale * z.re).collect()
        })
        .collect())
}

/// `p = 0`: `Φ_j(s) = π_j − Y_j s/(μ_j + s)`, so `m̃_{r,j} = r! Y_j / μ_j^r`.
fn alternating(solution: &Model2Solution, r_max: usize) -> Vec<Vec<f64>> {
    let spec = &solution.spec;
    let n = spec.states();
    (0..=r_max)
        .map(|r| {
            (0..n)
                .map(|j| {
                    if r == 0 {
                        spec.chain.pi(j)
                    } else {
                        let y = spec.chain.pi(j) - solution.v_minus1[j];
                        factorial(r) * y / spec.mu[j].powi(r as i32)
                    }
                })
                .collect()
        })
        .collect()
}

/// Zeros of `det G` (divided by `s` when `p = 1`) with `−ζ' < Re(s) < 0`,
/// where `ζ'` keeps clear of the poles of `β*` and of `ṽ`.
fn left_zeros(solution: &Model2Solution) -> Result<(Vec<Complex64>, f64)> {
    let spec = &solution.spec;
    let mut zeta = spec
        .beta
        .iter()
        .map(|b| b.analyticity_margin())
        .fold(f64::INFINITY, f64::min);
    if spec.q() > 0.0 {
        zeta = zeta.min(spec.mu.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let zeta = zeta - REGION_MARGIN;
    if !(zeta > 0.0) {
        return Err(Error::NoDecayRate { zeta: zeta.max(0.0) });
    }
    let f = root_function(spec);
    let bound = search_bound(spec).max(zeta);
    let zeros = find_zeros_in_rect(&f, (-zeta, -1e-9), (-bound, bound), None)?;
    Ok((zeros.zeros, zeta))
}

/// `p = 1`: Taylor coefficients of `Φ` at 0 by the trapezoid rule on a circle
/// inside the disc of analyticity.
fn taylor_at_origin(solution: &Model2Solution, r_max: usize) -> Result<Vec<Vec<f64>>> {
    let n = solution.states();
    let (left, zeta) = left_zeros(solution)?;
    let nearest = left
        .iter()
        .chain(&solution.roots)
        .map(|z| z.norm())
        .fold(zeta, f64::min);
    let radius = 0.4 * nearest;
    let mut coeffs = vec![vec![c(0.0); n]; r_max + 1];
    for k in 0..TAYLOR_POINTS {
        let w = Complex64::from_polar(radius, 2.0 * PI * k as f64 / TAYLOR_POINTS as f64);
        let phi = evaluate_phi2(solution, w)?;
        for (r, row) in coeffs.iter_mut().enumerate() {
            let weight = w.powi(-(r as i32)) / TAYLOR_POINTS as f64;
            for i in 0..n {
                row[i] += phi[i] * weight;
            }
        }
    }
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let scale = (-1.0f64).powi(r as i32) * factorial(r);
            row.iter().map(|z| scale * z.re).collect()
        })
        .collect())
}

/// Every moment finite and nonnegative, and `m2 ≥ m1² / m0` in total.
pub fn check_moments(m: &[Vec<f64>]) -> Result<()> {
    for (r, row) in m.iter().enumerate() {
        let scale = row.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        for &x in row {
            if !x.is_finite() || x < -1e-9 * scale.max(1.0) {
                return Err(Error::Residual {
                    what: format!("moment of order {r} is negative or not finite"),
                    value: x,
                    tolerance: 0.0,
                });
            }
        }
    }
    if m.len() > 2 {
        let total = |r: usize| m[r].iter().sum::<f64>();
        let gap = (total(1) * total(1)) / total(0) - total(2);
        if gap > JENSEN_SLACK {
            return Err(Error::Residual {
                what: "Jensen bound m2 >= m1^2 / m0".into(),
                value: gap,
                tolerance: JENSEN_SLACK,
            });
        }
    }
    Ok(())
}

/// `−Φ'(0)` and `Φ''(0)` by central differences on the real axis.
pub fn numerical_moments(solution: &Model2Solution) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = solution.states();
    let h1 = 1e-5;
    let up = evaluate_phi2(solution, c(h1))?;
    let down = evaluate_phi2(solution, c(-h1))?;
    let m1 = (0..n).map(|i| -(up[i] - down[i]).re / (2.0 * h1)).collect();
    let h2 = 1e-3;
    let up = evaluate_phi2(solution, c(h2))?;
    let mid = evaluate_phi2(solution, c(0.0))?;
    let down = evaluate_phi2(solution, c(-h2))?;
    let m2 = (0..n).map(|i| (up[i] - mid[i] * 2.0 + down[i]).re / (h2 * h2)).collect();
    Ok((m1, m2))
}

/// Exponential decay `P(W ∈ dx, Z = j) ≈ C_j e^{−Rx} dx` for large `x`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub r: f64,
    /// `C̃ = ṽ(−R) Adj(G(−R)) / (d/ds det G)(−R)`; empty when the leading
    /// zero is not real.
    pub c: Vec<f64>,
    /// Every zero attaining the largest real part.
    pub maximizers: Vec<Complex64>,
    pub derivative: f64,
    /// Set when the leading zeros form a complex pair, so the decay is
    /// oscillatory and no single real constant describes it.
    pub caveat: Option<String>,
    /// Half-width `ζ'` of the searched strip.
    pub zeta: f64,
}

/// `R`: minus the zero of `det G` with the largest real part in `(−ζ', 0)`.
pub fn decay_profile(solution: &Model2Solution) -> Result<DecayProfile> {
    let (zeros, zeta) = left_zeros(solution)?;
    let top = zeros
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if zeros.is_empty() {
        return Err(Error::NoDecayRate { zeta });
    }
    let maximizers: Vec<Complex64> = zeros
        .iter()
        .copied()
        .filter(|z| (z.re - top).abs() <= 1e-9 * (1.0 + top.abs()))
        .collect();
    let r = -top;
    let real = maximizers.iter().find(|z| z.im.abs() <= 1e-9 * (1.0 + r));
    let Some(&lead) = real else {
        return Ok(DecayProfile {
            r,
            c: Vec::new(),
            maximizers,
            derivative: f64::NAN,
            caveat: Some("leading zeros form a complex pair: oscillatory decay".into()),
            zeta,
        });
    };
    let s = c(lead.re);
    let h = 1e-7 * r.max(1.0);
    let det = |x: Complex64| build_g(&solution.spec, x).map(|g| determinant(&g));
    let derivative = ((det(s + h)? - det(s - h)?) / (2.0 * h)).re;
    if !(derivative.abs() > 1e-8) {
        return Err(Error::NonSimplePole {
            point: s,
            derivative: derivative.abs(),
        });
    }
    let g = build_g(&solution.spec, s)?;
    let adj = adjugate(&g);
    let v = solution.v_tilde(s)?;
    let row = adj.transpose() * v;
    let caveat = (maximizers.len() > 1).then(|| "several zeros share the largest real part".to_string());
    Ok(DecayProfile {
        r,
        c: row.iter().map(|z| z.re / derivative).collect(),
        maximizers,
        derivative,
        caveat,
        zeta,
    })
}
