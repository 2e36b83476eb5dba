//! Right half-plane zeros of `det G`, the `2N²` unknown transform values and
//! the solved evaluator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{build_g, check_stability_model2, Model2Spec};
use crate::error::{Error, Result};
use crate::model1::solve::solve_equilibrated;
use crate::polyalg::{determinant, find_zeros_right_halfplane, max_abs, null_vector_right, solve_dense, CVector};
use crate::probcore::Lst;

/// Largest acceptable condition number of the unknown system.
pub const MAX_CONDITION: f64 = 1e10;
/// Rates closer than this (relative) count as coinciding.
pub const COLLISION_TOL: f64 = 1e-9;
/// Relative perturbation applied to a coinciding rate.
pub const COLLISION_SHIFT: f64 = 1e-7;
/// Minimum distance between two zeros of `det G`.
pub const MIN_ROOT_SEPARATION: f64 = 1e-6;
/// Acceptance threshold for `‖Φᵀ G − ṽ‖∞` on the verification grid.
pub const FUN_TOLERANCE: f64 = 1e-8;
/// Points used for limit values at removable singularities.
const LIMIT_POINTS: usize = 16;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Which system determined the unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model2Path {
    /// `p ∈ (0, 1)`: `N` zeros, `N²` equations at `μ_l`, `N(N−1)` at `λ_k`.
    General,
    /// `p = 1`: a Markov-modulated Lindley recursion; `s = 0` is a zero of
    /// `det G` and a normalization equation replaces it.
    PureLindley,
    /// `p = 0`: the alternating recursion `W' = [D − C − W]^+`, solved from
    /// the values at `μ_l` alone.
    Alternating,
}

/// Diagnostics attached to a solved instance.
#[derive(Debug, Clone, Serialize)]
pub struct Model2Diagnostics {
    pub condition: f64,
    pub system_residual: f64,
    /// Largest imaginary part of the complex solve, before taking real parts.
    pub max_imaginary: f64,
    /// `max_i |ṽ(s_i) ã_i|`.
    pub null_orthogonality: f64,
    /// `max |Φ_i(λ_j) − X_{i,λj}|` and likewise at `μ_j`, evaluator versus
    /// stored unknowns.
    pub consistency: f64,
    /// `max ‖Φᵀ(s) G(s) − ṽ(s)‖∞` over the verification grid.
    pub fun_residual: f64,
    pub normalization_error: f64,
    /// Whether every unknown lies in `(0, π_i + 1e-8]`.
    pub unknowns_in_range: bool,
}

/// Solved Model II instance.
#[derive(Debug, Clone)]
pub struct Model2Solution {
    /// The instance actually solved, after any rate perturbation.
    pub spec: Model2Spec,
    pub path: Model2Path,
    /// `Φ_{W,i}(λ_j)`, indexed `[i][j]`.
    pub phi_lambda: Vec<Vec<f64>>,
    /// `Φ_{W,i}(μ_j)`, indexed `[i][j]`.
    pub phi_mu: Vec<Vec<f64>>,
    /// `v_j^{(1)} = p Σ_i p_ij β*_i(λ_j) Φ_{W,i}(λ_j)`.
    pub v1: Vec<f64>,
    /// `v_j^{(−1)} = q (π_j − Σ_i p_ij c*_i(μ_j) Φ_{W,i}(μ_j))`.
    pub v_minus1: Vec<f64>,
    /// `k_{j,1} = q π_j μ_j + μ_j v_j^{(1)} − λ_j v_j^{(−1)}`.
    pub k1: Vec<f64>,
    /// `k_{j,2} = v_j^{(1)} + v_j^{(−1)}`.
    pub k2: Vec<f64>,
    /// Zeros of `det G` in `Re(s) > 0` and their right null vectors.
    pub roots: Vec<Complex64>,
    pub null_vectors: Vec<CVector>,
    pub warnings: Vec<String>,
    pub diagnostics: Model2Diagnostics,
}

/// An affine expression `k + Σ a_u x_u` in the unknowns.
#[derive(Debug, Clone)]
struct Lin {
    k: Complex64,
    a: Vec<Complex64>,
}

impl Lin {
    fn zero(u: usize) -> Self {
        Self { k: c(0.0), a: vec![c(0.0); u] }
    }

    fn axpy(&mut self, w: Complex64, other: &Lin) {
        self.k += w * other.k;
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += w * y;
        }
    }
}

/// Moves coinciding rates apart by a relative [`COLLISION_SHIFT`] and
/// returns one warning per move.
pub fn separate_rates(spec: &Model2Spec) -> (Model2Spec, Vec<String>) {
    let mut out = spec.clone();
    let mut warnings = Vec::new();
    let n = spec.states();
    let close = |x: f64, y: f64| (x - y).abs() <= COLLISION_TOL * x.abs().max(y.abs());
    let (use_lambda, use_mu) = match path_for(spec.p) {
        Model2Path::General => (true, true),
        Model2Path::PureLindley => (true, false),
        Model2Path::Alternating => (false, false),
    };
    for _ in 0..(4 * n * n + 4) {
        let mut moved = false;
        'scan: for j in 0..n {
            for k in 0..n {
                if use_lambda && k > j && close(out.lambda[j], out.lambda[k]) {
                    let old = out.lambda[k];
                    out.lambda[k] *= 1.0 + COLLISION_SHIFT;
                    warnings.push(format!("lambda[{k}] = {old} coincides with lambda[{j}]; moved to {}", out.lambda[k]));
                    moved = true;
                    break 'scan;
                }
                if use_mu && k > j && close(out.mu[j], out.mu[k]) {
                    let old = out.mu[k];
                    out.mu[k] *= 1.0 + COLLISION_SHIFT;
                    warnings.push(format!("mu[{k}] = {old} coincides with mu[{j}]; moved to {}", out.mu[k]));
                    moved = true;
                    break 'scan;
                }
                if use_lambda && use_mu && close(out.lambda[j], out.mu[k]) {
                    let old = out.mu[k];
                    out.mu[k] *= 1.0 + COLLISION_SHIFT;
                    warnings.push(format!("mu[{k}] = {old} coincides with lambda[{j}]; moved to {}", out.mu[k]));
                    moved = true;
                    break 'scan;
                }
            }
        }
        if !moved {
            break;
        }
    }
    (out, warnings)
}

fn path_for(p: f64) -> Model2Path {
    if p >= 1.0 {
        Model2Path::PureLindley
    } else if p <= 0.0 {
        Model2Path::Alternating
    } else {
        Model2Path::General
    }
}

/// Half-width of the zero-search rectangle.
pub fn search_bound(spec: &Model2Spec) -> f64 {
    10.0 * spec.lambda.iter().copied().fold(1.0, f64::max) + 10.0
}

/// `det G(s)`, divided by `s` when `p = 1` to remove the zero at the origin.
pub(crate) fn root_function(spec: &Model2Spec) -> impl Fn(Complex64) -> Complex64 + '_ {
    let divide = path_for(spec.p) == Model2Path::PureLindley;
    move |s| match build_g(spec, s) {
        Ok(g) => {
            let d = determinant(&g);
            if divide {
                d / s
            } else {
                d
            }
        }
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

/// The zeros of `det G` in `Re(s) > 0`: exactly `N` for `p ∈ (0, 1)` and
/// `N − 1` besides the origin for `p = 1`.
pub fn find_si_roots(spec: &Model2Spec) -> Result<(Vec<Complex64>, Vec<CVector>)> {
    let expected = match path_for(spec.p) {
        Model2Path::General => spec.states(),
        Model2Path::PureLindley => spec.states() - 1,
        Model2Path::Alternating => return Ok((Vec::new(), Vec::new())),
    };
    let f = root_function(spec);
    let zeros = find_zeros_right_halfplane(&f, expected, search_bound(spec))?;
    let sep = zeros.min_separation();
    if zeros.len() > 1 && sep <= MIN_ROOT_SEPARATION {
        return Err(Error::Refinement {
            near: zeros.zeros[0],
            reason: format!("zeros of det G are not distinct (separation {sep:.3e})"),
        });
    }
    let mut vectors = Vec::with_capacity(zeros.len());
    for &s in &zeros.zeros {
        vectors.push(null_vector_right(&build_g(spec, s)?)?);
    }
    Ok((zeros.zeros, vectors))
}

struct Assembly<'a> {
    spec: &'a Model2Spec,
    n: usize,
    u: usize,
    with_mu: bool,
}

impl<'a> Assembly<'a> {
    fn lam(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    fn mu(&self, i: usize, j: usize) -> usize {
        self.n * self.n + i * self.n + j
    }

    fn beta(&self, i: usize, s: f64) -> Result<Complex64> {
        self.spec.beta[i].eval(c(s))
    }

    /// `v_j^{(1)}` and `v_j^{(−1)}` as affine expressions.
    fn v_parts(&self) -> Result<(Vec<Lin>, Vec<Lin>)> {
        let (n, p, q) = (self.n, self.spec.p, self.spec.q());
        let mut v1 = vec![Lin::zero(self.u); n];
        let mut vm = vec![Lin::zero(self.u); n];
        for j in 0..n {
            let lj = self.spec.lambda[j];
            for i in 0..n {
                v1[j].a[self.lam(i, j)] = c(p * self.spec.chain.p(i, j)) * self.beta(i, lj)?;
            }
            if self.with_mu {
                let mj = self.spec.mu[j];
                vm[j].k = c(q * self.spec.chain.pi(j));
                for i in 0..n {
                    vm[j].a[self.mu(i, j)] = -c(q * self.spec.chain.p(i, j)) * self.spec.c_star[i].eval(c(mj))?;
                }
            }
        }
        Ok((v1, vm))
    }

    /// `ṽ_j(s) = s v_j^{(1)} + (s − λ_j)(s v_j^{(−1)} + q π_j μ_j)/(μ_j + s)`.
    fn v_tilde(&self, v1: &[Lin], vm: &[Lin], s: Complex64) -> Vec<Lin> {
        let q = self.spec.q();
        (0..self.n)
            .map(|j| {
                let (lj, mj) = (self.spec.lambda[j], self.spec.mu[j]);
                let mut out = Lin::zero(self.u);
                out.axpy(s, &v1[j]);
                if self.with_mu {
                    let w = (s - lj) / (s + mj);
                    out.axpy(w * s, &vm[j]);
                    out.k += w * q * self.spec.chain.pi(j) * mj;
                }
                out
            })
            .collect()
    }

    /// Column `j` of `Φᵀ(s) G(s) − ṽ(s)` with `Φ_i(s) = x_{index(i)}`.
    fn fun_row(&self, s: f64, j: usize, index: impl Fn(usize) -> usize, vt: &[Lin]) -> Result<Lin> {
        let g = build_g(self.spec, c(s))?;
        let mut row = Lin::zero(self.u);
        for i in 0..self.n {
            row.a[index(i)] += g[(i, j)];
        }
        row.axpy(c(-1.0), &vt[j]);
        Ok(row)
    }
}

/// Zeros of `det G` in `Re(s) > 0`. A zero that lands on an evaluation point
/// `λ_k` (or `μ_l`) duplicates an equation, so that rate is moved by a
/// relative [`COLLISION_SHIFT`] with a warning and the zeros are recomputed.
fn roots_clear_of_rates(
    mut spec: Model2Spec,
    path: Model2Path,
    warnings: &mut Vec<String>,
) -> Result<(Model2Spec, Vec<Complex64>, Vec<CVector>)> {
    let n = spec.states();
    for _ in 0..(2 * n + 2) {
        let (roots, null_vectors) = find_si_roots(&spec)?;
        let close = |z: Complex64, x: f64| (z - x).norm() <= COLLISION_TOL * (1.0 + x.abs());
        let hit_lambda = (0..n).find(|&k| roots.iter().any(|z| close(*z, spec.lambda[k])));
        let hit_mu = (path == Model2Path::General)
            .then(|| (0..n).find(|&l| roots.iter().any(|z| close(*z, spec.mu[l]))))
            .flatten();
        match (hit_lambda, hit_mu) {
            (None, None) => return Ok((spec, roots, null_vectors)),
            (Some(k), _) => {
                let old = spec.lambda[k];
                spec.lambda[k] *= 1.0 + COLLISION_SHIFT;
                warnings.push(format!("a zero of det G coincides with lambda[{k}] = {old}; moved to {}", spec.lambda[k]));
            }
            (None, Some(l)) => {
                let old = spec.mu[l];
                spec.mu[l] *= 1.0 + COLLISION_SHIFT;
                warnings.push(format!("a zero of det G coincides with mu[{l}] = {old}; moved to {}", spec.mu[l]));
            }
        }
    }
    Err(Error::InvalidSpec("zeros of det G keep coinciding with the rates after perturbation".into()))
}

/// Solves for the unknown transform values and builds the evaluator.
pub fn assemble_unknowns(spec: &Model2Spec) -> Result<Model2Solution> {
    let stability = check_stability_model2(spec);
    if !stability.stable {
        return Err(Error::Unstable(stability.reason));
    }
    let (spec, mut warnings) = separate_rates(spec);
    let path = path_for(spec.p);
    if path == Model2Path::Alternating {
        return solve_alternating(spec, warnings);
    }
    let (spec, roots, null_vectors) = roots_clear_of_rates(spec, path, &mut warnings)?;
    let n = spec.states();
    let with_mu = path == Model2Path::General;
    let asm = Assembly {
        spec: &spec,
        n,
        u: if with_mu { 2 * n * n } else { n * n },
        with_mu,
    };
    let (v1, vm) = asm.v_parts()?;
    let mut rows: Vec<Lin> = Vec::with_capacity(asm.u);

    for (s, a) in roots.iter().zip(&null_vectors) {
        let vt = asm.v_tilde(&v1, &vm, *s);
        let mut row = Lin::zero(asm.u);
        for j in 0..n {
            row.axpy(a[j], &vt[j]);
        }
        rows.push(row);
    }
    if path == Model2Path::PureLindley {
        // d/ds of Φᵀ G = s v⁽¹⁾ at 0, multiplied by Λ⁻¹1.
        let mut row = Lin::zero(asm.u);
        for j in 0..n {
            row.axpy(c(1.0 / spec.lambda[j]), &v1[j]);
        }
        row.k -= (0..n)
            .map(|i| spec.chain.pi(i) * (1.0 / spec.lambda[i] - spec.beta[i].mean()))
            .sum::<f64>();
        rows.push(row);
    }
    if with_mu {
        for l in 0..n {
            let s = spec.mu[l];
            let vt = asm.v_tilde(&v1, &vm, c(s));
            for j in 0..n {
                rows.push(asm.fun_row(s, j, |i| asm.mu(i, l), &vt)?);
            }
        }
    }
    for k in 0..n {
        let s = spec.lambda[k];
        let vt = asm.v_tilde(&v1, &vm, c(s));
        for j in (0..n).filter(|&j| j != k) {
            rows.push(asm.fun_row(s, j, |i| asm.lam(i, k), &vt)?);
        }
    }
    debug_assert_eq!(rows.len(), asm.u);

    let constants: Vec<Complex64> = rows.iter().map(|r| r.k).collect();
    let coeffs: Vec<Vec<Complex64>> = rows.iter().map(|r| r.a.clone()).collect();
    let sol = solve_equilibrated(&coeffs, &constants)?;
    if !(sol.condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition: sol.condition });
    }
    let x: Vec<f64> = sol.x.iter().map(|z| z.re).collect();
    let max_imaginary = sol.x.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let mut phi_lambda = vec![vec![0.0; n]; n];
    let mut phi_mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            phi_lambda[i][j] = x[asm.lam(i, j)];
            if with_mu {
                phi_mu[i][j] = x[asm.mu(i, j)];
            }
        }
    }
    let real = |l: &Lin| (l.k + l.a.iter().zip(&x).map(|(a, xv)| a * xv).sum::<Complex64>()).re;
    let v1r: Vec<f64> = v1.iter().map(real).collect();
    let vmr: Vec<f64> = vm.iter().map(real).collect();
    let mut solution = build_solution(spec, path, phi_lambda, phi_mu, v1r, vmr, roots, null_vectors);
    solution.diagnostics.condition = sol.condition;
    solution.diagnostics.system_residual = sol.residual;
    solution.diagnostics.max_imaginary = max_imaginary;
    if path == Model2Path::PureLindley {
        // Fill the values at μ_j from the evaluator for reporting.
        for j in 0..n {
            let phi = evaluate_phi2(&solution, c(solution.spec.mu[j]))?;
            for i in 0..n {
                solution.phi_mu[i][j] = phi[i].re;
            }
        }
    }
    verify(&mut solution, &mut warnings)?;
    solution.warnings = warnings;
    Ok(solution)
}

#[allow(clippy::too_many_arguments)]
fn build_solution(
    spec: Model2Spec,
    path: Model2Path,
    phi_lambda: Vec<Vec<f64>>,
    phi_mu: Vec<Vec<f64>>,
    v1: Vec<f64>,
    v_minus1: Vec<f64>,
    roots: Vec<Complex64>,
    null_vectors: Vec<CVector>,
) -> Model2Solution {
    let n = spec.states();
    let q = spec.q();
    let k1 = (0..n)
        .map(|j| q * spec.chain.pi(j) * spec.mu[j] + spec.mu[j] * v1[j] - spec.lambda[j] * v_minus1[j])
        .collect();
    let k2 = (0..n).map(|j| v1[j] + v_minus1[j]).collect();
    Model2Solution {
        spec,
        path,
        phi_lambda,
        phi_mu,
        v1,
        v_minus1,
        k1,
        k2,
        roots,
        null_vectors,
        warnings: Vec::new(),
        diagnostics: Model2Diagnostics {
            condition: 1.0,
            system_residual: 0.0,
            max_imaginary: 0.0,
            null_orthogonality: 0.0,
            consistency: 0.0,
            fun_residual: 0.0,
            normalization_error: 0.0,
            unknowns_in_range: true,
        },
    }
}

/// `p = 0`: `Φ_j(s) = π_j − s/(μ_j + s) Σ_i p_ij c*_i(μ_j) Φ_i(μ_j)`, closed
/// by evaluating at every `μ_l`.
fn solve_alternating(spec: Model2Spec, mut warnings: Vec<String>) -> Result<Model2Solution> {
    let n = spec.states();
    let u = n * n;
    let idx = |j: usize, l: usize| j * n + l;
    let mut rows = vec![vec![c(0.0); u]; u];
    let mut constants = vec![c(0.0); u];
    for j in 0..n {
        let mj = spec.mu[j];
        for l in 0..n {
            let ml = spec.mu[l];
            let r = idx(j, l);
            rows[r][r] += 1.0;
            for i in 0..n {
                let w = ml / (mj + ml) * spec.chain.p(i, j) * spec.c_star[i].eval(c(mj))?.re;
                rows[r][idx(i, j)] += w;
            }
            constants[r] = c(-spec.chain.pi(j));
        }
    }
    let sol = solve_equilibrated(&rows, &constants)?;
    if !(sol.condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition: sol.condition });
    }
    let phi_mu: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|l| sol.x[idx(j, l)].re).collect()).collect();
    let v_minus1: Vec<f64> = (0..n)
        .map(|j| {
            let y: f64 = (0..n)
                .map(|i| spec.chain.p(i, j) * spec.c_star[i].value(c(spec.mu[j])).re * phi_mu[i][j])
                .sum();
            spec.chain.pi(j) - y
        })
        .collect();
    let mut solution = build_solution(
        spec,
        Model2Path::Alternating,
        vec![vec![0.0; n]; n],
        phi_mu,
        vec![0.0; n],
        v_minus1,
        Vec::new(),
        Vec::new(),
    );
    solution.diagnostics.condition = sol.condition;
    solution.diagnostics.system_residual = sol.residual;
    for j in 0..n {
        let phi = evaluate_phi2(&solution, c(solution.spec.lambda[j]))?;
        for i in 0..n {
            solution.phi_lambda[i][j] = phi[i].re;
        }
    }
    verify(&mut solution, &mut warnings)?;
    solution.warnings = warnings;
    Ok(solution)
}

impl Model2Solution {
    pub fn states(&self) -> usize {
        self.spec.states()
    }

    /// A copy with every solved unknown multiplied by `factor`. Used as a
    /// negative control: the result no longer satisfies the equations.
    pub fn with_scaled_unknowns(&self, factor: f64) -> Self {
        let mut out = self.clone();
        let scale = |rows: &mut Vec<Vec<f64>>| rows.iter_mut().flatten().for_each(|x| *x *= factor);
        scale(&mut out.phi_lambda);
        scale(&mut out.phi_mu);
        let spec = &out.spec;
        for j in 0..spec.states() {
            out.v1[j] *= factor;
            out.v_minus1[j] *= factor;
            let (l, m) = (spec.lambda[j], spec.mu[j]);
            out.k1[j] = spec.q() * spec.chain.pi(j) * m + m * out.v1[j] - l * out.v_minus1[j];
            out.k2[j] = out.v1[j] + out.v_minus1[j];
        }
        out
    }

    /// `ṽ(s)` from the solved constants.
    pub fn v_tilde(&self, s: Complex64) -> Result<CVector> {
        let spec = &self.spec;
        let q = spec.q();
        let n = spec.states();
        if q > 0.0 {
            if let Some(&m) = spec.mu.iter().find(|m| (s + **m).norm() <= 1e-12 * (1.0 + **m)) {
                return Err(Error::Pole { root: c(-m) });
            }
        }
        Ok(CVector::from_fn(n, |j, _| {
            let (lj, mj) = (spec.lambda[j], spec.mu[j]);
            let mut v = s * self.v1[j];
            if q > 0.0 {
                v += (s - lj) / (s + mj) * (s * self.v_minus1[j] + q * spec.chain.pi(j) * mj);
            }
            v
        }))
    }

    /// Points where `det G` vanishes but `Φ` stays analytic.
    fn removable(&self) -> Vec<Complex64> {
        let mut out = self.roots.clone();
        if self.path == Model2Path::PureLindley {
            out.push(c(0.0));
        }
        out
    }

    fn phi_direct(&self, s: Complex64) -> Result<CVector> {
        if self.path == Model2Path::Alternating {
            let spec = &self.spec;
            let n = spec.states();
            return Ok(CVector::from_fn(n, |j, _| {
                let y = spec.chain.pi(j) - self.v_minus1[j];
                c(spec.chain.pi(j)) - s / (s + spec.mu[j]) * y
            }));
        }
        let g = build_g(&self.spec, s)?;
        let v = self.v_tilde(s)?;
        Ok(solve_dense(&g.transpose(), &v)?.x)
    }
}

/// `Φ_W(s)` from `Φᵀ(s) G(s) = ṽ(s)`; next to a zero of `det G` the value is
/// the average over a surrounding circle.
pub fn evaluate_phi2(solution: &Model2Solution, s: Complex64) -> Result<CVector> {
    for z in solution.removable() {
        let scale = 1.0 + z.norm();
        if (s - z).norm() < 5e-4 * scale {
            let radius = 1e-3 * scale;
            let mut acc = CVector::zeros(solution.states());
            for k in 0..LIMIT_POINTS {
                let w = Complex64::from_polar(radius, 2.0 * PI * k as f64 / LIMIT_POINTS as f64);
                acc += solution.phi_direct(s + w)?;
            }
            return Ok(acc / c(LIMIT_POINTS as f64));
        }
    }
    solution.phi_direct(s)
}

/// `max ‖Φᵀ(s) G(s) − ṽ(s)‖∞` over a 20-point grid with `Re(s) > 0`.
pub fn fun_residual(solution: &Model2Solution) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let re = 0.05 + (5.0 - 0.05) * k as f64 / 3.0;
        for im in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let s = Complex64::new(re, im);
            let phi = evaluate_phi2(solution, s)?;
            let g = build_g(&solution.spec, s)?;
            let lhs = g.transpose() * phi;
            let v = solution.v_tilde(s)?;
            worst = worst.max(max_abs((lhs - v).iter().copied()));
        }
    }
    Ok(worst)
}

fn verify(solution: &mut Model2Solution, warnings: &mut Vec<String>) -> Result<()> {
    let n = solution.states();
    let spec = solution.spec.clone();
    let mut orth: f64 = 0.0;
    for (s, a) in solution.roots.iter().zip(&solution.null_vectors) {
        let v = solution.v_tilde(*s)?;
        orth = orth.max(v.iter().zip(a.iter()).map(|(x, y)| x * y).sum::<Complex64>().norm());
    }
    let mut consistency: f64 = 0.0;
    let mut in_range = true;
    for j in 0..n {
        let at_lambda = evaluate_phi2(solution, c(spec.lambda[j]))?;
        let at_mu = evaluate_phi2(solution, c(spec.mu[j]))?;
        for i in 0..n {
            let (xl, xm) = (solution.phi_lambda[i][j], solution.phi_mu[i][j]);
            consistency = consistency.max((at_lambda[i].re - xl).abs()).max((at_mu[i].re - xm).abs());
            let top = spec.chain.pi(i) + 1e-8;
            in_range &= xl > 0.0 && xl <= top && xm > 0.0 && xm <= top;
        }
    }
    let phi0 = evaluate_phi2(solution, c(0.0))?;
    let normalization = (0..n).map(|i| (phi0[i].re - spec.chain.pi(i)).abs()).fold(0.0, f64::max);
    let residual = fun_residual(solution)?;
    let d = &mut solution.diagnostics;
    d.null_orthogonality = orth;
    d.consistency = consistency;
    d.unknowns_in_range = in_range;
    d.normalization_error = normalization;
    d.fun_residual = residual;
    if !in_range {
        warnings.push("some unknown transform values lie outside (0, pi_i]; the instance may be near instability".into());
    }
    if d.max_imaginary > 1e-6 {
        warnings.push(format!("complex solve left imaginary parts up to {:.3e}", d.max_imaginary));
    }
    if !(residual < FUN_TOLERANCE) {
        return Err(Error::Residual {
            what: "transform equation residual on the verification grid".into(),
            value: residual,
            tolerance: FUN_TOLERANCE,
        });
    }
    Ok(())
}
