//! Root search, coefficient assembly and the solved Model I transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::series::{SeriesOperators, ASSEMBLY_TOL, EVALUATION_TOL};
use super::{check_stability_model1, Model1Spec};
use crate::error::{Error, Result};
use crate::polyalg::{
    find_zeros_right_halfplane, max_abs, null_vector_left, solve_dense, AffineVector, CMatrix, CVector, ZeroSet,
};

/// Acceptance threshold for the functional-equation residual on the grid.
pub const B0_TOLERANCE: f64 = 1e-6;
/// Points on the circle used for Taylor coefficients and limit values.
const CIRCLE_POINTS: usize = 24;
/// Relative distance below which two poles are treated as one repeated pole.
const ROOT_GROUPING: f64 = 1e-9;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A pole of `Q(s)` together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootGroup {
    pub center: Complex64,
    pub multiplicity: usize,
}

pub(crate) fn group_roots(roots: &[Complex64]) -> Vec<RootGroup> {
    let mut groups: Vec<RootGroup> = Vec::new();
    for &r in roots {
        match groups
            .iter_mut()
            .find(|g| (g.center - r).norm() <= ROOT_GROUPING * (1.0 + r.norm()))
        {
            Some(g) => g.multiplicity += 1,
            None => groups.push(RootGroup {
                center: r,
                multiplicity: 1,
            }),
        }
    }
    groups
}

/// Taylor coefficients `f^{(k)}(t)/k!`, `k < orders`, of an affine-valued
/// analytic function, by the trapezoid rule on a circle of radius `radius`.
pub(crate) fn taylor_forms(
    f: &dyn Fn(Complex64) -> Result<AffineVector>,
    center: Complex64,
    radius: f64,
    orders: usize,
) -> Result<Vec<AffineVector>> {
    if orders == 1 {
        return Ok(vec![f(center)?]);
    }
    let mut out: Vec<Option<AffineVector>> = vec![None; orders];
    for q in 0..CIRCLE_POINTS {
        let w = Complex64::from_polar(radius, 2.0 * PI * q as f64 / CIRCLE_POINTS as f64);
        let value = f(center + w)?;
        for (k, slot) in out.iter_mut().enumerate() {
            let weight = w.powi(-(k as i32)) / CIRCLE_POINTS as f64;
            let term = value.scale(weight);
            match slot {
                Some(acc) => *acc += &term,
                None => *slot = Some(term),
            }
        }
    }
    Ok(out.into_iter().map(|x| x.expect("at least one circle point")).collect())
}

/// Right half-plane zeros `δ` of `det(I − p1 F(s))`, exactly `Σ_j l_j` of
/// them, certified by the argument principle.
pub fn find_delta_roots(spec: &Model1Spec) -> Result<ZeroSet> {
    let ops = SeriesOperators::new(spec)?;
    delta_roots(&ops)
}

fn delta_roots(ops: &SeriesOperators) -> Result<ZeroSet> {
    let spec = ops.spec();
    let f = |s: Complex64| ops.root_function(s);
    find_zeros_right_halfplane(&f, spec.interarrival_degree(), spec.search_bound())
}

/// Diagnostics attached to a solved instance.
#[derive(Debug, Clone, Serialize)]
pub struct Model1Diagnostics {
    /// 2-norm condition number of the equilibrated coefficient system.
    pub condition: f64,
    /// `‖A c − b‖∞` of the coefficient system.
    pub system_residual: f64,
    /// Largest functional-equation residual over the verification grid.
    pub b0_residual: f64,
    /// `‖Φ_W(0) − π‖∞`.
    pub normalization_error: f64,
    /// Largest imaginary part among the solved coefficients.
    pub max_imaginary: f64,
    /// Largest `‖ζ (I − p1 F(δ))‖∞` over the `δ` roots.
    pub null_vector_residual: f64,
    pub equations: usize,
    pub service_poles: Vec<RootGroup>,
}

/// Solved Model I instance.
#[derive(Debug, Clone)]
pub struct Model1Solution {
    ops: SeriesOperators,
    /// Flat vector of `c_{ω,j}`, `ω ≥ 1`.
    pub unknowns: CVector,
    /// `c_{ω,j}` for `ω = 0..=l_j + Σ_k m_k`, per state.
    pub coefficients: Vec<Vec<Complex64>>,
    pub delta_roots: ZeroSet,
    pub truncation_tolerance: f64,
    pub diagnostics: Model1Diagnostics,
}

impl Model1Solution {
    pub fn spec(&self) -> &Model1Spec {
        self.ops.spec()
    }

    pub fn operators(&self) -> &SeriesOperators {
        &self.ops
    }

    /// `Φ_W(s)` at the evaluation tolerance.
    pub fn phi(&self, s: Complex64) -> Result<CVector> {
        self.phi_with_tol(s, self.truncation_tolerance)
    }

    /// `Φ_W(s)`; near a `δ` root (where the series has a removable
    /// singularity) the value is the average over a small circle.
    pub fn phi_with_tol(&self, s: Complex64, tol: f64) -> Result<CVector> {
        if !self.near_delta(s) {
            match self.ops.phi_affine(s, tol) {
                Ok((form, _)) => return Ok(form.evaluate(&self.unknowns)),
                Err(Error::SeriesSingular { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let radius = 1e-2 * (1.0 + s.norm());
        let mut acc = CVector::zeros(self.spec().states());
        for q in 0..CIRCLE_POINTS {
            let w = Complex64::from_polar(radius, 2.0 * PI * q as f64 / CIRCLE_POINTS as f64);
            let (form, _) = self.ops.phi_affine(s + w, tol)?;
            acc += form.evaluate(&self.unknowns);
        }
        Ok(acc / c(CIRCLE_POINTS as f64))
    }

    fn near_delta(&self, s: Complex64) -> bool {
        let zeros = &self.delta_roots.zeros;
        if zeros.is_empty() {
            return false;
        }
        let smallest = zeros.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let mut x = s;
        for _ in 0..10_000 {
            if zeros.iter().any(|d| (x - d).norm() < 1e-4 * (1.0 + d.norm())) {
                return true;
            }
            if x.norm() < 0.5 * smallest {
                return false;
            }
            x *= self.spec().a;
        }
        false
    }

    /// `‖(I − p1 F(s)) Φ(s) − p2 F(s) Φ(as) − ṽ(s)‖∞`.
    pub fn b0_residual(&self, s: Complex64, tol: f64) -> Result<f64> {
        let f = self.ops.f_matrix(s)?;
        let phi_s = self.phi_with_tol(s, tol)?;
        let phi_as = self.phi_with_tol(s * self.spec().a, tol)?;
        let v = self.ops.v_small(s).evaluate(&self.unknowns);
        let n = self.spec().states();
        let lhs = (CMatrix::identity(n, n) - &f * c(self.spec().p1)) * phi_s;
        let rhs = &f * c(self.spec().p2) * phi_as + v;
        Ok(max_abs((lhs - rhs).iter().copied()))
    }

    /// The same instance with every unknown multiplied by `factor`; a
    /// negative control for the oracle comparison.
    pub fn with_scaled_unknowns(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.unknowns *= c(factor);
        out.coefficients = coefficient_table(&out.ops, &out.unknowns);
        out
    }
}

fn coefficient_table(ops: &SeriesOperators, x: &CVector) -> Vec<Vec<Complex64>> {
    let layout = ops.layout();
    (0..layout.degrees.len())
        .map(|j| {
            let mut row = vec![ops.c0()[j]];
            row.extend((1..=layout.degrees[j]).map(|w| x[layout.index(j, w)]));
            row
        })
        .collect()
}

/// Points of the verification grid, moved by `1e-4` where they would land
/// within `1e-6` of a `δ` root or an interarrival pole.
pub fn verification_grid(spec: &Model1Spec, deltas: &[Complex64]) -> Vec<Complex64> {
    let mut hazards: Vec<Complex64> = deltas.to_vec();
    for l in &spec.interarrival {
        hazards.extend(l.denominator_roots().iter().map(|r| -r));
    }
    let mut grid = Vec::with_capacity(20);
    for k in 0..4 {
        let re = 0.1 + (5.0 - 0.1) * k as f64 / 3.0;
        for im in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let mut s = Complex64::new(re, im);
            for _ in 0..4 {
                let hits = |x: Complex64| hazards.iter().any(|h| (x - h).norm() < 1e-6);
                if hits(s) || hits(s * spec.a) {
                    s += 1e-4;
                } else {
                    break;
                }
            }
            grid.push(s);
        }
    }
    grid
}

/// `Φ_W(s)` as an affine form; when an iterate `a^m s` lands on a
/// singular point of the recursion the form is averaged over a small circle
/// around `s`, where it is analytic.
pub(crate) fn phi_affine_robust(ops: &SeriesOperators, s: Complex64, tol: f64) -> Result<AffineVector> {
    match ops.phi_affine(s, tol) {
        Ok((form, _)) => Ok(form),
        Err(Error::SeriesSingular { .. }) => {
            let radius = 1e-3 * (1.0 + s.norm());
            let mut acc = AffineVector::zeros(ops.spec().states(), ops.unknowns());
            for q in 0..CIRCLE_POINTS {
                let w = Complex64::from_polar(radius, 2.0 * PI * (q as f64 + 0.5) / CIRCLE_POINTS as f64);
                acc += &ops.phi_affine(s + w, tol)?.0;
            }
            Ok(acc.scale(c(1.0 / CIRCLE_POINTS as f64)))
        }
        Err(e) => Err(e),
    }
}

/// The affine vector `(Σ_ω c_{ω,j} s^ω)_j`.
fn polynomial_form(ops: &SeriesOperators, s: Complex64) -> AffineVector {
    let n = ops.spec().states();
    let mut out = AffineVector::zeros(n, ops.unknowns());
    for j in 0..n {
        let (k0, terms) = ops.polynomial(j, s);
        out.constant_mut()[j] = k0;
        for (idx, v) in terms {
            out.coefficients_mut()[(j, idx)] = v;
        }
    }
    out
}

/// Left side of the service-pole equation minus the polynomial:
/// `E_j(s) = p3 Σ_i p_ij N_{B,i}(s) N_{A,j}(−s) ∏_{ν≠i} D_{B,ν}(s)
/// Σ_y w_y Φ_i(s y) − Σ_ω c_{ω,j} s^ω`, which vanishes to the pole's order.
fn service_pole_form(ops: &SeriesOperators, s: Complex64) -> Result<AffineVector> {
    let spec = ops.spec();
    let n = spec.states();
    let mut psi = AffineVector::zeros(n, ops.unknowns());
    for &(y, w) in spec.v_negative.atoms() {
        let form = phi_affine_robust(ops, s * y, ASSEMBLY_TOL)?;
        psi += &form.scale(c(w));
    }
    let d_b: Vec<Complex64> = spec.service.iter().map(|l| l.denominator().eval(s)).collect();
    let t = CMatrix::from_fn(n, n, |j, i| {
        let others: Complex64 = (0..n).filter(|&v| v != i).map(|v| d_b[v]).product();
        c(spec.p3 * spec.chain.p(i, j))
            * spec.service[i].numerator().eval(s)
            * spec.interarrival[j].numerator().eval(-s)
            * others
    });
    Ok(&psi.premultiply(&t) - &polynomial_form(ops, s))
}

/// Builds and solves the square coefficient system: one equation per `δ`
/// root and, per state, one per service pole (Taylor orders for repeated
/// poles).
pub fn assemble_and_solve_coefficients(spec: &Model1Spec) -> Result<Model1Solution> {
    let stability = check_stability_model1(spec);
    if !stability.stable {
        return Err(Error::Unstable(stability.reason));
    }
    if !(spec.p1 + spec.p2 < 1.0) {
        return Err(Error::InvalidSpec("p1 + p2 must be below 1".into()));
    }
    let ops = SeriesOperators::new(spec)?;
    let deltas = delta_roots(&ops)?;
    let u = ops.unknowns();
    let n = spec.states();

    let mut constants: Vec<Complex64> = Vec::with_capacity(u);
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(u);
    let mut null_vector_residual: f64 = 0.0;
    let mut push = |form: &AffineVector, k: usize| {
        constants.push(form.constant()[k]);
        rows.push(form.coefficients().row(k).iter().copied().collect());
    };

    for &delta in &deltas.zeros {
        let (a, f_hat) = ops.scaled(delta);
        let zeta = null_vector_left(&a)?;
        null_vector_residual =
            null_vector_residual.max(max_abs((zeta.transpose() * &a).iter().copied()) / max_abs(a.iter().copied()).max(1.0));
        let phi_a = phi_affine_robust(&ops, delta * spec.a, ASSEMBLY_TOL)?;
        let form = &phi_a.premultiply(&(f_hat * c(spec.p2))) + &ops.w_hat(delta);
        let row = form.premultiply(&CMatrix::from_row_slice(1, n, zeta.as_slice()));
        push(&row, 0);
    }

    let mut roots = Vec::new();
    for l in &spec.service {
        roots.extend_from_slice(l.denominator_roots());
    }
    let groups = group_roots(&roots);
    for g in &groups {
        let radius = 0.25 * g.center.re.abs();
        let forms = taylor_forms(&|s| service_pole_form(&ops, s), g.center, radius, g.multiplicity)?;
        for j in 0..n {
            for form in &forms {
                push(form, j);
            }
        }
    }

    if rows.len() != u {
        return Err(Error::ZeroCountMismatch {
            found: rows.len(),
            expected: u,
        });
    }
    let x = solve_equilibrated(&rows, &constants)?;
    finish(ops, deltas, x, null_vector_residual, groups)
}

pub(crate) struct EquilibratedSolution {
    pub x: CVector,
    pub condition: f64,
    pub residual: f64,
}

/// Solves `Σ_k rows[i][k] x_k + constants[i] = 0` after scaling rows and
/// columns to unit max-norm.
pub(crate) fn solve_equilibrated(rows: &[Vec<Complex64>], constants: &[Complex64]) -> Result<EquilibratedSolution> {
    let u = constants.len();
    if u == 0 {
        return Ok(EquilibratedSolution {
            x: CVector::zeros(0),
            condition: 1.0,
            residual: 0.0,
        });
    }
    let a = CMatrix::from_fn(u, u, |i, k| rows[i][k]);
    let b = CVector::from_iterator(u, constants.iter().map(|z| -z));
    let row_scale: Vec<f64> = (0..u).map(|i| 1.0 / max_abs(a.row(i).iter().copied()).max(1e-300)).collect();
    let scaled_rows = CMatrix::from_fn(u, u, |i, k| a[(i, k)] * row_scale[i]);
    let col_scale: Vec<f64> = (0..u)
        .map(|k| 1.0 / max_abs(scaled_rows.column(k).iter().copied()).max(1e-300))
        .collect();
    let scaled = CMatrix::from_fn(u, u, |i, k| scaled_rows[(i, k)] * col_scale[k]);
    let scaled_b = CVector::from_fn(u, |i, _| b[i] * row_scale[i]);
    let sol = solve_dense(&scaled, &scaled_b)?;
    let x = CVector::from_fn(u, |k, _| sol.x[k] * col_scale[k]);
    let residual = max_abs((&a * &x - &b).iter().copied());
    Ok(EquilibratedSolution {
        x,
        condition: sol.condition,
        residual,
    })
}

fn finish(
    ops: SeriesOperators,
    deltas: ZeroSet,
    sol: EquilibratedSolution,
    null_vector_residual: f64,
    groups: Vec<RootGroup>,
) -> Result<Model1Solution> {
    let coefficients = coefficient_table(&ops, &sol.x);
    let max_imaginary = sol.x.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut solution = Model1Solution {
        unknowns: sol.x,
        coefficients,
        delta_roots: deltas,
        truncation_tolerance: EVALUATION_TOL,
        diagnostics: Model1Diagnostics {
            condition: sol.condition,
            system_residual: sol.residual,
            b0_residual: f64::NAN,
            normalization_error: f64::NAN,
            max_imaginary,
            null_vector_residual,
            equations: ops.unknowns(),
            service_poles: groups,
        },
        ops,
    };
    let spec = solution.spec().clone();
    let grid = verification_grid(&spec, &solution.delta_roots.zeros);
    let mut worst: f64 = 0.0;
    for &s in &grid {
        worst = worst.max(solution.b0_residual(s, ASSEMBLY_TOL)?);
    }
    solution.diagnostics.b0_residual = worst;
    if !(worst < B0_TOLERANCE) {
        return Err(Error::Residual {
            what: "functional-equation residual on the verification grid (likely a root miscount)".into(),
            value: worst,
            tolerance: B0_TOLERANCE,
        });
    }
    let phi0 = solution.phi(c(0.0))?;
    solution.diagnostics.normalization_error = max_abs((&phi0 - solution.ops.pi()).iter().copied());
    Ok(solution)
}

/// Relative agreement required between the closed-form mean and the
/// central-difference derivative of the series.
pub const MEAN_CROSS_CHECK: f64 = 1e-4;

/// `m_i = E[W 1{Z = i}]` from `((p1 + a p2) Pᵀ − I) m = (p1 + p2) F'(0) π + ṽ'(0)`,
/// cross-checked against a central difference of the series at 0.
pub fn mean_workload(solution: &Model1Solution) -> Result<Vec<f64>> {
    let analytic = mean_workload_closed_form(solution)?;
    let numeric = mean_workload_numerical(solution)?;
    let scale = analytic.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    let gap = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    if !(gap <= MEAN_CROSS_CHECK) {
        return Err(Error::Residual {
            what: "mean workload versus numerical derivative (relative)".into(),
            value: gap,
            tolerance: MEAN_CROSS_CHECK,
        });
    }
    if let Some(&m) = analytic.iter().find(|&&m| m < -1e-9) {
        return Err(Error::Residual {
            what: "negative mean workload".into(),
            value: m,
            tolerance: 0.0,
        });
    }
    Ok(analytic.into_iter().map(|m| m.max(0.0)).collect())
}

/// The closed-form mean vector without the numerical cross-check.
pub fn mean_workload_closed_form(solution: &Model1Solution) -> Result<Vec<f64>> {
    let spec = solution.spec();
    let ops = solution.operators();
    let n = spec.states();
    let zero = c(0.0);
    let pt = CMatrix::from_fn(n, n, |j, i| c(spec.chain.p(i, j)));
    let f_prime = CMatrix::from_fn(n, n, |j, i| {
        c(-spec.chain.p(i, j) * (spec.service[i].mean() - spec.interarrival[j].mean()))
    });
    let q = ops.q();
    let (q0, dq0) = (q.eval(zero), q.derivative().eval(zero));
    let v_prime = CVector::from_fn(n, |j, _| {
        let da = spec.interarrival[j].denominator();
        let g0 = da.eval(zero) * q0;
        let dg0 = -da.derivative().eval(zero) * q0 + da.eval(zero) * dq0;
        let coeffs = &solution.coefficients[j];
        let c1 = coeffs.get(1).copied().unwrap_or(zero);
        (c1 * g0 - coeffs[0] * dg0) / (g0 * g0)
    });
    let lhs = &pt * c(spec.p1 + spec.a * spec.p2) - CMatrix::identity(n, n);
    let rhs = &f_prime * ops.pi() * c(spec.p1 + spec.p2) + v_prime;
    let m = solve_dense(&lhs, &rhs)?.x;
    Ok(m.iter().map(|z| z.re).collect())
}

/// `−Φ'(0)` by a central difference along the imaginary axis (step `1e-5`).
pub fn mean_workload_numerical(solution: &Model1Solution) -> Result<Vec<f64>> {
    let h = 1e-5;
    let up = solution.phi_with_tol(Complex64::new(0.0, h), 1e-14)?;
    let down = solution.phi_with_tol(Complex64::new(0.0, -h), 1e-14)?;
    let d = (up - down) / Complex64::new(0.0, 2.0 * h);
    Ok(d.iter().map(|z| -z.re).collect())
}
