//! The operators `R(s)`, `Ṽ(s)` and the iterate series for `Φ_W(s)`.
//!
//! Row `j` of `I − p1 F(s)` carries the factor `1/D_{A,j}(−s)`, which has
//! poles in the right half-plane. Every row is therefore multiplied through
//! by `D_{A,j}(−s)` before solving; the resulting `R` and `Ṽ` are the same but
//! stay finite at those poles.

use num_complex::Complex64;

use super::Model1Spec;
use crate::error::{Error, Result};
use crate::polyalg::{solve_dense_multi, AffineVector, CMatrix, CVector};
use crate::probcore::Poly;

/// Series truncation used while assembling the coefficient system.
pub const ASSEMBLY_TOL: f64 = 1e-9;
/// Series truncation used for reported transform values.
pub const EVALUATION_TOL: f64 = 1e-7;
/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 10_000;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Position of the unknown `c_{ω,j}`, `ω ≥ 1`, in the flat unknown vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    /// `l_j + Σ_k m_k`, the degree of the polynomial for state `j`.
    pub degrees: Vec<usize>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl Layout {
    fn new(degrees: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(degrees.len());
        let mut total = 0;
        for &d in &degrees {
            offsets.push(total);
            total += d;
        }
        Self { degrees, offsets, total }
    }

    /// Flat index of `c_{ω,j}` for `1 ≤ ω ≤ degrees[j]`.
    pub fn index(&self, j: usize, omega: usize) -> usize {
        debug_assert!(omega >= 1 && omega <= self.degrees[j]);
        self.offsets[j] + omega - 1
    }
}

/// Precomputed pieces of the Model I operators.
#[derive(Debug, Clone)]
pub struct SeriesOperators {
    spec: Model1Spec,
    /// `Q(s) = ∏_k D_{B,k}(s)`.
    q: Poly,
    /// `c_{0,j} = π_j p3 D_{A,j}(0) Q(0)`.
    c0: Vec<Complex64>,
    layout: Layout,
    pi: CVector,
}

impl SeriesOperators {
    pub fn new(spec: &Model1Spec) -> Result<Self> {
        let n = spec.states();
        let mut q = Poly::constant(c(1.0));
        for b in &spec.service {
            q = q.mul(b.denominator())?;
        }
        let m = q.degree();
        let zero = c(0.0);
        let c0 = (0..n)
            .map(|j| c(spec.chain.pi(j) * spec.p3) * spec.interarrival[j].denominator().eval(zero) * q.eval(zero))
            .collect();
        let layout = Layout::new(spec.interarrival.iter().map(|l| l.degree() + m).collect());
        let pi = CVector::from_iterator(n, spec.chain.stationary().iter().map(|&x| c(x)));
        Ok(Self {
            spec: spec.clone(),
            q,
            c0,
            layout,
            pi,
        })
    }

    pub fn spec(&self) -> &Model1Spec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn unknowns(&self) -> usize {
        self.layout.total
    }

    /// `Q(s) = ∏_k D_{B,k}(s)`.
    pub fn q(&self) -> &Poly {
        &self.q
    }

    /// The fixed coefficients `c_{0,j}`.
    pub fn c0(&self) -> &[Complex64] {
        &self.c0
    }

    pub fn pi(&self) -> &CVector {
        &self.pi
    }

    /// `F(s) = Pᵀ ∘ H(s)`, i.e. `F_{ji} = p_ij H_ij(s)`.
    pub fn f_matrix(&self, s: Complex64) -> Result<CMatrix> {
        let h = super::build_h1(&self.spec, s)?;
        Ok(CMatrix::from_fn(h.nrows(), h.ncols(), |j, i| h[(i, j)] * self.spec.chain.p(i, j)))
    }

    /// `(D(s) − p1 F̂(s), F̂(s))` with `D = diag(D_{A,j}(−s))` and
    /// `F̂ = D F`, both free of interarrival poles.
    pub fn scaled(&self, s: Complex64) -> (CMatrix, CMatrix) {
        let n = self.spec.states();
        let b: Vec<Complex64> = self.spec.service.iter().map(|l| l.value(s)).collect();
        let mut f_hat = CMatrix::zeros(n, n);
        let mut a = CMatrix::zeros(n, n);
        for j in 0..n {
            let na = self.spec.interarrival[j].numerator().eval(-s);
            let da = self.spec.interarrival[j].denominator().eval(-s);
            for i in 0..n {
                f_hat[(j, i)] = b[i] * na * self.spec.chain.p(i, j);
            }
            a[(j, j)] = da;
        }
        a -= &f_hat * c(self.spec.p1);
        (a, f_hat)
    }

    /// `det(D(s)(I − p1 F(s)))`, whose right half-plane zeros are the `δ`.
    pub fn root_function(&self, s: Complex64) -> Complex64 {
        crate::polyalg::determinant(&self.scaled(s).0)
    }

    /// Unknown part of row `j`: `Σ_{ω≥0} c_{ω,j} s^ω`.
    pub fn polynomial(&self, j: usize, s: Complex64) -> (Complex64, Vec<(usize, Complex64)>) {
        let mut power = c(1.0);
        let mut terms = Vec::with_capacity(self.layout.degrees[j]);
        for omega in 1..=self.layout.degrees[j] {
            power *= s;
            terms.push((self.layout.index(j, omega), power));
        }
        (self.c0[j], terms)
    }

    /// `D(s) ṽ(s)`, whose component `j` is `Σ_ω c_{ω,j} s^ω / Q(s)`.
    pub fn w_hat(&self, s: Complex64) -> AffineVector {
        let n = self.spec.states();
        let qs = self.q.eval(s);
        let mut w = AffineVector::zeros(n, self.unknowns());
        for j in 0..n {
            let (k0, terms) = self.polynomial(j, s);
            w.constant_mut()[j] = k0 / qs;
            for (idx, v) in terms {
                w.coefficients_mut()[(j, idx)] = v / qs;
            }
        }
        w
    }

    /// `ṽ(s)` itself (singular at interarrival poles).
    pub fn v_small(&self, s: Complex64) -> AffineVector {
        let n = self.spec.states();
        let scale = CMatrix::from_diagonal(&CVector::from_iterator(
            n,
            self.spec.interarrival.iter().map(|l| 1.0 / l.denominator().eval(-s)),
        ));
        self.w_hat(s).premultiply(&scale)
    }

    /// `(R(s), Ṽ(s))` from one factorization.
    pub fn step(&self, s: Complex64) -> Result<(CMatrix, AffineVector)> {
        let n = self.spec.states();
        let u = self.unknowns();
        let (a, f_hat) = self.scaled(s);
        let w = self.w_hat(s);
        let mut rhs = CMatrix::zeros(n, n + 1 + u);
        rhs.view_mut((0, 0), (n, n)).copy_from(&(f_hat * c(self.spec.p2)));
        rhs.view_mut((0, n), (n, 1)).copy_from(w.constant());
        rhs.view_mut((0, n + 1), (n, u)).copy_from(w.coefficients());
        let (x, _) = solve_dense_multi(&a, &rhs).map_err(|e| match e {
            Error::Singular { .. } => Error::SeriesSingular { point: s },
            other => other,
        })?;
        let r = x.columns(0, n).into_owned();
        let v = AffineVector::new(x.column(n).into_owned(), x.columns(n + 1, u).into_owned());
        Ok((r, v))
    }

    pub fn r(&self, s: Complex64) -> Result<CMatrix> {
        Ok(self.step(s)?.0)
    }

    pub fn v_tilde(&self, s: Complex64) -> Result<AffineVector> {
        Ok(self.step(s)?.1)
    }

    /// `Φ_W(s) = Σ_k ∏_{m<k} R(a^m s) Ṽ(a^k s)` as an affine form in the
    /// unknowns, stopped once a term's max-norm drops to `tol`. The tail
    /// `∏_{m<n} R(a^m s) Φ_W(a^n s)` is closed with `Φ_W(a^n s) ≈ π`.
    /// Returns the form and the number of terms used.
    pub fn phi_affine(&self, s: Complex64, tol: f64) -> Result<(AffineVector, usize)> {
        let n = self.spec.states();
        let a = self.spec.a;
        let (mut r_prev, mut acc) = self.step(s)?;
        let mut prod = CMatrix::identity(n, n);
        let mut x = s;
        let mut last_norm = f64::INFINITY;
        for k in 1..=MAX_TERMS {
            prod = &prod * &r_prev;
            x *= a;
            let (r_k, v_k) = self.step(x)?;
            let term = v_k.premultiply(&prod);
            acc += &term;
            last_norm = term.max_norm();
            if last_norm <= tol {
                let closing = &prod * &r_k * &self.pi;
                *acc.constant_mut() += closing;
                return Ok((acc, k + 1));
            }
            r_prev = r_k;
        }
        Err(Error::SeriesDiverged {
            terms: MAX_TERMS,
            last_norm,
        })
    }
}

/// `Φ_W(s)` for known unknowns `c` (the flat vector of `c_{ω,j}`, `ω ≥ 1`).
pub fn evaluate_phi_series(ops: &SeriesOperators, c: &CVector, s: Complex64, tol: f64) -> Result<(CVector, usize)> {
    let (form, k) = ops.phi_affine(s, tol)?;
    Ok((form.evaluate(c), k))
}
