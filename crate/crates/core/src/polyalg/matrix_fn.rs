//! Matrix-valued analytic functions with a declared analyticity region.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::linalg::{max_abs, CMatrix};
use crate::error::{Error, Result};

type MatrixFn = Arc<dyn Fn(Complex64) -> Result<CMatrix> + Send + Sync>;

/// `s ↦ A(s)`, analytic on `Re(s) > −ζ` except at the listed poles.
#[derive(Clone)]
pub struct MatrixFunction {
    f: MatrixFn,
    dimension: usize,
    zeta: f64,
    poles: Vec<Complex64>,
}

impl fmt::Debug for MatrixFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFunction")
            .field("dimension", &self.dimension)
            .field("zeta", &self.zeta)
            .field("poles", &self.poles)
            .finish()
    }
}

impl MatrixFunction {
    pub fn new(
        dimension: usize,
        zeta: f64,
        poles: Vec<Complex64>,
        f: impl Fn(Complex64) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            dimension,
            zeta,
            poles,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        if s.re <= -self.zeta {
            return Err(Error::OutsideRegion {
                point: s,
                bound: -self.zeta,
            });
        }
        if let Some(&root) = self.poles.iter().find(|p| (s - **p).norm() <= 1e-12 * (1.0 + p.norm())) {
            return Err(Error::Pole { root });
        }
        let m = (self.f)(s)?;
        debug_assert_eq!(m.nrows(), self.dimension);
        Ok(m)
    }

    /// `max |A(s+h) − A(s)| / h` over a few directions, a cheap smoothness
    /// probe that should stay bounded as `h → 0`.
    pub fn difference_quotient(&self, s: Complex64, h: f64) -> Result<f64> {
        let base = self.eval(s)?;
        let mut worst: f64 = 0.0;
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let shifted = self.eval(s + dir * h)?;
            worst = worst.max(max_abs((shifted - &base).iter().copied()) / h);
        }
        Ok(worst)
    }

    /// `det A(s)` as a scalar closure for zero counting. Pole hits map to
    /// `NaN`, which the contour code reports as a contour failure.
    pub fn determinant_fn(&self) -> impl Fn(Complex64) -> Complex64 + '_ {
        move |s| match self.eval(s) {
            Ok(m) => super::linalg::determinant(&m),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_function_has_bounded_quotients() {
        let f = MatrixFunction::new(2, 1.0, vec![], |s| {
            Ok(CMatrix::from_row_slice(2, 2, &[s, s * s, Complex64::new(1.0, 0.0), s.exp()]))
        });
        let s = Complex64::new(0.3, 0.2);
        let q1 = f.difference_quotient(s, 1e-4).unwrap();
        let q2 = f.difference_quotient(s, 1e-6).unwrap();
        assert!((q1 - q2).abs() < 1e-3);
        assert!(matches!(f.eval(Complex64::new(-2.0, 0.0)), Err(Error::OutsideRegion { .. })));
    }

    #[test]
    fn poles_are_reported() {
        let pole = Complex64::new(-0.5, 0.0);
        let f = MatrixFunction::new(1, 1.0, vec![pole], move |s| {
            Ok(CMatrix::from_element(1, 1, 1.0 / (s - pole)))
        });
        assert!(matches!(f.eval(pole), Err(Error::Pole { .. })));
        let det = f.determinant_fn();
        assert!((det(Complex64::new(0.5, 0.0)) - 1.0).norm() < 1e-15);
    }
}
