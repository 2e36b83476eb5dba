use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

use super::linalg::{max_abs, CMatrix, CVector};

/// A vector-valued affine function `x ↦ constant + coefficients · x` of the
/// unknown vector `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineVector {
    constant: CVector,
    coefficients: CMatrix,
}

impl AffineVector {
    pub fn new(constant: CVector, coefficients: CMatrix) -> Self {
        assert_eq!(
            constant.len(),
            coefficients.nrows(),
            "affine vector: constant and coefficient rows disagree"
        );
        Self { constant, coefficients }
    }

    pub fn zeros(len: usize, unknowns: usize) -> Self {
        Self::new(CVector::zeros(len), CMatrix::zeros(len, unknowns))
    }

    pub fn constant_only(constant: CVector, unknowns: usize) -> Self {
        let n = constant.len();
        Self::new(constant, CMatrix::zeros(n, unknowns))
    }

    pub fn len(&self) -> usize {
        self.constant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constant.is_empty()
    }

    pub fn unknowns(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn constant(&self) -> &CVector {
        &self.constant
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    pub fn constant_mut(&mut self) -> &mut CVector {
        &mut self.constant
    }

    pub fn coefficients_mut(&mut self) -> &mut CMatrix {
        &mut self.coefficients
    }

    pub fn evaluate(&self, x: &CVector) -> CVector {
        &self.constant + &self.coefficients * x
    }

    /// `M · self`.
    pub fn premultiply(&self, m: &CMatrix) -> Self {
        Self::new(m * &self.constant, m * &self.coefficients)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(&self.constant * k, &self.coefficients * k)
    }

    /// Component `i` as a scalar affine form `(constant, coefficient row)`.
    pub fn component(&self, i: usize) -> (Complex64, Vec<Complex64>) {
        (self.constant[i], self.coefficients.row(i).iter().copied().collect())
    }

    /// Largest absolute entry across both parts.
    pub fn max_norm(&self) -> f64 {
        max_abs(self.constant.iter().copied()).max(max_abs(self.coefficients.iter().copied()))
    }
}

impl Add for &AffineVector {
    type Output = AffineVector;
    fn add(self, rhs: Self) -> AffineVector {
        AffineVector::new(&self.constant + &rhs.constant, &self.coefficients + &rhs.coefficients)
    }
}

impl Sub for &AffineVector {
    type Output = AffineVector;
    fn sub(self, rhs: Self) -> AffineVector {
        AffineVector::new(&self.constant - &rhs.constant, &self.coefficients - &rhs.coefficients)
    }
}

impl AddAssign<&AffineVector> for AffineVector {
    fn add_assign(&mut self, rhs: &AffineVector) {
        self.constant += &rhs.constant;
        self.coefficients += &rhs.coefficients;
    }
}

impl Mul<&AffineVector> for &CMatrix {
    type Output = AffineVector;
    fn mul(self, rhs: &AffineVector) -> AffineVector {
        rhs.premultiply(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn evaluation_commutes_with_linear_maps() {
        let a = AffineVector::new(
            CVector::from_vec(vec![c(1.0), c(2.0)]),
            CMatrix::from_row_slice(2, 3, &[c(1.0), c(0.0), c(2.0), c(-1.0), c(3.0), c(0.5)]),
        );
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(0.0), c(-1.0)]);
        let x = CVector::from_vec(vec![c(0.3), c(-1.2), c(2.0)]);
        let lhs = (&m * &a).evaluate(&x);
        let rhs = &m * a.evaluate(&x);
        assert!(max_abs((lhs - rhs).iter().copied()) < 1e-14);
        let sum = &a + &a.scale(c(2.0));
        assert!(max_abs((sum.evaluate(&x) - a.evaluate(&x) * c(3.0)).iter().copied()) < 1e-14);
    }

    /// N = 1 hand-assembled system: (1 + 2x) − 4 = 0 and the affine route agree.
    #[test]
    fn scalar_system_matches_hand_assembly() {
        let form = AffineVector::new(CVector::from_vec(vec![c(1.0)]), CMatrix::from_row_slice(1, 1, &[c(2.0)]));
        let (k, row) = form.component(0);
        let a = CMatrix::from_row_slice(1, 1, &row);
        let b = CVector::from_vec(vec![c(4.0) - k]);
        let x = super::super::linalg::solve_dense(&a, &b).unwrap().x;
        assert!((x[0] - c(1.5)).norm() < 1e-12);
    }
}
