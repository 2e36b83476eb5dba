use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 64;

/// Complex polynomial in the monomial basis, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(Error::InvalidLst(format!(
                "polynomial degree {} exceeds the limit {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// Monic polynomial `∏ (s − r)`.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self> {
        let mut p = Self::constant(Complex64::new(1.0, 0.0));
        for &r in roots {
            p = p.mul(&Self {
                coeffs: vec![-r, Complex64::new(1.0, 0.0)],
            })?;
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(Complex64::new(0.0, 0.0));
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Self::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    /// `p(−s)`.
    pub fn reflect(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn from_roots_expands_monic() {
        let p = Poly::from_roots(&[c(-2.0, 0.0), c(-3.0, 0.0)]).unwrap();
        assert_eq!(p.coeffs(), &[c(6.0, 0.0), c(5.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(p.eval(c(-2.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn derivative_and_reflection() {
        let p = Poly::from_real(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.derivative().coeffs(), &[c(2.0, 0.0), c(6.0, 0.0)]);
        assert_eq!(p.reflect().eval(c(1.5, 0.0)), p.eval(c(-1.5, 0.0)));
    }

    #[test]
    fn degree_guard() {
        assert!(Poly::from_real(&vec![1.0; MAX_DEGREE + 2]).is_err());
        assert!(Poly::from_real(&vec![1.0; MAX_DEGREE + 1]).is_ok());
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = Poly::from_real(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
    }
}
