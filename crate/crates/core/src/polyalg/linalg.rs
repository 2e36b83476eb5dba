use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Systems with a 2-norm condition estimate beyond this are treated as
/// singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub x: CVector,
    /// 2-norm condition number `σ_max / σ_min`.
    pub condition: f64,
    /// `‖Ax − b‖∞`.
    pub residual: f64,
}

pub fn max_abs(v: impl IntoIterator<Item = Complex64>) -> f64 {
    v.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn condition_number(a: &CMatrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// LU solve with partial pivoting, one step of iterative refinement, and an
/// attached condition estimate.
pub fn solve_dense(a: &CMatrix, b: &CVector) -> Result<DenseSolution> {
    assert!(a.is_square() && a.nrows() == b.len(), "solve_dense: dimension mismatch");
    let condition = condition_number(a);
    if !(condition < SINGULAR_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let lu = a.clone().lu();
    let mut x = lu.solve(b).ok_or(Error::Singular { condition })?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let residual = max_abs((a * &x - b).iter().copied());
    Ok(DenseSolution { x, condition, residual })
}

/// Solves `A X = B` column by column, sharing one factorization.
pub fn solve_dense_multi(a: &CMatrix, b: &CMatrix) -> Result<(CMatrix, f64)> {
    let condition = condition_number(a);
    if !(condition < SINGULAR_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let lu = a.clone().lu();
    let mut x = lu.solve(b).ok_or(Error::Singular { condition })?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok((x, condition))
}

pub fn determinant(a: &CMatrix) -> Complex64 {
    if a.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    a.clone().lu().determinant()
}

/// Classical adjoint via cofactors; limited to small matrices.
pub fn adjugate(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert!(n <= 8, "adjugate by cofactors is limited to N ≤ 8");
    if n == 1 {
        return CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    }
    CMatrix::from_fn(n, n, |i, j| {
        // adj(A)_{ij} = (−1)^{i+j} det(A without row j and column i)
        let minor = a.clone().remove_row(j).remove_column(i);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        determinant(&minor) * sign
    })
}

fn normalize_sign(mut v: CVector) -> CVector {
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    let scale = max_abs(v.iter().copied());
    if let Some(first) = v.iter().copied().find(|z| z.norm() > 1e-8 * scale) {
        let phase = first.conj() / first.norm();
        v *= phase;
    }
    v
}

/// Unit vector spanning the right null space of a matrix of numerical rank
/// `N − 1`, with its first non-negligible component positive real.
pub fn null_vector_right(a: &CMatrix) -> Result<CVector> {
    let n = a.ncols();
    assert!(a.is_square(), "null_vector_right: square matrix expected");
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sv: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let scale = sv[0].max(1.0);
    let smallest = sv[n - 1];
    let second = if n >= 2 { sv[n - 2] } else { f64::INFINITY };
    if smallest >= 1e-8 * scale || second <= 1e-6 * scale {
        let dimension = sv.iter().filter(|&&x| x < 1e-8 * scale).count();
        return Err(Error::RankDeficiency {
            dimension,
            singular_values: sv,
        });
    }
    let k = order[n - 1];
    let v = CVector::from_iterator(n, v_t.row(k).iter().map(|z| z.conj()));
    Ok(normalize_sign(v))
}

/// Row vector `ζ` with `ζ A = 0`, as a column of the transpose's null space.
pub fn null_vector_left(a: &CMatrix) -> Result<CVector> {
    null_vector_right(&a.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_diagonal() {
        let b = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let s = solve_dense(&CMatrix::identity(2, 2), &b).unwrap();
        assert_eq!(s.x, b);
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]));
        let s = solve_dense(&a, &CVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)])).unwrap();
        assert!((s.x[0] - c(1.0, 0.0)).norm() < 1e-15 && (s.x[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((s.condition - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_planted_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let mut a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        for i in 0..n {
            a[(i, i)] += c(4.0, 0.0);
        }
        let x_star = CVector::from_fn(n, |i, _| c(i as f64 - 3.0, 0.5 * i as f64));
        let b = &a * &x_star;
        let s = solve_dense(&a, &b).unwrap();
        assert!(max_abs((s.x - &x_star).iter().copied()) < 1e-10);
        assert!(s.residual <= 1e-10 * (1.0 + max_abs(b.iter().copied())));
    }

    #[test]
    fn singular_matrix_reports_condition() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let b = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(solve_dense(&a, &b), Err(Error::Singular { .. })));
    }

    #[test]
    fn null_vectors_of_coordinate_matrices() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let v = null_vector_right(&a).unwrap();
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-14 && v[1].norm() < 1e-14);
        let zeta = null_vector_left(&a.transpose()).unwrap();
        assert!((zeta[0] - c(1.0, 0.0)).norm() < 1e-14);
        let zero = CMatrix::zeros(1, 1);
        assert_eq!(null_vector_right(&zero).unwrap()[0], c(1.0, 0.0));
        assert_eq!(null_vector_left(&zero).unwrap()[0], c(1.0, 0.0));
    }

    #[test]
    fn null_vector_of_planted_kernel() {
        // A = u wᵀ + second rank-one term orthogonal to the kernel k.
        let k = CVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 1.0), c(0.5, 0.0)]);
        let w1 = CVector::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        // Make w1, w2 orthogonal to k in the bilinear sense wᵀk = 0.
        let w1 = &w1 - &k * (w1.transpose() * &k)[0] / (k.transpose() * &k)[0];
        let w2 = CVector::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let w2 = &w2 - &k * (w2.transpose() * &k)[0] / (k.transpose() * &k)[0];
        let u1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 1.0)]);
        let u2 = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        let a = &u1 * w1.transpose() + &u2 * w2.transpose();
        let v = null_vector_right(&a).unwrap();
        let expected = normalize_sign(k.clone());
        assert!(max_abs((v.clone() - expected).iter().copied()) < 1e-8);
        assert!(max_abs((&a * &v).iter().copied()) < 1e-8);
        let zeta = null_vector_left(&a.transpose()).unwrap();
        assert!(max_abs((zeta.transpose() * a.transpose()).iter().copied()) < 1e-8);
    }

    #[test]
    fn full_rank_and_double_kernel_rejected() {
        assert!(matches!(
            null_vector_right(&CMatrix::identity(2, 2)),
            Err(Error::RankDeficiency { dimension: 0, .. })
        ));
        assert!(matches!(
            null_vector_right(&CMatrix::zeros(2, 2)),
            Err(Error::RankDeficiency { dimension: 2, .. })
        ));
    }

    #[test]
    fn adjugate_matches_inverse() {
        let a = CMatrix::from_row_slice(3, 3, &[
            c(2.0, 0.0), c(1.0, 1.0), c(0.0, 0.0),
            c(0.5, 0.0), c(3.0, 0.0), c(1.0, 0.0),
            c(0.0, -1.0), c(1.0, 0.0), c(4.0, 0.0),
        ]);
        let adj = adjugate(&a);
        let prod = &a * &adj;
        let det = determinant(&a);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { det } else { c(0.0, 0.0) };
                assert!((prod[(i, j)] - expected).norm() < 1e-12);
            }
        }
    }
}
