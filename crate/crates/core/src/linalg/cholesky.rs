use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
///
/// When the plain factorization fails (the matrix is only semidefinite up to
/// rounding), a diagonal of `1e-10·‖A‖∞` is added and the factorization is
/// retried once; `clamped` records that this happened.
pub struct Cholesky {
    n: usize,
    llt: Llt<usize, f64>,
    pub clamped: bool,
}

impl Cholesky {
    /// Factors `A + diag(shift)`.
    pub fn new(a: &CsrMatrix, shift: Option<&[f64]>) -> Result<Self> {
        super::configure_parallelism();
        let n = a.n();
        if n == 0 {
            return Err(Error::invalid("cannot factor an empty matrix"));
        }
        let scale = a.norm_inf().max(shift.map_or(0.0, |s| s.iter().fold(0.0, |m, v| m.max(v.abs()))));
        match Self::factor(a, shift, 0.0) {
            Ok(llt) => Ok(Cholesky { n, llt, clamped: false }),
            Err(_) => {
                let llt = Self::factor(a, shift, 1e-10 * scale.max(f64::MIN_POSITIVE))
                    .map_err(|e| Error::numerical(format!("Cholesky factorization failed: {e}")))?;
                Ok(Cholesky { n, llt, clamped: true })
            }
        }
    }

    fn factor(a: &CsrMatrix, shift: Option<&[f64]>, extra: f64) -> std::result::Result<Llt<usize, f64>, String> {
        let n = a.n();
        let mut t: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(a.nnz() / 2 + n);
        for (i, j, v) in a.triplets() {
            if i > j {
                t.push(Triplet::new(i, j, v));
            }
        }
        for i in 0..n {
            let d = a.get(i, i) + shift.map_or(0.0, |s| s[i]) + extra;
            t.push(Triplet::new(i, i, d));
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t).map_err(|e| format!("{e:?}"))?;
        let sym = SymbolicLlt::try_new(m.symbolic(), Side::Lower).map_err(|e| format!("{e:?}"))?;
        Llt::try_new_with_symbolic(sym, m.as_ref(), Side::Lower).map_err(|e| format!("{e:?}"))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        for (i, bi) in b.iter_mut().enumerate() {
            *bi = m[(i, 0)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, cols: &mut [Vec<f64>]) {
        if cols.is_empty() {
            return;
        }
        let mut m = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        self.llt.solve_in_place(m.as_mut());
        for (j, c) in cols.iter_mut().enumerate() {
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = m[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul(&x);
        let c = Cholesky::new(&a, None).unwrap();
        assert!(!c.clamped);
        let y = c.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_clamped() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let c = Cholesky::new(&a, None).unwrap();
        assert!(c.clamped);
    }
}
