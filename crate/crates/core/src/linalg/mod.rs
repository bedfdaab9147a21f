//! Sparse symmetric matrices, Cholesky solves, eigensolvers and NNLS.

mod cholesky;
mod eigen;
mod nnls;

pub use cholesky::Cholesky;
pub use eigen::{smallest_eigenpairs, EigenOptions, EigenPairs, SolverKind};
pub use nnls::nnls;

use nalgebra::DMatrix;

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the matrix from unordered triplets, summing duplicates.
    ///
    /// Triplets are sorted before merging so that the result does not depend
    /// on the order in which they were generated.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { n, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries `(j, a_ij)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, ui) in u.iter().enumerate() {
            let mut r = 0.0;
            for (j, a) in self.row(i) {
                r += a * v[j];
            }
            s += ui * r;
        }
        s
    }

    /// `uᵀ A u`.
    pub fn quad(&self, u: &[f64]) -> f64 {
        self.bilinear(u, u)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol * v.abs().max(1.0))
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> CsrMatrix {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut t = Vec::new();
        for (k, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                if pos[j] != usize::MAX {
                    t.push((k, pos[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(idx.len(), t)
    }

    /// Off-diagonal block with rows `rows` and columns `cols`, as triplets in
    /// local numbering.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<(usize, usize, f64)> {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &j) in cols.iter().enumerate() {
            pos[j] = k;
        }
        let mut t = Vec::new();
        for (k, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if pos[j] != usize::MAX {
                    t.push((k, pos[j], v));
                }
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    /// Connected components of the sparsity graph (nonzero off-diagonal
    /// entries), as a component label per row and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(i) = stack.pop() {
                for (j, v) in self.row(i) {
                    if v != 0.0 && label[j] == usize::MAX {
                        label[j] = count;
                        stack.push(j);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }
}

/// Inner product weighted by the diagonal `w`.
pub fn wdot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Number of worker threads requested through `CONFSPEC_THREADS`; one when
/// unset, which keeps every factorization sequential and reproducible.
pub fn thread_count() -> usize {
    std::env::var("CONFSPEC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

pub(crate) fn configure_parallelism() {
    let n = thread_count();
    let par = if n <= 1 { faer::Par::Seq } else { faer::Par::rayon(n) };
    faer::set_global_parallelism(par);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_sort() {
        let a = CsrMatrix::from_triplets(3, vec![(2, 0, 1.0), (0, 0, 2.0), (2, 0, 3.0), (1, 2, -1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(2, 0), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn principal_submatrix_and_components() {
        let a = CsrMatrix::from_triplets(
            4,
            vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 0.0)],
        );
        let (label, c) = a.components();
        assert_eq!(c, 3);
        assert_eq!(label[0], label[1]);
        let p = a.principal(&[1, 0]);
        assert_eq!(p.get(0, 1), -1.0);
        assert_eq!(p.quad(&[1.0, 1.0]), 0.0);
    }
}
