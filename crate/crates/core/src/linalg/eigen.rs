use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{wdot, Cholesky, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Dense below `dense_limit` unknowns, Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenOptions {
    pub kind: SolverKind,
    /// Relative residual target, see [`EigenPairs::residuals`].
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { kind: SolverKind::Auto, tol: 1e-10, seed: 0, max_iter: 400, dense_limit: 500 }
    }
}

/// Smallest eigenpairs of `K u = λ M u`, `M = diag(m)`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending finite eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors, M-orthonormal, harmonic off the support of `m`.
    pub vectors: Vec<Vec<f64>>,
    /// `‖Ku − λMu‖₂ / ((‖K‖∞ + λ·max m)·‖u‖₂)` per pair.
    pub residuals: Vec<f64>,
    /// Number of vertices with positive mass; there are no more finite
    /// eigenvalues than this.
    pub support_rank: usize,
    pub clamped: bool,
    pub iterations: usize,
}

/// Computes the `nev` smallest eigenpairs of the pencil `(K, diag(m))`.
///
/// `m` may vanish on part of the index set; the problem is then the one for
/// the Schur complement of `K` onto the support, and eigenvectors are
/// extended harmonically. `deflate` lists exact null vectors of `K`: they are
/// returned first with eigenvalue zero and removed from the iteration.
pub fn smallest_eigenpairs(
    k: &CsrMatrix,
    m: &[f64],
    nev: usize,
    deflate: &[Vec<f64>],
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = k.n();
    if m.len() != n {
        return Err(Error::invalid(format!("mass vector has length {} for a {n}x{n} matrix", m.len())));
    }
    if m.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("masses must be finite and nonnegative"));
    }
    let support_rank = m.iter().filter(|&&w| w > 0.0).count();
    if support_rank == 0 {
        return Err(Error::invalid("mass vector is identically zero"));
    }
    let defl = m_orthonormalize(m, deflate);
    let dense = match opts.kind {
        SolverKind::Dense => true,
        SolverKind::Krylov => false,
        SolverKind::Auto => n <= opts.dense_limit,
    };
    let mut out = if dense {
        dense_pairs(k, m, nev, &defl)?
    } else {
        krylov_pairs(k, m, nev, &defl, opts)?
    };
    out.support_rank = support_rank;
    Ok(out)
}

fn m_orthonormalize(m: &[f64], vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut x = v.clone();
        for _ in 0..2 {
            for y in &out {
                let c = wdot(m, y, &x);
                x.iter_mut().zip(y).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = wdot(m, &x, &x).sqrt();
        if nrm > 1e-12 {
            x.iter_mut().for_each(|a| *a /= nrm);
            out.push(x);
        }
    }
    out
}

fn residual(k: &CsrMatrix, m: &[f64], knorm: f64, mmax: f64, lam: f64, u: &[f64], ku: &[f64]) -> f64 {
    let r: f64 = ku.iter().zip(u).zip(m).map(|((a, b), w)| (a - lam * w * b).powi(2)).sum::<f64>().sqrt();
    let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let _ = k;
    r / ((knorm + lam.abs() * mmax) * un).max(f64::MIN_POSITIVE)
}

fn dense_pairs(k: &CsrMatrix, m: &[f64], nev: usize, defl: &[Vec<f64>]) -> Result<EigenPairs> {
    let n = k.n();
    let s_idx: Vec<usize> = (0..n).filter(|&i| m[i] > 0.0).collect();
    let o_idx: Vec<usize> = (0..n).filter(|&i| m[i] <= 0.0).collect();
    let ns = s_idx.len();
    let no = o_idx.len();
    let kd = k.to_dense();
    let knorm = k.norm_inf();
    let mut clamped = false;
    let kss = kd.select_rows(&s_idx).select_columns(&s_idx);
    // X = K_OO⁻¹ K_OS gives the harmonic extension u_O = −X u_S.
    let (schur, ext) = if no > 0 {
        let koo = kd.select_rows(&o_idx).select_columns(&o_idx);
        let kos = kd.select_rows(&o_idx).select_columns(&s_idx);
        let chol = match koo.clone().cholesky() {
            Some(c) => c,
            None => {
                clamped = true;
                let shifted = koo + DMatrix::identity(no, no) * (1e-10 * knorm.max(f64::MIN_POSITIVE));
                shifted.cholesky().ok_or_else(|| Error::numerical("off-support block is not positive definite"))?
            }
        };
        let x = chol.solve(&kos);
        (&kss - kos.transpose() * &x, Some(x))
    } else {
        (kss, None)
    };
    let ws: Vec<f64> = s_idx.iter().map(|&i| m[i]).collect();
    let isq: Vec<f64> = ws.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut a = DMatrix::from_fn(ns, ns, |i, j| schur[(i, j)] * isq[i] * isq[j]);
    a = (&a + a.transpose()) * 0.5;
    let nd = defl.len();
    // Deflation: P A P + big·Y Yᵀ pushes the null directions to the top.
    if nd > 0 {
        let y = DMatrix::from_fn(ns, nd, |i, c| defl[c][s_idx[i]] * ws[i].sqrt());
        let p = DMatrix::identity(ns, ns) - &y * y.transpose();
        let big = 2.0 * a.norm() + 1.0;
        a = &p * &a * &p + &y * y.transpose() * big;
        a = (&a + a.transpose()) * 0.5;
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let count = nev.min(ns);
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for d in defl.iter().take(count) {
        values.push(0.0);
        vectors.push(d.clone());
    }
    for &c in order.iter().take(count.saturating_sub(nd.min(count))) {
        let lam = eig.eigenvalues[c].max(0.0);
        let mut u = vec![0.0; n];
        let us: Vec<f64> = (0..ns).map(|i| eig.eigenvectors[(i, c)] * isq[i]).collect();
        for (i, &g) in s_idx.iter().enumerate() {
            u[g] = us[i];
        }
        if let Some(x) = &ext {
            for (r, &g) in o_idx.iter().enumerate() {
                u[g] = -(0..ns).map(|j| x[(r, j)] * us[j]).sum::<f64>();
            }
        }
        values.push(lam);
        vectors.push(u);
    }
    let mmax = m.iter().cloned().fold(0.0, f64::max);
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, u)| residual(k, m, knorm, mmax, l, u, &k.mul(u)))
        .collect();
    Ok(EigenPairs { values, vectors, residuals, support_rank: ns, clamped, iterations: 1 })
}

struct Basis<'a> {
    m: &'a [f64],
    locked: &'a [Vec<f64>],
    v: Vec<Vec<f64>>,
    kv: Vec<Vec<f64>>,
}

impl Basis<'_> {
    fn project_out(&self, x: &mut [f64]) {
        for y in self.locked.iter().chain(self.v.iter()) {
            let c = wdot(self.m, y, x);
            x.iter_mut().zip(y).for_each(|(a, b)| *a -= c * b);
        }
    }

    /// Orthonormalizes `block` against the basis and itself; returns the
    /// surviving vectors.
    fn orthonormalize(&self, block: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for mut x in block {
            let n0 = wdot(self.m, &x, &x).sqrt();
            if n0 == 0.0 || !n0.is_finite() {
                continue;
            }
            for _ in 0..2 {
                self.project_out(&mut x);
                for y in &out {
                    let c = wdot(self.m, y, &x);
                    x.iter_mut().zip(y).for_each(|(a, b)| *a -= c * b);
                }
            }
            let n1 = wdot(self.m, &x, &x).sqrt();
            if n1 > 1e-10 * n0 {
                x.iter_mut().for_each(|a| *a /= n1);
                out.push(x);
            }
        }
        out
    }
}

fn krylov_pairs(
    k: &CsrMatrix,
    m: &[f64],
    nev: usize,
    defl: &[Vec<f64>],
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = k.n();
    let ns = m.iter().filter(|&&w| w > 0.0).count();
    let nd = defl.len();
    let count = nev.min(ns);
    let want = count.saturating_sub(nd);
    let knorm = k.norm_inf();
    let mmax = m.iter().cloned().fold(0.0, f64::max);
    let mut values: Vec<f64> = vec![0.0; nd.min(count)];
    let mut vectors: Vec<Vec<f64>> = defl.iter().take(count).cloned().collect();
    if want == 0 {
        let residuals = vectors.iter().map(|u| residual(k, m, knorm, mmax, 0.0, u, &k.mul(u))).collect();
        return Ok(EigenPairs { values, vectors, residuals, support_rank: ns, clamped: false, iterations: 0 });
    }
    let avail = ns - nd;
    let total: f64 = m.iter().sum();
    let sigma = 1.0 / total;
    let shift: Vec<f64> = m.iter().map(|w| sigma * w).collect();
    let chol = Cholesky::new(k, Some(&shift))?;
    let apply = |block: &mut Vec<Vec<f64>>| {
        for x in block.iter_mut() {
            x.iter_mut().zip(m).for_each(|(a, w)| *a *= w);
        }
        chol.solve_many(block);
    };
    let p = (want + 3).clamp(4, 24).min(avail);
    let cap = (4 * (want + p)).max(60).min(avail);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    apply(&mut x);
    let mut basis = Basis { m, locked: defl, v: Vec::new(), kv: Vec::new() };
    let mut best = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let block = basis.orthonormalize(x);
        let exhausted = block.is_empty() || basis.v.len() + block.len() >= avail;
        for b in &block {
            basis.kv.push(k.mul(b));
        }
        basis.v.extend(block.iter().cloned());
        let dim = basis.v.len();
        if dim < want && !exhausted {
            x = block;
            apply(&mut x);
            continue;
        }
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            0.5 * (super::dot(&basis.v[i], &basis.kv[j]) + super::dot(&basis.v[j], &basis.kv[i]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let combine = |cols: &[Vec<f64>], c: usize| {
            let mut u = vec![0.0; n];
            for (j, col) in cols.iter().enumerate() {
                let a = eig.eigenvectors[(j, c)];
                if a != 0.0 {
                    u.iter_mut().zip(col).for_each(|(x, y)| *x += a * y);
                }
            }
            u
        };
        let take = want.min(dim);
        let mut ritz = Vec::with_capacity(take);
        let mut worst: f64 = 0.0;
        let mut first_bad = take;
        for (r, &c) in order.iter().take(take).enumerate() {
            let lam = eig.eigenvalues[c].max(0.0);
            let u = combine(&basis.v, c);
            let ku = combine(&basis.kv, c);
            let res = residual(k, m, knorm, mmax, lam, &u, &ku);
            if res > opts.tol && first_bad == take {
                first_bad = r;
            }
            worst = worst.max(res);
            ritz.push((lam, u, res));
        }
        best = best.min(worst);
        if (worst <= opts.tol && take == want) || exhausted {
            if worst > opts.tol.max(1e-8) {
                return Err(Error::Numerical {
                    msg: format!("Krylov space exhausted with residual {worst:.3e}"),
                    best_residual: Some(worst),
                });
            }
            let mut residuals: Vec<f64> =
                vectors.iter().map(|u| residual(k, m, knorm, mmax, 0.0, u, &k.mul(u))).collect();
            for (lam, u, res) in ritz {
                values.push(lam);
                vectors.push(u);
                residuals.push(res);
            }
            return Ok(EigenPairs { values, vectors, residuals, support_rank: ns, clamped: chol.clamped, iterations: iter });
        }
        if dim + p > cap {
            // Thick restart on the leading Ritz vectors.
            let keep = (want + p).min(dim);
            let nv: Vec<Vec<f64>> = order.iter().take(keep).map(|&c| combine(&basis.v, c)).collect();
            let nkv: Vec<Vec<f64>> = order.iter().take(keep).map(|&c| combine(&basis.kv, c)).collect();
            let start = first_bad.min(keep.saturating_sub(p));
            x = nv[start..(start + p).min(keep)].to_vec();
            basis.v = nv;
            basis.kv = nkv;
        } else {
            x = block;
        }
        apply(&mut x);
    }
    Err(Error::Numerical {
        msg: format!("eigensolver did not converge in {} iterations", opts.max_iter),
        best_residual: Some(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i + 1, i + 1, 1.0));
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn path_graph_spectrum_matches_closed_form() {
        let n = 40;
        let k = path_laplacian(n);
        let m = vec![1.0; n];
        let ones = vec![vec![1.0; n]];
        for kind in [SolverKind::Dense, SolverKind::Krylov] {
            let opts = EigenOptions { kind, ..Default::default() };
            let r = smallest_eigenpairs(&k, &m, 6, &ones, &opts).unwrap();
            for (j, &l) in r.values.iter().enumerate() {
                let exact = 2.0 - 2.0 * (std::f64::consts::PI * j as f64 / n as f64).cos();
                assert!((l - exact).abs() < 1e-10, "{kind:?} {j}: {l} vs {exact}");
            }
        }
    }

    #[test]
    fn singular_mass_gives_rank_limited_spectrum() {
        let n = 30;
        let k = path_laplacian(n);
        let mut m = vec![0.0; n];
        m[0] = 0.5;
        m[n - 1] = 0.5;
        let ones = vec![vec![1.0; n]];
        for kind in [SolverKind::Dense, SolverKind::Krylov] {
            let opts = EigenOptions { kind, ..Default::default() };
            let r = smallest_eigenpairs(&k, &m, 4, &ones, &opts).unwrap();
            assert_eq!(r.values.len(), 2);
            // Two unit masses joined by a resistance n-1.
            let exact = 4.0 / (n as f64 - 1.0);
            assert!((r.values[1] - exact).abs() < 1e-10, "{kind:?}: {}", r.values[1]);
        }
    }
}
