#![allow(dead_code)]

use conformal_spectra::linalg::CsrMatrix;
use conformal_spectra::measure::density_measure;
use conformal_spectra::{DiscreteMeasure, TriangleMesh};
use nalgebra::{DMatrix, DVector};

/// Great-circle distance on the unit sphere.
pub fn arc(p: [f64; 3], q: [f64; 3]) -> f64 {
    let n = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let c = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / (n(p) * n(q));
    c.clamp(-1.0, 1.0).acos()
}

pub fn antipode(mesh: &TriangleMesh, v: usize) -> usize {
    let p = mesh.vertices()[v];
    (0..mesh.n_vertices())
        .max_by(|&a, &b| arc(p, mesh.vertices()[a]).total_cmp(&arc(p, mesh.vertices()[b])))
        .unwrap()
}

/// `count` vertices spread over the sphere by farthest-point sampling.
pub fn spread_vertices(mesh: &TriangleMesh, count: usize) -> Vec<usize> {
    let v = mesh.vertices();
    let mut out = vec![0];
    while out.len() < count {
        let next = (0..v.len())
            .max_by(|&a, &b| {
                let da = out.iter().map(|&c| arc(v[a], v[c])).fold(f64::INFINITY, f64::min);
                let db = out.iter().map(|&c| arc(v[b], v[c])).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .unwrap();
        out.push(next);
    }
    out
}

/// Density `floor + Σ exp(−(d/width)²)` around the given sphere vertices.
pub fn bump_measure(mesh: &TriangleMesh, centers: &[usize], width: f64, floor: f64) -> DiscreteMeasure {
    let v = mesh.vertices();
    let dens: Vec<f64> = v
        .iter()
        .map(|p| floor + centers.iter().map(|&c| (-(arc(*p, v[c]) / width).powi(2)).exp()).sum::<f64>())
        .collect();
    density_measure(mesh, &dens).unwrap().normalized()
}

/// Dirichlet energy minimizer with `u = 1` on `f`, `u = 0` off `g`, by a
/// dense solve of the reduced system.
pub fn dense_capacity(k: &CsrMatrix, f: &[usize], g: &[usize]) -> f64 {
    let n = k.n();
    let a = k.to_dense();
    let mut u = DVector::zeros(n);
    for &i in f {
        u[i] = 1.0;
    }
    let free: Vec<usize> = g.iter().copied().filter(|i| !f.contains(i)).collect();
    if !free.is_empty() {
        let m = DMatrix::from_fn(free.len(), free.len(), |r, c| a[(free[r], free[c])]);
        let rhs = DVector::from_fn(free.len(), |r, _| -f.iter().map(|&j| a[(free[r], j)]).sum::<f64>());
        let x = m.lu().solve(&rhs).expect("nonsingular interior block");
        for (r, &i) in free.iter().enumerate() {
            u[i] = x[r];
        }
    }
    (u.transpose() * &a * &u)[(0, 0)]
}

/// Smallest positive generalized eigenvalue of `K u = λ diag(w) u` for
/// positive `w`, by a dense symmetric eigensolve.
pub fn dense_lambda(k: &CsrMatrix, w: &[f64], index: usize) -> f64 {
    let a = k.to_dense();
    let n = w.len();
    let s = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (w[i] * w[j]).sqrt());
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[index]
}
