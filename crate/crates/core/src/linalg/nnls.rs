use nalgebra::{DMatrix, DVector};

/// Lawson–Hanson active-set solver for `min ‖A x − b‖₂` subject to `x ≥ 0`.
///
/// Returns the solution and whether the active-set loop terminated within
/// its iteration cap.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else {
            return (x, true);
        };
        passive[j] = true;
        for _ in 0..max_outer {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&idx);
            let z = match sub.clone().svd(true, true).solve(b, 1e-14) {
                Ok(z) => z,
                Err(_) => return (x, false),
            };
            if z.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j] <= 1e-15 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    (x, false)
}
