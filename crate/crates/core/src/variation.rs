//! First variation of eigenvalues along conformal deformations.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::nnls;
use crate::measure::{center, integral_distance, DiscreteMeasure};
use crate::mesh::{assemble_stiffness, TriangleMesh};
use crate::spectrum::{assemble_mass, eigenspace, solve_spectrum_with, Eigenspace, SpectralResult, SpectrumOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationOptions {
    /// Relative width of an eigenvalue cluster.
    pub cluster_tol: f64,
    pub spectrum: SpectrumOptions,
    /// Stop the cutting-plane loop once the LP bound and the true margin
    /// agree to this relative accuracy.
    pub net_resolution: f64,
    pub max_cuts: usize,
}

impl Default for VariationOptions {
    fn default() -> Self {
        VariationOptions { cluster_tol: 1e-6, spectrum: SpectrumOptions::default(), net_resolution: 1e-2, max_cuts: 100 }
    }
}

/// `L_φ(u, μ) = −λ ∫u²φ dμ / ∫u² dμ`.
pub fn l_phi(u: &[f64], mu: &DiscreteMeasure, phi: &[f64], lam: f64) -> Result<f64> {
    let m = mu.masses();
    if u.len() != m.len() || phi.len() != m.len() {
        return Err(Error::invalid("length mismatch in L_phi"));
    }
    let den: f64 = m.iter().zip(u).map(|(w, x)| w * x * x).sum();
    if !(den > 0.0) {
        return Err(Error::invalid("L_phi: u has zero mass"));
    }
    let num: f64 = m.iter().zip(u).zip(phi).map(|((w, x), f)| w * x * x * f).sum();
    Ok(-lam * num / den)
}

/// One-sided derivatives of `t ↦ λ_k(μ_t)` at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativePair {
    /// Supremum of `L_φ` over the eigenspace.
    pub left: f64,
    /// Infimum of `L_φ` over the eigenspace.
    pub right: f64,
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Matrix `B_ij = ∫ u_i u_j φ dμ` of the form on the eigenspace basis.
pub fn phi_form(space: &Eigenspace, masses: &[f64], phi: &[f64]) -> DMatrix<f64> {
    let d = space.basis.len();
    let mut b = DMatrix::zeros(d, d);
    for x in 0..masses.len() {
        let w = masses[x] * phi[x];
        if w == 0.0 {
            continue;
        }
        for i in 0..d {
            let ui = space.basis[i][x] * w;
            for j in i..d {
                b[(i, j)] += ui * space.basis[j][x];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            b[(i, j)] = b[(j, i)];
        }
    }
    b
}

fn sym_eig(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(e.eigenvectors.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Derivatives from a precomputed eigenspace; `masses` must be the
/// probability masses the basis is orthonormal for, `phi` of zero mean.
pub fn derivatives_on_space(space: &Eigenspace, masses: &[f64], phi: &[f64]) -> DerivativePair {
    let (vals, _) = sym_eig(phi_form(space, masses, phi));
    let lam = space.lambda;
    DerivativePair { left: -lam * vals[0], right: -lam * vals[vals.len() - 1], lambda: lam, multiplicity: space.multiplicity }
}

struct Setup {
    mu: DiscreteMeasure,
    masses: Vec<f64>,
    result: SpectralResult,
}

fn setup(mesh: &TriangleMesh, mu: &DiscreteMeasure, k: usize, opts: &VariationOptions) -> Result<Setup> {
    let mu = mu.normalized();
    let stiff = assemble_stiffness(mesh);
    let m = assemble_mass(mesh, &mu)?;
    let result = solve_spectrum_with(&stiff, &m, k.max(1), &opts.spectrum)?;
    if k >= result.eigenfunctions.len() {
        return Err(Error::invalid(format!("k = {k} exceeds the finite spectrum")));
    }
    Ok(Setup { masses: m.diag, mu, result })
}

/// Left and right derivatives of `λ_k` along the deformation generated by
/// `phi` (centred against the normalized `mu`).
///
/// When `λ_k` is the first index of its cluster these are the exact one-sided
/// derivatives; in general they bracket the derivatives of every branch.
pub fn one_sided_derivatives(
    mesh: &TriangleMesh,
    mu: &DiscreteMeasure,
    phi: &[f64],
    k: usize,
    opts: &VariationOptions,
) -> Result<DerivativePair> {
    let s = setup(mesh, mu, k, opts)?;
    let phi = center(&s.masses, phi);
    let space = eigenspace(&s.result, k, opts.cluster_tol)?;
    Ok(derivatives_on_space(&space, &s.masses, &phi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionGap {
    /// `‖Π_k − Π′_k‖` in `L₂(μ)`.
    pub gap: f64,
    pub distance: f64,
    pub delta: f64,
    pub dim: usize,
    pub dim_other: usize,
    /// The clusters could not be matched reliably (different sizes, or the
    /// eigenvalue moved by more than half the distance to its neighbours).
    pub inconclusive: bool,
}

fn neighbour_gap(r: &SpectralResult, space: &Eigenspace) -> f64 {
    let lo = space.indices[0];
    let hi = *space.indices.last().unwrap();
    let below = if lo > 0 { space.lambda - r.eigenvalues[lo - 1] } else { f64::INFINITY };
    let above = if hi + 1 < r.eigenfunctions.len() { r.eigenvalues[hi + 1] - space.lambda } else { f64::INFINITY };
    below.min(above)
}

/// Distance between the spectral projections onto the `λ_k` clusters of two
/// measures with common support, in the operator norm of `L₂(μ)`.
pub fn projection_gap(
    mesh: &TriangleMesh,
    mu: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    k: usize,
    opts: &VariationOptions,
) -> Result<ProjectionGap> {
    let a = setup(mesh, mu, k, opts)?;
    let b = setup(mesh, mu2, k, opts)?;
    let (distance, delta) = integral_distance(&a.mu, &b.mu)?;
    if !distance.is_finite() {
        return Err(Error::invalid("projection gap needs measures with common support"));
    }
    let ea = eigenspace(&a.result, k, opts.cluster_tol)?;
    let eb = eigenspace(&b.result, k, opts.cluster_tol)?;
    let supp: Vec<usize> = (0..a.masses.len()).filter(|&x| a.masses[x] > 0.0).collect();
    let (p, q) = (ea.basis.len(), eb.basis.len());
    let ns = supp.len();
    // Π − Π′ = X Yᵀ after the isometry f ↦ W^{1/2} f.
    let x = DMatrix::from_fn(ns, p + q, |r, c| {
        let s = supp[r];
        let w = a.masses[s].sqrt();
        if c < p {
            w * ea.basis[c][s]
        } else {
            -w * eb.basis[c - p][s]
        }
    });
    let y = DMatrix::from_fn(ns, p + q, |r, c| {
        let s = supp[r];
        if c < p {
            a.masses[s].sqrt() * ea.basis[c][s]
        } else {
            b.masses[s] / a.masses[s].sqrt() * eb.basis[c - p][s]
        }
    });
    let rx = x.qr().r();
    let ry = y.qr().r();
    let core = &rx * ry.transpose();
    let gap = core.singular_values().iter().cloned().fold(0.0, f64::max);
    let moved = (ea.lambda - eb.lambda).abs();
    let sep = neighbour_gap(&a.result, &ea).min(neighbour_gap(&b.result, &eb));
    let inconclusive = p != q || ea.truncated || eb.truncated || moved >= 0.5 * sep;
    Ok(ProjectionGap { gap, distance, delta, dim: p, dim_other: q, inconclusive })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Extremal,
    NonExtremal,
    Inconclusive,
}

/// Nonnegative coefficients with `Σ c_j w_j² ≈ 1` on the support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalityCertificate {
    /// Coefficients over the basis `w_j = Σ_i rotation[j][i] u_i`.
    pub coefficients: Vec<f64>,
    /// Rows are the basis functions used, in terms of the eigenspace basis;
    /// the identity unless the semidefinite stage was needed.
    pub rotation: Vec<Vec<f64>>,
    /// `sup |Σ c_j w_j² − 1|` over the support.
    pub residual: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub dimension: usize,
    pub lambda: f64,
    /// `nnls` or `psd`.
    pub method: String,
    pub seed: u64,
}

fn support_of(masses: &[f64]) -> Vec<usize> {
    let mx = masses.iter().cloned().fold(0.0, f64::max);
    (0..masses.len()).filter(|&x| masses[x] > 1e-14 * mx).collect()
}

/// Certificate from a precomputed eigenspace.
///
/// First a nonnegative least-squares fit of the squared basis functions;
/// if that misses the tolerance, a least-squares fit over positive
/// semidefinite forms `u ↦ uᵀGu`, which covers every finite collection of
/// eigenfunctions in the space.
pub fn certify_space(space: &Eigenspace, masses: &[f64], tol: f64) -> ExtremalityCertificate {
    let supp = support_of(masses);
    let d = space.basis.len();
    let a = DMatrix::from_fn(supp.len(), d, |r, c| space.basis[c][supp[r]].powi(2));
    let b = DVector::from_element(supp.len(), 1.0);
    let (c, converged) = nnls(&a, &b);
    let fit = &a * &c;
    let residual = fit.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let identity: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut cert = ExtremalityCertificate {
        coefficients: c.iter().copied().collect(),
        rotation: identity,
        residual,
        verdict: Verdict::NonExtremal,
        tolerance: tol,
        dimension: d,
        lambda: space.lambda,
        method: "nnls".into(),
        seed: 0,
    };
    if residual > tol && d > 1 {
        let (g, psd_res) = psd_fit(space, &supp, &c);
        if psd_res < cert.residual {
            let (vals, vecs) = sym_eig(g);
            cert.coefficients = vals.iter().map(|v| v.max(0.0)).collect();
            cert.rotation = (0..d).map(|j| (0..d).map(|i| vecs[(i, j)]).collect()).collect();
            cert.residual = psd_res;
            cert.method = "psd".into();
        }
    }
    cert.verdict = if cert.residual <= tol {
        Verdict::Extremal
    } else if converged {
        Verdict::NonExtremal
    } else {
        Verdict::Inconclusive
    };
    cert
}

// Accelerated projected gradient for min Σ_x (u_xᵀ G u_x − 1)² over G ⪰ 0.
fn psd_fit(space: &Eigenspace, supp: &[usize], c0: &DVector<f64>) -> (DMatrix<f64>, f64) {
    let d = space.basis.len();
    let pts: Vec<DVector<f64>> = supp.iter().map(|&x| DVector::from_fn(d, |i, _| space.basis[i][x])).collect();
    let lip = 2.0 * pts.iter().map(|p| p.norm_squared().powi(2)).sum::<f64>();
    let project = |g: DMatrix<f64>| {
        let (vals, vecs) = sym_eig((&g + g.transpose()) * 0.5);
        let dg = DMatrix::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|v| v.max(0.0))));
        &vecs * dg * vecs.transpose()
    };
    let resid = |g: &DMatrix<f64>| pts.iter().map(|p| (p.dot(&(g * p)) - 1.0).abs()).fold(0.0, f64::max);
    let mut g = DMatrix::from_diagonal(c0);
    let mut z = g.clone();
    let mut tk = 1.0f64;
    for _ in 0..400 {
        let mut grad = DMatrix::zeros(d, d);
        for p in &pts {
            let r = p.dot(&(&z * p)) - 1.0;
            grad += p * p.transpose() * (2.0 * r);
        }
        let gn = project(&z - grad / lip);
        let tn = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        z = &gn + (&gn - &g) * ((tk - 1.0) / tn);
        g = gn;
        tk = tn;
    }
    let r = resid(&g);
    (g, r)
}

/// Certificate for `λ_k` of the normalized measure.
pub fn extremality_certificate(
    mesh: &TriangleMesh,
    mu: &DiscreteMeasure,
    k: usize,
    tol: f64,
    opts: &VariationOptions,
) -> Result<ExtremalityCertificate> {
    let s = setup(mesh, mu, k, opts)?;
    let space = eigenspace(&s.result, k, opts.cluster_tol)?;
    if space.basis.is_empty() {
        return Err(Error::invalid("empty eigenspace"));
    }
    let mut c = certify_space(&space, &s.masses, tol);
    c.seed = opts.spectrum.seed;
    Ok(c)
}

/// A deformation direction along which `λ_k` increases to first order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Separation {
    /// Zero-mean, `‖φ‖∞ ≤ 1`.
    pub phi: Vec<f64>,
    /// `min` over unit `u ∈ E_k` of `−∫u²φ dμ`; positive for a separating φ.
    pub margin: f64,
    /// Upper bound on the best achievable margin from the final LP.
    pub lp_bound: f64,
    pub cuts: usize,
    /// `−λ·max_u ∫u²φ dμ`, the right derivative along φ.
    pub right_derivative: f64,
}

/// Direction maximizing the worst-case decrease of `∫u²φ dμ` over the unit
/// sphere of the eigenspace, subject to `∫φ dμ = 0`, `|φ| ≤ 1` and `φ = 0`
/// on `frozen` vertices.
///
/// A one-dimensional space has a closed-form answer (a weighted median split
/// of `u²`). Otherwise a cutting-plane loop solves linear programs over a
/// growing set of unit vectors, adding at each round the direction where the
/// current φ is weakest.
pub fn separate_space(space: &Eigenspace, masses: &[f64], frozen: &[bool], opts: &VariationOptions) -> Result<Separation> {
    let d = space.basis.len();
    let supp = support_of(masses);
    let free: Vec<usize> = supp.iter().copied().filter(|&x| !frozen.get(x).copied().unwrap_or(false)).collect();
    if free.len() < 2 {
        return Err(Error::invalid("fewer than two free support vertices"));
    }
    let n = masses.len();
    let evaluate = |phi: &[f64]| -> (f64, DVector<f64>) {
        let (vals, vecs) = sym_eig(phi_form(space, masses, phi));
        (-vals[d - 1], vecs.column(d - 1).into_owned())
    };
    let finish = |phi: Vec<f64>, lp_bound: f64, cuts: usize| -> Separation {
        let phi = recenter(masses, &free, phi);
        let (margin, _) = evaluate(&phi);
        Separation { right_derivative: space.lambda * margin, phi, margin, lp_bound, cuts }
    };
    if d == 1 {
        let u = &space.basis[0];
        let mut order = free.clone();
        order.sort_by(|&a, &b| (u[b] * u[b]).total_cmp(&(u[a] * u[a])).then(a.cmp(&b)));
        let total: f64 = free.iter().map(|&x| masses[x]).sum();
        let mut phi = vec![0.0; n];
        let mut acc = 0.0;
        for &x in &order {
            let w = masses[x];
            phi[x] = if acc + w <= total / 2.0 {
                -1.0
            } else if acc >= total / 2.0 {
                1.0
            } else {
                // Split vertex: the part below the half-mass line gets −1.
                let f = (total / 2.0 - acc) / w;
                -f + (1.0 - f)
            };
            acc += w;
        }
        let s = finish(phi, f64::NAN, 0);
        return Ok(Separation { lp_bound: s.margin, ..s });
    }
    let mean_mass = free.iter().map(|&x| masses[x]).sum::<f64>() / free.len() as f64;
    let scale = free.len() as f64;
    let mut cuts: Vec<DVector<f64>> = Vec::new();
    for i in 0..d {
        cuts.push(DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 }));
        for j in i + 1..d {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            cuts.push(DVector::from_fn(d, |r, _| if r == i || r == j { s } else { 0.0 }));
            cuts.push(DVector::from_fn(d, |r, _| if r == i { s } else if r == j { -s } else { 0.0 }));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lp_bound = f64::INFINITY;
    for _ in 0..opts.max_cuts {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = free.iter().map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
        let t = lp.add_var(1.0, (-4.0 * scale, 4.0 * scale));
        let mut eq = LinearExpr::empty();
        for (v, &x) in vars.iter().zip(&free) {
            eq.add(*v, masses[x] / mean_mass);
        }
        lp.add_constraint(eq, ComparisonOp::Eq, 0.0);
        for c in &cuts {
            let mut e = LinearExpr::empty();
            for (v, &x) in vars.iter().zip(&free) {
                let s: f64 = (0..d).map(|i| c[i] * space.basis[i][x]).sum();
                e.add(*v, -masses[x] * s * s * scale);
            }
            e.add(t, -1.0);
            lp.add_constraint(e, ComparisonOp::Ge, 0.0);
        }
        let sol = lp
            .solve()
            .map_err(|e| Error::numerical(format!("separation LP failed: {e}")))?
            .into_solution()
            .map_err(|_| Error::numerical("separation LP interrupted"))?;
        let mut phi = vec![0.0; n];
        for (v, &x) in vars.iter().zip(&free) {
            phi[x] = sol.var_value(*v).clamp(-1.0, 1.0);
        }
        lp_bound = lp_bound.min(sol.var_value(t) / scale);
        let (margin, worst) = evaluate(&phi);
        if best.as_ref().is_none_or(|b| margin > b.0) {
            best = Some((margin, phi));
        }
        let bm = best.as_ref().unwrap().0;
        if lp_bound - bm <= opts.net_resolution * lp_bound.abs().max(1e-3) || lp_bound <= 0.0 {
            break;
        }
        cuts.push(worst);
    }
    let (_, phi) = best.expect("at least one LP solved");
    Ok(finish(phi, lp_bound, cuts.len()))
}

fn recenter(masses: &[f64], free: &[usize], mut phi: Vec<f64>) -> Vec<f64> {
    let fm: Vec<f64> = free.iter().map(|&x| masses[x]).collect();
    let fp: Vec<f64> = free.iter().map(|&x| phi[x]).collect();
    let total: f64 = masses.iter().sum();
    let scaled: Vec<f64> = fm.iter().map(|m| m / total).collect();
    let tot_free: f64 = scaled.iter().sum();
    // Centre the free part so the full mean vanishes.
    let mut c = fp.clone();
    for _ in 0..3 {
        let mean: f64 = scaled.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / tot_free;
        if mean == 0.0 {
            break;
        }
        c.iter_mut().for_each(|v| *v -= mean);
    }
    for (i, &x) in free.iter().enumerate() {
        phi[x] = c[i];
    }
    phi
}

/// Separating direction for `λ_k` of the normalized measure, or `None` when
/// the certificate says the measure is extremal (or no direction with
/// positive margin exists).
pub fn separating_direction(
    mesh: &TriangleMesh,
    mu: &DiscreteMeasure,
    k: usize,
    cert_tol: f64,
    opts: &VariationOptions,
) -> Result<Option<Separation>> {
    let s = setup(mesh, mu, k, opts)?;
    let space = eigenspace(&s.result, k, opts.cluster_tol)?;
    if certify_space(&space, &s.masses, cert_tol).verdict == Verdict::Extremal {
        return Ok(None);
    }
    let sep = separate_space(&space, &s.masses, &[], opts)?;
    Ok(if sep.margin > 0.0 { Some(sep) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_phi_examples() {
        let mu = DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        assert_eq!(l_phi(&[1.0, 0.0], &mu, &[1.0, -1.0], 1.0).unwrap(), -1.0);
        assert_eq!(l_phi(&[1.0, 1.0], &mu, &[1.0, -1.0], 3.0).unwrap(), 0.0);
        assert_eq!(l_phi(&[1.0, 0.3], &mu, &[0.0, 0.0], 3.0).unwrap(), 0.0);
        assert!(l_phi(&[0.0, 0.0], &mu, &[1.0, -1.0], 1.0).is_err());
    }
}
