//! The measure-weighted eigenproblem `K u = λ M u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenpairs, EigenOptions, SolverKind};
use crate::measure::DiscreteMeasure;
use crate::mesh::{assemble_stiffness, StiffnessMatrix, TriangleMesh};

/// Lumped (diagonal) mass matrix of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    pub diag: Vec<f64>,
}

impl MassMatrix {
    pub fn rank(&self) -> usize {
        self.diag.iter().filter(|&&m| m > 0.0).count()
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `∫ u v dμ`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::linalg::wdot(&self.diag, u, v)
    }
}

pub fn assemble_mass(mesh: &TriangleMesh, mu: &DiscreteMeasure) -> Result<MassMatrix> {
    if mu.n_vertices() != mesh.n_vertices() {
        return Err(Error::invalid(format!(
            "measure has {} vertices, mesh has {}",
            mu.n_vertices(),
            mesh.n_vertices()
        )));
    }
    Ok(MassMatrix { diag: mu.masses() })
}

/// `uᵀKu / uᵀMu`; `+∞` when only the denominator vanishes.
pub fn rayleigh(k: &StiffnessMatrix, m: &MassMatrix, u: &[f64]) -> Result<f64> {
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("Rayleigh quotient of the zero function"));
    }
    let num = k.quad(u).max(0.0);
    let den = m.inner(u, u);
    if den > 0.0 {
        Ok(num / den)
    } else if num > 1e-300 {
        Ok(f64::INFINITY)
    } else {
        Err(Error::invalid("Rayleigh quotient 0/0: u has no energy and no mass"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub tol: f64,
    pub kind: SolverKind,
    pub seed: u64,
    /// Extra eigenpairs computed past `k_max` so that the cluster of
    /// `λ_{k_max}` is complete.
    pub guard: usize,
    pub max_iter: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { tol: 1e-10, kind: SolverKind::Auto, seed: 0, guard: 4, max_iter: 400 }
    }
}

/// Eigenvalues and M-orthonormal eigenfunctions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Ascending; `requested + guard` entries, `+∞` past the finite part.
    pub eigenvalues: Vec<f64>,
    /// One per finite computed eigenvalue.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Number of finite eigenvalues of the problem, the rank of `M`.
    pub n_finite: usize,
    /// `k_max + 1`.
    pub requested: usize,
    pub total_mass: f64,
}

impl SpectralResult {
    /// `λ_k`, `+∞` beyond the finite spectrum.
    pub fn lambda(&self, k: usize) -> f64 {
        if k >= self.n_finite {
            return f64::INFINITY;
        }
        self.eigenvalues.get(k).copied().unwrap_or(f64::NAN)
    }

    /// `λ_k·μ(M)`.
    pub fn normalized(&self, k: usize) -> f64 {
        self.lambda(k) * self.total_mass
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Groups of indices whose eigenvalues agree within `cluster_tol`
    /// (relative, floored at one).
    pub fn clusters(&self, cluster_tol: f64) -> Vec<Vec<usize>> {
        let nf = self.eigenfunctions.len();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for j in 0..nf {
            match out.last_mut() {
                Some(c) if (self.eigenvalues[j] - self.eigenvalues[c[0]]).abs() <= cluster_tol * self.eigenvalues[c[0]].max(1.0) => {
                    c.push(j)
                }
                _ => out.push(vec![j]),
            }
        }
        out
    }
}

/// First `k_max + 1` eigenpairs of `K u = λ M u`, plus guard pairs.
///
/// Singular `M` is handled by restricting to the support with harmonic
/// extension. Constants on each connected component are deflated exactly, so
/// `λ₀ = 0` with a constant eigenfunction. Components of the mesh that carry
/// no mass make the problem ill-posed and are rejected.
pub fn solve_spectrum(k: &StiffnessMatrix, m: &MassMatrix, k_max: usize, tol: f64) -> Result<SpectralResult> {
    solve_spectrum_with(k, m, k_max, &SpectrumOptions { tol, ..Default::default() })
}

pub fn solve_spectrum_with(k: &StiffnessMatrix, m: &MassMatrix, k_max: usize, opts: &SpectrumOptions) -> Result<SpectralResult> {
    if k_max < 1 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if k.n() != m.n() {
        return Err(Error::invalid("stiffness and mass sizes differ"));
    }
    let (label, ncomp) = k.components();
    let mut deflate = vec![vec![0.0; k.n()]; ncomp];
    let mut comp_mass = vec![0.0; ncomp];
    for (i, &c) in label.iter().enumerate() {
        deflate[c][i] = 1.0;
        comp_mass[c] += m.diag[i];
    }
    if let Some(c) = comp_mass.iter().position(|&x| x <= 0.0) {
        return Err(Error::invalid(format!("connected component {c} carries no mass")));
    }
    let requested = k_max + 1;
    let nev = requested + opts.guard;
    let eo = EigenOptions { kind: opts.kind, tol: opts.tol, seed: opts.seed, max_iter: opts.max_iter, ..Default::default() };
    let pairs = smallest_eigenpairs(k, &m.diag, nev, &deflate, &eo)?;
    let mut eigenvalues = pairs.values.clone();
    eigenvalues.resize(nev, f64::INFINITY);
    Ok(SpectralResult {
        eigenvalues,
        eigenfunctions: pairs.vectors,
        residuals: pairs.residuals,
        n_finite: pairs.support_rank,
        requested,
        total_mass: m.trace(),
    })
}

/// Stiffness, mass and spectrum in one call.
pub fn spectrum_of(mesh: &TriangleMesh, mu: &DiscreteMeasure, k_max: usize, opts: &SpectrumOptions) -> Result<SpectralResult> {
    let k = assemble_stiffness(mesh);
    let m = assemble_mass(mesh, mu)?;
    solve_spectrum_with(&k, &m, k_max, opts)
}

/// Eigenfunctions of the full eigenvalue `λ_k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenspace {
    pub k: usize,
    pub lambda: f64,
    /// Indices into the spectral result.
    pub indices: Vec<usize>,
    pub basis: Vec<Vec<f64>>,
    pub multiplicity: usize,
    pub cluster_tol: f64,
    /// The cluster reaches the last computed eigenpair, so it may continue
    /// past what was computed.
    pub truncated: bool,
}

/// All computed eigenfunctions with `|λ_j − λ_k| ≤ cluster_tol·max(1, λ_k)`,
/// including indices below `k`.
pub fn eigenspace(result: &SpectralResult, k: usize, cluster_tol: f64) -> Result<Eigenspace> {
    let nf = result.eigenfunctions.len();
    if k >= nf {
        return Err(Error::invalid(format!("index {k} beyond the {nf} computed finite eigenpairs")));
    }
    let lam = result.eigenvalues[k];
    let width = cluster_tol * lam.max(1.0);
    let indices: Vec<usize> = (0..nf).filter(|&j| (result.eigenvalues[j] - lam).abs() <= width).collect();
    let truncated = indices.last() == Some(&(nf - 1)) && nf < result.n_finite;
    Ok(Eigenspace {
        k,
        lambda: lam,
        basis: indices.iter().map(|&j| result.eigenfunctions[j].clone()).collect(),
        multiplicity: indices.len(),
        indices,
        cluster_tol,
        truncated,
    })
}

/// `max_j |⟨Ku, e_j⟩ − λ_k⟨Mu, e_j⟩| / ‖u‖₂` for the `k`-th eigenpair.
pub fn weak_eigen_identity_residual(k: &StiffnessMatrix, m: &MassMatrix, result: &SpectralResult, idx: usize) -> Result<f64> {
    let u = result
        .eigenfunctions
        .get(idx)
        .ok_or_else(|| Error::invalid(format!("index {idx} beyond the computed finite spectrum")))?;
    Ok(identity_residual(k, m, u, result.eigenvalues[idx]))
}

pub(crate) fn identity_residual(k: &StiffnessMatrix, m: &MassMatrix, u: &[f64], lam: f64) -> f64 {
    let ku = k.mul(u);
    let r = ku.iter().zip(u).zip(&m.diag).map(|((a, b), w)| (a - lam * w * b).abs()).fold(0.0, f64::max);
    r / crate::linalg::norm2(u)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemicontinuityReport {
    pub k: usize,
    pub sequence: Vec<f64>,
    /// Maximum over the second half of the sequence.
    pub limsup_estimate: f64,
    pub lambda_limit: f64,
    pub pass: bool,
}

/// Upper semicontinuity check of `λ_k` along measures converging to `mu`.
pub fn semicontinuity_probe(
    mesh: &TriangleMesh,
    measures: &[DiscreteMeasure],
    mu: &DiscreteMeasure,
    k: usize,
    tol: f64,
) -> Result<SemicontinuityReport> {
    if measures.is_empty() {
        return Err(Error::invalid("empty measure sequence"));
    }
    let stiff = assemble_stiffness(mesh);
    let opts = SpectrumOptions::default();
    let lam = |nu: &DiscreteMeasure| -> Result<f64> {
        if (nu.total_mass() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("semicontinuity probe needs probability measures"));
        }
        let m = assemble_mass(mesh, nu)?;
        Ok(solve_spectrum_with(&stiff, &m, k.max(1), &opts)?.lambda(k))
    };
    let sequence = measures.iter().map(lam).collect::<Result<Vec<f64>>>()?;
    let lambda_limit = lam(mu)?;
    let tail = &sequence[sequence.len() / 2..];
    let limsup_estimate = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = limsup_estimate <= lambda_limit + tol * lambda_limit.abs().max(1.0);
    Ok(SemicontinuityReport { k, sequence, limsup_estimate, lambda_limit, pass })
}
