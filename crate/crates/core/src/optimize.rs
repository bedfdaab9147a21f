//! Maximization of `λ₁·μ(M)` over density-capped measures.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{deform, max_ball_mass, random_log_normal_measure, uniform_area_measure, DeformationFamily, DiscreteMeasure};
use crate::mesh::{StiffnessMatrix, TriangleMesh};
use crate::spectrum::{eigenspace, solve_spectrum_with, Eigenspace, MassMatrix, SpectralResult, SpectrumOptions};
use crate::variation::{certify_space, separate_space, ExtremalityCertificate, VariationOptions};

/// Increasing density caps, each with an iteration budget.
///
/// Densities are taken against the normalized area, so the uniform
/// probability measure has density 1 and a cap below 1 is infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCapSchedule {
    pub caps: Vec<f64>,
    pub budgets: Vec<usize>,
}

impl DensityCapSchedule {
    pub fn new(caps: Vec<f64>, budgets: Vec<usize>) -> Result<Self> {
        if caps.is_empty() || caps.len() != budgets.len() {
            return Err(Error::invalid("schedule needs one budget per cap"));
        }
        if caps.iter().any(|c| !(c.is_finite() && *c > 0.0)) || caps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("caps must be positive and strictly increasing"));
        }
        Ok(DensityCapSchedule { caps, budgets })
    }

    pub fn uniform_budget(caps: Vec<f64>, budget: usize) -> Result<Self> {
        let n = caps.len();
        Self::new(caps, vec![budget; n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialMeasure {
    /// The normalized area measure.
    Uniform,
    /// Area measure times a smoothed log-normal factor.
    Perturbed { sigma: f64, smoothing: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximizerOptions {
    /// Certificate residual that ends a cap stage; also the stationarity
    /// threshold for the separating LP bound.
    pub tol: f64,
    /// Relative width of the cluster treated as `λ₁`'s eigenspace.
    pub cluster_rel: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Initial step is `step0 / ‖φ‖∞`.
    pub step0: f64,
    pub max_backtracks: usize,
    pub initial: InitialMeasure,
    pub spectrum: SpectrumOptions,
    pub net_resolution: f64,
    pub concentration_eps: f64,
    pub concentration_rho_edges: f64,
    #[serde(skip)]
    pub cancel: Option<Arc<AtomicBool>>,
    /// Stop after this many iterations in total (for checkpoint tests);
    /// `None` runs the whole schedule.
    pub stop_after: Option<usize>,
}

impl Default for MaximizerOptions {
    fn default() -> Self {
        MaximizerOptions {
            tol: 1e-3,
            cluster_rel: 1e-2,
            armijo: 1e-4,
            shrink: 0.5,
            step0: 0.1,
            max_backtracks: 20,
            initial: InitialMeasure::Perturbed { sigma: 0.3, smoothing: 3 },
            spectrum: SpectrumOptions { tol: 1e-9, ..Default::default() },
            net_resolution: 1e-2,
            concentration_eps: 0.05,
            concentration_rho_edges: 3.0,
            cancel: None,
            stop_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub stage: usize,
    pub cap: f64,
    /// `λ₁·μ(M)` of the iterate (the measures are probabilities).
    pub lambda1: f64,
    pub step: f64,
    pub certificate_residual: f64,
    pub lp_bound: f64,
    pub cluster: usize,
    /// `max_x μ(B(x, ρ))`.
    pub concentration: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageEnd {
    Certified,
    Stationary,
    LineSearch,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub cap: f64,
    pub iterations: usize,
    pub end: StageEnd,
    pub lambda1: f64,
    pub saturated: Vec<usize>,
    pub saturated_area_fraction: f64,
    /// Density at the end of the stage.
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "detail")]
pub enum RunStatus {
    Complete,
    Cancelled,
    Paused,
    NumericalFailure(String),
}

/// Everything needed to continue a run bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schedule: DensityCapSchedule,
    pub seed: u64,
    pub stage: usize,
    pub stage_iteration: usize,
    pub iteration: usize,
    pub weights: Vec<f64>,
    /// `λ₁` of `weights` as accepted by the last line search; reused so
    /// that solver noise cannot make the trace decrease.
    #[serde(default)]
    pub lambda1: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub stages: Vec<StageReport>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximizerResult {
    pub measure: DiscreteMeasure,
    pub lambda1: f64,
    pub trace: Vec<TraceRow>,
    pub stages: Vec<StageReport>,
    /// Saturated vertices at the last completed cap.
    pub saturated_set: Vec<usize>,
    pub certificate: Option<ExtremalityCertificate>,
    pub status: RunStatus,
    pub checkpoint: Checkpoint,
}

/// Density of `mu` against the normalized area measure.
pub fn density(mesh: &TriangleMesh, mu: &DiscreteMeasure) -> Vec<f64> {
    let area = mesh.vertex_areas();
    let total_area: f64 = area.iter().sum();
    let total = mu.total_mass();
    mu.masses().iter().zip(&area).map(|(m, a)| m / total * total_area / a).collect()
}

/// Vertices of the support where the density reaches `(1 − eta)·cap`.
pub fn saturated_vertices(mesh: &TriangleMesh, mu: &DiscreteMeasure, cap: f64, eta: f64) -> Vec<usize> {
    let d = density(mesh, mu);
    let m = mu.masses();
    (0..d.len()).filter(|&i| m[i] > 0.0 && d[i] >= (1.0 - eta) * cap).collect()
}

fn area_fraction(mesh: &TriangleMesh, set: &[usize]) -> f64 {
    let area = mesh.vertex_areas();
    0.0 + set.iter().map(|&i| area[i]).sum::<f64>() / area.iter().sum::<f64>()
}

/// Projection onto `{w ≥ 0, Σw = 1, w_x ≤ cap·a_x/A}` by clipping and
/// rescaling the unclipped part, repeated to a fixed point.
pub fn project_to_cap(area: &[f64], weights: &[f64], cap: f64) -> Result<Vec<f64>> {
    let total_area: f64 = area.iter().sum();
    let bound: Vec<f64> = area.iter().map(|a| cap * a / total_area).collect();
    if bound.iter().sum::<f64>() < 1.0 - 1e-12 {
        return Err(Error::invalid("cap below uniform density"));
    }
    let total: f64 = weights.iter().sum();
    let mut w: Vec<f64> = weights.iter().map(|x| x / total).collect();
    let mut clipped = vec![false; w.len()];
    for _ in 0..50 {
        let mut changed = false;
        for i in 0..w.len() {
            if !clipped[i] && w[i] > bound[i] {
                clipped[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let fixed: f64 = (0..w.len()).filter(|&i| clipped[i]).map(|i| bound[i]).sum();
        let free: f64 = (0..w.len()).filter(|&i| !clipped[i]).map(|i| w[i]).sum();
        if !(free > 0.0) {
            return Err(Error::invalid("cap projection left no free mass"));
        }
        let s = (1.0 - fixed) / free;
        for i in 0..w.len() {
            w[i] = if clipped[i] { bound[i] } else { w[i] * s };
        }
    }
    for i in 0..w.len() {
        w[i] = w[i].min(bound[i]);
    }
    Ok(w)
}

fn mix_seed(seed: u64, iteration: usize) -> u64 {
    seed ^ (iteration as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Evaluation {
    result: SpectralResult,
    space: Eigenspace,
}

fn evaluate(k: &StiffnessMatrix, w: &[f64], opts: &MaximizerOptions, seed: u64) -> Result<Evaluation> {
    let m = MassMatrix { diag: w.to_vec() };
    let mut kmax = 4;
    loop {
        let so = SpectrumOptions { seed, ..opts.spectrum.clone() };
        let result = solve_spectrum_with(k, &m, kmax, &so)?;
        let space = eigenspace(&result, 1, opts.cluster_rel)?;
        if !space.truncated || kmax >= 32 {
            let space = Eigenspace { indices: space.indices.into_iter().filter(|&j| j >= 1).collect(), ..space };
            let basis = space.indices.iter().map(|&j| result.eigenfunctions[j].clone()).collect::<Vec<_>>();
            let multiplicity = basis.len();
            return Ok(Evaluation { space: Eigenspace { basis, multiplicity, ..space }, result });
        }
        kmax *= 2;
    }
}

fn lambda1_of(k: &StiffnessMatrix, w: &[f64], opts: &MaximizerOptions, seed: u64) -> Result<f64> {
    let so = SpectrumOptions { seed, ..opts.spectrum.clone() };
    Ok(solve_spectrum_with(k, &MassMatrix { diag: w.to_vec() }, 1, &so)?.lambda(1))
}

/// Projected ascent on `λ₁` over the caps of `schedule`.
///
/// Each iteration takes the cluster of eigenvalues within `cluster_rel` of
/// `λ₁`, stops the stage if a nonnegative combination of squared cluster
/// eigenfunctions is constant on the support, and otherwise deforms the
/// measure along the separating direction (vanishing on the saturated set),
/// backtracking until the Armijo condition holds, then projects back onto
/// the cap.
pub fn maximize_lambda1(
    mesh: &TriangleMesh,
    k: &StiffnessMatrix,
    schedule: &DensityCapSchedule,
    seed: u64,
    opts: &MaximizerOptions,
) -> Result<MaximizerResult> {
    if !mesh.is_connected() {
        return Err(Error::invalid("maximization needs a connected mesh"));
    }
    let area = mesh.vertex_areas();
    let start = match opts.initial {
        InitialMeasure::Uniform => uniform_area_measure(mesh)?,
        InitialMeasure::Perturbed { sigma, smoothing } => random_log_normal_measure(mesh, sigma, smoothing, seed)?,
    };
    let weights = project_to_cap(&area, &start.normalized().weights, schedule.caps[0])?;
    let cp = Checkpoint {
        schedule: schedule.clone(),
        seed,
        stage: 0,
        stage_iteration: 0,
        iteration: 0,
        weights,
        lambda1: None,
        trace: Vec::new(),
        stages: Vec::new(),
    };
    resume(mesh, k, cp, opts)
}

/// Continues a run from a checkpoint. Resuming the checkpoint of a paused or
/// cancelled run reproduces the uninterrupted run exactly.
pub fn resume(mesh: &TriangleMesh, k: &StiffnessMatrix, mut cp: Checkpoint, opts: &MaximizerOptions) -> Result<MaximizerResult> {
    let n = mesh.n_vertices();
    if cp.weights.len() != n || k.n() != n {
        return Err(Error::invalid("checkpoint does not match the mesh"));
    }
    let area = mesh.vertex_areas();
    let rho = opts.concentration_rho_edges * mesh.median_edge_length();
    let vopts = VariationOptions { cluster_tol: opts.cluster_rel, spectrum: opts.spectrum.clone(), net_resolution: opts.net_resolution, max_cuts: 100 };
    let schedule = cp.schedule.clone();
    let finish = |cp: Checkpoint, status: RunStatus, certificate: Option<ExtremalityCertificate>| -> Result<MaximizerResult> {
        let measure = DiscreteMeasure::from_weights(cp.weights.clone())?;
        let lambda1 = cp.trace.last().map_or(f64::NAN, |r| r.lambda1);
        let saturated_set = cp.stages.last().map(|s| s.saturated.clone()).unwrap_or_default();
        Ok(MaximizerResult { measure, lambda1, trace: cp.trace.clone(), stages: cp.stages.clone(), saturated_set, certificate, status, checkpoint: cp })
    };
    let mut last_cert = None;
    while cp.stage < schedule.caps.len() {
        let cap = schedule.caps[cp.stage];
        let budget = schedule.budgets[cp.stage];
        let mut end = StageEnd::Budget;
        while cp.stage_iteration < budget {
            if opts.cancel.as_ref().is_some_and(|c| c.load(Ordering::SeqCst)) {
                return finish(cp, RunStatus::Cancelled, last_cert);
            }
            if opts.stop_after.is_some_and(|s| cp.iteration >= s) {
                return finish(cp, RunStatus::Paused, last_cert);
            }
            let it_seed = mix_seed(cp.seed, cp.iteration);
            let ev = match evaluate(k, &cp.weights, opts, it_seed) {
                Ok(e) => e,
                Err(e) => return finish(cp, RunStatus::NumericalFailure(e.to_string()), last_cert),
            };
            let lam = cp.lambda1.unwrap_or(ev.result.lambda(1));
            let cert = certify_space(&ev.space, &cp.weights, opts.tol);
            let mu = DiscreteMeasure::from_weights(cp.weights.clone())?;
            let concentration = max_ball_mass(mesh, &mu, &[rho])?[0];
            let mut row = TraceRow {
                iteration: cp.iteration,
                stage: cp.stage,
                cap,
                lambda1: lam,
                step: 0.0,
                certificate_residual: cert.residual,
                lp_bound: f64::NAN,
                cluster: ev.space.multiplicity,
                concentration,
                backtracks: 0,
            };
            let certified = cert.residual <= opts.tol;
            last_cert = Some(cert);
            if certified {
                cp.trace.push(row);
                cp.iteration += 1;
                end = StageEnd::Certified;
                break;
            }
            let dens = density(mesh, &mu);
            let frozen: Vec<bool> = dens.iter().map(|&d| d >= cap * (1.0 - 1e-9)).collect();
            let sep = match separate_space(&ev.space, &cp.weights, &frozen, &vopts) {
                Ok(s) => s,
                Err(e) => return finish(cp, RunStatus::NumericalFailure(e.to_string()), last_cert),
            };
            row.lp_bound = sep.lp_bound;
            if sep.lp_bound <= opts.tol || sep.margin <= 0.0 {
                cp.trace.push(row);
                cp.iteration += 1;
                end = StageEnd::Stationary;
                break;
            }
            let fam = DeformationFamily::new(&mu, &sep.phi)?;
            let mut t = opts.step0 / fam.phi_sup.max(1e-300);
            let slope = lam * sep.margin;
            let mut accepted = None;
            for b in 0..=opts.max_backtracks {
                let trial = project_to_cap(&area, &deform(&fam, t)?.weights, cap)?;
                let lt = match lambda1_of(k, &trial, opts, it_seed) {
                    Ok(v) => v,
                    Err(e) => return finish(cp, RunStatus::NumericalFailure(e.to_string()), last_cert),
                };
                if lt >= lam + opts.armijo * t * slope {
                    accepted = Some((trial, b, lt));
                    break;
                }
                t *= opts.shrink;
            }
            match accepted {
                Some((w, b, lt)) => {
                    cp.lambda1 = Some(lt);
                    row.step = t;
                    row.backtracks = b;
                    cp.trace.push(row);
                    cp.weights = w;
                    cp.iteration += 1;
                    cp.stage_iteration += 1;
                }
                None => {
                    row.backtracks = opts.max_backtracks + 1;
                    cp.trace.push(row);
                    cp.iteration += 1;
                    end = StageEnd::LineSearch;
                    break;
                }
            }
        }
        let mu = DiscreteMeasure::from_weights(cp.weights.clone())?;
        let saturated = saturated_vertices(mesh, &mu, cap, 1e-9);
        let lambda1 = match cp.trace.last() {
            Some(r) if r.stage == cp.stage => r.lambda1,
            _ => lambda1_of(k, &cp.weights, opts, mix_seed(cp.seed, cp.iteration))?,
        };
        cp.stages.push(StageReport {
            cap,
            iterations: cp.stage_iteration,
            end,
            lambda1,
            saturated_area_fraction: area_fraction(mesh, &saturated),
            saturated,
            density: density(mesh, &mu),
        });
        cp.stage += 1;
        cp.stage_iteration = 0;
    }
    // Certificate at the final measure.
    let ev = evaluate(k, &cp.weights, opts, mix_seed(cp.seed, cp.iteration))?;
    let mut cert = certify_space(&ev.space, &cp.weights, opts.tol);
    cert.seed = cp.seed;
    finish(cp, RunStatus::Complete, Some(cert))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationEntry {
    /// `max_x μ(B(x, ρ))`.
    pub ball_mass: f64,
    pub flagged: bool,
    /// Mass of the heaviest vertex.
    pub heaviest: f64,
    /// The concentration is spread over more than one vertex cell: no
    /// vertex carries more than `atom_cap` of the mass.
    pub resolved: bool,
    pub lambda1_mass: f64,
    /// Whether `λ₁·μ(M) ≤ 8π·(1 + slack)`; checked for flagged, resolved
    /// entries.
    pub ceiling_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub eps: f64,
    pub rho: f64,
    pub slack: f64,
    pub atom_cap: f64,
    pub entries: Vec<ConcentrationEntry>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConcentrationOptions {
    pub eps: f64,
    pub rho_edges: f64,
    pub slack: f64,
    pub atom_cap: f64,
}

impl Default for ConcentrationOptions {
    fn default() -> Self {
        ConcentrationOptions { eps: 0.05, rho_edges: 3.0, slack: 0.05, atom_cap: 0.5 }
    }
}

/// Flags measures with at least `1 − eps` of their mass in a ball of radius
/// `rho_edges` median edge lengths, and checks the `8π` ceiling on those.
///
/// A single vertex has positive capacity on a mesh, so once one vertex holds
/// most of the mass `λ₁` grows without bound as the rest drains away; such
/// measures are point masses at mesh scale and are reported as unresolved
/// rather than checked.
pub fn concentration_monitor(
    mesh: &TriangleMesh,
    k: &StiffnessMatrix,
    measures: &[DiscreteMeasure],
    opts: &ConcentrationOptions,
) -> Result<ConcentrationReport> {
    let ConcentrationOptions { eps, rho_edges, slack, atom_cap } = *opts;
    let rho = rho_edges * mesh.median_edge_length();
    let mut entries = Vec::new();
    for mu in measures {
        let mu = mu.normalized();
        let ball_mass = max_ball_mass(mesh, &mu, &[rho])?[0];
        let flagged = ball_mass >= 1.0 - eps;
        let heaviest = mu.masses().iter().cloned().fold(0.0, f64::max);
        let resolved = heaviest <= atom_cap;
        let spec = solve_spectrum_with(k, &MassMatrix { diag: mu.masses() }, 1, &SpectrumOptions::default())?;
        let l = spec.normalized(1);
        let ceiling_ok = (flagged && resolved).then(|| l <= 8.0 * PI * (1.0 + slack));
        entries.push(ConcentrationEntry { ball_mass, flagged, heaviest, resolved, lambda1_mass: l, ceiling_ok });
    }
    let pass = entries.iter().all(|e| e.ceiling_ok != Some(false));
    Ok(ConcentrationReport { eps, rho, slack, atom_cap, entries, pass })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularSetEstimate {
    /// Vertices with density `≥ (1 − eta)·C` at the final cap.
    pub vertices: Vec<usize>,
    pub area_fraction: f64,
    /// Intersection of the per-cap sets.
    pub nested: Vec<usize>,
    pub nested_area_fraction: f64,
    /// `(C_n, area fraction)` per cap.
    pub per_cap: Vec<(f64, f64)>,
}

pub fn singular_set_estimate(mesh: &TriangleMesh, result: &MaximizerResult, eta: f64) -> Result<SingularSetEstimate> {
    if result.stages.is_empty() {
        return Err(Error::invalid("result has no completed cap stage"));
    }
    let support: Vec<bool> = result.measure.masses().iter().map(|&m| m > 0.0).collect();
    let pick = |s: &StageReport| -> Vec<usize> { (0..s.density.len()).filter(|&i| support[i] && s.density[i] >= (1.0 - eta) * s.cap).collect() };
    let mut nested: Option<Vec<usize>> = None;
    let mut per_cap = Vec::new();
    for s in &result.stages {
        let set = pick(s);
        per_cap.push((s.cap, area_fraction(mesh, &set)));
        nested = Some(match nested {
            None => set,
            Some(prev) => prev.into_iter().filter(|v| set.binary_search(v).is_ok()).collect(),
        });
    }
    let vertices = pick(result.stages.last().unwrap());
    let nested = nested.unwrap();
    Ok(SingularSetEstimate {
        area_fraction: area_fraction(mesh, &vertices),
        nested_area_fraction: area_fraction(mesh, &nested),
        vertices,
        nested,
        per_cap,
    })
}
