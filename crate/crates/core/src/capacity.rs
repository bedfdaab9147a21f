//! Capacities, fundamental tones and isocapacity constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenpairs, Cholesky, CsrMatrix, EigenOptions};
use crate::measure::DiscreteMeasure;
use crate::mesh::{graph_ball, Region, StiffnessMatrix, TriangleMesh};

/// A pair `F ⊆ G`: potentials are 1 on `F` and vanish off `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capacitor {
    pub f: Region,
    pub g: Region,
}

impl Capacitor {
    pub fn new(f: Region, g: Region) -> Result<Self> {
        if !f.is_subset_of(&g) {
            return Err(Error::invalid("capacitor needs F inside G"));
        }
        Ok(Capacitor { f, g })
    }
}

/// Equilibrium potential of a capacitor and its energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Capacity {
    pub value: f64,
    pub potential: Vec<f64>,
}

/// Solves `K_ff u_f = −K_fF 1` on the free vertices `G ∖ F`, with `u = 1` on
/// `F` and `u = 0` elsewhere.
fn potential(k: &CsrMatrix, one: &[bool], free: &[bool]) -> Result<Vec<f64>> {
    let n = k.n();
    let mut u: Vec<f64> = one.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
    if idx.is_empty() {
        return Ok(u);
    }
    let kff = k.principal(&idx);
    let (label, count) = kff.components();
    let mut anchored = vec![false; count];
    for (local, &i) in idx.iter().enumerate() {
        if k.row(i).any(|(j, v)| !free[j] && v != 0.0) {
            anchored[label[local]] = true;
        }
    }
    if let Some(c) = anchored.iter().position(|a| !a) {
        let v = idx[label.iter().position(|&l| l == c).unwrap()];
        return Err(Error::invalid(format!(
            "free component containing vertex {v} touches neither F nor the complement of G; the capacity problem is singular"
        )));
    }
    let mut rhs = vec![0.0; idx.len()];
    for (local, &i) in idx.iter().enumerate() {
        rhs[local] = -k.row(i).filter(|&(j, _)| one[j]).map(|(_, v)| v).sum::<f64>();
    }
    let chol = Cholesky::new(&kff, None)?;
    chol.solve_in_place(&mut rhs);
    for (local, &i) in idx.iter().enumerate() {
        u[i] = rhs[local];
    }
    Ok(u)
}

/// `CAP(F, G)`: minimal energy `uᵀKu` with `u = 1` on `F`, `u = 0` off `G`.
pub fn cap(mesh: &TriangleMesh, k: &StiffnessMatrix, capacitor: &Capacitor) -> Result<Capacity> {
    let n = mesh.n_vertices();
    if k.n() != n {
        return Err(Error::invalid("stiffness matrix does not match the mesh"));
    }
    if let Some(&v) = capacitor.g.vertices.last() {
        if v >= n {
            return Err(Error::VertexOutOfRange(v, n));
        }
    }
    if capacitor.f.is_empty() {
        return Ok(Capacity { value: 0.0, potential: vec![0.0; n] });
    }
    if capacitor.g.len() == n {
        return Err(Error::invalid("G covers the whole mesh; CAP(F, G) needs a nonempty complement"));
    }
    let one = capacitor.f.mask(n);
    let g = capacitor.g.mask(n);
    let free: Vec<bool> = (0..n).map(|i| g[i] && !one[i]).collect();
    let u = potential(k, &one, &free)?;
    Ok(Capacity { value: k.quad(&u), potential: u })
}

/// Capacity relative to the whole surface: minimal `uᵀKu + uᵀAu` with
/// `u = 1` on `F`, `A` the lumped area matrix.
pub fn whole_surface_capacity(mesh: &TriangleMesh, k: &StiffnessMatrix, f: &Region) -> Result<Capacity> {
    let n = mesh.n_vertices();
    let area = mesh.vertex_areas();
    let mut t: Vec<(usize, usize, f64)> = k.triplets().collect();
    t.extend((0..n).map(|i| (i, i, area[i])));
    let ka = CsrMatrix::from_triplets(n, t);
    let one = f.mask(n);
    let free: Vec<bool> = one.iter().map(|b| !b).collect();
    let u = potential(&ka, &one, &free)?;
    Ok(Capacity { value: ka.quad(&u), potential: u })
}

fn check_omega(mesh: &TriangleMesh, omega: &Region) -> Result<()> {
    let n = mesh.n_vertices();
    if omega.is_empty() {
        return Err(Error::invalid("empty domain"));
    }
    if omega.len() >= n {
        return Err(Error::invalid("domain must be proper: its complement is empty"));
    }
    if *omega.vertices.last().unwrap() >= n {
        return Err(Error::VertexOutOfRange(*omega.vertices.last().unwrap(), n));
    }
    Ok(())
}

/// Tone and its eigenfunction (nonnegative, zero off ω, max 1).
fn tone_pair(mesh: &TriangleMesh, k: &StiffnessMatrix, mu: &DiscreteMeasure, omega: &Region, opts: &EigenOptions) -> Result<(f64, Vec<f64>)> {
    check_omega(mesh, omega)?;
    let masses = mu.masses();
    let mw: Vec<f64> = omega.vertices.iter().map(|&v| masses[v]).collect();
    let n = mesh.n_vertices();
    if mw.iter().all(|&w| w == 0.0) {
        return Ok((f64::INFINITY, vec![0.0; n]));
    }
    let kw = k.principal(&omega.vertices);
    let pairs = smallest_eigenpairs(&kw, &mw, 1, &[], opts)?;
    let mut u = vec![0.0; n];
    let sign = if pairs.vectors[0].iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let mx = pairs.vectors[0].iter().fold(0.0f64, |m, v| m.max((sign * v).abs()));
    for (local, &v) in omega.vertices.iter().enumerate() {
        u[v] = sign * pairs.vectors[0][local] / mx;
    }
    Ok((pairs.values[0], u))
}

/// `λ*(ω, μ)`: the least Rayleigh quotient over functions vanishing off ω.
/// `+∞` when μ(ω) = 0.
pub fn fundamental_tone(mesh: &TriangleMesh, k: &StiffnessMatrix, mu: &DiscreteMeasure, omega: &Region) -> Result<f64> {
    Ok(tone_pair(mesh, k, mu, omega, &EigenOptions::default())?.0)
}

/// Which candidate sets `F ⊆ ω` are tried for the isocapacity constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateFamily {
    pub balls: bool,
    pub ball_centers: usize,
    pub tone_levels: bool,
    pub potential_levels: bool,
    pub heavy_vertices: usize,
    pub levels: usize,
}

impl Default for CandidateFamily {
    fn default() -> Self {
        CandidateFamily { balls: true, ball_centers: 16, tone_levels: true, potential_levels: true, heavy_vertices: 4, levels: 9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub size: usize,
    pub mass: f64,
    pub cap: f64,
    pub ratio: f64,
}

/// Lower estimate of `β(ω, μ) = sup_F μ(F)/CAP(F, ω)` over a finite family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsocapacityEstimate {
    pub beta_lower: f64,
    /// Index into `candidates` of the maximizer, if any had positive mass.
    pub best: Option<usize>,
    pub candidates: Vec<Candidate>,
    pub tone: f64,
}

fn levels_of(u: &[f64], omega: &Region, count: usize) -> Vec<(f64, Region)> {
    let mx = omega.vertices.iter().fold(0.0f64, |m, &v| m.max(u[v]));
    if !(mx > 0.0) {
        return Vec::new();
    }
    (1..=count)
        .map(|i| {
            let s = i as f64 / (count + 1) as f64;
            (s, Region::custom(omega.vertices.iter().copied().filter(|&v| u[v] >= s * mx).collect()))
        })
        .filter(|(_, r)| !r.is_empty())
        .collect()
}

/// `β_lower` over graph balls inside ω, heavy single vertices, superlevel
/// sets of the tone eigenfunction and superlevel sets of the best
/// equilibrium potential found.
pub fn isocapacity_constant(
    mesh: &TriangleMesh,
    k: &StiffnessMatrix,
    mu: &DiscreteMeasure,
    omega: &Region,
    family: &CandidateFamily,
) -> Result<IsocapacityEstimate> {
    check_omega(mesh, omega)?;
    let masses = mu.masses();
    let (tone, tone_fn) = tone_pair(mesh, k, mu, omega, &EigenOptions::default())?;
    let mut sets: Vec<(String, Region)> = Vec::new();
    if family.balls {
        let h = mesh.median_edge_length();
        let stride = (omega.len() / family.ball_centers.max(1)).max(1);
        for &c in omega.vertices.iter().step_by(stride).take(family.ball_centers) {
            let mut r = 1.01 * h;
            loop {
                let b = graph_ball(mesh, c, r)?;
                if !b.is_subset_of(omega) {
                    break;
                }
                sets.push((format!("ball({c}, {r:.4e})"), b));
                r *= 2.0;
            }
        }
    }
    if family.heavy_vertices > 0 {
        let mut order = omega.vertices.clone();
        order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
        for &v in order.iter().take(family.heavy_vertices) {
            sets.push((format!("vertex({v})"), Region::custom(vec![v])));
        }
    }
    if family.tone_levels {
        for (s, r) in levels_of(&tone_fn, omega, family.levels) {
            sets.push((format!("tone-level({s:.3})"), r));
        }
    }
    if sets.is_empty() {
        return Err(Error::invalid("no candidate set fits inside the domain"));
    }
    let mut candidates = Vec::new();
    let mut best: Option<(usize, Vec<f64>)> = None;
    let eval = |label: String, f: Region, cands: &mut Vec<Candidate>, best: &mut Option<(usize, Vec<f64>)>| -> Result<()> {
        let c = cap(mesh, k, &Capacitor::new(f.clone(), omega.clone())?)?;
        let mass = mu.mass_of(&f.vertices);
        let ratio = if c.value > 0.0 { mass / c.value } else { 0.0 };
        cands.push(Candidate { label, size: f.len(), mass, cap: c.value, ratio });
        let i = cands.len() - 1;
        if mass > 0.0 && best.as_ref().is_none_or(|(b, _)| ratio > cands[*b].ratio) {
            *best = Some((i, c.potential));
        }
        Ok(())
    };
    for (label, f) in sets {
        eval(label, f, &mut candidates, &mut best)?;
    }
    if family.potential_levels {
        if let Some((_, p)) = best.clone() {
            for (s, r) in levels_of(&p, omega, family.levels) {
                eval(format!("potential-level({s:.3})"), r, &mut candidates, &mut best)?;
            }
        }
    }
    let best = best.map(|(i, _)| i);
    let beta_lower = best.map_or(0.0, |i| candidates[i].ratio);
    Ok(IsocapacityEstimate { beta_lower, best, candidates, tone })
}

/// `(4β)⁻¹ ≤ λ* ≤ β⁻¹` with β replaced by its lower estimate; only the right
/// inequality can be asserted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MazjaReport {
    pub lhs: f64,
    pub tone: f64,
    pub rhs: f64,
    pub beta_lower: f64,
    pub pass: bool,
    /// Whether `(4 β_lower)⁻¹ ≤ λ*` also held; informational.
    pub left_holds: bool,
}

pub fn mazja_bracket(mesh: &TriangleMesh, k: &StiffnessMatrix, mu: &DiscreteMeasure, omega: &Region, tol: f64) -> Result<MazjaReport> {
    let est = isocapacity_constant(mesh, k, mu, omega, &CandidateFamily::default())?;
    let tone = est.tone;
    let (lhs, rhs) = if est.beta_lower > 0.0 {
        (1.0 / (4.0 * est.beta_lower), 1.0 / est.beta_lower)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let pass = tone.is_infinite() || tone <= rhs * (1.0 + tol);
    Ok(MazjaReport { lhs, tone, rhs, beta_lower: est.beta_lower, pass, left_holds: lhs <= tone * (1.0 + tol) })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToneEntry {
    pub label: String,
    pub mass: f64,
    pub tone: f64,
}

/// Comparison of `λ₁` with tones of domains carrying at most half the mass.
///
/// For every such ω, zero-extending its tone eigenfunction and removing the
/// mean gives `λ₁ ≤ λ*(ω)/(1 − μ(ω)) ≤ 2λ*(ω)`; that is the asserted upper
/// check. With the nodal domains of a first eigenfunction included, the
/// restricted positive part gives `inf λ* ≤ λ₁` on meshes without negative
/// cotangent weights, and the lower check is asserted as well.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToneBracketReport {
    pub inf_tone: f64,
    pub lambda1: f64,
    /// `λ₁ / inf_tone`; at most 2 for an exhaustive family.
    pub ratio: f64,
    /// `min_ω λ*(ω)/(1 − μ(ω))`.
    pub upper: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub lower_asserted: bool,
    pub pass: bool,
    pub entries: Vec<ToneEntry>,
}

pub fn tone_bracket(
    mesh: &TriangleMesh,
    k: &StiffnessMatrix,
    mu: &DiscreteMeasure,
    omegas: &[Region],
    include_nodal: bool,
    tol: f64,
) -> Result<ToneBracketReport> {
    if !mu.is_probability() {
        return Err(Error::invalid("tone bracket needs a probability measure"));
    }
    let masses = mu.masses();
    let opts = EigenOptions::default();
    let spec = crate::spectrum::solve_spectrum(k, &crate::spectrum::MassMatrix { diag: masses.clone() }, 1, 1e-10)?;
    let lambda1 = spec.lambda(1);
    let mut doms: Vec<(String, Region)> = omegas.iter().enumerate().map(|(i, r)| (format!("family[{i}]"), r.clone())).collect();
    for (label, r) in &doms {
        let m = mu.mass_of(&r.vertices);
        if !(m > 0.0 && m <= 0.5 + 1e-12) {
            return Err(Error::invalid(format!("{label} has mass {m}, outside (0, 1/2]")));
        }
    }
    let mut lower_asserted = false;
    if include_nodal && lambda1.is_finite() {
        let u = &spec.eigenfunctions[1];
        for (sign, name) in [(1.0, "nodal+"), (-1.0, "nodal-")] {
            let r = Region::custom((0..u.len()).filter(|&x| sign * u[x] > 0.0).collect());
            let m = mu.mass_of(&r.vertices);
            if m > 0.0 && m <= 0.5 + 1e-12 && r.len() < mesh.n_vertices() {
                doms.push((name.to_string(), r));
                lower_asserted = true;
            }
        }
    }
    if doms.is_empty() {
        return Err(Error::invalid("empty domain family"));
    }
    let mut entries = Vec::new();
    let mut inf_tone = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for (label, r) in doms {
        let (tone, _) = tone_pair(mesh, k, mu, &r, &opts)?;
        let mass = mu.mass_of(&r.vertices);
        inf_tone = inf_tone.min(tone);
        upper = upper.min(tone / (1.0 - mass));
        entries.push(ToneEntry { label, mass, tone });
    }
    let upper_holds = lambda1 <= upper * (1.0 + tol);
    let lower_holds = inf_tone <= lambda1 * (1.0 + tol);
    Ok(ToneBracketReport {
        inf_tone,
        lambda1,
        ratio: lambda1 / inf_tone,
        upper,
        upper_holds,
        lower_holds,
        lower_asserted,
        pass: upper_holds && (!lower_asserted || lower_holds),
        entries,
    })
}

/// Empirical constant `Q = max CAP(B(x,r), B(x,2r))` over sampled balls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshConstant {
    pub q: f64,
    pub center: usize,
    pub radius: f64,
    pub samples: usize,
}

pub fn mesh_constant_q(mesh: &TriangleMesh, k: &StiffnessMatrix, centers: usize, radii: &[f64]) -> Result<MeshConstant> {
    let n = mesh.n_vertices();
    let stride = (n / centers.max(1)).max(1);
    let mut best = MeshConstant { q: 0.0, center: 0, radius: 0.0, samples: 0 };
    for c in (0..n).step_by(stride).take(centers) {
        for &r in radii {
            let b = graph_ball(mesh, c, r)?;
            let b2 = graph_ball(mesh, c, 2.0 * r)?;
            if b.is_empty() || b2.len() == n {
                continue;
            }
            let v = cap(mesh, k, &Capacitor::new(b, b2)?)?.value;
            best.samples += 1;
            if v > best.q {
                best = MeshConstant { q: v, center: c, radius: r, samples: best.samples };
            }
        }
    }
    if best.samples == 0 {
        return Err(Error::invalid("no ball pair fits in the mesh"));
    }
    Ok(best)
}

/// Everything known about one capacitor relative to a measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    pub cap_value: f64,
    pub potential: Vec<f64>,
    pub tone: f64,
    pub beta_lower: f64,
    pub candidate_log: Vec<Candidate>,
}

/// `CAP(F, G)` together with the tone and isocapacity estimate of `G`.
pub fn capacity_report(mesh: &TriangleMesh, k: &StiffnessMatrix, mu: &DiscreteMeasure, capacitor: &Capacitor) -> Result<CapacityReport> {
    let c = cap(mesh, k, capacitor)?;
    let est = isocapacity_constant(mesh, k, mu, &capacitor.g, &CandidateFamily::default())?;
    Ok(CapacityReport { cap_value: c.value, potential: c.potential, tone: est.tone, beta_lower: est.beta_lower, candidate_log: est.candidates })
}
