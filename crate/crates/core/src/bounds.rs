//! Upper bounds for `λ_k·μ(M)`: Hersch balancing and disjoint-annuli
//! capacitor systems.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::capacity::{cap, Capacitor};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::mesh::{assemble_stiffness, graph_distances, Region, RegionKind, StiffnessMatrix, TriangleMesh};
use crate::spectrum::{assemble_mass, solve_spectrum};

/// A conformal dilation of the sphere indexed by a point of the open ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusParameter {
    pub a: [f64; 3],
}

impl MobiusParameter {
    pub fn identity() -> Self {
        MobiusParameter { a: [0.0; 3] }
    }

    pub fn new(a: [f64; 3]) -> Result<Self> {
        let r = Vector3::from(a).norm();
        if !(r < 1.0) {
            return Err(Error::invalid(format!("Mobius parameter needs |a| < 1, got {r}")));
        }
        Ok(MobiusParameter { a })
    }

    pub fn norm(&self) -> f64 {
        Vector3::from(self.a).norm()
    }

    pub fn inverse(&self) -> Self {
        MobiusParameter { a: [-self.a[0], -self.a[1], -self.a[2]] }
    }
}

// s_a(y) = ((1 − |a|²) y + 2(1 + a·y) a) / (1 + 2 a·y + |a|²)
fn dilate(a: &Vector3<f64>, y: &Vector3<f64>) -> Vector3<f64> {
    let ay = a.dot(y);
    let aa = a.norm_squared();
    (y * (1.0 - aa) + a * (2.0 * (1.0 + ay))) / (1.0 + 2.0 * ay + aa)
}

fn dilate_jacobian(a: &Vector3<f64>, y: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let ay = a.dot(y);
    let aa = a.norm_squared();
    let d = 1.0 + 2.0 * ay + aa;
    let s = (y * (1.0 - aa) + a * (2.0 * (1.0 + ay))) / d;
    let dn = -2.0 * y * a.transpose() + 2.0 * a * y.transpose() + Matrix3::identity() * (2.0 * (1.0 + ay));
    let j = (dn - s * (2.0 * (y + a)).transpose()) / d;
    (s, j)
}

/// Applies the dilation toward `a/|a|` of strength `|a|`. The inverse map is
/// the one for `−a`.
pub fn mobius_apply(a: &MobiusParameter, points: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let av = Vector3::from(a.a);
    if !(av.norm() < 1.0) {
        return Err(Error::invalid("Mobius parameter outside the open unit ball"));
    }
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let y = Vector3::from(*p);
            if (y.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("point {i} is not on the unit sphere")));
            }
            let s = dilate(&av, &y).normalize();
            Ok([s.x, s.y, s.z])
        })
        .collect()
}

/// Result of balancing: the parameter and the centre of mass it achieves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Balance {
    pub parameter: MobiusParameter,
    /// `|∫ s_a ∘ Φ dμ|` for the probability-normalized μ.
    pub residual: f64,
    pub newton_steps: usize,
    pub continuation: bool,
}

fn centre(a: &Vector3<f64>, ys: &[Vector3<f64>], w: &[f64]) -> (Vector3<f64>, Matrix3<f64>) {
    let mut c = Vector3::zeros();
    let mut j = Matrix3::zeros();
    for (y, &m) in ys.iter().zip(w) {
        if m > 0.0 {
            let (s, dj) = dilate_jacobian(a, y);
            c += s * m;
            j += dj * m;
        }
    }
    (c, j)
}

fn newton(ys: &[Vector3<f64>], w: &[f64], mut a: Vector3<f64>, tol: f64, max_steps: usize) -> (Vector3<f64>, f64, usize) {
    let (mut c, mut j) = centre(&a, ys, w);
    let mut steps = 0;
    while c.norm() > tol && steps < max_steps {
        steps += 1;
        let Some(delta) = j.lu().solve(&(-c)) else { break };
        // Keep the iterate well inside the ball.
        let room = 1.0 - a.norm();
        let mut step = delta;
        if step.norm() > 0.5 * room {
            step *= 0.5 * room / step.norm();
        }
        let mut improved = false;
        for _ in 0..40 {
            let trial = a + step;
            if trial.norm() < 1.0 {
                let (ct, jt) = centre(&trial, ys, w);
                if ct.norm() < c.norm() {
                    a = trial;
                    c = ct;
                    j = jt;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a, c.norm(), steps)
}

/// Finds `a` with `∫ s_a ∘ Φ dμ = 0` for the normalized `mu`.
///
/// Damped Newton from `a = 0`; if that stalls, a continuation from the area
/// measure of the mesh toward `mu`, warm-starting Newton at each stage.
pub fn hersch_balance(mesh: &TriangleMesh, sphere_map: &[[f64; 3]], mu: &DiscreteMeasure) -> Result<Balance> {
    let n = mesh.n_vertices();
    if sphere_map.len() != n || mu.n_vertices() != n {
        return Err(Error::invalid("sphere map and measure must have one entry per vertex"));
    }
    let ys: Vec<Vector3<f64>> = sphere_map.iter().map(|p| Vector3::from(*p)).collect();
    if let Some(i) = ys.iter().position(|y| (y.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::invalid(format!("sphere map value at vertex {i} is not a unit vector")));
    }
    let w = mu.normalized().masses();
    let heaviest = w.iter().cloned().fold(0.0, f64::max);
    if heaviest >= 1.0 - 1e-3 {
        return Err(Error::numerical_with(
            format!("near-Dirac measure (a single vertex carries {heaviest:.6} of the mass); the balancing point escapes to the boundary, |a| = 1"),
            1.0,
        ));
    }
    let tol = 1e-11;
    let (a, res, steps) = newton(&ys, &w, Vector3::zeros(), tol, 100);
    if res <= tol {
        return Ok(Balance { parameter: MobiusParameter { a: [a.x, a.y, a.z] }, residual: res, newton_steps: steps, continuation: false });
    }
    let area = mesh.vertex_areas();
    let total_area: f64 = area.iter().sum();
    let mut a = Vector3::zeros();
    let mut total_steps = steps;
    let stages = 64;
    let mut res = f64::INFINITY;
    for s in 1..=stages {
        let tau = s as f64 / stages as f64;
        let ws: Vec<f64> = w.iter().zip(&area).map(|(m, ar)| tau * m + (1.0 - tau) * ar / total_area).collect();
        let (an, r, st) = newton(&ys, &ws, a, tol, 100);
        a = an;
        res = r;
        total_steps += st;
    }
    if res > 1e-8 {
        return Err(Error::numerical_with(format!("balancing did not converge; reached |a| = {:.6}", a.norm()), res));
    }
    Ok(Balance { parameter: MobiusParameter { a: [a.x, a.y, a.z] }, residual: res, newton_steps: total_steps, continuation: true })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HerschReport {
    /// `Σ E(f_i) / Σ (∫f_i² dμ̂ − (∫f_i dμ̂)²)` for the balanced coordinates
    /// `f_i`, an upper bound for `λ₁·μ(M)`.
    pub bound: f64,
    /// `8π·degree`.
    pub ceiling: f64,
    pub energies: [f64; 3],
    pub balance: Balance,
    pub lambda1_mass: Option<f64>,
    pub pass: bool,
}

/// The coordinate test-function bound after balancing.
///
/// `mesh_tol` is the relative slack allowed on the ceiling.
pub fn hersch_bound(
    mesh: &TriangleMesh,
    k: &StiffnessMatrix,
    mu: &DiscreteMeasure,
    sphere_map: &[[f64; 3]],
    degree: usize,
    mesh_tol: f64,
) -> Result<HerschReport> {
    let balance = hersch_balance(mesh, sphere_map, mu)?;
    if balance.residual > 1e-6 {
        return Err(Error::invalid("unbalanced input"));
    }
    let mapped = mobius_apply(&balance.parameter, sphere_map)?;
    let w = mu.normalized().masses();
    let mut energies = [0.0; 3];
    let mut den = 0.0;
    for i in 0..3 {
        let f: Vec<f64> = mapped.iter().map(|p| p[i]).collect();
        energies[i] = k.quad(&f);
        let mean: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
        let sq: f64 = f.iter().zip(&w).map(|(a, b)| a * a * b).sum();
        den += sq - mean * mean;
    }
    let bound = energies.iter().sum::<f64>() / den;
    let ceiling = 8.0 * PI * degree as f64;
    Ok(HerschReport { bound, ceiling, energies, balance, lambda1_mass: None, pass: bound <= ceiling * (1.0 + mesh_tol) })
}

/// Vertex positions projected radially to the unit sphere.
pub fn radial_sphere_map(mesh: &TriangleMesh) -> Vec<[f64; 3]> {
    mesh.vertices()
        .iter()
        .map(|p| {
            let v = Vector3::from(*p).normalize();
            [v.x, v.y, v.z]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Annulus {
    pub center: usize,
    pub r: f64,
    pub big_r: f64,
    pub a: Region,
    pub doubled: Region,
    pub mass: f64,
    pub capacity: f64,
}

/// `k + 1` annuli whose doubles are disjoint and not joined by any edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusSystem {
    pub annuli: Vec<Annulus>,
    /// `min μ(A_i)`.
    pub v: f64,
    /// `max CAP(A_i, 2A_i)`.
    pub kappa: f64,
    /// `v·k/μ(M)`.
    pub c_eff: f64,
    pub k: usize,
    pub candidates: usize,
}

struct Cand {
    centre: usize,
    r: f64,
    big_r: f64,
    lo: usize,
    hi: usize,
    mass: f64,
}

/// Greedy disjoint-annuli search.
///
/// Centres are a farthest-point sample of up to 64 vertices; radii run over a
/// geometric grid with ratio `2^{1/4}` from the median edge length; shapes are
/// balls `(0, R)` and annuli `(R, 2R)`, `(R, 4R)`. For a mass threshold τ the
/// candidates with `μ(A) ≥ τ` are taken in order of increasing `|2A|`,
/// rejecting any whose double meets or touches one already chosen; τ is
/// bisected over the candidate masses.
pub fn gy_annuli(mesh: &TriangleMesh, mu: &DiscreteMeasure, k: usize) -> Result<AnnulusSystem> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if mu.has_atoms() {
        return Err(Error::invalid("annulus systems need a continuous measure; this one has flagged atoms"));
    }
    let n = mesh.n_vertices();
    let masses = mu.masses();
    let total = mu.total_mass();
    // Farthest-point centres.
    let mut start = 0;
    for i in 0..n {
        if masses[i] > masses[start] {
            start = i;
        }
    }
    let mut centres = vec![start];
    let mut dists = vec![graph_distances(mesh, start, f64::INFINITY)];
    let mut nearest = dists[0].clone();
    while centres.len() < 64.min(n) {
        let (far, fd) = nearest.iter().enumerate().fold((0, -1.0), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
        if !(fd > 0.0) {
            break;
        }
        centres.push(far);
        let d = graph_distances(mesh, far, f64::INFINITY);
        for i in 0..n {
            nearest[i] = nearest[i].min(d[i]);
        }
        dists.push(d);
    }
    let h = mesh.median_edge_length();
    let mut orders = Vec::new();
    let mut cands = Vec::new();
    for (ci, d) in dists.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).filter(|&i| d[i].is_finite()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let sorted_d: Vec<f64> = order.iter().map(|&i| d[i]).collect();
        let mut prefix = vec![0.0; order.len() + 1];
        for (j, &i) in order.iter().enumerate() {
            prefix[j + 1] = prefix[j] + masses[i];
        }
        let diam = *sorted_d.last().unwrap();
        let pos = |x: f64| sorted_d.partition_point(|&v| v < x);
        let mut r = h;
        while r <= 2.0 * diam {
            for (lo_r, hi_r) in [(0.0, r), (r, 2.0 * r), (r, 4.0 * r)] {
                let (a0, a1) = (pos(lo_r), pos(hi_r));
                let mass = prefix[a1] - prefix[a0];
                let (lo, hi) = (pos(lo_r / 2.0), pos(2.0 * hi_r));
                if mass > 0.0 && hi < order.len() {
                    cands.push(Cand { centre: ci, r: lo_r, big_r: hi_r, lo, hi, mass });
                }
            }
            r *= 2f64.powf(0.25);
        }
        orders.push(order);
    }
    if cands.is_empty() {
        return Err(Error::invalid("mesh too coarse: no annulus has a proper double"));
    }
    cands.sort_by(|a, b| (a.hi - a.lo).cmp(&(b.hi - b.lo)).then(b.mass.total_cmp(&a.mass)));
    let greedy = |tau: f64| -> Vec<usize> {
        let mut used = vec![false; n];
        let mut chosen = Vec::new();
        for (j, c) in cands.iter().enumerate() {
            if c.mass < tau {
                continue;
            }
            let verts = &orders[c.centre][c.lo..c.hi];
            if verts.iter().any(|&x| used[x]) {
                continue;
            }
            for &x in verts {
                used[x] = true;
                for &(y, _) in mesh.neighbors(x) {
                    used[y] = true;
                }
            }
            chosen.push(j);
            if chosen.len() == k + 1 {
                break;
            }
        }
        chosen
    };
    let mut taus: Vec<f64> = cands.iter().map(|c| c.mass).collect();
    taus.sort_by(|a, b| a.total_cmp(b));
    taus.dedup();
    let (mut lo, mut hi) = (0usize, taus.len());
    if greedy(taus[0]).len() < k + 1 {
        return Err(Error::invalid(format!("mesh too coarse to separate {} annuli with disjoint doubles", k + 1)));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if greedy(taus[mid]).len() == k + 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let chosen = greedy(taus[lo]);
    let kmat = assemble_stiffness(mesh);
    let mut annuli = Vec::new();
    for j in chosen {
        let c = &cands[j];
        let order = &orders[c.centre];
        let d = &dists[c.centre];
        let a = Region {
            vertices: {
                let mut v: Vec<usize> = order.iter().copied().filter(|&x| d[x] >= c.r && d[x] < c.big_r).collect();
                v.sort_unstable();
                v
            },
            kind: RegionKind::Annulus,
            center: Some(centres[c.centre]),
            r: c.r,
            big_r: c.big_r,
        };
        let mut dv = order[c.lo..c.hi].to_vec();
        dv.sort_unstable();
        let doubled = Region { vertices: dv, kind: RegionKind::Annulus, center: Some(centres[c.centre]), r: c.r / 2.0, big_r: 2.0 * c.big_r };
        let capacity = cap(mesh, &kmat, &Capacitor::new(a.clone(), doubled.clone())?)?.value;
        annuli.push(Annulus { center: centres[c.centre], r: c.r, big_r: c.big_r, mass: mu.mass_of(&a.vertices), a, doubled, capacity });
    }
    let v = annuli.iter().map(|a| a.mass).fold(f64::INFINITY, f64::min);
    let kappa = annuli.iter().map(|a| a.capacity).fold(0.0, f64::max);
    Ok(AnnulusSystem { annuli, v, kappa, c_eff: v * k as f64 / total, k, candidates: cands.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacitorBound {
    pub kappa: f64,
    pub v: f64,
    pub bound: f64,
    pub lambda_k: f64,
    pub pass: bool,
}

/// `κ/v` for an annulus system, with `v` recomputed from `mu` and `κ` from
/// `k_mat`, compared against `λ_k(μ)`.
pub fn capacitor_bound(
    mesh: &TriangleMesh,
    k_mat: &StiffnessMatrix,
    mu: &DiscreteMeasure,
    system: &AnnulusSystem,
    k: usize,
    tol: f64,
) -> Result<CapacitorBound> {
    if system.annuli.len() < k + 1 {
        return Err(Error::invalid(format!("system has {} annuli, need {}", system.annuli.len(), k + 1)));
    }
    for (i, a) in system.annuli.iter().enumerate() {
        for b in &system.annuli[i + 1..] {
            if !a.doubled.is_disjoint(&b.doubled) {
                return Err(Error::invalid("annulus doubles overlap"));
            }
        }
    }
    let mut v = f64::INFINITY;
    let mut kappa: f64 = 0.0;
    for a in &system.annuli {
        v = v.min(mu.mass_of(&a.a.vertices));
        kappa = kappa.max(cap(mesh, k_mat, &Capacitor::new(a.a.clone(), a.doubled.clone())?)?.value);
    }
    if !(v > 0.0) {
        return Err(Error::invalid("an annulus carries no mass (v = 0)"));
    }
    let bound = kappa / v;
    let spec = solve_spectrum(k_mat, &assemble_mass(mesh, mu)?, k, 1e-10)?;
    let lambda_k = spec.lambda(k);
    Ok(CapacitorBound { kappa, v, bound, lambda_k, pass: lambda_k <= bound * (1.0 + tol) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_inverse() {
        let pts = [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.0, 0.0, -1.0]];
        assert_eq!(mobius_apply(&MobiusParameter::identity(), &pts).unwrap(), pts.to_vec());
        let a = MobiusParameter::new([0.3, -0.2, 0.5]).unwrap();
        let back = mobius_apply(&a.inverse(), &mobius_apply(&a, &pts).unwrap()).unwrap();
        for (p, q) in pts.iter().zip(&back) {
            for i in 0..3 {
                assert!((p[i] - q[i]).abs() < 1e-12);
            }
        }
        assert!(MobiusParameter::new([1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn jacobian_matches_differences() {
        let a = Vector3::new(0.2, -0.1, 0.3);
        let y = Vector3::new(0.48, 0.6, 0.64);
        let (_, j) = dilate_jacobian(&a, &y);
        let h = 1e-6;
        for c in 0..3 {
            let mut e = Vector3::zeros();
            e[c] = h;
            let fd = (dilate(&(a + e), &y) - dilate(&(a - e), &y)) / (2.0 * h);
            for r in 0..3 {
                assert!((fd[r] - j[(r, c)]).abs() < 1e-8);
            }
        }
    }
}
