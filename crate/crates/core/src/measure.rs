//! Discrete Radon measures, conformal deformations, the integral distance
//! and ball-growth diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{graph_distances, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Interior,
    Boundary,
    Mixed,
}

/// A measure on the vertex set: nonnegative weights plus flagged atoms.
///
/// On a fixed mesh every measure is formally atomic. The atom flag marks the
/// masses that model genuine point masses of the continuum object, as
/// opposed to weights that discretize a diffuse measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
    pub atoms: Vec<(usize, f64)>,
    pub support_kind: SupportKind,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>, atoms: Vec<(usize, f64)>, support_kind: SupportKind) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("measure weights must be finite and nonnegative"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(v, m) in &atoms {
            if v >= weights.len() {
                return Err(Error::invalid(format!("atom at vertex {v} out of range for {} vertices", weights.len())));
            }
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::invalid(format!("atom at vertex {v} has nonpositive mass {m}")));
            }
            if !seen.insert(v) {
                return Err(Error::invalid(format!("repeated atom vertex {v}")));
            }
        }
        let mu = DiscreteMeasure { weights, atoms, support_kind };
        if !(mu.total_mass() > 0.0) {
            return Err(Error::invalid("measure has zero total mass"));
        }
        Ok(mu)
    }

    /// Diffuse measure with the given vertex weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, Vec::new(), SupportKind::Interior)
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    /// Total mass per vertex, atoms included.
    pub fn masses(&self) -> Vec<f64> {
        let mut m = self.weights.clone();
        for &(v, a) in &self.atoms {
            m[v] += a;
        }
        m
    }

    pub fn mass_of(&self, vertices: &[usize]) -> f64 {
        let m = self.masses();
        vertices.iter().map(|&v| m[v]).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        self.masses().iter().enumerate().filter(|(_, &m)| m > 0.0).map(|(i, _)| i).collect()
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// A single atom and nothing else.
    pub fn is_dirac(&self) -> bool {
        self.atoms.len() == 1 && self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    pub fn scaled(&self, s: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            weights: self.weights.iter().map(|w| w * s).collect(),
            atoms: self.atoms.iter().map(|&(v, a)| (v, a * s)).collect(),
            support_kind: self.support_kind,
        }
    }

    /// The probability measure proportional to `self`.
    pub fn normalized(&self) -> DiscreteMeasure {
        let t = self.total_mass();
        let mut mu = self.scaled(1.0 / t);
        // One correction pass brings the total to within an ulp or two of 1.
        let t2 = mu.total_mass();
        if t2 != 1.0 {
            mu = mu.scaled(1.0 / t2);
        }
        mu
    }

    fn check_mesh(&self, mesh: &TriangleMesh) -> Result<()> {
        if self.n_vertices() != mesh.n_vertices() {
            return Err(Error::invalid(format!(
                "measure has {} vertices, mesh has {}",
                self.n_vertices(),
                mesh.n_vertices()
            )));
        }
        Ok(())
    }
}

/// Lumped area measure: each vertex gets a third of its incident areas.
pub fn uniform_area_measure(mesh: &TriangleMesh) -> Result<DiscreteMeasure> {
    DiscreteMeasure::from_weights(mesh.vertex_areas())
}

/// Measure with the given density (per vertex) against the lumped area.
pub fn density_measure(mesh: &TriangleMesh, density: &[f64]) -> Result<DiscreteMeasure> {
    if density.len() != mesh.n_vertices() {
        return Err(Error::invalid("density length differs from vertex count"));
    }
    DiscreteMeasure::from_weights(mesh.vertex_areas().iter().zip(density).map(|(a, d)| a * d).collect())
}

/// Boundary length measure: half of the adjacent boundary edge lengths.
pub fn boundary_measure(mesh: &TriangleMesh) -> Result<DiscreteMeasure> {
    if mesh.is_closed() {
        return Err(Error::invalid("no boundary"));
    }
    DiscreteMeasure::new(mesh.boundary_vertex_lengths(), Vec::new(), SupportKind::Boundary)
}

/// Purely atomic measure.
pub fn atomic_measure(mesh: &TriangleMesh, atoms: &[(usize, f64)]) -> Result<DiscreteMeasure> {
    if atoms.is_empty() {
        return Err(Error::invalid("atomic measure needs at least one atom"));
    }
    let bd = mesh.is_boundary_vertex();
    let kind = if atoms.iter().all(|&(v, _)| v < bd.len() && bd[v]) { SupportKind::Boundary } else { SupportKind::Interior };
    DiscreteMeasure::new(vec![0.0; mesh.n_vertices()], atoms.to_vec(), kind)
}

/// Probability measure with log-normal density `exp(σ z)` against the area,
/// where `z` is standard Gaussian noise averaged over `smoothing` rounds of
/// one-ring means and rescaled to unit standard deviation.
pub fn random_log_normal_measure(mesh: &TriangleMesh, sigma: f64, smoothing: usize, seed: u64) -> Result<DiscreteMeasure> {
    let n = mesh.n_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    for _ in 0..smoothing {
        z = (0..n)
            .map(|i| {
                let nb = mesh.neighbors(i);
                (z[i] + nb.iter().map(|x| z[x.0]).sum::<f64>()) / (1 + nb.len()) as f64
            })
            .collect();
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    let sd = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt().max(1e-300);
    let density: Vec<f64> = z.iter().map(|x| (sigma * (x - mean) / sd).exp()).collect();
    Ok(density_measure(mesh, &density)?.normalized())
}

/// JSON measure descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(usize, f64)>>,
    /// For `file`: a JSON-serialized [`DiscreteMeasure`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Uniform,
    Density,
    Boundary,
    Atomic,
    File,
}

impl MeasureSpec {
    pub fn uniform() -> Self {
        MeasureSpec { kind: MeasureKind::Uniform, density: None, atoms: None, path: None }
    }

    pub fn boundary() -> Self {
        MeasureSpec { kind: MeasureKind::Boundary, ..Self::uniform() }
    }

    pub fn realize(&self, mesh: &TriangleMesh) -> Result<DiscreteMeasure> {
        match self.kind {
            MeasureKind::Uniform => uniform_area_measure(mesh),
            MeasureKind::Boundary => boundary_measure(mesh),
            MeasureKind::Density => {
                density_measure(mesh, self.density.as_deref().ok_or_else(|| Error::invalid("density measure needs \"density\""))?)
            }
            MeasureKind::Atomic => {
                atomic_measure(mesh, self.atoms.as_deref().ok_or_else(|| Error::invalid("atomic measure needs \"atoms\""))?)
            }
            MeasureKind::File => {
                let p = self.path.as_deref().ok_or_else(|| Error::invalid("file measure needs \"path\""))?;
                let mu: DiscreteMeasure = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                mu.check_mesh(mesh)?;
                DiscreteMeasure::new(mu.weights, mu.atoms, mu.support_kind)
            }
        }
    }
}

/// The family `μ_t = e^{tφ} μ / ∫e^{tφ} dμ` generated by a bounded
/// function `φ` of zero `μ`-mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationFamily {
    /// Probability-normalized base measure.
    pub base: DiscreteMeasure,
    pub phi: Vec<f64>,
    pub phi_sup: f64,
}

impl DeformationFamily {
    /// Normalizes `base` and subtracts the `μ`-mean of `phi`.
    pub fn new(base: &DiscreteMeasure, phi: &[f64]) -> Result<Self> {
        if phi.len() != base.n_vertices() {
            return Err(Error::invalid("phi length differs from vertex count"));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("phi must be finite"));
        }
        let base = base.normalized();
        let phi = center(&base.masses(), phi);
        let phi_sup = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(DeformationFamily { base, phi, phi_sup })
    }

    pub fn mean(&self) -> f64 {
        kahan_dot(&self.base.masses(), &self.phi)
    }
}

fn kahan_dot(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let t = x * y - c;
        let u = s + t;
        c = (u - s) - t;
        s = u;
    }
    s
}

/// Subtracts the mean of `phi` against the probability masses `m`.
pub(crate) fn center(m: &[f64], phi: &[f64]) -> Vec<f64> {
    let total: f64 = m.iter().sum();
    let mut out = phi.to_vec();
    for _ in 0..3 {
        let mean = kahan_dot(m, &out) / total;
        if mean == 0.0 {
            break;
        }
        out.iter_mut().for_each(|x| *x -= mean);
    }
    out
}

/// Evaluates the deformation at `t`; the result is a probability measure.
pub fn deform(family: &DeformationFamily, t: f64) -> Result<DiscreteMeasure> {
    if !t.is_finite() || t.abs() * family.phi_sup > 700.0 {
        return Err(Error::invalid(format!("deformation overflow guard: |t|·‖φ‖∞ = {:e} > 700", t.abs() * family.phi_sup)));
    }
    let base = &family.base;
    let m = base.masses();
    let shift = (0..m.len()).filter(|&i| m[i] > 0.0).map(|i| t * family.phi[i]).fold(f64::NEG_INFINITY, f64::max);
    let f = |i: usize| (t * family.phi[i] - shift).exp();
    let weights: Vec<f64> = base.weights.iter().enumerate().map(|(i, w)| w * f(i)).collect();
    let atoms: Vec<(usize, f64)> = base.atoms.iter().map(|&(v, a)| (v, a * f(v))).collect();
    Ok(DiscreteMeasure { weights, atoms, support_kind: base.support_kind }.normalized())
}

/// Integral distance `d(μ, μ′)` between probability measures and
/// `δ = e^d − 1`. Infinite when the supports differ.
pub fn integral_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<(f64, f64)> {
    if a.n_vertices() != b.n_vertices() {
        return Err(Error::invalid("measures live on different vertex sets"));
    }
    for mu in [a, b] {
        if (mu.total_mass() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("integral distance needs probability measures (mass {})", mu.total_mass())));
        }
    }
    let (ma, mb) = (a.masses(), b.masses());
    let mut d = 0.0f64;
    for (x, y) in ma.iter().zip(&mb) {
        match (*x > 0.0, *y > 0.0) {
            (true, true) => d = d.max((x / y).ln().abs()),
            (false, false) => {}
            _ => return Ok((f64::INFINITY, f64::INFINITY)),
        }
    }
    Ok((d, d.exp_m1()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Decaying,
    NonDecaying,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub q: f64,
    /// Descending radii.
    pub radii: Vec<f64>,
    /// `max_x μ(B(x,r))` per radius.
    pub ball_mass: Vec<f64>,
    /// `max_x μ(B(x,r))·lnᵠ(1/r)` per radius.
    pub values: Vec<f64>,
    pub trend: Trend,
}

/// Geometric sequence of `count` radii from the median edge length (capped
/// at 0.5) down to 1e-3.
pub fn default_radii(mesh: &TriangleMesh, count: usize) -> Vec<f64> {
    let hi = mesh.median_edge_length().min(0.5);
    let lo = 1e-3f64.min(hi / 2.0);
    let count = count.max(2);
    (0..count).map(|i| hi * (lo / hi).powf(i as f64 / (count - 1) as f64)).collect()
}

/// `max_x μ(B(x, r))` for each radius.
///
/// Below the mesh scale, balls are resolved with a cell model: each vertex
/// carries a cell (a disk of its lumped area, or for boundary-supported
/// measures an arc of its lumped length), partially covered balls count the
/// covered fraction, and atoms count in full.
pub fn max_ball_mass(mesh: &TriangleMesh, mu: &DiscreteMeasure, radii: &[f64]) -> Result<Vec<f64>> {
    mu.check_mesh(mesh)?;
    let n = mesh.n_vertices();
    let one_d = mu.support_kind == SupportKind::Boundary;
    let cell: Vec<f64> = if one_d {
        mesh.boundary_vertex_lengths().iter().map(|l| (l / 2.0).max(1e-300)).collect()
    } else {
        mesh.vertex_areas().iter().map(|a| (a / std::f64::consts::PI).sqrt()).collect()
    };
    let rho_max = cell.iter().cloned().fold(0.0, f64::max);
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let m = mu.masses();
    let mut atom_mass = vec![0.0; n];
    for &(v, a) in &mu.atoms {
        atom_mass[v] += a;
    }
    let mut best = vec![0.0f64; radii.len()];
    let centers: Vec<usize> = (0..n).filter(|&i| m[i] > 0.0).collect();
    for &x in &centers {
        let d = graph_distances(mesh, x, r_max + rho_max);
        let near: Vec<usize> = (0..n).filter(|&y| d[y].is_finite() && m[y] > 0.0).collect();
        for (k, &r) in radii.iter().enumerate() {
            let mut s = 0.0;
            for &y in &near {
                let w = mu.weights[y];
                let frac = if y == x {
                    let t = (r / cell[y]).min(1.0);
                    if one_d {
                        t
                    } else {
                        t * t
                    }
                } else {
                    ((r - d[y] + cell[y]) / (2.0 * cell[y])).clamp(0.0, 1.0)
                };
                s += w * frac;
                if atom_mass[y] > 0.0 && d[y] < r {
                    s += atom_mass[y];
                }
            }
            best[k] = best[k].max(s);
        }
    }
    Ok(best)
}

/// Profile of `sup_x μ(B(x,r))·lnᵠ(1/r)` over the radii, with a trend
/// verdict: decaying when the value at the smallest radius is below half of
/// the profile maximum.
pub fn ball_growth_diagnostic(mesh: &TriangleMesh, mu: &DiscreteMeasure, q: f64, radii: &[f64]) -> Result<GrowthProfile> {
    if !(q >= 1.0) {
        return Err(Error::invalid("q must be at least 1"));
    }
    if radii.is_empty() {
        return Err(Error::invalid("no radii"));
    }
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::invalid(format!("radius {r} outside (0, 1)")));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let ball_mass = max_ball_mass(mesh, mu, &radii)?;
    let values: Vec<f64> = ball_mass.iter().zip(&radii).map(|(b, r)| b * (1.0 / r).ln().powf(q)).collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let last = *values.last().unwrap();
    let trend = if last < 0.5 * peak { Trend::Decaying } else { Trend::NonDecaying };
    Ok(GrowthProfile { q, radii, ball_mass, values, trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{disk, flat_torus, unit_square};

    #[test]
    fn unit_square_mass_and_perimeter() {
        let m = unit_square();
        assert!((uniform_area_measure(&m).unwrap().total_mass() - 1.0).abs() < 1e-15);
        assert!((boundary_measure(&m).unwrap().total_mass() - 4.0).abs() < 1e-15);
        assert!(boundary_measure(&flat_torus(4).unwrap()).is_err());
    }

    #[test]
    fn deform_closed_form() {
        let mu = DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        let fam = DeformationFamily::new(&mu, &[1.0, -1.0]).unwrap();
        let m = deform(&fam, 3f64.ln() / 2.0).unwrap();
        assert!((m.weights[0] - 0.75).abs() < 1e-15 && (m.weights[1] - 0.25).abs() < 1e-15);
        assert!(deform(&fam, 701.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = DiscreteMeasure::from_weights(vec![0.75, 0.25]).unwrap();
        let b = DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        let (d, delta) = integral_distance(&a, &b).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        assert!((delta - 1.0).abs() < 1e-14);
        let c = DiscreteMeasure::from_weights(vec![1.0, 0.0]).unwrap();
        assert_eq!(integral_distance(&a, &c).unwrap().0, f64::INFINITY);
    }

    #[test]
    fn atoms_validation() {
        let m = disk(3).unwrap();
        assert!(atomic_measure(&m, &[(0, 0.5), (0, 0.5)]).is_err());
        assert!(atomic_measure(&m, &[(0, -1.0)]).is_err());
        assert!(atomic_measure(&m, &[(10_000, 1.0)]).is_err());
        assert!(atomic_measure(&m, &[(3, 1.0)]).unwrap().is_dirac());
    }

    #[test]
    fn growth_of_atom_does_not_decay() {
        let m = disk(8).unwrap();
        let mu = atomic_measure(&m, &[(0, 1.0)]).unwrap();
        let radii = default_radii(&m, 12);
        let p = ball_growth_diagnostic(&m, &mu, 1.0, &radii).unwrap();
        assert_eq!(p.trend, Trend::NonDecaying);
        let u = uniform_area_measure(&m).unwrap().normalized();
        assert_eq!(ball_growth_diagnostic(&m, &u, 2.0, &radii).unwrap().trend, Trend::Decaying);
        assert!(ball_growth_diagnostic(&m, &u, 2.0, &[1.5]).is_err());
    }
}
