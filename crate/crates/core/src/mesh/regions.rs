use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Ball,
    Annulus,
    Custom,
}

/// A set of vertices, with the ball or annulus parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Sorted, distinct vertex indices.
    pub vertices: Vec<usize>,
    pub kind: RegionKind,
    pub center: Option<usize>,
    pub r: f64,
    pub big_r: f64,
}

impl Region {
    pub fn custom(mut vertices: Vec<usize>) -> Region {
        vertices.sort_unstable();
        vertices.dedup();
        Region { vertices, kind: RegionKind::Custom, center: None, r: 0.0, big_r: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.vertices {
            m[v] = true;
        }
        m
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.vertices.iter().all(|&v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.vertices.len() && j < other.vertices.len() {
            match self.vertices[i].cmp(&other.vertices[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return false,
            }
        }
        true
    }

    /// Vertex set as a JSON array.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.vertices).expect("vertex list serializes")
    }

    pub fn from_json(s: &str) -> Result<Region> {
        Ok(Region::custom(serde_json::from_str(s)?))
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest edge-path distances from `center`; vertices farther than
/// `limit` are left at infinity.
pub fn graph_distances(mesh: &TriangleMesh, center: usize, limit: f64) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; mesh.n_vertices()];
    d[center] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, center)]);
    while let Some(Item(dv, v)) = heap.pop() {
        if dv > d[v] {
            continue;
        }
        for &(w, l) in mesh.neighbors(v) {
            let nd = dv + l;
            if nd < d[w] && nd <= limit {
                d[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    d
}

fn check_center(mesh: &TriangleMesh, center: usize) -> Result<()> {
    if center >= mesh.n_vertices() {
        return Err(Error::invalid(format!("center {center} out of range for {} vertices", mesh.n_vertices())));
    }
    Ok(())
}

/// Vertices at graph distance `< r` from `center`. `r = ∞` gives the whole
/// connected component.
pub fn graph_ball(mesh: &TriangleMesh, center: usize, r: f64) -> Result<Region> {
    check_center(mesh, center)?;
    if !(r >= 0.0) {
        return Err(Error::invalid("ball radius must be nonnegative"));
    }
    let d = graph_distances(mesh, center, r);
    let vertices = (0..d.len()).filter(|&i| d[i] < r).collect();
    Ok(Region { vertices, kind: RegionKind::Ball, center: Some(center), r: 0.0, big_r: r })
}

/// The annulus `A = {r ≤ d < R}` and its double `2A = {r/2 ≤ d < 2R}`.
pub fn graph_annulus(mesh: &TriangleMesh, center: usize, r: f64, big_r: f64) -> Result<(Region, Region)> {
    check_center(mesh, center)?;
    if !(r >= 0.0 && r < big_r) {
        return Err(Error::invalid(format!("annulus needs 0 <= r < R, got r = {r}, R = {big_r}")));
    }
    let d = graph_distances(mesh, center, 2.0 * big_r);
    let pick = |lo: f64, hi: f64| (0..d.len()).filter(|&i| d[i] >= lo && d[i] < hi).collect();
    let a = Region { vertices: pick(r, big_r), kind: RegionKind::Annulus, center: Some(center), r, big_r };
    let a2 = Region {
        vertices: pick(r / 2.0, 2.0 * big_r),
        kind: RegionKind::Annulus,
        center: Some(center),
        r: r / 2.0,
        big_r: 2.0 * big_r,
    };
    Ok((a, a2))
}
