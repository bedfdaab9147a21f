//! Triangle meshes, the cotangent stiffness matrix and graph-metric regions.

mod generators;
mod io;
mod regions;
mod stiffness;

pub use generators::{disk, flat_torus, grid_square, icosahedron, icosphere, unit_square};
pub use io::{load_mesh, load_mesh_file, write_off, MeshFormat};
pub use regions::{graph_annulus, graph_ball, graph_distances, Region, RegionKind};
pub use stiffness::assemble_stiffness;

use std::collections::HashMap;

use crate::error::{Error, Result};

/// The cotangent-weight matrix of a mesh.
pub type StiffnessMatrix = crate::linalg::CsrMatrix;

/// An oriented manifold triangle mesh, possibly with boundary.
///
/// Edge lengths come from the vertex positions unless intrinsic lengths were
/// supplied, in which case positions only serve for display and export.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    // lengths[t][i] is the length of the edge opposite corner i of triangle t.
    lengths: Vec<[f64; 3]>,
    intrinsic: bool,
    edges: Vec<[usize; 2]>,
    boundary_loops: Vec<Vec<usize>>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Area of a triangle from its side lengths (Kahan's form of Heron's formula).
pub fn heron(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p > 0.0 {
        0.25 * p.sqrt()
    } else {
        0.0
    }
}

impl TriangleMesh {
    /// Builds and validates a mesh from positions and triangles.
    ///
    /// Triangles are reoriented consistently if needed.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, triangles, None)
    }

    /// Like [`TriangleMesh::new`], with edge lengths given by `len(a, b)`
    /// instead of the embedding.
    pub fn with_intrinsic_lengths(
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        len: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let lengths = triangles.iter().map(|t| [len(t[1], t[2]), len(t[2], t[0]), len(t[0], t[1])]).collect();
        Self::build(vertices, triangles, Some(lengths))
    }

    fn build(vertices: Vec<[f64; 3]>, mut triangles: Vec<[usize; 3]>, lengths: Option<Vec<[f64; 3]>>) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::invalid("mesh has no triangles"));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::VertexOutOfRange(t, v));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vertex coordinates must be finite"));
        }
        let intrinsic = lengths.is_some();
        let mut lengths = lengths.unwrap_or_else(|| {
            triangles
                .iter()
                .map(|t| {
                    let p = |i: usize| vertices[t[i]];
                    [dist(p(1), p(2)), dist(p(2), p(0)), dist(p(0), p(1))]
                })
                .collect()
        });
        for (t, l) in lengths.iter().enumerate() {
            let lmax = l.iter().cloned().fold(0.0, f64::max);
            if !(heron(*l) > 1e-14 * lmax * lmax) {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        let mut edge_faces: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let e = edge_faces.entry([a.min(b), a.max(b)]).or_default();
                e.push(t);
                if e.len() > 2 {
                    return Err(Error::NonManifoldEdge(a.min(b), a.max(b)));
                }
            }
        }
        orient(&mut triangles, &mut lengths, &edge_faces)?;
        let mut edges: Vec<[usize; 2]> = edge_faces.keys().copied().collect();
        edges.sort();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
        let mut elen: HashMap<[usize; 2], f64> = HashMap::with_capacity(edges.len());
        for (tri, l) in triangles.iter().zip(&lengths) {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                elen.entry([a.min(b), a.max(b)]).or_insert(l[i]);
            }
        }
        for e in &edges {
            let l = elen[e];
            adjacency[e[0]].push((e[1], l));
            adjacency[e[1]].push((e[0], l));
        }
        for a in adjacency.iter_mut() {
            a.sort_by_key(|x| x.0);
        }
        let boundary_loops = boundary_loops(&triangles, &edge_faces);
        Ok(TriangleMesh { vertices, triangles, lengths, intrinsic, edges, boundary_loops, adjacency })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn has_intrinsic_lengths(&self) -> bool {
        self.intrinsic
    }

    /// Side lengths of triangle `t`, opposite corners 0, 1, 2.
    pub fn triangle_lengths(&self, t: usize) -> [f64; 3] {
        self.lengths[t]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        heron(self.lengths[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Lumped vertex areas: one third of the incident triangle areas.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let s = self.triangle_area(t) / 3.0;
            for &v in tri {
                a[v] += s;
            }
        }
        a
    }

    /// Boundary cycles as vertex sequences following the orientation.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops.is_empty()
    }

    /// Per-vertex boundary length: half the lengths of the incident boundary
    /// edges (zero for interior vertices).
    pub fn boundary_vertex_lengths(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_vertices()];
        for lp in &self.boundary_loops {
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                let l = self.edge_length(a, b).unwrap_or(0.0);
                w[a] += 0.5 * l;
                w[b] += 0.5 * l;
            }
        }
        w
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut b = vec![false; self.n_vertices()];
        for lp in &self.boundary_loops {
            for &v in lp {
                b[v] = true;
            }
        }
        b
    }

    /// Neighbours of `v` with edge lengths, sorted by index.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a].binary_search_by_key(&b, |x| x.0).ok().map(|p| self.adjacency[a][p].1)
    }

    pub fn median_edge_length(&self) -> f64 {
        let mut l: Vec<f64> = self.adjacency.iter().flatten().map(|x| x.1).collect();
        l.sort_by(|a, b| a.total_cmp(b));
        l[l.len() / 2]
    }

    /// Connected-component label per vertex and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.n_vertices();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = count;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.components().1 == 1
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.edges.len() as i64 + self.n_triangles() as i64
    }

    /// Genus from `V − E + F = 2 − 2γ − b`.
    pub fn genus(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::invalid("genus requires a connected mesh"));
        }
        let g2 = 2 - self.boundary_loops.len() as i64 - self.euler_characteristic();
        if g2 < 0 || g2 % 2 != 0 {
            return Err(Error::invalid(format!("inconsistent Euler characteristic {}", self.euler_characteristic())));
        }
        Ok((g2 / 2) as usize)
    }

    /// The same mesh with all lengths multiplied by `s`.
    pub fn scaled(&self, s: f64) -> TriangleMesh {
        let mut m = self.clone();
        for p in m.vertices.iter_mut() {
            p.iter_mut().for_each(|x| *x *= s);
        }
        for l in m.lengths.iter_mut() {
            l.iter_mut().for_each(|x| *x *= s);
        }
        for a in m.adjacency.iter_mut() {
            a.iter_mut().for_each(|x| x.1 *= s);
        }
        m
    }

    /// Midpoint (1→4) subdivision. With `onto_sphere`, new vertices are
    /// projected to the unit sphere. Intrinsic lengths are halved exactly.
    pub fn subdivide(&self, onto_sphere: bool) -> Result<TriangleMesh> {
        let mut verts = self.vertices.clone();
        let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            *mid.entry([a.min(b), a.max(b)]).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                let mut c = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0];
                if onto_sphere {
                    let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                    c.iter_mut().for_each(|x| *x /= r);
                }
                verts.push(c);
                verts.len() - 1
            })
        };
        let mut tris = Vec::with_capacity(4 * self.n_triangles());
        let mut lens = Vec::with_capacity(4 * self.n_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = *tri;
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            let [la, lb, lc] = self.lengths[t].map(|x| x / 2.0);
            tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            lens.extend([[la, lb, lc], [la, lb, lc], [la, lb, lc], [lc, la, lb]]);
        }
        if self.intrinsic && !onto_sphere {
            Self::build(verts, tris, Some(lens))
        } else {
            Self::build(verts, tris, None)
        }
    }
}

fn orient(
    triangles: &mut [[usize; 3]],
    lengths: &mut [[f64; 3]],
    edge_faces: &HashMap<[usize; 2], Vec<usize>>,
) -> Result<()> {
    let nt = triangles.len();
    let mut state = vec![0u8; nt]; // 0 unvisited, 1 kept, 2 flipped
    let has_dir = |tri: &[usize; 3], a: usize, b: usize| (0..3).any(|i| tri[i] == a && tri[(i + 1) % 3] == b);
    for seed in 0..nt {
        if state[seed] != 0 {
            continue;
        }
        state[seed] = 1;
        let mut queue = std::collections::VecDeque::from([seed]);
        while let Some(t) = queue.pop_front() {
            let tri = triangles[t];
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                for &s in &edge_faces[&[a.min(b), a.max(b)]] {
                    if s == t {
                        continue;
                    }
                    // A consistent neighbour traverses the shared edge as b→a.
                    let consistent = has_dir(&triangles[s], b, a);
                    if state[s] == 0 {
                        if !consistent {
                            triangles[s].swap(0, 1);
                            lengths[s].swap(0, 1);
                            state[s] = 2;
                        } else {
                            state[s] = 1;
                        }
                        queue.push_back(s);
                    } else if !consistent {
                        return Err(Error::NonOrientable);
                    }
                }
            }
        }
    }
    Ok(())
}

fn boundary_loops(triangles: &[[usize; 3]], edge_faces: &HashMap<[usize; 2], Vec<usize>>) -> Vec<Vec<usize>> {
    let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut starts = Vec::new();
    for tri in triangles {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            if edge_faces[&[a.min(b), a.max(b)]].len() == 1 {
                next.entry(a).or_default().push(b);
                starts.push(a);
            }
        }
    }
    starts.sort();
    starts.dedup();
    for v in next.values_mut() {
        v.sort();
    }
    let mut loops = Vec::new();
    for s in starts {
        while next.get(&s).is_some_and(|v| !v.is_empty()) {
            let mut lp = vec![s];
            let mut cur = next.get_mut(&s).unwrap().remove(0);
            while cur != s {
                lp.push(cur);
                match next.get_mut(&cur) {
                    Some(v) if !v.is_empty() => cur = v.remove(0),
                    _ => break,
                }
            }
            loops.push(lp);
        }
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heron_right_triangle() {
        assert!((heron([5.0, 4.0, 3.0]) - 6.0).abs() < 1e-12);
        assert_eq!(heron([1.0, 1.0, 2.0]), 0.0);
    }

    #[test]
    fn flipped_triangle_is_reoriented() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 3, 2]]).unwrap();
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0].len(), 4);
        assert_eq!(m.genus().unwrap(), 0);
    }

    #[test]
    fn mobius_strip_is_rejected() {
        // A twisted strip of three quads closes up with a flip.
        let mut v = Vec::new();
        for i in 0..6 {
            let a = i as f64 * std::f64::consts::PI / 3.0;
            v.push([a.cos() * 2.0, a.sin() * 2.0, 0.5]);
            v.push([a.cos() * 2.0, a.sin() * 2.0, -0.5]);
        }
        let mut tris = Vec::new();
        for i in 0..6 {
            let (a, b) = (2 * i, 2 * i + 1);
            let (c, d) = if i == 5 { (1, 0) } else { (2 * i + 2, 2 * i + 3) };
            tris.push([a, b, d]);
            tris.push([a, d, c]);
        }
        assert!(matches!(TriangleMesh::new(v, tris), Err(Error::NonOrientable)));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let r = TriangleMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]);
        assert!(matches!(r, Err(Error::NonManifoldEdge(0, 1))));
    }

    #[test]
    fn zero_area_triangle_is_rejected() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(TriangleMesh::new(v, vec![[0, 1, 2]]), Err(Error::DegenerateTriangle(0))));
    }
}
