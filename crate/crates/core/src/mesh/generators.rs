use std::f64::consts::PI;

use super::TriangleMesh;
use crate::error::Result;

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> TriangleMesh {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let r = (1.0 + p * p).sqrt();
    let v = raw.iter().map(|x: &[f64; 3]| x.map(|c| c / r)).collect();
    let t = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::new(v, t).expect("icosahedron is valid")
}

/// Unit-radius icosphere after `level` midpoint subdivisions
/// (`10·4^level + 2` vertices).
pub fn icosphere(level: usize) -> TriangleMesh {
    let mut m = icosahedron();
    for _ in 0..level {
        m = m.subdivide(true).expect("subdivision of a valid sphere");
    }
    m
}

/// Flat square torus of unit area on an `n × n` grid, each cell cut along
/// the same diagonal.
///
/// Edge lengths are intrinsic (the flat metric); positions place the grid on
/// a torus of revolution for export only.
pub fn flat_torus(n: usize) -> Result<TriangleMesh> {
    if n < 3 {
        return Err(crate::Error::invalid("flat torus needs n >= 3"));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (2.0 * PI * i as f64 * h, 2.0 * PI * j as f64 * h);
            v.push([(2.0 + b.cos()) * a.cos(), (2.0 + b.cos()) * a.sin(), b.sin()]);
        }
    }
    let mut t = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::with_intrinsic_lengths(v, t, |a, b| {
        let d = |x: usize, y: usize| {
            let k = (x as i64 - y as i64).rem_euclid(n as i64);
            k.min(n as i64 - k) as f64
        };
        let (di, dj) = (d(a / n, b / n), d(a % n, b % n));
        h * (di * di + dj * dj).sqrt()
    })
}

/// The unit square split into two right isoceles triangles.
pub fn unit_square() -> TriangleMesh {
    grid_square(1, 1.0).expect("unit square is valid")
}

/// Square `[0, side]²` in the plane on an `n × n` grid.
pub fn grid_square(n: usize, side: f64) -> Result<TriangleMesh> {
    if n == 0 {
        return Err(crate::Error::invalid("grid needs n >= 1"));
    }
    let h = side / n as f64;
    let id = |i: usize, j: usize| i * (n + 1) + j;
    let mut v = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            v.push([j as f64 * h, i as f64 * h, 0.0]);
        }
    }
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            t.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            t.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    TriangleMesh::new(v, t)
}

/// Unit disk from `rings` concentric rings of radius `i/rings` carrying `6i`
/// vertices each (`1 + 3·rings·(rings+1)` vertices).
pub fn disk(rings: usize) -> Result<TriangleMesh> {
    if rings == 0 {
        return Err(crate::Error::invalid("disk needs at least one ring"));
    }
    let mut v = vec![[0.0, 0.0, 0.0]];
    let mut start = vec![0usize];
    for i in 1..=rings {
        start.push(v.len());
        let r = i as f64 / rings as f64;
        for j in 0..6 * i {
            let a = 2.0 * PI * j as f64 / (6 * i) as f64;
            v.push([r * a.cos(), r * a.sin(), 0.0]);
        }
    }
    let mut t = Vec::new();
    for i in 1..=rings {
        let outer: Vec<usize> = (0..6 * i).map(|j| start[i] + j).collect();
        let inner: Vec<usize> = if i == 1 { vec![0] } else { (0..6 * (i - 1)).map(|j| start[i - 1] + j).collect() };
        stitch(&inner, &outer, &mut t);
    }
    TriangleMesh::new(v, t)
}

// Triangulates the band between two closed rings of vertices, both listed
// counter-clockwise starting at angle zero, by advancing along whichever
// ring has the smaller next angle.
fn stitch(inner: &[usize], outer: &[usize], t: &mut Vec<[usize; 3]>) {
    if inner.len() == 1 {
        for j in 0..outer.len() {
            t.push([inner[0], outer[j], outer[(j + 1) % outer.len()]]);
        }
        return;
    }
    let (ni, no) = (inner.len(), outer.len());
    let (mut i, mut o) = (0usize, 0usize);
    while i < ni || o < no {
        let next_i = (i + 1) as f64 / ni as f64;
        let next_o = (o + 1) as f64 / no as f64;
        if o < no && (i >= ni || next_o <= next_i) {
            t.push([inner[i % ni], outer[o], outer[(o + 1) % no]]);
            o += 1;
        } else {
            t.push([inner[i], outer[o % no], inner[(i + 1) % ni]]);
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for l in 0..4 {
            let m = icosphere(l);
            assert_eq!(m.n_vertices(), 10 * 4usize.pow(l as u32) + 2);
            assert!(m.is_closed());
            assert_eq!(m.genus().unwrap(), 0);
        }
    }

    #[test]
    fn torus_and_disk_topology() {
        let t = flat_torus(8).unwrap();
        assert_eq!(t.genus().unwrap(), 1);
        assert!((t.total_area() - 1.0).abs() < 1e-12);
        let d = disk(5).unwrap();
        assert_eq!(d.n_vertices(), 1 + 3 * 5 * 6);
        assert_eq!(d.boundary_loops().len(), 1);
        assert_eq!(d.genus().unwrap(), 0);
    }
}
