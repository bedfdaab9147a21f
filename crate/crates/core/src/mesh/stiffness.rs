use super::{heron, StiffnessMatrix, TriangleMesh};

/// Cotangent stiffness matrix: `uᵀKu` is the Dirichlet energy of the
/// piecewise linear interpolant of `u`.
///
/// Cotangents are computed from side lengths, so the matrix only depends on
/// the angles of the triangles. Obtuse triangles give negative weights, which
/// are kept. Assembly sorts the element contributions before summation, so
/// the result is bitwise reproducible.
pub fn assemble_stiffness(mesh: &TriangleMesh) -> StiffnessMatrix {
    let mut trip = Vec::with_capacity(12 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let l = mesh.triangle_lengths(t);
        let area = heron(l);
        for c in 0..3 {
            let (a, b, o) = (l[(c + 1) % 3], l[(c + 2) % 3], l[c]);
            let cot = (a * a + b * b - o * o) / (4.0 * area);
            let w = 0.5 * cot;
            let (i, j) = (tri[(c + 1) % 3], tri[(c + 2) % 3]);
            trip.push((i, j, -w));
            trip.push((j, i, -w));
            trip.push((i, i, w));
            trip.push((j, j, w));
        }
    }
    StiffnessMatrix::from_triplets(mesh.n_vertices(), trip)
}
