//! Where a capped maximizer saturates its density cap, on a prolate
//! ellipsoid: the optimal metric is round, which is far from uniform area.

use conformal_spectra::mesh::{assemble_stiffness, icosphere};
use conformal_spectra::TriangleMesh;
use conformal_spectra::optimize::{maximize_lambda1, singular_set_estimate, DensityCapSchedule, MaximizerOptions};

fn main() -> conformal_spectra::Result<()> {
    let sphere = icosphere(3);
    let stretched = sphere.vertices().iter().map(|p| [p[0], p[1], 4.0 * p[2]]).collect();
    let mesh = TriangleMesh::new(stretched, sphere.triangles().to_vec())?;
    let k = assemble_stiffness(&mesh);
    let schedule = DensityCapSchedule::uniform_budget(vec![2.0, 4.0], 25)?;
    let res = maximize_lambda1(&mesh, &k, &schedule, 2, &MaximizerOptions::default())?;
    let est = singular_set_estimate(&mesh, &res, 0.05)?;
    println!("lambda1*mass {:.4}", res.lambda1);
    println!("per cap (cap, saturated area fraction): {:?}", est.per_cap);
    println!("final saturated set: {} vertices, area fraction {:.4}", est.vertices.len(), est.area_fraction);
    println!("nested over caps: {} vertices, area fraction {:.4}", est.nested.len(), est.nested_area_fraction);
    Ok(())
}
