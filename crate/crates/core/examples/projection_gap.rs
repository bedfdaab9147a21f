//! `‖Π₁(μ) − Π₁(μ')‖` against the integral distance between the measures.

use conformal_spectra::measure::{deform, random_log_normal_measure};
use conformal_spectra::mesh::icosphere;
use conformal_spectra::variation::{projection_gap, VariationOptions};
use conformal_spectra::DeformationFamily;

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(3);
    let mu = random_log_normal_measure(&mesh, 0.5, 2, 12)?;
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| (2.0 * p[0]).sin() + p[1] * p[2]).collect();
    let fam = DeformationFamily::new(&mu, &phi)?;
    for t in [1e-1, 1e-2, 1e-3, 1e-4] {
        let g = projection_gap(&mesh, &fam.base, &deform(&fam, t)?, 1, &VariationOptions::default())?;
        println!(
            "t = {t:.0e}: gap {:.3e}, distance {:.3e}, delta {:.3e}, gap/delta {:.4}, inconclusive {}",
            g.gap,
            g.distance,
            g.delta,
            g.gap / g.delta,
            g.inconclusive
        );
    }
    Ok(())
}
