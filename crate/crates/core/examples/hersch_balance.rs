//! Balancing a metric with a conformal automorphism of the sphere and the
//! resulting coordinate bound `λ₁·μ(M) ≤ 8π`.

use std::f64::consts::PI;

use conformal_spectra::bounds::{hersch_bound, radial_sphere_map};
use conformal_spectra::measure::density_measure;
use conformal_spectra::mesh::{assemble_stiffness, icosphere};
use conformal_spectra::spectrum::{spectrum_of, SpectrumOptions};

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(4);
    let k = assemble_stiffness(&mesh);
    let map = radial_sphere_map(&mesh);
    for weight in [0.0, 5.0, 50.0] {
        // mass pushed towards the north pole
        let dens: Vec<f64> = mesh.vertices().iter().map(|p| 1.0 + weight * (p[2].max(0.0)).powi(4)).collect();
        let mu = density_measure(&mesh, &dens)?;
        let rep = hersch_bound(&mesh, &k, &mu, &map, 1, 1e-3)?;
        let l1 = spectrum_of(&mesh, &mu, 1, &SpectrumOptions::default())?.normalized(1);
        let a = rep.balance.parameter;
        println!(
            "weight {weight:>4}: a = {:.4?}, residual {:.1e}, bound / 8pi {:.5}, lambda1*mass / 8pi {:.5}",
            a.a,
            rep.balance.residual,
            rep.bound / (8.0 * PI),
            l1 / (8.0 * PI)
        );
    }
    Ok(())
}
