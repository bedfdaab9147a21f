//! Extremality certificates: the round sphere is extremal for `λ₁`, a
//! perturbed density is not and gets a separating direction.

use conformal_spectra::measure::{density_measure, uniform_area_measure};
use conformal_spectra::mesh::icosphere;
use conformal_spectra::variation::{extremality_certificate, separating_direction, VariationOptions};

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(4);
    let opts = VariationOptions { cluster_tol: 1e-3, ..Default::default() };
    let c = extremality_certificate(&mesh, &uniform_area_measure(&mesh)?, 1, 1e-2, &opts)?;
    println!("sphere: {:?}, dimension {}, residual {:.2e}, coefficients {:?}", c.verdict, c.dimension, c.residual, c.coefficients);

    let dens: Vec<f64> = mesh.vertices().iter().map(|p| 1.0 + 0.1 * (3.0 * p[0]).sin() * p[2]).collect();
    let mu = density_measure(&mesh, &dens)?;
    let c = extremality_certificate(&mesh, &mu, 1, 1e-2, &opts)?;
    println!("perturbed: {:?}, dimension {}, residual {:.2e}", c.verdict, c.dimension, c.residual);
    if let Some(s) = separating_direction(&mesh, &mu, 1, 1e-2, &opts)? {
        println!("separating direction: margin {:.3e}, right derivative {:.4}, {} cuts", s.margin, s.right_derivative, s.cuts);
    }
    Ok(())
}
