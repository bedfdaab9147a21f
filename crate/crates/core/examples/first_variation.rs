//! One-sided derivatives of `λ₁` along `μ_t = e^{tφ}μ/∫e^{tφ}dμ`, checked
//! against secants.

use conformal_spectra::measure::{deform, random_log_normal_measure, uniform_area_measure};
use conformal_spectra::mesh::icosphere;
use conformal_spectra::spectrum::{spectrum_of, SpectrumOptions};
use conformal_spectra::variation::{one_sided_derivatives, VariationOptions};
use conformal_spectra::{DeformationFamily, DiscreteMeasure, TriangleMesh};

fn lambda1(mesh: &TriangleMesh, mu: &DiscreteMeasure) -> f64 {
    spectrum_of(mesh, mu, 1, &SpectrumOptions::default()).unwrap().normalized(1)
}

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(3);
    let opts = VariationOptions { cluster_tol: 1e-3, ..Default::default() };

    let mu = random_log_normal_measure(&mesh, 0.5, 2, 3)?;
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| p[0] * p[1] + 0.3 * p[2]).collect();
    let d = one_sided_derivatives(&mesh, &mu, &phi, 1, &opts)?;
    let fam = DeformationFamily::new(&mu, &phi)?;
    let h = 1e-4;
    let fd = (lambda1(&mesh, &deform(&fam, h)?) - lambda1(&mesh, &deform(&fam, -h)?)) / (2.0 * h);
    println!("random metric: multiplicity {}, left {:.6}, right {:.6}, central difference {fd:.6}", d.multiplicity, d.left, d.right);

    // On the round sphere λ₁ is triple and the derivative splits.
    let mu = uniform_area_measure(&mesh)?;
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| p[2] * p[2] - 1.0 / 3.0).collect();
    let d = one_sided_derivatives(&mesh, &mu, &phi, 1, &opts)?;
    println!("round sphere, phi = z^2 - 1/3: multiplicity {}, left {:.4} > right {:.4}", d.multiplicity, d.left, d.right);
    Ok(())
}
