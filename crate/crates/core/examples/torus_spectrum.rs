//! The square flat torus: `λ₁ = 4π²` with multiplicity 4.

use std::f64::consts::PI;

use conformal_spectra::measure::uniform_area_measure;
use conformal_spectra::mesh::flat_torus;
use conformal_spectra::spectrum::{spectrum_of, SpectrumOptions};

fn main() -> conformal_spectra::Result<()> {
    let mesh = flat_torus(40)?;
    println!("genus {}", mesh.genus()?);
    let r = spectrum_of(&mesh, &uniform_area_measure(&mesh)?, 8, &SpectrumOptions::default())?;
    for k in 1..=8 {
        println!("lambda_{k} / 4pi^2 = {:.5}", r.lambda(k) / (4.0 * PI * PI));
    }
    println!("residual {:.2e}", r.max_residual());
    Ok(())
}
