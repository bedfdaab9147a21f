//! Boundary measure on the unit disk: the Steklov problem, `λ₁·L = 2π`.

use std::f64::consts::PI;

use conformal_spectra::measure::boundary_measure;
use conformal_spectra::mesh::disk;
use conformal_spectra::spectrum::{spectrum_of, SpectrumOptions};

fn main() -> conformal_spectra::Result<()> {
    for rings in [10, 20, 40] {
        let mesh = disk(rings)?;
        let mu = boundary_measure(&mesh)?;
        let r = spectrum_of(&mesh, &mu, 3, &SpectrumOptions::default())?;
        println!(
            "{rings:>3} rings: boundary length {:.5}, sigma_1 = {:.5}, sigma_1 * L / 2pi = {:.5}, finite eigenvalues {}",
            r.total_mass,
            r.lambda(1),
            r.normalized(1) / (2.0 * PI),
            r.n_finite
        );
    }
    Ok(())
}
