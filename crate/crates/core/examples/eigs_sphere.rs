//! First eigenvalues of the round sphere, normalized by area.
//!
//! `cargo run --release --example eigs_sphere -- 4`

use std::f64::consts::PI;

use conformal_spectra::measure::uniform_area_measure;
use conformal_spectra::mesh::icosphere;
use conformal_spectra::spectrum::{spectrum_of, SpectrumOptions};

fn main() -> conformal_spectra::Result<()> {
    let level: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let mesh = icosphere(level);
    let mu = uniform_area_measure(&mesh)?;
    let r = spectrum_of(&mesh, &mu, 9, &SpectrumOptions::default())?;
    println!("icosphere({level}): {} vertices, mass {:.6}", mesh.n_vertices(), r.total_mass);
    for k in 1..=9 {
        // exact values are l(l+1) for l = 1, 2 with multiplicity 2l+1
        println!("lambda_{k} = {:.6}  (x mass / 8pi = {:.6})", r.lambda(k), r.normalized(k) / (8.0 * PI));
    }
    println!("clusters: {:?}", r.clusters(1e-3));
    Ok(())
}
