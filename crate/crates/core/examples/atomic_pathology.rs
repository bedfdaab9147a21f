//! Two antipodal atoms of mass 1/2: one finite positive eigenvalue, and it
//! goes to zero under refinement because points have zero capacity.

use conformal_spectra::measure::atomic_measure;
use conformal_spectra::mesh::icosphere;
use conformal_spectra::spectrum::{spectrum_of, SpectrumOptions};

fn main() -> conformal_spectra::Result<()> {
    for level in 1..=5 {
        let mesh = icosphere(level);
        let v = mesh.vertices();
        // vertex 0 and its antipode
        let b = (0..v.len())
            .min_by(|&i, &j| {
                let d = |p: [f64; 3]| (p[0] + v[0][0]).powi(2) + (p[1] + v[0][1]).powi(2) + (p[2] + v[0][2]).powi(2);
                d(v[i]).total_cmp(&d(v[j]))
            })
            .unwrap();
        let mu = atomic_measure(&mesh, &[(0, 0.5), (b, 0.5)])?;
        let r = spectrum_of(&mesh, &mu, 2, &SpectrumOptions::default())?;
        println!("level {level}: lambda_1 = {:.4}, lambda_2 = {}, finite {}", r.lambda(1), r.lambda(2), r.n_finite);
    }
    Ok(())
}
