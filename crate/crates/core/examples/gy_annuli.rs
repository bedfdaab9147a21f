//! Disjoint annuli carrying mass at least `v` each, and the capacitor
//! bound `λ_k ≤ κ·μ(M)/v` they give.

use conformal_spectra::bounds::{capacitor_bound, gy_annuli};
use conformal_spectra::measure::density_measure;
use conformal_spectra::mesh::{assemble_stiffness, icosphere};

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(4);
    let k = assemble_stiffness(&mesh);
    // three bumps along the equator
    let centres: Vec<[f64; 3]> = (0..3).map(|i| {
        let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
        [a.cos(), a.sin(), 0.0]
    }).collect();
    let dens: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|p| 0.02 + centres.iter().map(|c| (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + p[2].powi(2)) / 0.1).exp()).sum::<f64>())
        .collect();
    let mu = density_measure(&mesh, &dens)?.normalized();
    for kk in 1..=2 {
        let sys = gy_annuli(&mesh, &mu, kk)?;
        let b = capacitor_bound(&mesh, &k, &mu, &sys, kk, 1e-9)?;
        println!("k = {kk}: {} annuli from {} candidates, v = {:.4}, kappa = {:.4}", sys.annuli.len(), sys.candidates, sys.v, sys.kappa);
        for a in &sys.annuli {
            println!("   centre {:>5} r {:.3} R {:.3} mass {:.4} cap {:.4}", a.center, a.r, a.big_r, a.mass, a.capacity);
        }
        println!("   lambda_k {:.4} <= bound {:.4}: {}", b.lambda_k, b.bound, b.pass);
    }
    Ok(())
}
