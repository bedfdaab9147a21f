//! Density-capped ascent of `λ₁·μ(M)` on the sphere from a random start.

use std::f64::consts::PI;

use conformal_spectra::mesh::{assemble_stiffness, icosphere};
use conformal_spectra::optimize::{maximize_lambda1, DensityCapSchedule, MaximizerOptions};

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    let schedule = DensityCapSchedule::uniform_budget(vec![10.0, 100.0], 30)?;
    let res = maximize_lambda1(&mesh, &k, &schedule, 7, &MaximizerOptions::default())?;
    for row in res.trace.iter().step_by(5) {
        println!("iter {:>3} cap {:>5} lambda1*mass / 8pi {:.5} step {:.2e}", row.iteration, row.cap, row.lambda1 / (8.0 * PI), row.step);
    }
    for s in &res.stages {
        println!("cap {}: {:?} after {} iterations, saturated area {:.4}", s.cap, s.end, s.iterations, s.saturated_area_fraction);
    }
    println!("final {:.5} x 8pi, status {:?}", res.lambda1 / (8.0 * PI), res.status);
    if let Some(c) = &res.certificate {
        println!("certificate {:?}, residual {:.2e}", c.verdict, c.residual);
    }
    Ok(())
}
