//! `λ₁` against the fundamental tones of domains carrying at most half the
//! mass, nodal domains included.

use conformal_spectra::capacity::tone_bracket;
use conformal_spectra::measure::random_log_normal_measure;
use conformal_spectra::mesh::{assemble_stiffness, graph_ball, icosphere};

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    let mu = random_log_normal_measure(&mesh, 0.5, 2, 9)?;
    let omegas = [graph_ball(&mesh, 0, 0.6)?, graph_ball(&mesh, 200, 0.9)?, graph_ball(&mesh, 500, 1.2)?];
    let rep = tone_bracket(&mesh, &k, &mu, &omegas, true, 1e-6)?;
    for e in &rep.entries {
        println!("{:<12} mass {:.4} tone {:.4}", e.label, e.mass, e.tone);
    }
    println!(
        "lambda_1 {:.4}, inf tone {:.4}, ratio {:.4}, upper {:.4}; lower holds {}, upper holds {}",
        rep.lambda1, rep.inf_tone, rep.ratio, rep.upper, rep.lower_holds, rep.upper_holds
    );
    Ok(())
}
