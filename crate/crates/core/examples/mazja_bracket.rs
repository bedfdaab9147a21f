//! `1/(4β) ≤ λ*(ω) ≤ 1/β` for a random metric and a few balls.

use conformal_spectra::capacity::mazja_bracket;
use conformal_spectra::measure::random_log_normal_measure;
use conformal_spectra::mesh::{assemble_stiffness, graph_ball, icosphere};

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    let mu = random_log_normal_measure(&mesh, 0.7, 2, 5)?;
    for (c, r) in [(0, 0.5), (100, 0.9), (400, 1.3)] {
        let omega = graph_ball(&mesh, c, r)?;
        let rep = mazja_bracket(&mesh, &k, &mu, &omega, 0.05)?;
        println!(
            "ball({c}, {r}) with {} vertices: {:.4} <= tone {:.4} <= {:.4}  (beta_lower {:.4e}, pass {})",
            omega.len(),
            rep.lhs,
            rep.tone,
            rep.rhs,
            rep.beta_lower,
            rep.pass
        );
    }
    Ok(())
}
