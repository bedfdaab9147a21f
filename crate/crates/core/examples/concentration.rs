//! Deforming the round metric towards a point and watching the `8π`
//! ceiling on concentrating measures.

use std::f64::consts::PI;

use conformal_spectra::measure::{deform, uniform_area_measure};
use conformal_spectra::mesh::{assemble_stiffness, icosphere};
use conformal_spectra::optimize::{concentration_monitor, ConcentrationOptions};
use conformal_spectra::DeformationFamily;

fn main() -> conformal_spectra::Result<()> {
    let mesh = icosphere(4);
    let k = assemble_stiffness(&mesh);
    let x0 = mesh.vertices()[0];
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| -(p[0] * x0[0] + p[1] * x0[1] + p[2] * x0[2]).clamp(-1.0, 1.0).acos() / PI).collect();
    let fam = DeformationFamily::new(&uniform_area_measure(&mesh)?, &phi)?;
    let ts = [0.0, 20.0, 40.0, 60.0, 80.0, 100.0, 200.0];
    let ms = ts.iter().map(|&t| deform(&fam, t)).collect::<Result<Vec<_>, _>>()?;
    let rep = concentration_monitor(&mesh, &k, &ms, &ConcentrationOptions::default())?;
    for (t, e) in ts.iter().zip(&rep.entries) {
        println!(
            "t = {t:>5}: ball mass {:.4}, heaviest vertex {:.4}, lambda1*mass / 8pi {:.4}, flagged {}, resolved {}, ceiling {:?}",
            e.ball_mass,
            e.heaviest,
            e.lambda1_mass / (8.0 * PI),
            e.flagged,
            e.resolved,
            e.ceiling_ok
        );
    }
    println!("pass {}", rep.pass);
    Ok(())
}
