//! Capacity of a planar annulus against `2π / ln(R/r)`.

use std::f64::consts::PI;

use conformal_spectra::capacity::{cap, Capacitor};
use conformal_spectra::mesh::{assemble_stiffness, disk};
use conformal_spectra::Region;

fn main() -> conformal_spectra::Result<()> {
    let mesh = disk(60)?;
    let k = assemble_stiffness(&mesh);
    let radius = |v: usize| {
        let p = mesh.vertices()[v];
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    };
    for (r, big_r) in [(0.1, 0.5), (0.05, 0.4), (0.2, 0.9)] {
        let f = Region::custom((0..mesh.n_vertices()).filter(|&v| radius(v) <= r + 1e-9).collect());
        let g = Region::custom((0..mesh.n_vertices()).filter(|&v| radius(v) < big_r - 1e-9).collect());
        let c = cap(&mesh, &k, &Capacitor::new(f, g)?)?;
        let exact = 2.0 * PI / (big_r / r).ln();
        println!("r = {r}, R = {big_r}: cap {:.5}, exact {exact:.5}, relative error {:.4}", c.value, (c.value - exact).abs() / exact);
    }
    Ok(())
}
