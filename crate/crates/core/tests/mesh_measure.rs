mod common;

use std::f64::consts::PI;

use conformal_spectra::measure::{
    ball_growth_diagnostic, boundary_measure, default_radii, deform, integral_distance, random_log_normal_measure, uniform_area_measure,
    DeformationFamily,
};
use conformal_spectra::mesh::{assemble_stiffness, disk, flat_torus, graph_annulus, graph_ball, grid_square, icosahedron, icosphere};
use conformal_spectra::TriangleMesh;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn jittered_grid(n: usize, seed: u64) -> TriangleMesh {
    let base = grid_square(n, 1.0).unwrap();
    let mut s = seed;
    let h = 0.25 / n as f64;
    let verts: Vec<[f64; 3]> = base
        .vertices()
        .iter()
        .map(|p| {
            // Interior points only; a small LCG keeps this independent of the crate's RNG use.
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let interior = p[0] > 1e-9 && p[0] < 1.0 - 1e-9 && p[1] > 1e-9 && p[1] < 1.0 - 1e-9;
            if interior {
                [p[0] + h * next(), p[1] + h * next(), 0.0]
            } else {
                *p
            }
        })
        .collect();
    TriangleMesh::new(verts, base.triangles().to_vec()).unwrap()
}

#[test]
fn genus_examples() {
    assert_eq!(icosphere(2).genus().unwrap(), 0);
    assert_eq!(flat_torus(12).unwrap().genus().unwrap(), 1);
    let d = disk(6).unwrap();
    assert_eq!(d.genus().unwrap(), 0);
    assert_eq!(d.boundary_loops().len(), 1);
    assert!(icosahedron().boundary_loops().is_empty());
}

#[test]
fn null_space_matches_components() {
    let a = icosahedron();
    let mut verts = a.vertices().to_vec();
    verts.extend(a.vertices().iter().map(|p| [p[0] + 5.0, p[1], p[2]]));
    let mut tris = a.triangles().to_vec();
    tris.extend(a.triangles().iter().map(|t| [t[0] + 12, t[1] + 12, t[2] + 12]));
    let two = TriangleMesh::new(verts, tris).unwrap();
    for (mesh, comps) in [(a, 1usize), (two, 2)] {
        let k = assemble_stiffness(&mesh).to_dense();
        let ev = SymmetricEigen::new(k).eigenvalues;
        let zeros = ev.iter().filter(|x| x.abs() < 1e-10).count();
        assert_eq!(zeros, comps);
        assert!(ev.iter().all(|&x| x > -1e-10));
    }
}

#[test]
fn sphere_area_converges() {
    let err: Vec<f64> = (1..=4).map(|l| (uniform_area_measure(&icosphere(l)).unwrap().total_mass() - 4.0 * PI).abs()).collect();
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    assert!(err[3] < 0.02);
}

#[test]
fn disk_perimeter_converges() {
    let err: Vec<f64> = [4, 8, 16, 32].iter().map(|&r| (boundary_measure(&disk(r).unwrap()).unwrap().total_mass() - 2.0 * PI).abs()).collect();
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    // Inscribed polygon with 6R sides of length 2 sin(pi/6R).
    let r = 32.0;
    let poly = 12.0 * r * (PI / (6.0 * r)).sin();
    assert!((boundary_measure(&disk(32).unwrap()).unwrap().total_mass() - poly).abs() < 1e-10);
}

#[test]
fn closed_mesh_has_no_boundary_measure() {
    assert!(boundary_measure(&flat_torus(8).unwrap()).is_err());
}

#[test]
fn annulus_on_sphere_is_strictly_inside_double() {
    let m = icosphere(3);
    let (a, a2) = graph_annulus(&m, 0, 0.5, 1.0).unwrap();
    assert!(a.is_subset_of(&a2) && a2.len() > a.len());
    let d = conformal_spectra::mesh::graph_distances(&m, 0, f64::INFINITY);
    for v in 0..m.n_vertices() {
        assert_eq!(a.contains(v), d[v] >= 0.5 && d[v] < 1.0);
        assert_eq!(a2.contains(v), d[v] >= 0.25 && d[v] < 2.0);
    }
}

#[test]
fn growth_profiles() {
    let m = icosphere(4);
    let radii = default_radii(&m, 8);
    let mu = uniform_area_measure(&m).unwrap().normalized();
    let p1 = ball_growth_diagnostic(&m, &mu, 1.0, &radii).unwrap();
    let p2 = ball_growth_diagnostic(&m, &mu, 2.0, &radii).unwrap();
    assert_eq!(p1.trend, conformal_spectra::measure::Trend::Decaying);
    for (i, &r) in radii.iter().enumerate() {
        if r < (-1.0f64).exp() {
            assert!(p2.values[i] >= p1.values[i]);
        }
    }
    assert!(ball_growth_diagnostic(&m, &mu, 1.0, &[1.5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stiffness_is_scale_invariant(seed in 0u64..1000, s in 0.01f64..100.0) {
        let m = jittered_grid(6, seed);
        let k = assemble_stiffness(&m);
        let ks = assemble_stiffness(&m.scaled(s));
        let u: Vec<f64> = m.vertices().iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        prop_assert!((k.quad(&u) - ks.quad(&u)).abs() <= 1e-12 * k.quad(&u).max(1.0));
    }

    #[test]
    fn energy_is_nonnegative_and_kills_constants(seed in 0u64..1000, c in -10.0f64..10.0) {
        let m = jittered_grid(5, seed);
        let k = assemble_stiffness(&m);
        let mut s = seed;
        let u: Vec<f64> = (0..m.n_vertices()).map(|_| { s = s.wrapping_mul(2862933555777941757).wrapping_add(3037000493); (s >> 40) as f64 / 16777216.0 - 0.5 }).collect();
        prop_assert!(k.quad(&u) >= -1e-12);
        prop_assert!(k.quad(&vec![c; m.n_vertices()]).abs() <= 1e-10 * c * c + 1e-14);
    }

    #[test]
    fn graph_balls_are_monotone(c in 0usize..642, r1 in 0.0f64..2.0, dr in 0.0f64..1.0) {
        let m = icosphere(3);
        let a = graph_ball(&m, c, r1).unwrap();
        let b = graph_ball(&m, c, r1 + dr).unwrap();
        prop_assert!(a.is_subset_of(&b));
    }

    #[test]
    fn deform_is_a_group_action(seed in 0u64..500, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let m = icosphere(2);
        let mu = random_log_normal_measure(&m, 0.5, 1, seed).unwrap();
        let phi: Vec<f64> = m.vertices().iter().map(|p| p[0] - 0.3 * p[2] * p[1]).collect();
        let fam = DeformationFamily::new(&mu, &phi).unwrap();
        prop_assert!(fam.mean().abs() < 1e-12);
        let once = deform(&fam, t1 + t2).unwrap();
        let twice = deform(&DeformationFamily::new(&deform(&fam, t1).unwrap(), &phi).unwrap(), t2).unwrap();
        prop_assert!((once.total_mass() - 1.0).abs() < 1e-12);
        for (a, b) in once.masses().iter().zip(twice.masses()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let (d, _) = integral_distance(&fam.base, &deform(&fam, t1.abs()).unwrap()).unwrap();
        prop_assert!(d <= 2.0 * t1.abs() * fam.phi_sup + 1e-12);
    }

    #[test]
    fn integral_distance_is_a_metric(s1 in 0u64..300, s2 in 300u64..600, s3 in 600u64..900) {
        let m = icosahedron();
        let a = random_log_normal_measure(&m, 1.0, 0, s1).unwrap();
        let b = random_log_normal_measure(&m, 1.0, 0, s2).unwrap();
        let c = random_log_normal_measure(&m, 1.0, 0, s3).unwrap();
        let d = |x, y| integral_distance(x, y).unwrap().0;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-15);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}
