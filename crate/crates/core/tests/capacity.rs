mod common;

use conformal_spectra::capacity::{
    cap, fundamental_tone, isocapacity_constant, mazja_bracket, mesh_constant_q, tone_bracket, CandidateFamily, Capacitor,
};
use conformal_spectra::measure::{random_log_normal_measure, uniform_area_measure};
use conformal_spectra::mesh::{assemble_stiffness, graph_annulus, graph_ball, icosphere};
use conformal_spectra::spectrum::{assemble_mass, solve_spectrum};
use conformal_spectra::{DiscreteMeasure, Region};
use proptest::prelude::*;

use common::{antipode, dense_capacity, dense_lambda};

fn ball(mesh: &conformal_spectra::TriangleMesh, c: usize, r: f64) -> Region {
    graph_ball(mesh, c, r).unwrap()
}

#[test]
fn half_sphere_tone_matches_dense_oracle() {
    let mesh = icosphere(2);
    let k = assemble_stiffness(&mesh);
    let mu = uniform_area_measure(&mesh).unwrap();
    let omega = Region::custom((0..mesh.n_vertices()).filter(|&v| mesh.vertices()[v][2] > 1e-9).collect());
    let t = fundamental_tone(&mesh, &k, &mu, &omega).unwrap();
    let w: Vec<f64> = omega.vertices.iter().map(|&v| mu.masses()[v]).collect();
    let oracle = dense_lambda(&k.principal(&omega.vertices), &w, 0);
    assert!((t - oracle).abs() < 1e-10 * oracle, "{t} vs {oracle}");
}

#[test]
fn tone_examples() {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    let mu = uniform_area_measure(&mesh).unwrap();
    let all = Region::custom((0..mesh.n_vertices()).collect());
    assert!(fundamental_tone(&mesh, &k, &mu, &all).is_err());
    let tones: Vec<f64> = [1.2, 0.8, 0.4, 0.2].iter().map(|&r| fundamental_tone(&mesh, &k, &mu, &ball(&mesh, 0, r)).unwrap()).collect();
    assert!(tones.windows(2).all(|w| w[1] > w[0]), "{tones:?}");
    let mut w = mu.masses();
    for v in ball(&mesh, 0, 0.5).vertices {
        w[v] = 0.0;
    }
    let hole = DiscreteMeasure::from_weights(w).unwrap();
    assert!(fundamental_tone(&mesh, &k, &hole, &ball(&mesh, 0, 0.5)).unwrap().is_infinite());
    let est = isocapacity_constant(&mesh, &k, &hole, &ball(&mesh, 0, 0.5), &CandidateFamily::default()).unwrap();
    assert_eq!(est.beta_lower, 0.0);
    assert!(mazja_bracket(&mesh, &k, &hole, &ball(&mesh, 0, 0.5), 0.05).unwrap().pass);
}

#[test]
fn heavy_vertex_dominates_isocapacity() {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    let mut w: Vec<f64> = uniform_area_measure(&mesh).unwrap().masses().iter().map(|m| 0.01 * m).collect();
    w[0] = 1.0;
    let mu = DiscreteMeasure::from_weights(w).unwrap();
    let omega = ball(&mesh, 0, 0.6);
    let single = cap(&mesh, &k, &Capacitor::new(Region::custom(vec![0]), omega.clone()).unwrap()).unwrap().value;
    let est = isocapacity_constant(&mesh, &k, &mu, &omega, &CandidateFamily::default()).unwrap();
    assert!(est.beta_lower >= 1.0 / single * (1.0 - 1e-12));
    let rep = mazja_bracket(&mesh, &k, &mu, &omega, 0.05).unwrap();
    assert!(rep.pass && rep.left_holds);
    let product = rep.tone * rep.beta_lower;
    assert!((0.25..=1.05).contains(&product), "{product}");
}

#[test]
fn mazja_on_finer_mesh() {
    let mesh = icosphere(4);
    let k = assemble_stiffness(&mesh);
    for seed in 0..4 {
        let mu = random_log_normal_measure(&mesh, 0.8, 3, seed).unwrap();
        let rep = mazja_bracket(&mesh, &k, &mu, &ball(&mesh, 100 * seed as usize, 0.7), 0.05).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn tone_bracket_examples() {
    let mesh = icosphere(2);
    let k = assemble_stiffness(&mesh);
    let mu = uniform_area_measure(&mesh).unwrap().normalized();
    let mut family = Vec::new();
    for c in (0..mesh.n_vertices()).step_by(7) {
        for r in [0.3, 0.6, 0.9, 1.2, 1.5] {
            let b = ball(&mesh, c, r);
            let m = mu.mass_of(&b.vertices);
            if m > 0.0 && m <= 0.5 {
                family.push(b);
            }
        }
    }
    let rep = tone_bracket(&mesh, &k, &mu, &family, true, 1e-6).unwrap();
    assert!(rep.pass && rep.lower_asserted);
    assert!(rep.inf_tone <= rep.lambda1 && rep.lambda1 <= 2.0 * rep.inf_tone * (1.0 + 1e-6), "{} {}", rep.lambda1, rep.inf_tone);

    let hemi = Region::custom((0..mesh.n_vertices()).filter(|&v| mesh.vertices()[v][2] > 1e-9).collect());
    let m = mu.mass_of(&hemi.vertices);
    assert!(m <= 0.5);
    let one = tone_bracket(&mesh, &k, &mu, &[hemi], false, 1e-6).unwrap();
    assert!(one.pass && !one.lower_asserted);

    let too_big = ball(&mesh, 0, 2.5);
    assert!(tone_bracket(&mesh, &k, &mu, &[too_big], false, 1e-6).is_err());
}

#[test]
fn atom_plus_spread_has_vanishing_lambda1() {
    // Half the mass on one vertex: the complement of a small ball around it
    // has small tone, and λ₁ drifts to zero under refinement.
    let mut lam = Vec::new();
    let mut tones = Vec::new();
    for level in 2..=5 {
        let mesh = icosphere(level);
        let k = assemble_stiffness(&mesh);
        let mut w: Vec<f64> = uniform_area_measure(&mesh).unwrap().normalized().masses().iter().map(|m| 0.5 * m).collect();
        w[0] += 0.5;
        let mu = DiscreteMeasure::from_weights(w).unwrap();
        let r = solve_spectrum(&k, &assemble_mass(&mesh, &mu).unwrap(), 1, 1e-10).unwrap();
        lam.push(r.lambda(1));
        let h = mesh.median_edge_length();
        let away = Region::custom((0..mesh.n_vertices()).filter(|v| !ball(&mesh, 0, 1.5 * h).contains(*v)).collect());
        tones.push(fundamental_tone(&mesh, &k, &mu, &away).unwrap());
    }
    assert!(lam.windows(2).all(|w| w[1] < w[0]), "{lam:?}");
    assert!(tones.windows(2).all(|w| w[1] < w[0]), "{tones:?}");
}

#[test]
fn annulus_capacity_is_controlled_by_mesh_constant() {
    let mesh = icosphere(4);
    let k = assemble_stiffness(&mesh);
    let h = mesh.median_edge_length();
    let radii: Vec<f64> = (0..8).map(|i| 1.01 * h * 1.5f64.powi(i)).collect();
    let q = mesh_constant_q(&mesh, &k, 12, &radii).unwrap();
    for (r, big) in [(2.0 * h, 4.0 * h), (3.0 * h, 9.0 * h), (0.0, 5.0 * h)] {
        let (a, a2) = graph_annulus(&mesh, 17, r, big).unwrap();
        let c = cap(&mesh, &k, &Capacitor::new(a, a2).unwrap()).unwrap().value;
        assert!(c <= 4.0 * q.q, "{c} > 4 x {}", q.q);
    }
}

#[test]
fn positive_isocapacity_bound_gives_spectral_gap() {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    for seed in 0..3 {
        let mu = random_log_normal_measure(&mesh, 0.5, 2, seed).unwrap();
        let lam = solve_spectrum(&k, &assemble_mass(&mesh, &mu).unwrap(), 1, 1e-10).unwrap().lambda(1);
        let mut big_b = 0.0f64;
        for c in (0..mesh.n_vertices()).step_by(40) {
            for r in [0.4, 0.8, 1.2] {
                let b = ball(&mesh, c, r);
                if mu.mass_of(&b.vertices) <= 0.5 {
                    big_b = big_b.max(isocapacity_constant(&mesh, &k, &mu, &b, &CandidateFamily::default()).unwrap().beta_lower);
                }
            }
        }
        assert!(lam >= 1.0 / (4.0 * big_b) * (1.0 - 1e-6), "{lam} < 1/(4 x {big_b})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_is_monotone(c in 0usize..162, r in 0.1f64..0.5, dr in 0.0f64..0.4, big in 0.9f64..1.4, dbig in 0.0f64..0.6) {
        let mesh = icosphere(2);
        let k = assemble_stiffness(&mesh);
        let f1 = ball(&mesh, c, r);
        let f2 = ball(&mesh, c, r + dr);
        let g1 = ball(&mesh, c, big);
        let g2 = ball(&mesh, c, big + dbig);
        prop_assume!(g2.len() < mesh.n_vertices() && !f1.is_empty());
        let v = |f: &Region, g: &Region| cap(&mesh, &k, &Capacitor::new(f.clone(), g.clone()).unwrap()).unwrap();
        let c11 = v(&f1, &g1);
        prop_assert!(c11.value <= v(&f2, &g1).value * (1.0 + 1e-12) + 1e-12);
        prop_assert!(v(&f1, &g2).value <= c11.value * (1.0 + 1e-12) + 1e-12);
        prop_assert!(c11.potential.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
        let o = dense_capacity(&k, &f1.vertices, &g1.vertices);
        prop_assert!((c11.value - o).abs() <= 1e-10 * o.max(1.0));
    }
}

#[test]
fn antipodal_helper_is_far() {
    let mesh = icosphere(2);
    let b = antipode(&mesh, 0);
    let (p, q) = (mesh.vertices()[0], mesh.vertices()[b]);
    assert!((p[0] + q[0]).abs() + (p[1] + q[1]).abs() + (p[2] + q[2]).abs() < 1e-9);
}
