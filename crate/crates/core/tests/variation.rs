use conformal_spectra::measure::{deform, density_measure, random_log_normal_measure, uniform_area_measure, DeformationFamily};
use conformal_spectra::mesh::{assemble_stiffness, flat_torus, icosphere};
use conformal_spectra::spectrum::{assemble_mass, solve_spectrum_with, SpectrumOptions};
use conformal_spectra::variation::{
    extremality_certificate, l_phi, one_sided_derivatives, projection_gap, separating_direction, Verdict, VariationOptions,
};
use conformal_spectra::{DiscreteMeasure, TriangleMesh};
use proptest::prelude::*;

fn cluster_opts() -> VariationOptions {
    VariationOptions { cluster_tol: 1e-3, ..Default::default() }
}

fn spectrum(mesh: &TriangleMesh, mu: &DiscreteMeasure, k: usize) -> Vec<f64> {
    let r = solve_spectrum_with(&assemble_stiffness(mesh), &assemble_mass(mesh, mu).unwrap(), k, &SpectrumOptions::default()).unwrap();
    (0..=k).map(|j| r.normalized(j)).collect()
}

fn centered_sup(mu: &DiscreteMeasure, phi: &[f64]) -> f64 {
    let m = mu.normalized().masses();
    let mean: f64 = m.iter().zip(phi).map(|(a, b)| a * b).sum();
    phi.iter().map(|p| (p - mean).abs()).fold(0.0, f64::max)
}

#[test]
fn simple_eigenvalue_has_equal_derivatives() {
    let mesh = icosphere(3);
    let mu = random_log_normal_measure(&mesh, 0.5, 2, 9).unwrap();
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| p[0] + p[1] * p[2]).collect();
    let d = one_sided_derivatives(&mesh, &mu, &phi, 1, &VariationOptions::default()).unwrap();
    assert_eq!(d.multiplicity, 1);
    assert!((d.left - d.right).abs() < 1e-12 * d.lambda);
    let zero = one_sided_derivatives(&mesh, &mu, &vec![0.0; mesh.n_vertices()], 1, &VariationOptions::default()).unwrap();
    assert_eq!((zero.left, zero.right), (0.0, 0.0));
    // l_phi of the eigenfunction itself, with φ centred by hand.
    let r = solve_spectrum_with(&assemble_stiffness(&mesh), &assemble_mass(&mesh, &mu).unwrap(), 1, &SpectrumOptions::default()).unwrap();
    let m = mu.masses();
    let mean: f64 = m.iter().zip(&phi).map(|(a, b)| a * b).sum();
    let c: Vec<f64> = phi.iter().map(|p| p - mean).collect();
    let l = l_phi(&r.eigenfunctions[1], &mu, &c, r.lambda(1)).unwrap();
    assert!((l - d.right).abs() < 1e-8 * d.lambda);
}

#[test]
fn sphere_cluster_splits_along_axial_direction() {
    let mesh = icosphere(4);
    let mu = uniform_area_measure(&mesh).unwrap();
    // z² − 1/3 is the lowest even function aligned with the z axis; z itself
    // is odd, so its form on the degree-one harmonics vanishes.
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| p[2] * p[2] - 1.0 / 3.0).collect();
    let d = one_sided_derivatives(&mesh, &mu, &phi, 1, &cluster_opts()).unwrap();
    assert_eq!(d.multiplicity, 3);
    assert!(d.left > 0.0 && d.right < 0.0, "{d:?}");
    // Central differences of the bottom and top branches of the cluster.
    let fam = DeformationFamily::new(&mu, &phi).unwrap();
    let h = 1e-4;
    let (p, m) = (spectrum(&mesh, &deform(&fam, h).unwrap(), 3), spectrum(&mesh, &deform(&fam, -h).unwrap(), 3));
    let l0 = spectrum(&mesh, &fam.base, 3);
    let fwd_low = (p[1] - l0[1]) / h;
    let fwd_high = (p[3] - l0[3]) / h;
    let bwd_low = (l0[1] - m[1]) / h;
    let tol = 1e-2 * d.lambda;
    assert!((fwd_low - d.right).abs() < tol, "{fwd_low} vs {}", d.right);
    assert!((fwd_high - d.left).abs() < tol, "{fwd_high} vs {}", d.left);
    assert!((bwd_low - d.left).abs() < tol, "{bwd_low} vs {}", d.left);
}

#[test]
fn projection_gap_examples() {
    let mesh = icosphere(3);
    let opts = VariationOptions::default();
    let mu = random_log_normal_measure(&mesh, 0.4, 2, 5).unwrap();
    let same = projection_gap(&mesh, &mu, &mu, 1, &opts).unwrap();
    assert!(same.gap < 1e-10 && same.distance == 0.0);
    // Mass pushed toward the poles lowers the z mode; toward the x poles, the
    // x mode. The two first eigenfunctions are nearly orthogonal.
    let polar = |axis: usize| {
        let d: Vec<f64> = mesh.vertices().iter().map(|p| 1.0 + 2.0 * p[axis] * p[axis]).collect();
        density_measure(&mesh, &d).unwrap().normalized()
    };
    let g = projection_gap(&mesh, &polar(2), &polar(0), 1, &opts).unwrap();
    assert!(g.gap > 0.9, "{g:?}");
}

#[test]
fn certificates_on_symmetric_surfaces() {
    let sphere = icosphere(4);
    let c = extremality_certificate(&sphere, &uniform_area_measure(&sphere).unwrap(), 1, 1e-2, &cluster_opts()).unwrap();
    assert_eq!(c.verdict, Verdict::Extremal);
    assert_eq!(c.dimension, 3);
    for x in &c.coefficients {
        assert!((x - 1.0 / 3.0).abs() < 1e-2, "{:?}", c.coefficients);
    }
    let torus = flat_torus(32).unwrap();
    let c = extremality_certificate(&torus, &uniform_area_measure(&torus).unwrap(), 1, 1e-2, &cluster_opts()).unwrap();
    assert_eq!(c.verdict, Verdict::Extremal);
    assert_eq!(c.dimension, 4);
    let s: f64 = c.coefficients.iter().sum();
    assert!((s - 1.0).abs() < 1e-6);
    assert!(c.residual < 1e-8);

    let mu = random_log_normal_measure(&sphere, 0.3, 2, 1).unwrap();
    let c = extremality_certificate(&sphere, &mu, 1, 1e-2, &cluster_opts()).unwrap();
    assert_eq!(c.verdict, Verdict::NonExtremal);
    assert!(c.residual > 0.1);
    assert!(c.coefficients.iter().all(|&x| x >= 0.0));
}

#[test]
fn separating_direction_is_consistent() {
    let sphere = icosphere(3);
    assert!(separating_direction(&sphere, &uniform_area_measure(&sphere).unwrap(), 1, 1e-2, &cluster_opts()).unwrap().is_none());
    let mu = random_log_normal_measure(&sphere, 0.3, 2, 4).unwrap();
    let s = separating_direction(&sphere, &mu, 1, 1e-2, &cluster_opts()).unwrap().expect("non-extremal input separates");
    let m = mu.normalized().masses();
    let mean: f64 = m.iter().zip(&s.phi).map(|(a, b)| a * b).sum();
    assert!(mean.abs() <= 1e-12);
    assert!(s.phi.iter().all(|p| p.abs() <= 1.0 + 1e-12));
    let d = one_sided_derivatives(&sphere, &mu, &s.phi, 1, &cluster_opts()).unwrap();
    assert!(d.right > 0.0);
    assert!((d.right - s.right_derivative).abs() < 1e-6 * d.lambda);
}

#[test]
fn eigenfunction_of_nearby_measure_approaches_infimum() {
    let mesh = icosphere(3);
    let mu = uniform_area_measure(&mesh).unwrap();
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| p[2] * p[2] + 0.3 * p[0]).collect();
    let right = one_sided_derivatives(&mesh, &mu, &phi, 1, &cluster_opts()).unwrap().right;
    let fam = DeformationFamily::new(&mu, &phi).unwrap();
    let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&t| {
            let mt = deform(&fam, t).unwrap();
            let d = one_sided_derivatives(&mesh, &mt, &phi, 1, &VariationOptions::default()).unwrap();
            (d.right - right).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn right_never_exceeds_left(seed in 0u64..1000, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let mesh = icosphere(3);
        let mu = if seed % 2 == 0 { uniform_area_measure(&mesh).unwrap() } else { random_log_normal_measure(&mesh, 0.3, 2, seed).unwrap() };
        let phi: Vec<f64> = mesh.vertices().iter().map(|p| a * p[0] * p[1] + b * p[2] + (seed as f64 * p[1]).sin()).collect();
        let d = one_sided_derivatives(&mesh, &mu, &phi, 1, &cluster_opts()).unwrap();
        prop_assert!(d.right <= d.left + 1e-12 * d.lambda);
    }

    #[test]
    fn extremal_measures_have_indefinite_forms(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, f in 0.5f64..4.0) {
        let mesh = icosphere(4);
        let mu = uniform_area_measure(&mesh).unwrap();
        let cert = extremality_certificate(&mesh, &mu, 1, 1e-2, &cluster_opts()).unwrap();
        prop_assert_eq!(cert.verdict, Verdict::Extremal);
        let phi: Vec<f64> = mesh.vertices().iter().map(|p| a * p[0] + b * p[1] * p[2] + c * (f * p[2]).cos()).collect();
        let d = one_sided_derivatives(&mesh, &mu, &phi, 1, &cluster_opts()).unwrap();
        // With Σcⱼwⱼ² = 1 + e, |e| ≤ ε, the form averaged against c is ∫eφ:
        // its infimum is at most ε‖φ‖∞/Σc and its supremum at least the negative.
        let eps = cert.residual;
        let sum_c: f64 = cert.coefficients.iter().sum();
        let bound = eps * centered_sup(&mu, &phi) / sum_c * (1.0 + 1e-9) + 1e-12;
        let (form_min, form_max) = (-d.left / d.lambda, -d.right / d.lambda);
        prop_assert!(form_min <= bound, "{} > {}", form_min, bound);
        prop_assert!(form_max >= -bound, "{} < {}", form_max, -bound);
        prop_assert!(d.right <= bound * d.lambda && d.left >= -bound * d.lambda);
    }
}
