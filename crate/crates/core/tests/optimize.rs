mod common;

use std::f64::consts::PI;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use conformal_spectra::measure::{deform, uniform_area_measure, DeformationFamily};
use conformal_spectra::mesh::{assemble_stiffness, flat_torus, icosphere};
use conformal_spectra::optimize::{
    concentration_monitor, density, maximize_lambda1, project_to_cap, resume, singular_set_estimate, Checkpoint, ConcentrationOptions,
    DensityCapSchedule, InitialMeasure, MaximizerOptions, RunStatus, StageEnd, StageReport,
};
use conformal_spectra::DiscreteMeasure;
use proptest::prelude::*;

use common::{arc, bump_measure, spread_vertices};

fn quick(budget: usize) -> (DensityCapSchedule, MaximizerOptions) {
    (DensityCapSchedule::uniform_budget(vec![5.0, 50.0], budget).unwrap(), MaximizerOptions::default())
}

#[test]
fn sphere_run_is_feasible_monotone_and_stationary() {
    let mesh = icosphere(3);
    let k = assemble_stiffness(&mesh);
    let (schedule, opts) = quick(15);
    let res = maximize_lambda1(&mesh, &k, &schedule, 3, &opts).unwrap();
    assert_eq!(res.status, RunStatus::Complete);
    assert!(res.trace.windows(2).all(|w| w[1].lambda1 >= w[0].lambda1 - 1e-10));
    assert!((res.measure.total_mass() - 1.0).abs() < 1e-12);
    for s in &res.stages {
        assert!(s.density.iter().all(|&d| d <= s.cap * (1.0 + 1e-9)));
        assert!(s.saturated_area_fraction <= 1.0 / s.cap * (1.0 + 1e-9));
    }
    let last = res.trace.last().unwrap();
    match res.stages.last().unwrap().end {
        StageEnd::Certified => assert!(last.certificate_residual <= opts.tol),
        StageEnd::Stationary => assert!(last.lp_bound <= opts.tol || last.lp_bound.is_nan() || last.step == 0.0),
        _ => {}
    }
    assert!(res.lambda1 <= 8.0 * PI * 1.02);
    assert!(res.lambda1 >= 0.97 * 8.0 * PI, "{}", res.lambda1 / (8.0 * PI));
}

#[test]
fn flat_torus_does_not_descend() {
    let mesh = flat_torus(16).unwrap();
    let k = assemble_stiffness(&mesh);
    let opts = MaximizerOptions { initial: InitialMeasure::Uniform, ..Default::default() };
    let schedule = DensityCapSchedule::uniform_budget(vec![10.0, 100.0], 10).unwrap();
    let res = maximize_lambda1(&mesh, &k, &schedule, 7, &opts).unwrap();
    let start = res.trace[0].lambda1;
    // The discrete flat torus sits slightly below 4π²; the ascent starts there
    // and never goes down.
    assert!((start / (4.0 * PI * PI) - 1.0).abs() < 0.02);
    assert!(res.lambda1 >= start);
    assert!(res.trace.windows(2).all(|w| w[1].lambda1 >= w[0].lambda1));
    assert!(res.lambda1 <= 16.0 * PI * 1.02);
}

#[test]
fn cap_below_uniform_is_rejected() {
    let mesh = icosphere(2);
    let k = assemble_stiffness(&mesh);
    let schedule = DensityCapSchedule::uniform_budget(vec![0.5, 10.0], 5).unwrap();
    let err = maximize_lambda1(&mesh, &k, &schedule, 0, &MaximizerOptions::default()).unwrap_err();
    assert!(err.to_string().contains("cap below uniform density"));
    assert!(DensityCapSchedule::uniform_budget(vec![10.0, 5.0], 5).is_err());
}

#[test]
fn pause_and_resume_reproduce_the_run() {
    let mesh = icosphere(2);
    let k = assemble_stiffness(&mesh);
    let (schedule, opts) = quick(6);
    let full = maximize_lambda1(&mesh, &k, &schedule, 11, &opts).unwrap();
    let paused = maximize_lambda1(&mesh, &k, &schedule, 11, &MaximizerOptions { stop_after: Some(4), ..opts.clone() }).unwrap();
    assert_eq!(paused.status, RunStatus::Paused);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cp.json");
    paused.checkpoint.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, paused.checkpoint);
    let resumed = resume(&mesh, &k, loaded, &opts).unwrap();
    assert_eq!(resumed.trace, full.trace);
    assert_eq!(resumed.measure.weights, full.measure.weights);
    assert_eq!(resumed.checkpoint, full.checkpoint);
}

#[test]
fn cancellation_returns_checkpoint() {
    let mesh = icosphere(2);
    let k = assemble_stiffness(&mesh);
    let (schedule, opts) = quick(6);
    let flag = Arc::new(AtomicBool::new(true));
    let res = maximize_lambda1(&mesh, &k, &schedule, 1, &MaximizerOptions { cancel: Some(flag), ..opts }).unwrap();
    assert_eq!(res.status, RunStatus::Cancelled);
    assert!(res.trace.is_empty());
    assert_eq!(res.checkpoint.iteration, 0);
}

#[test]
fn concentration_examples() {
    let mesh = icosphere(4);
    let k = assemble_stiffness(&mesh);
    let uni = uniform_area_measure(&mesh).unwrap();
    let two = bump_measure(&mesh, &spread_vertices(&mesh, 2), 0.05, 1e-4);
    let x0 = mesh.vertices()[0];
    let phi: Vec<f64> = mesh.vertices().iter().map(|p| -arc(*p, x0) / PI).collect();
    let fam = DeformationFamily::new(&uni, &phi).unwrap();
    let ts = [10.0, 20.0, 40.0, 80.0, 160.0];
    let mut ms = vec![uni, two];
    ms.extend(ts.iter().map(|&t| deform(&fam, t).unwrap()));
    let rep = concentration_monitor(&mesh, &k, &ms, &ConcentrationOptions::default()).unwrap();
    assert!(!rep.entries[0].flagged);
    assert!(!rep.entries[1].flagged);
    let last = rep.entries.last().unwrap();
    assert!(last.flagged);
    assert_eq!(rep.entries[5].ceiling_ok, Some(true));
    // checked entries respect the ceiling; mesh-scale atoms are left unchecked
    assert!(rep.entries.iter().all(|e| e.ceiling_ok != Some(false)));
    assert!(rep.entries.iter().all(|e| e.ceiling_ok.is_some() == (e.flagged && e.resolved)));
    assert!(rep.pass);
}

#[test]
fn singular_set_of_a_band() {
    let mesh = icosphere(3);
    let area = mesh.vertex_areas();
    let total: f64 = area.iter().sum();
    let cap = 5.0;
    let band: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| mesh.vertices()[v][2].abs() < 0.08).collect();
    let band_area: f64 = band.iter().map(|&v| area[v]).sum();
    assert!(cap * band_area / total < 1.0);
    let rest = total - band_area;
    let mut w: Vec<f64> = area.iter().map(|a| a / rest * (1.0 - cap * band_area / total)).collect();
    for &v in &band {
        w[v] = cap * area[v] / total;
    }
    let mu = DiscreteMeasure::from_weights(w.clone()).unwrap();
    let d = density(&mesh, &mu);
    let stage = StageReport { cap, iterations: 0, end: StageEnd::Budget, lambda1: 0.0, saturated: band.clone(), saturated_area_fraction: 0.0, density: d };
    let res = conformal_spectra::optimize::MaximizerResult {
        measure: mu,
        lambda1: 0.0,
        trace: vec![],
        stages: vec![stage],
        saturated_set: band.clone(),
        certificate: None,
        status: RunStatus::Complete,
        checkpoint: Checkpoint {
            schedule: DensityCapSchedule::uniform_budget(vec![cap], 1).unwrap(),
            seed: 0,
            stage: 1,
            stage_iteration: 0,
            iteration: 0,
            weights: w,
            lambda1: None,
            trace: vec![],
            stages: vec![],
        },
    };
    let est = singular_set_estimate(&mesh, &res, 1e-9).unwrap();
    assert_eq!(est.vertices, band);
    assert!((est.area_fraction - band_area / total).abs() < 1e-12);
    assert!(est.area_fraction <= 1.0 / cap);
    let all = singular_set_estimate(&mesh, &res, 1.0).unwrap();
    assert_eq!(all.vertices.len(), mesh.n_vertices());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_feasible(seed in 0u64..10_000, cap in 1.05f64..20.0, spread in 0.1f64..3.0) {
        let mesh = icosphere(2);
        let area = mesh.vertex_areas();
        let total: f64 = area.iter().sum();
        let mut s = seed;
        let w: Vec<f64> = area.iter().map(|a| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            a * (spread * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 4.0).exp()
        }).collect();
        let p = project_to_cap(&area, &w, cap).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let sat: f64 = p.iter().zip(&area).filter(|(x, a)| **x >= cap * **a / total * (1.0 - 1e-9)).map(|(_, a)| a).sum();
        prop_assert!(sat / total <= 1.0 / cap * (1.0 + 1e-9));
        for (x, a) in p.iter().zip(&area) {
            prop_assert!(*x >= 0.0 && *x <= cap * a / total * (1.0 + 1e-12));
        }
        let again = project_to_cap(&area, &p, cap).unwrap();
        for (x, y) in p.iter().zip(&again) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
    }
}
