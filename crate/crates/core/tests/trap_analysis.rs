use qsynapse::analysis::barrier::{barrier_estimators, BarrierEstimator, FullBarrier};
use qsynapse::analysis::params::Parameter;
use qsynapse::analysis::radial::minimum_surface;
use qsynapse::analysis::sweep::{observables, parameter_sweep, SweepContext};
use qsynapse::io::bundled_scene;
use qsynapse::model::{resonance_radius, CONSTANTS};

fn scene() -> qsynapse::io::Scene {
    bundled_scene("crossed").unwrap().build().unwrap()
}

#[test]
fn minimum_surface_deforms_only_near_the_crossing() {
    let s = scene();
    let rho = resonance_radius(&s.params.species, &s.params.drive, s.assembly.wires()[0].i_dc).unwrap();
    let spread = |axial: f64| {
        let m = minimum_surface(&s.params, &s.assembly, 0, 16, &[axial], (0.05 * rho, 3.0 * rho)).unwrap();
        assert_eq!(m.found(), 16);
        let r: Vec<f64> = m.cells.iter().map(|c| c.unwrap().radius).collect();
        r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min)
    };
    let (near, mid, far) = (spread(0.0), spread(5e-3), spread(2e-2));
    assert!(near > 2.0 * far, "near {near:e}, far {far:e}");
    assert!((mid - far).abs() < 0.02 * far);
}

#[test]
fn wells_sit_between_the_wires_with_an_index_one_saddle() {
    let s = scene();
    let (_, a) = Parameter::IDc.apply(&s.params, &s.assembly, 0.06).unwrap();
    let e = FullBarrier.estimate(&s.params, &a, &s.barrier).unwrap();
    let r = e.report.unwrap();
    let saddle = r.saddle.unwrap();
    assert!(!e.touching);
    assert_eq!(saddle.hessian_index, 1);
    let gap = 6.5e-4;
    for m in [&r.min_a, &r.min_b] {
        assert!(m.position.z < 0.0 && m.position.z > -gap);
    }
    assert!((saddle.saddle.position.z + gap / 2.0).abs() < 1e-3 * gap);
}

#[test]
fn barrier_closes_as_dc_current_rises() {
    let s = scene();
    let ctx = SweepContext {
        barrier: s.barrier.clone(),
        ..SweepContext::default()
    };
    let obs = observables();
    let t = parameter_sweep(
        &s.params,
        &s.assembly,
        Parameter::IDc,
        (0.03, 0.11),
        9,
        obs.get("barrier").unwrap(),
        &ctx,
    )
    .unwrap();
    let b: Vec<f64> = t.rows.iter().map(|r| r.observable).collect();
    assert!(b.windows(2).all(|w| w[1] <= w[0]), "{b:?}");
    assert!(b[0] > 0.0 && *b.last().unwrap() == 0.0);
}

/// In this geometry more RF current also lowers the barrier.
#[test]
fn barrier_falls_with_rising_rf_current() {
    let s = scene();
    let (p, a) = Parameter::IDc.apply(&s.params, &s.assembly, 0.085).unwrap();
    let hw = CONSTANTS.hbar * p.drive.omega();
    let ctx = SweepContext {
        barrier: s.barrier.clone(),
        ..SweepContext::default()
    };
    let obs = observables();
    let t = parameter_sweep(&p, &a, Parameter::IRf, (0.01, 0.3), 6, obs.get("barrier").unwrap(), &ctx).unwrap();
    let b: Vec<f64> = t.rows.iter().map(|r| r.observable / hw).collect();
    assert!(b.windows(2).all(|w| w[1] <= w[0]), "{b:?}");
    assert!(b[0] > 0.1 && *b.last().unwrap() == 0.0, "{b:?}");
}

#[test]
fn estimators_are_registered_by_name() {
    let r = barrier_estimators();
    assert_eq!(r.names(), vec!["full", "geometric"]);
    assert!(r.get("simulated-annealing").is_err());
}
