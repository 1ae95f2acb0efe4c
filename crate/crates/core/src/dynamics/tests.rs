use super::*;
use crate::analysis::barrier::{BarrierEstimator, BarrierOptions, FullBarrier};
use crate::analysis::radial::radial_trap_minimum;
use crate::model::{resonance_field, AtomSpecies, RfDrive};
use std::f64::consts::PI;

fn params() -> DressedParams {
    DressedParams::new(AtomSpecies::rb87_like(), RfDrive::new(0.8e6).unwrap()).unwrap()
}

fn b_res() -> f64 {
    let p = params();
    resonance_field(&p.species, &p.drive).unwrap()
}

/// Single wire along x with an axial bias: the RF field is then partly
/// perpendicular to B_DC and the trap is a smooth cylindrical valley.
fn axial_bias_wire(i_rf: f64) -> WireAssembly {
    WireAssembly::single(0.0925, i_rf, Vec3::new(0.3 * b_res(), 0.0, 0.0), params().drive).unwrap()
}

fn crossed(i_dc: f64) -> WireAssembly {
    WireAssembly::crossed(i_dc, 0.05, 6.5e-4, Vec3::new(2.3e-5, 2.3e-5, 0.0), params().drive).unwrap()
}

#[test]
fn schedule_interpolates_and_validates() {
    let s = BiasSchedule::new(vec![
        (0.0, Vec3::zeros()),
        (1.0, Vec3::new(2.0, 0.0, 0.0)),
        (3.0, Vec3::new(2.0, 4.0, 0.0)),
    ])
    .unwrap();
    assert_eq!(s.at(-1.0), Vec3::zeros());
    assert_eq!(s.at(0.5), Vec3::new(1.0, 0.0, 0.0));
    assert_eq!(s.at(2.0), Vec3::new(2.0, 2.0, 0.0));
    assert_eq!(s.at(10.0), Vec3::new(2.0, 4.0, 0.0));
    assert_eq!(s.rate(0.5), Vec3::new(2.0, 0.0, 0.0));
    assert_eq!(s.rate(5.0), Vec3::zeros());
    assert!(!s.is_static());
    assert!(BiasSchedule::new(vec![]).is_err());
    assert!(BiasSchedule::new(vec![(1.0, Vec3::zeros()), (1.0, Vec3::zeros())]).is_err());
    assert!(BiasSchedule::constant(Vec3::x()).is_static());
}

#[test]
fn force_free_motion_is_straight() {
    let p = params();
    let bias = Vec3::new(1e-5, 2e-5, -3e-5);
    let a = WireAssembly::single(0.0, 0.0, bias, p.drive).unwrap();
    let s0 = ParticleState {
        time: 0.0,
        position: Vec3::new(1e-4, 2e-4, 3e-4),
        velocity: Vec3::new(0.01, -0.02, 0.005),
    };
    let tr = integrate_trajectory(&p, &a, &BiasSchedule::constant(bias), &s0, &IntegratorOptions::new(1e-6, 1e-3)).unwrap();
    assert_eq!(tr.termination, Termination::TimeLimit);
    assert_eq!(tr.steps, 1000);
    for pt in &tr.points {
        let exact = s0.position + s0.velocity * pt.state.time;
        assert!((pt.state.position - exact).norm() <= 1e-12 * exact.norm());
        assert_eq!(pt.eta, 0.0);
    }
}

fn valley_start(a: &WireAssembly) -> (Vec3, f64) {
    let p = params();
    let m = radial_trap_minimum(&p, a, 0, 0.7, 0.0, (2e-5, 4e-4)).unwrap();
    (m.position, default_time_step(&p, a, &m.position).unwrap())
}

fn drift(a: &WireAssembly, start: Vec3, dt: f64, steps: usize) -> f64 {
    let p = params();
    let s0 = ParticleState {
        time: 0.0,
        position: start,
        velocity: Vec3::new(2e-3, 1e-3, -1e-3),
    };
    let sched = BiasSchedule::constant(a.bias());
    let tr = integrate_trajectory(&p, a, &sched, &s0, &IntegratorOptions::new(dt, dt * steps as f64)).unwrap();
    assert_eq!(tr.termination, Termination::TimeLimit);
    tr.energy_drift
}

#[test]
fn energy_is_conserved_and_error_is_second_order() {
    let a = axial_bias_wire(0.05);
    let (start, dt) = valley_start(&a);
    let d1 = drift(&a, start, dt, 10_000);
    assert!(d1 <= 1e-6, "relative drift {d1:e}");
    let d2 = drift(&a, start, dt / 2.0, 20_000);
    let ratio = d1 / d2;
    assert!((3.0..5.0).contains(&ratio), "drift ratio {ratio}");
}

#[test]
fn time_reversal_recovers_start() {
    let p = params();
    let a = axial_bias_wire(0.05);
    let (start, dt) = valley_start(&a);
    let sched = BiasSchedule::constant(a.bias());
    let s0 = ParticleState {
        time: 0.0,
        position: start + Vec3::new(0.0, 3e-6, 0.0),
        velocity: Vec3::new(1e-3, -4e-3, 2e-3),
    };
    let opts = IntegratorOptions::new(dt, 2000.0 * dt);
    let fwd = integrate_trajectory(&p, &a, &sched, &s0, &opts).unwrap();
    let end = fwd.points.last().unwrap().state;
    let back0 = ParticleState {
        time: 0.0,
        position: end.position,
        velocity: -end.velocity,
    };
    let back = integrate_trajectory(&p, &a, &sched, &back0, &opts).unwrap();
    let fin = back.points.last().unwrap().state;
    assert!((fin.position - s0.position).norm() <= 1e-8 * s0.position.norm());
    assert!((fin.velocity + s0.velocity).norm() <= 1e-8 * s0.velocity.norm());
}

#[test]
fn invalid_starts_are_rejected() {
    let p = params();
    let a = axial_bias_wire(0.05);
    let sched = BiasSchedule::constant(a.bias());
    let on_wire = ParticleState {
        time: 0.0,
        position: Vec3::new(1e-3, 0.0, 0.0),
        velocity: Vec3::zeros(),
    };
    assert!(integrate_trajectory(&p, &a, &sched, &on_wire, &IntegratorOptions::new(1e-6, 1e-4)).is_err());
    let ok = ParticleState {
        position: Vec3::new(0.0, 1e-4, 0.0),
        ..on_wire
    };
    assert!(integrate_trajectory(&p, &a, &sched, &ok, &IntegratorOptions::new(0.0, 1e-4)).is_err());
}

#[test]
fn domain_exit_terminates() {
    let p = params();
    let bias = Vec3::new(1e-5, 0.0, 0.0);
    let a = WireAssembly::single(0.0, 0.0, bias, p.drive).unwrap();
    let s0 = ParticleState {
        time: 0.0,
        position: Vec3::new(0.0, 1e-4, 0.0),
        velocity: Vec3::new(0.0, 0.1, 0.0),
    };
    let mut opts = IntegratorOptions::new(1e-5, 1.0);
    opts.domain = Some(Aabb::new(Vec3::repeat(-1e-3), Vec3::repeat(1e-3)).unwrap());
    let tr = integrate_trajectory(&p, &a, &BiasSchedule::constant(bias), &s0, &opts).unwrap();
    assert_eq!(tr.termination, Termination::DomainExit);
    assert!(tr.points.last().unwrap().state.position.y > 1e-3);
}

#[test]
fn basins() {
    let p = params();
    let a = crossed(0.0925);
    let rho = resonance_radius(&p.species, &p.drive, 0.0925).unwrap();
    // on wire 0's resonance radius, far along the wire from the crossing
    assert_eq!(classify_basin(&p, &a, &Vec3::new(5e-3, 0.0, rho)), Some(0));
    assert_eq!(classify_basin(&p, &a, &Vec3::new(0.0, 5e-3, -6.5e-4 + rho)), Some(1));
    // equal scaled radius: lower index wins
    assert_eq!(classify_basin(&p, &a, &Vec3::new(0.0, 0.0, -3.25e-4)), None);
    assert_eq!(classify_basin_with(&p, &a, &Vec3::new(0.0, 0.0, -3.25e-4), 3.0), Some(0));
    assert_eq!(classify_basin(&p, &a, &Vec3::new(0.0, 10.0 * rho, 10.0 * rho)), None);
}

#[test]
fn adiabaticity_metric_properties() {
    let p = params();
    let a = axial_bias_wire(0.05);
    let bias = a.bias();
    let zero = Vec3::zeros();
    let pos = Vec3::new(0.0, 1.2e-4, 0.5e-4);
    assert_eq!(adiabaticity_metric(&p, &a, &bias, &zero, &pos, &zero).unwrap(), 0.0);

    // on the resonance surface (delta = 0) eta scales as 1 / Omega
    let b_perp = (b_res().powi(2) - bias.x.powi(2)).sqrt();
    let rho = CONSTANTS.mu0_over_2pi() * 0.0925 / b_perp;
    let on_res = Vec3::new(0.0, rho * 0.6, rho * 0.8);
    let v = Vec3::new(0.0, 0.01, 0.02);
    let e1 = adiabaticity_metric(&p, &a, &bias, &zero, &on_res, &v).unwrap();
    let e2 = adiabaticity_metric(&p, &axial_bias_wire(0.1), &bias, &zero, &on_res, &v).unwrap();
    assert!((e1 / e2 - 2.0).abs() < 1e-6, "{e1} {e2}");

    // a transverse bias cancels the wire field on a line: the metric diverges there
    let b = 2e-5;
    let t = WireAssembly::single(0.0925, 0.05, Vec3::new(0.0, b, 0.0), p.drive).unwrap();
    let z0 = CONSTANTS.mu0_over_2pi() * 0.0925 / b;
    let at_zero = adiabaticity_metric(&p, &t, &t.bias(), &zero, &Vec3::new(0.0, 0.0, z0), &v).unwrap();
    assert!(at_zero.is_infinite());
    let near = adiabaticity_metric(&p, &t, &t.bias(), &zero, &Vec3::new(0.0, 0.0, z0 * (1.0 + 1e-4)), &v).unwrap();
    let far = adiabaticity_metric(&p, &t, &t.bias(), &zero, &Vec3::new(0.0, 0.0, z0 * 1.1), &v).unwrap();
    assert!(near > 100.0 * far && near > DEFAULT_ETA_MAX);
    assert!(adiabaticity_metric(&p, &t, &t.bias(), &zero, &Vec3::new(1e-3, 0.0, 0.0), &v).is_err());
}

#[test]
fn trajectory_through_field_zero_flags_violation() {
    let p = params();
    let b = 2e-5;
    let t = WireAssembly::single(0.0925, 0.05, Vec3::new(0.0, b, 0.0), p.drive).unwrap();
    let z0 = CONSTANTS.mu0_over_2pi() * 0.0925 / b;
    let s0 = ParticleState {
        time: 0.0,
        position: Vec3::new(0.0, -2e-6, z0),
        velocity: Vec3::new(0.0, 0.05, 0.0),
    };
    let tr = integrate_trajectory(&p, &t, &BiasSchedule::constant(t.bias()), &s0, &IntegratorOptions::new(1e-6, 1e-3)).unwrap();
    assert_eq!(tr.termination, Termination::AdiabaticityViolation);
    assert!(tr.max_eta > DEFAULT_ETA_MAX);
}

#[test]
fn sub_barrier_ensemble_stays_and_is_deterministic() {
    let p = params();
    let a = crossed(0.07);
    let opts = BarrierOptions {
        grid_resolution: [48, 48, 48],
        ..Default::default()
    };
    let barrier = FullBarrier.estimate(&p, &a, &opts).unwrap().value;
    let sigma = (0.05 * barrier / p.species.mass).sqrt();
    let seed = SeedSpec {
        wire: 0,
        particles: 12,
        thermal_speed: sigma,
        seed: 7,
    };
    let eo = EnsembleOptions::new(2e-3);
    let s1 = ensemble_transfer(&p, &a, &BiasSchedule::constant(a.bias()), &seed, &eo).unwrap();
    assert!(s1.max_initial_kinetic < 0.9 * barrier);
    assert_eq!(s1.n_transferred, 0);
    assert_eq!(s1.n_particles, 12);
    assert!(s1.n_transferred + s1.n_lost <= s1.n_particles);
    let s2 = ensemble_transfer(&p, &a, &BiasSchedule::constant(a.bias()), &seed, &eo).unwrap();
    assert_eq!(format!("{s1:?}"), format!("{s2:?}"));
    assert!(seed_well(&p, &a, 5).is_err());
    let _ = PI;
}
