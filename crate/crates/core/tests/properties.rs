use std::f64::consts::PI;

use proptest::prelude::*;

use qsynapse::analysis::barrier::GeometricBarrier;
use qsynapse::analysis::critical::{critical_parameter, CriticalOptions};
use qsynapse::analysis::grid::{GridSpec, ScalarField3D};
use qsynapse::analysis::isosurface::extract_isosurface;
use qsynapse::analysis::params::Parameter;
use qsynapse::analysis::saddle::{find_saddle, SaddleOptions};
use qsynapse::dressed::{potential_gradient, potential_value, DressedParams};
use qsynapse::dynamics::{ensemble_transfer, BiasSchedule, EnsembleOptions, SeedSpec};
use qsynapse::io::{bundled_scene, SceneConfig};
use qsynapse::magnetostatics::{field_infinite_wire, field_polyline, WireAssembly, DEFAULT_EPS_AXIS};
use qsynapse::model::{resonance_field, AtomSpecies, RfDrive, CONSTANTS};
use qsynapse::surface::DoubleWell;
use qsynapse::Vec3;

fn params() -> DressedParams {
    DressedParams::new(AtomSpecies::rb87_like(), RfDrive::new(0.8e6).unwrap()).unwrap()
}

fn crossed() -> (DressedParams, WireAssembly) {
    let s = bundled_scene("crossed").unwrap().build().unwrap();
    (s.params, s.assembly)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(
        x in -1e-3f64..1e-3, y in -1e-3f64..1e-3, z in -1.3e-3f64..7e-4,
    ) {
        let (p, a) = crossed();
        let pt = Vec3::new(x, y, z);
        let b_res = resonance_field(&p.species, &p.drive).unwrap();
        prop_assume!(a.nearest_wire(&pt).1 > 1e-5);
        prop_assume!(a.b_dc(&pt).unwrap().norm() > 1e-2 * b_res);
        let g = potential_gradient(&p, &a, &pt).unwrap();
        let h = 1e-8;
        let fd = Vec3::from_fn(|k, _| {
            let e = Vec3::ith(k, h);
            (potential_value(&p, &a, &(pt + e)).unwrap() - potential_value(&p, &a, &(pt - e)).unwrap()) / (2.0 * h)
        });
        prop_assert!((g - fd).norm() / g.norm() <= 1e-6, "{g} vs {fd}");
    }

    #[test]
    fn long_polyline_matches_infinite_line(d in 1e-6f64..1e-3, az in 0.0f64..std::f64::consts::TAU, s in -0.5f64..0.5) {
        let half = 0.5e6 * d;
        let p = Vec3::new(d * az.cos(), d * az.sin(), s * d);
        let line = field_infinite_wire(&Vec3::zeros(), &Vec3::z(), 1.0, &p, DEFAULT_EPS_AXIS).unwrap();
        let poly = field_polyline(&[Vec3::new(0.0, 0.0, -half), Vec3::new(0.0, 0.0, half)], 1.0, &p, DEFAULT_EPS_AXIS).unwrap();
        prop_assert!((poly - line).norm() / line.norm() <= 1e-8);
    }

    #[test]
    fn sphere_isosurface_within_cell_diagonal(
        cx in -0.2f64..0.2, cy in -0.2f64..0.2, cz in -0.2f64..0.2, r in 0.3f64..0.7, n in 12usize..28,
    ) {
        let spec = GridSpec::new(Vec3::repeat(-1.0), Vec3::repeat(2.0), [n, n + 1, n + 2]).unwrap();
        let c = Vec3::new(cx, cy, cz);
        let field = ScalarField3D::from_fn(spec, |p| Ok((p - c).norm()));
        let mesh = extract_isosurface(&field, r).unwrap();
        prop_assert!(!mesh.triangles.is_empty());
        let diag = spec.cell_diagonal();
        for v in &mesh.vertices {
            prop_assert!(((v - c).norm() - r).abs() <= diag);
        }
    }

    #[test]
    fn double_well_saddle(a in 0.2f64..3.0, scale in 0.1f64..10.0) {
        let w = DoubleWell { a, scale };
        let r = find_saddle(&w, Vec3::new(-a, 0.0, 0.0), Vec3::new(a, 0.0, 0.0), &SaddleOptions::new(9, 4000, 1e-10 * scale)).unwrap();
        let b = scale * a.powi(4);
        prop_assert!((r.barrier_a - b).abs() / b <= 1e-6);
        prop_assert_eq!(r.hessian_index, 1);
    }

    #[test]
    fn geometric_critical_current_and_bisection_contract(d in 5e-5f64..5e-4) {
        let p = params();
        let a = WireAssembly::parallel(0.01, 0.05, d, Vec3::zeros(), p.drive).unwrap();
        let tol = 1e-6;
        let r = critical_parameter(&p, &a, Parameter::IDc, &GeometricBarrier, &CriticalOptions::new((0.001, 0.3), tol)).unwrap();
        let oracle = PI * d * resonance_field(&p.species, &p.drive).unwrap() / CONSTANTS.mu0;
        prop_assert!((r.critical_value - oracle).abs() <= 2.0 * tol);
        prop_assert!(r.barrier_at_solution.abs() <= r.touch_tolerance);
        prop_assert!(r.tolerance_achieved <= tol);
    }

    #[test]
    fn config_echo_round_trips(
        idc in -0.3f64..0.3, irf in 0.0f64..0.2, f in 1e5f64..3e6, bx in -1e-4f64..1e-4, gap in 0.0f64..1e-3, seed in any::<u64>(),
    ) {
        let mut cfg = bundled_scene("crossed").unwrap();
        cfg.seed = seed;
        cfg.drive.frequency = f;
        cfg.wires[0].i_dc = idc;
        cfg.wires[1].i_rf = irf;
        cfg.wires[1].point = Some([0.0, 0.0, -gap - 1e-5]);
        cfg.bias.field = Some([bx, 0.0, -bx]);
        let echo = cfg.to_toml();
        let back = SceneConfig::parse(&echo).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.build().unwrap(), cfg.build().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn ensembles_are_deterministic(seed in any::<u64>()) {
        let (p, a) = crossed();
        let spec = SeedSpec { wire: 0, particles: 6, thermal_speed: 4e-3, seed };
        let opts = EnsembleOptions::new(2e-3);
        let sched = BiasSchedule::constant(a.bias());
        let r1 = ensemble_transfer(&p, &a, &sched, &spec, &opts).unwrap();
        let r2 = ensemble_transfer(&p, &a, &sched, &spec, &opts).unwrap();
        let r8 = qsynapse::with_workers(8, || ensemble_transfer(&p, &a, &sched, &spec, &opts).unwrap());
        prop_assert_eq!(&r1.outcomes, &r2.outcomes);
        prop_assert_eq!(&r1.outcomes, &r8.outcomes);
    }
}
