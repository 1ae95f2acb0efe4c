//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsynapse::analysis::barrier::{BarrierEstimator, BarrierOptions, FullBarrier, GeometricBarrier};
use qsynapse::analysis::critical::{critical_parameter, CriticalOptions};
use qsynapse::analysis::params::Parameter;
use qsynapse::analysis::radial::radial_trap_minimum;
use qsynapse::analysis::saddle::{find_saddle, SaddleOptions};
use qsynapse::analysis::sweep::{parameter_sweep, BarrierObservable, SweepContext};
use qsynapse::dressed::{potential_gradient, potential_value, DressedParams};
use qsynapse::dynamics::{ensemble_transfer, BiasSchedule, EnsembleOptions, SeedSpec};
use qsynapse::io::bundled_scene;
use qsynapse::magnetostatics::{field_infinite_wire, field_polyline, WireAssembly, DEFAULT_EPS_AXIS};
use qsynapse::model::{resonance_field, AtomSpecies, RfDrive, CONSTANTS};
use qsynapse::surface::DoubleWell;
use qsynapse::Vec3;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

const BIN: &str = env!("CARGO_BIN_EXE_qsynapse");
const REFERENCE_IDC: f64 = 0.0925;

fn params() -> DressedParams {
    DressedParams::new(AtomSpecies::rb87_like(), RfDrive::new(0.8e6).unwrap()).unwrap()
}

fn crossed() -> (DressedParams, WireAssembly) {
    let s = bundled_scene("crossed").unwrap().build().unwrap();
    (s.params, s.assembly)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

fn field_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_line: f64 = 0.0;
    for _ in 0..1000 {
        let point = Vec3::new(
            rng.random_range(-1e-2..1e-2),
            rng.random_range(-1e-2..1e-2),
            rng.random_range(-1e-2..1e-2),
        );
        let dir = unit_vector(&mut rng);
        let current = rng.random_range(-1.0..1.0);
        let p = point + dir * rng.random_range(-1e-2..1e-2) + unit_vector(&mut rng).cross(&dir).normalize() * rng.random_range(1e-6..1e-2);
        let r = p - point;
        let rho_vec = r - dir * r.dot(&dir);
        let rho = rho_vec.norm();
        let oracle = dir.cross(&rho_vec).normalize() * (CONSTANTS.mu0 * current / (TAU * rho));
        let b = field_infinite_wire(&point, &dir, current, &p, DEFAULT_EPS_AXIS).map_err(|e| e.to_string())?;
        worst_line = worst_line.max((b - oracle).norm() / oracle.norm());
    }
    // Long straight polyline (+/- 1 km, 5 segments) at millimetre distances.
    let vertices: Vec<Vec3> = (-2..=3).map(|k| Vec3::new(0.0, 0.0, -1e3 + 400.0 * (k + 2) as f64)).collect();
    let mut worst_poly: f64 = 0.0;
    for _ in 0..1000 {
        let p = Vec3::new(
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-1..1e-1),
        );
        let oracle = field_infinite_wire(&Vec3::zeros(), &Vec3::z(), 0.5, &p, DEFAULT_EPS_AXIS).map_err(|e| e.to_string())?;
        let b = field_polyline(&vertices, 0.5, &p, DEFAULT_EPS_AXIS).map_err(|e| e.to_string())?;
        worst_poly = worst_poly.max((b - oracle).norm() / oracle.norm());
    }
    let msg = format!("max rel err line {worst_line:.2e} (<= 1e-12), polyline {worst_poly:.2e} (<= 1e-8)");
    if worst_line <= 1e-12 && worst_poly <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gradient_check() -> Check {
    let (p, a) = crossed();
    let b_res = resonance_field(&p.species, &p.drive).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut n, mut worst) = (0usize, 0.0f64);
    let h = 1e-8;
    while n < 200 {
        let pt = Vec3::new(
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1.3e-3..7e-4),
        );
        // Off-singularity: away from the wires and from field zeros.
        if a.nearest_wire(&pt).1 < 1e-5 || a.b_dc(&pt).map_or(true, |b| b.norm() < 1e-2 * b_res) {
            continue;
        }
        let g = potential_gradient(&p, &a, &pt).map_err(|e| e.to_string())?;
        let mut fd = Vec3::zeros();
        for k in 0..3 {
            let e = Vec3::ith(k, h);
            fd[k] = (potential_value(&p, &a, &(pt + e)).map_err(|e| e.to_string())?
                - potential_value(&p, &a, &(pt - e)).map_err(|e| e.to_string())?)
                / (2.0 * h);
        }
        worst = worst.max((g - fd).norm() / g.norm());
        n += 1;
    }
    let msg = format!("{n} points, max rel err {worst:.2e} (<= 1e-6)");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn single_wire_radius() -> Check {
    let p = params();
    let a = bundled_scene("single").unwrap().build().unwrap().assembly;
    let expected = 1.6183e-4;
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let m = radial_trap_minimum(&p, &a, 0, TAU * k as f64 / 8.0, 0.0, (1e-5, 5e-4)).map_err(|e| e.to_string())?;
        worst = worst.max((m.radius - expected).abs());
    }
    let msg = format!("max |r - 1.6183e-4 m| over 8 azimuths {worst:.2e} m (<= 1e-7)");
    if worst <= 1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn parallel_bisection() -> Check {
    let p = params();
    let b_res = resonance_field(&p.species, &p.drive).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = rng.random_range(1e-4..6e-4);
        let a = WireAssembly::parallel(0.01, 0.05, d, Vec3::zeros(), p.drive).unwrap();
        let r = critical_parameter(&p, &a, Parameter::IDc, &GeometricBarrier, &CriticalOptions::new((0.001, 0.5), 1e-6))
            .map_err(|e| e.to_string())?;
        let oracle = PI * d * b_res / CONSTANTS.mu0;
        worst = worst.max((r.critical_value - oracle).abs());
    }
    let msg = format!("5 separations, max |i_c - pi d B_res / mu0| {worst:.2e} A (<= 1e-4)");
    if worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn synthetic_double_well() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let a: f64 = rng.random_range(0.3..2.0);
        let w = DoubleWell { a, scale: 1.0 };
        let r = find_saddle(
            &w,
            Vec3::new(-a, 0.0, 0.0),
            Vec3::new(a, 0.0, 0.0),
            &SaddleOptions::new(9, 4000, 1e-10),
        )
        .map_err(|e| e.to_string())?;
        if r.hessian_index != 1 {
            return Err(format!("a = {a}: Hessian index {}", r.hessian_index));
        }
        worst = worst.max((r.barrier_a - a.powi(4)).abs() / a.powi(4));
    }
    let msg = format!("5 wells, max rel barrier err {worst:.2e} (<= 1e-6), Hessian index 1");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn qualitative_closing() -> Check {
    let (p, a) = crossed();
    let hw = CONSTANTS.hbar * p.drive.omega();
    let t = parameter_sweep(
        &p,
        &a,
        Parameter::IDc,
        (0.02, 0.12),
        11,
        &BarrierObservable,
        &SweepContext::default(),
    )
    .map_err(|e| e.to_string())?;
    if let Some(r) = t.rows.iter().find(|r| r.error.is_some()) {
        return Err(format!("sweep failed at {}: {:?}", r.value, r.error));
    }
    let b: Vec<f64> = t.rows.iter().map(|r| r.observable / hw).collect();
    let monotone = b.windows(2).all(|w| w[1] <= w[0]);
    let closes = *b.last().unwrap() == 0.0 && b[0] > 0.0;

    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let report = dir.path().join("critical.json");
    let out = Command::new(BIN)
        .env_remove("QSYNAPSE_WORKERS")
        .args([
            "--report",
            report.to_str().unwrap(),
            "critical",
            "--vary",
            "idc",
            "--bracket",
            "0.01,0.2",
            "--mode",
            "full",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("critical run failed: {}", rep["error"]));
    }
    let ic = rep["results"]["criticalValue"].as_f64().unwrap_or(f64::NAN);
    let cmp = &rep["results"]["reference_comparison"];
    let recorded = cmp["reference_idc_A"].as_f64() == Some(REFERENCE_IDC) && cmp["within_one_order_of_magnitude"].as_bool().is_some();
    let within = (0.1..=10.0).contains(&(ic / REFERENCE_IDC));
    let msg = format!(
        "barrier [hbar omega] over i_DC 0.02..0.12 A: {}; full-mode critical i_DC {ic:.5} A = {:.3} x 0.0925 A (recorded in report: {recorded})",
        b.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "),
        ic / REFERENCE_IDC
    );
    if monotone && closes && within && recorded {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ensemble_transfer_check() -> Check {
    let (p, a) = crossed();
    let hw = CONSTANTS.hbar * p.drive.omega();
    let (_, sub) = Parameter::IDc.apply(&p, &a, 0.07).map_err(|e| e.to_string())?;
    let barrier = FullBarrier
        .estimate(&p, &sub, &BarrierOptions::default())
        .map_err(|e| e.to_string())?
        .value;
    let seed = SeedSpec {
        wire: 0,
        particles: 100,
        thermal_speed: (0.08 * barrier / p.species.mass).sqrt(),
        seed: 2024,
    };
    let opts = EnsembleOptions::new(0.05);
    let below = ensemble_transfer(&p, &sub, &BiasSchedule::constant(sub.bias()), &seed, &opts).map_err(|e| e.to_string())?;
    if below.max_initial_kinetic >= barrier {
        return Err(format!(
            "ensemble not sub-barrier: max KE {:.3} barrier",
            below.max_initial_kinetic / barrier
        ));
    }
    let crit =
        critical_parameter(&p, &a, Parameter::IDc, &FullBarrier, &CriticalOptions::new((0.01, 0.2), 1e-4)).map_err(|e| e.to_string())?;
    let (_, at) = Parameter::IDc.apply(&p, &a, crit.critical_value).map_err(|e| e.to_string())?;
    let critical = ensemble_transfer(&p, &at, &BiasSchedule::constant(at.bias()), &seed, &opts).map_err(|e| e.to_string())?;
    let msg = format!(
        "100 particles, 50 ms: i_DC 0.07 A (barrier {:.3} hbar omega, max KE {:.2} barrier) -> {} transferred; critical i_DC {:.5} A -> {} transferred",
        barrier / hw,
        below.max_initial_kinetic / barrier,
        below.n_transferred,
        crit.critical_value,
        critical.n_transferred
    );
    if below.n_transferred == 0 && critical.n_transferred >= 1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_out(dir: &Path, args: &[&str], workers: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(BIN)
        .env_remove("QSYNAPSE_WORKERS")
        .current_dir(dir)
        .args(["--report", "report.json", "--workers", workers])
        .args(args)
        .args(["--out", "out.dat"])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    std::fs::read(dir.join("out.dat")).map_err(|e| e.to_string())
}

fn worker_determinism() -> Check {
    let cases: [&[&str]; 4] = [
        &["grid", "--resolution", "24"],
        &["sweep", "--range", "0.05,0.11", "--steps", "7"],
        &["trace", "--t-max", "5e-3", "--velocity", "0,0,4e-3"],
        &["trace", "--ensemble", "--particles", "32", "--t-max", "5e-3"],
    ];
    let mut lines = Vec::new();
    for args in cases {
        let mut outs = Vec::new();
        for w in ["1", "4", "8"] {
            let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
            outs.push(run_out(dir.path(), args, w)?);
        }
        if outs.windows(2).any(|p| p[0] != p[1]) {
            return Err(format!("{} output differs across worker counts", args[..2].join(" ")));
        }
        lines.push(format!("{} ({} bytes)", args[0], outs[0].len()));
    }
    Ok(format!("identical for workers 1, 4, 8: {}", lines.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("field oracle", field_oracle, Duration::from_secs(1)),
        ("gradient check", gradient_check, Duration::from_secs(10)),
        ("single-wire minimum radius", single_wire_radius, Duration::from_secs(10)),
        ("parallel-wire geometric bisection", parallel_bisection, Duration::from_secs(60)),
        ("synthetic double-well saddle", synthetic_double_well, Duration::from_secs(30)),
        ("qualitative barrier closing", qualitative_closing, Duration::from_secs(300)),
        ("ensemble transfer", ensemble_transfer_check, Duration::from_secs(120)),
        ("worker-count determinism", worker_determinism, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (k, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed();
        let (ok, detail) = match r {
            Ok(m) if dt <= *limit => (true, m),
            Ok(m) => (false, format!("{m}; too slow")),
            Err(m) => (false, m),
        };
        failed += !ok as usize;
        println!(
            "{} [{}] {name}: {detail} ({:.2} s, limit {} s)",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            dt.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
