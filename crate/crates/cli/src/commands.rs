use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use qsynapse::analysis::barrier::barrier_estimators;
use qsynapse::analysis::critical::critical_parameter;
use qsynapse::analysis::grid::{sample_grid, scalar_sources, GridSpec, ScalarField3D};
use qsynapse::analysis::isosurface::extract_isosurface;
use qsynapse::analysis::params::Parameter;
use qsynapse::analysis::radial::minimum_surface;
use qsynapse::analysis::sweep::{observables, parameter_sweep, SweepContext};
use qsynapse::dressed::{dressed_potential, PotentialSample};
use qsynapse::dynamics::{
    closest_axial, default_time_step, ensemble_transfer, integrate_trajectory, seed_well, IntegratorOptions, ParticleState, Termination,
};
use qsynapse::io::export;
use qsynapse::io::Scene;
use qsynapse::magnetostatics::{find_field_zeros, Aabb};
use qsynapse::model::resonance_radius;
use qsynapse::{Error, Vec3};

use crate::args::*;

/// Reference operating point of the default scene [A].
pub const REFERENCE_IDC: f64 = 0.0925;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::UnknownStrategy { .. } => CliError::Usage(e.to_string()),
            e => CliError::Domain(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub warnings: Vec<String>,
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("results are serializable")
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Writes `data` to `out`, or to stdout when absent.
fn emit(out: Option<&Path>, data: impl FnOnce(&mut dyn Write) -> qsynapse::Result<()>) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
            data(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            data(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn grid_spec(scene: &Scene, args: &BoxArgs) -> CliResult<GridSpec> {
    let bounds = match args.bounds {
        Some(b) => {
            Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5])).map_err(|e| CliError::Usage(format!("--box: {e}")))?
        }
        None => scene.analysis_box()?,
    };
    let res = args.resolution.unwrap_or(scene.barrier.grid_resolution);
    GridSpec::from_box(&bounds, res).map_err(|e| CliError::Usage(format!("--resolution: {e}")))
}

pub fn field(scene: &Scene, args: &PointArgs) -> CliResult<Outcome> {
    let p = v3(args.at);
    let a = &scene.assembly;
    let b = a.b_dc(&p)?;
    let rf = a.b_rf_amplitude(&p)?;
    let (wire, dist) = a.nearest_wire(&p);
    let results = json!({
        "point_m": p,
        "b_dc_T": b,
        "b_dc_norm_T": b.norm(),
        "b_rf_amplitude_T": rf,
        "b_rf_norm_T": rf.norm(),
        "nearest_wire": wire,
        "distance_to_wire_m": dist,
    });
    emit(None, |w| {
        match args.format {
            PointFormat::Csv => {
                writeln!(w, "x_m,y_m,z_m,bdc_x_T,bdc_y_T,bdc_z_T,brf_x_T,brf_y_T,brf_z_T")?;
                writeln!(
                    w,
                    "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    p.x, p.y, p.z, b.x, b.y, b.z, rf.x, rf.y, rf.z
                )?;
            }
            PointFormat::Json => writeln!(w, "{}", results)?,
        }
        Ok(())
    })?;
    Ok(Outcome {
        results,
        ..Default::default()
    })
}

pub fn potential(scene: &Scene, args: &PointArgs) -> CliResult<Outcome> {
    let s = dressed_potential(&scene.params, &scene.assembly, &v3(args.at))?;
    let results = to_value(&s);
    emit(None, |w| {
        match args.format {
            PointFormat::Csv => writeln!(w, "{}\n{}", PotentialSample::CSV_HEADER, s.csv_row())?,
            PointFormat::Json => writeln!(w, "{}", results)?,
        }
        Ok(())
    })?;
    Ok(Outcome {
        results,
        ..Default::default()
    })
}

fn sampled(scene: &Scene, source: &str, args: &BoxArgs) -> CliResult<(ScalarField3D, &'static str)> {
    let sources = scalar_sources();
    let src = sources.get(source)?;
    let spec = grid_spec(scene, args)?;
    Ok((sample_grid(src, &scene.params, &scene.assembly, &spec)?, src.unit()))
}

pub fn grid(scene: &Scene, args: &GridArgs) -> CliResult<Outcome> {
    if args.format == GridFormat::Binary && args.out.is_none() {
        return Err(CliError::Usage("--format binary needs --out".into()));
    }
    let (field, unit) = sampled(scene, &args.source, &args.grid)?;
    emit(args.out.as_deref(), |w| match args.format {
        GridFormat::Csv => export::write_grid_csv(w, &field, unit),
        GridFormat::Binary => export::write_grid_binary(w, &field),
    })?;
    let mut warnings = Vec::new();
    if field.masked_count() > 0 {
        warnings.push(format!("{} grid nodes masked (wire fence or field zero)", field.masked_count()));
    }
    Ok(Outcome {
        results: json!({
            "source": args.source,
            "unit": unit,
            "grid": field.spec,
            "nodes": field.values.len(),
            "masked": field.masked_count(),
            "range": field.range(),
            "format": format!("{:?}", args.format).to_lowercase(),
            "out": args.out,
        }),
        warnings,
    })
}

pub fn surface(scene: &Scene, args: &SurfaceArgs) -> CliResult<Outcome> {
    match args.kind {
        SurfaceKind::Iso => {
            let (field, unit) = sampled(scene, &args.source, &args.grid)?;
            let (min, max) = field.range().ok_or_else(|| Error::InvalidGrid("every node is masked".into()))?;
            let level = match (args.level, args.above_min) {
                (Some(l), _) => l,
                (None, Some(d)) => min + d,
                (None, None) => min + 0.1 * (max - min),
            };
            let mesh = extract_isosurface(&field, level)?;
            emit(args.out.as_deref(), |w| {
                export::write_mesh_ply(w, &mesh, &format!("isosurface of {} [{unit}]", args.source))
            })?;
            Ok(Outcome {
                results: json!({
                    "kind": "iso",
                    "source": args.source,
                    "unit": unit,
                    "level": level,
                    "sampled_range": [min, max],
                    "grid": field.spec,
                    "vertices": mesh.vertices.len(),
                    "triangles": mesh.triangles.len(),
                    "out": args.out,
                }),
                warnings: Vec::new(),
            })
        }
        SurfaceKind::Minimum => {
            let w = scene
                .assembly
                .wires()
                .get(args.wire)
                .ok_or_else(|| CliError::Usage(format!("--wire: no wire with index {}", args.wire)))?;
            let rho = resonance_radius(&scene.params.species, &scene.params.drive, w.i_dc)?;
            if !(rho > 0.0) {
                return Err(CliError::Usage(format!("--wire: wire {} carries no DC current", args.wire)));
            }
            if args.axials == 0 || args.azimuths < 3 {
                return Err(CliError::Usage("need --axials >= 1 and --azimuths >= 3".into()));
            }
            let c = closest_axial(&scene.assembly, args.wire);
            let half = (args.axials - 1) as f64 / 2.0;
            let axials: Vec<f64> = (0..args.axials).map(|k| c + (k as f64 - half) * args.axial_step * rho).collect();
            let range = ((0.05 * rho).max(2.0 * scene.assembly.eps_axis()), 3.0 * rho);
            let surf = minimum_surface(&scene.params, &scene.assembly, args.wire, args.azimuths, &axials, range)?;
            let (vertices, triangles) = surf.to_mesh();
            emit(args.out.as_deref(), |w| {
                export::write_ply(w, &vertices, &triangles, &format!("minimum surface of wire {}", args.wire))
            })?;
            let mut warnings = Vec::new();
            if surf.not_found() > 0 {
                warnings.push(format!("{} of {} rays had no radial minimum", surf.not_found(), surf.cells.len()));
            }
            Ok(Outcome {
                results: json!({
                    "kind": "minimum",
                    "wire": args.wire,
                    "resonance_radius_m": rho,
                    "azimuths": args.azimuths,
                    "axials_m": axials,
                    "found": surf.found(),
                    "not_found": surf.not_found(),
                    "lowest": surf.lowest(),
                    "vertices": vertices.len(),
                    "triangles": triangles.len(),
                    "out": args.out,
                }),
                warnings,
            })
        }
    }
}

pub fn zeros(scene: &Scene, args: &ZerosArgs) -> CliResult<Outcome> {
    let spec = grid_spec(scene, &args.grid)?;
    let z = find_field_zeros(&scene.assembly, spec.bounds(), spec.resolution, scene.params.zero_threshold)?;
    emit(None, |w| {
        writeln!(w, "x_m,y_m,z_m")?;
        for p in &z.zeros {
            writeln!(w, "{:e},{:e},{:e}", p.x, p.y, p.z)?;
        }
        Ok(())
    })?;
    Ok(Outcome {
        results: json!({ "count": z.zeros.len(), "zeros": z, "resolution": spec.resolution }),
        warnings: Vec::new(),
    })
}

pub fn barrier(scene: &Scene, args: &BarrierArgs) -> CliResult<Outcome> {
    let estimators = barrier_estimators();
    let est = estimators
        .get(&args.mode)?
        .estimate(&scene.params, &scene.assembly, &scene.barrier)?;
    let hw = qsynapse::model::CONSTANTS.hbar * scene.params.drive.omega();
    let warnings = est.report.as_ref().map(|r| r.warnings.clone()).unwrap_or_default();
    emit(None, |w| {
        writeln!(w, "mode,value,unit,tolerance,touching")?;
        writeln!(w, "{},{:e},{},{:e},{}", est.mode, est.value, est.unit, est.tolerance, est.touching)?;
        Ok(())
    })?;
    let mut results = to_value(&est);
    if est.unit == "J" {
        results["value_hbar_omega"] = json!(est.value / hw);
    }
    Ok(Outcome { results, warnings })
}

pub fn critical(scene: &Scene, args: &CriticalArgs) -> CliResult<Outcome> {
    let param: Parameter = args.vary.parse()?;
    let estimators = barrier_estimators();
    let est = estimators.get(&args.mode)?;
    let mut opts = scene.critical.clone();
    if let Some(b) = args.bracket {
        opts.bracket = (b[0], b[1]);
    }
    if let Some(t) = args.tol {
        opts.tol_param = t;
    }
    let r = critical_parameter(&scene.params, &scene.assembly, param, est, &opts)?;
    emit(None, |w| {
        writeln!(w, "parameter,critical_value,unit,mode,tolerance_achieved")?;
        writeln!(
            w,
            "{},{:e},{},{},{:e}",
            r.parameter, r.critical_value, r.unit, r.mode, r.tolerance_achieved
        )?;
        Ok(())
    })?;
    let mut results = to_value(&r);
    results["criticalValue"] = json!(r.critical_value);
    if param == Parameter::IDc {
        let ratio = r.critical_value / REFERENCE_IDC;
        results["reference_comparison"] = json!({
            "reference_idc_A": REFERENCE_IDC,
            "ratio": ratio,
            "within_one_order_of_magnitude": (0.1..=10.0).contains(&ratio),
        });
    }
    Ok(Outcome {
        results,
        warnings: r.warnings.clone(),
    })
}

pub fn sweep(scene: &Scene, args: &SweepArgs) -> CliResult<Outcome> {
    let param: Parameter = args.vary.parse()?;
    let obs = observables();
    let o = obs.get(&args.observable)?;
    let ctx = SweepContext {
        barrier: scene.barrier.clone(),
        wire: args.wire,
        ..SweepContext::default()
    };
    let t = parameter_sweep(
        &scene.params,
        &scene.assembly,
        param,
        (args.range[0], args.range[1]),
        args.steps,
        o,
        &ctx,
    )?;
    emit(args.out.as_deref(), |w| export::write_sweep_csv(w, &t))?;
    let failed = t.rows.iter().filter(|r| r.error.is_some()).count();
    let mut warnings = Vec::new();
    if failed > 0 {
        warnings.push(format!("{failed} of {} sweep points failed", t.rows.len()));
    }
    Ok(Outcome {
        results: json!({ "table": t, "out": args.out }),
        warnings,
    })
}

fn max_resonance_radius(scene: &Scene) -> CliResult<f64> {
    let mut r: f64 = 0.0;
    for w in scene.assembly.wires() {
        r = r.max(resonance_radius(&scene.params.species, &scene.params.drive, w.i_dc)?);
    }
    Ok(r)
}

pub fn trace(scene: &Scene, args: &TraceArgs) -> CliResult<Outcome> {
    let t_max = args.t_max.unwrap_or(scene.ensemble.t_max);
    let dt = args.dt.or(scene.ensemble.dt);
    if args.ensemble {
        let mut seed = scene.seed;
        if let Some(n) = args.particles {
            seed.particles = n;
        }
        if let Some(s) = args.seed {
            seed.seed = s;
        }
        let mut opts = scene.ensemble.clone();
        opts.t_max = t_max;
        opts.dt = dt;
        let stats = ensemble_transfer(&scene.params, &scene.assembly, &scene.schedule, &seed, &opts)?;
        emit(args.out.as_deref(), |w| {
            writeln!(w, "particle,transferred,transfer_time_s,termination,max_eta")?;
            for (k, o) in stats.outcomes.iter().enumerate() {
                let term = to_value(&o.termination);
                writeln!(
                    w,
                    "{k},{},{:e},{},{:e}",
                    o.transferred as u8,
                    o.transfer_time.unwrap_or(f64::NAN),
                    term.as_str().unwrap_or(""),
                    o.max_eta
                )?;
            }
            Ok(())
        })?;
        let mut warnings = Vec::new();
        let violated = stats
            .outcomes
            .iter()
            .filter(|o| o.termination == Termination::AdiabaticityViolation)
            .count();
        if violated > 0 {
            warnings.push(format!("{violated} particles violated adiabaticity"));
        }
        return Ok(Outcome {
            results: json!({
                "mode": "ensemble",
                "seed": seed,
                "n_particles": stats.n_particles,
                "n_transferred": stats.n_transferred,
                "n_lost": stats.n_lost,
                "mean_transfer_time_s": stats.mean_transfer_time,
                "seed_well_m": stats.seed_well,
                "seed_well_energy_J": stats.seed_well_energy,
                "max_initial_kinetic_J": stats.max_initial_kinetic,
                "dt_s": stats.dt,
                "t_max_s": t_max,
                "out": args.out,
            }),
            warnings,
        });
    }

    let start = match args.position {
        Some(p) => v3(p),
        None => seed_well(&scene.params, &scene.assembly, scene.seed.wire)?,
    };
    let dt = match dt {
        Some(dt) => dt,
        None => default_time_step(&scene.params, &scene.assembly, &start)?,
    };
    if !(dt > 0.0 && t_max >= 0.0) {
        return Err(CliError::Usage("--dt must be positive and --t-max non-negative".into()));
    }
    let half = 10.0 * max_resonance_radius(scene)?;
    let domain = if half > 0.0 {
        Some(Aabb::new(start - Vec3::repeat(half), start + Vec3::repeat(half))?)
    } else {
        None
    };
    let opts = IntegratorOptions {
        dt,
        t_max,
        domain,
        eta_max: scene.ensemble.eta_max,
        record_every: args.record_every,
    };
    let s0 = ParticleState {
        time: 0.0,
        position: start,
        velocity: v3(args.velocity),
    };
    let traj = integrate_trajectory(&scene.params, &scene.assembly, &scene.schedule, &s0, &opts)?;
    emit(args.out.as_deref(), |w| export::write_trajectory_csv(w, &traj))?;
    let mut warnings = Vec::new();
    if traj.termination == Termination::AdiabaticityViolation {
        warnings.push(format!("adiabaticity violated: max eta {:e} > {:e}", traj.max_eta, opts.eta_max));
    }
    let last = traj.points.last().map(|p| p.state);
    Ok(Outcome {
        results: json!({
            "mode": "trajectory",
            "start": s0,
            "dt_s": dt,
            "t_max_s": t_max,
            "domain": domain,
            "termination": traj.termination,
            "steps": traj.steps,
            "recorded_points": traj.points.len(),
            "max_eta": traj.max_eta,
            "energy_drift": traj.energy_drift,
            "final_state": last,
            "out": args.out,
        }),
        warnings,
    })
}
