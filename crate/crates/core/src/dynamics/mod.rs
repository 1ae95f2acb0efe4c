//! Classical point-particle motion on the dressed potential.
//!
//! Atoms are treated as classical particles of the species mass moving on
//! the adiabatic potential U(r; bias(t)); spin dynamics enter only through
//! the adiabaticity metric, which flags where that picture breaks down.

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::optimize::{descend, eigenvalues, hessian, DescentOptions};
use crate::analysis::radial::minimum_surface;
use crate::dressed::{potential_from_jet, DressedParams};
use crate::error::{Error, Result};
use crate::magnetostatics::{Aabb, WireAssembly};
use crate::model::{resonance_radius, CONSTANTS};
use crate::surface::DressedSurface;
use crate::Vec3;

/// Default adiabaticity threshold.
pub const DEFAULT_ETA_MAX: f64 = 0.1;

/// Default scaled-radius threshold of [`classify_basin`].
pub const DEFAULT_BASIN_THRESHOLD: f64 = 2.0;

/// Steps per harmonic period used by [`default_time_step`].
pub const STEPS_PER_PERIOD: f64 = 200.0;

/// Piecewise-linear bias; constant before the first and after the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSchedule {
    knots: Vec<(f64, Vec3)>,
}

impl BiasSchedule {
    pub fn new(knots: Vec<(f64, Vec3)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidArgument("bias schedule needs at least one knot".into()));
        }
        if knots.iter().any(|(t, b)| !t.is_finite() || !b.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("bias schedule knots must be finite".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument("bias schedule times must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn constant(bias: Vec3) -> Self {
        Self { knots: vec![(0.0, bias)] }
    }

    pub fn knots(&self) -> &[(f64, Vec3)] {
        &self.knots
    }

    pub fn is_static(&self) -> bool {
        self.knots.windows(2).all(|w| w[0].1 == w[1].1)
    }

    fn segment(&self, t: f64) -> Option<usize> {
        if self.knots.len() < 2 || t < self.knots[0].0 || t >= self.knots[self.knots.len() - 1].0 {
            return None;
        }
        Some(self.knots.partition_point(|k| k.0 <= t) - 1)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        match self.segment(t) {
            Some(i) => {
                let ((t0, b0), (t1, b1)) = (self.knots[i], self.knots[i + 1]);
                b0 + (b1 - b0) * ((t - t0) / (t1 - t0))
            }
            None if t < self.knots[0].0 => self.knots[0].1,
            None => self.knots[self.knots.len() - 1].1,
        }
    }

    /// d(bias)/dt (right derivative at knots) [T/s].
    pub fn rate(&self, t: f64) -> Vec3 {
        match self.segment(t) {
            Some(i) => {
                let ((t0, b0), (t1, b1)) = (self.knots[i], self.knots[i + 1]);
                (b1 - b0) / (t1 - t0)
            }
            None => Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    TimeLimit,
    DomainExit,
    FenceHit,
    AdiabaticityViolation,
    /// Stopped by the caller (e.g. the particle reached the target basin).
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub state: ParticleState,
    /// Potential energy [J].
    pub u: f64,
    pub eta: f64,
}

impl TrajectoryPoint {
    pub fn total_energy(&self, mass: f64) -> f64 {
        0.5 * mass * self.state.velocity.norm_squared() + self.u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub termination: Termination,
    pub steps: usize,
    pub max_eta: f64,
    /// max |E - E0| / |E0| over the recorded points.
    pub energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Leaving this box ends the run.
    pub domain: Option<Aabb>,
    pub eta_max: f64,
    /// Keep every n-th step (the first and last points are always kept).
    pub record_every: usize,
}

impl IntegratorOptions {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self {
            dt,
            t_max,
            domain: None,
            eta_max: DEFAULT_ETA_MAX,
            record_every: 1,
        }
    }
}

/// Potential, force and field data at one point and time.
struct Local {
    u: f64,
    accel: Vec3,
    b_dc: Vec3,
    j_dc: crate::Mat3,
    bias_rate: Vec3,
    delta: f64,
    rabi: f64,
}

impl Local {
    fn eta(&self, v: &Vec3) -> f64 {
        eta_from(&self.b_dc, &(self.j_dc * v + self.bias_rate), self.delta, self.rabi)
    }
}

enum Probe {
    Ok(Local),
    Fence,
    /// Quantization axis or gradient undefined.
    Undefined,
}

fn probe(params: &DressedParams, assembly: &WireAssembly, schedule: &BiasSchedule, p: &Vec3, t: f64) -> Probe {
    let bias = schedule.at(t);
    let jet = match assembly.jet_with_bias(p, &bias) {
        Ok(j) => j,
        Err(Error::Singularity { .. }) => return Probe::Fence,
        Err(_) => return Probe::Undefined,
    };
    let s = match potential_from_jet(params, p, &jet) {
        Ok(s) => s,
        Err(_) => return Probe::Undefined,
    };
    let Some(grad) = s.grad else {
        return Probe::Undefined;
    };
    Probe::Ok(Local {
        u: s.u,
        accel: -grad / params.species.mass,
        b_dc: jet.b_dc,
        j_dc: jet.j_dc,
        bias_rate: schedule.rate(t),
        delta: s.delta,
        rabi: s.rabi,
    })
}

fn eta_from(b: &Vec3, db_dt: &Vec3, delta: f64, rabi: f64) -> f64 {
    let b2 = b.norm_squared();
    let turn = b.cross(db_dt).norm() / b2;
    if turn == 0.0 {
        return 0.0;
    }
    turn / delta.hypot(rabi)
}

/// η = |dθ_B/dt| / sqrt(delta^2 + Omega^2) for a particle at `p` moving with
/// `v` while the bias changes at `bias_rate`. Infinite where the static field
/// or the dressed gap vanishes.
pub fn adiabaticity_metric(
    params: &DressedParams,
    assembly: &WireAssembly,
    bias: &Vec3,
    bias_rate: &Vec3,
    p: &Vec3,
    v: &Vec3,
) -> Result<f64> {
    assembly.check_fence(p)?;
    let jet = assembly.jet_with_bias(p, bias)?;
    let db_dt = jet.j_dc * v + bias_rate;
    match potential_from_jet(params, p, &jet) {
        Ok(s) => {
            let e = eta_from(&jet.b_dc, &db_dt, s.delta, s.rabi);
            Ok(if e.is_nan() { f64::INFINITY } else { e })
        }
        Err(Error::UndefinedQuantizationAxis { .. }) => Ok(if db_dt == Vec3::zeros() { 0.0 } else { f64::INFINITY }),
        Err(e) => Err(e),
    }
}

/// Runs velocity Verlet, calling `visit` on every step; `visit` may stop the run.
fn run(
    params: &DressedParams,
    assembly: &WireAssembly,
    schedule: &BiasSchedule,
    s0: &ParticleState,
    opts: &IntegratorOptions,
    mut visit: impl FnMut(&TrajectoryPoint) -> ControlFlow<()>,
) -> Result<(Termination, usize)> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {}", opts.dt)));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::InvalidArgument("t_max must be non-negative".into()));
    }
    if !(s0.position.iter().chain(s0.velocity.iter()).all(|v| v.is_finite()) && s0.time.is_finite()) {
        return Err(Error::InvalidArgument("initial state must be finite".into()));
    }
    assembly
        .check_fence(&s0.position)
        .map_err(|_| Error::InvalidArgument("initial position lies inside a wire fence".into()))?;
    let mut local = match probe(params, assembly, schedule, &s0.position, s0.time) {
        Probe::Ok(l) => l,
        _ => {
            return Err(Error::InvalidArgument(
                "potential gradient undefined at the initial position".into(),
            ))
        }
    };
    let mut state = *s0;
    let eta = local.eta(&state.velocity);
    let first = TrajectoryPoint { state, u: local.u, eta };
    if visit(&first).is_break() {
        return Ok((Termination::Stopped, 0));
    }
    if eta > opts.eta_max {
        return Ok((Termination::AdiabaticityViolation, 0));
    }
    let n_steps = (opts.t_max / opts.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = opts.dt;
    for k in 1..=n_steps {
        let v_half = state.velocity + local.accel * (0.5 * dt);
        let x = state.position + v_half * dt;
        let t = s0.time + k as f64 * dt;
        local = match probe(params, assembly, schedule, &x, t) {
            Probe::Ok(l) => l,
            Probe::Fence => return Ok((Termination::FenceHit, k)),
            // metric undefined: reported as an infinite violation
            Probe::Undefined => return Ok((Termination::AdiabaticityViolation, k)),
        };
        let v = v_half + local.accel * (0.5 * dt);
        state = ParticleState {
            time: t,
            position: x,
            velocity: v,
        };
        let eta = local.eta(&v);
        let point = TrajectoryPoint { state, u: local.u, eta };
        if visit(&point).is_break() {
            return Ok((Termination::Stopped, k));
        }
        if opts.domain.is_some_and(|d| !d.contains(&x)) {
            return Ok((Termination::DomainExit, k));
        }
        if eta > opts.eta_max {
            return Ok((Termination::AdiabaticityViolation, k));
        }
    }
    Ok((Termination::TimeLimit, n_steps))
}

/// Integrates m a = -grad U(r, t) with velocity Verlet from `s0` until
/// `t_max`, domain exit, a fence hit or an adiabaticity violation.
pub fn integrate_trajectory(
    params: &DressedParams,
    assembly: &WireAssembly,
    schedule: &BiasSchedule,
    s0: &ParticleState,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let mass = params.species.mass;
    let every = opts.record_every.max(1);
    let mut points = Vec::new();
    let mut last = None;
    let mut max_eta: f64 = 0.0;
    let mut e0 = None;
    let mut drift: f64 = 0.0;
    let mut count = 0usize;
    let (termination, steps) = run(params, assembly, schedule, s0, opts, |p| {
        max_eta = max_eta.max(p.eta);
        let e = p.total_energy(mass);
        let e0 = *e0.get_or_insert(e);
        drift = drift.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        if count.is_multiple_of(every) {
            points.push(*p);
            last = None;
        } else {
            last = Some(*p);
        }
        count += 1;
        ControlFlow::Continue(())
    })?;
    points.extend(last);
    if termination == Termination::AdiabaticityViolation && max_eta <= opts.eta_max {
        max_eta = f64::INFINITY;
    }
    Ok(Trajectory {
        points,
        termination,
        steps,
        max_eta,
        energy_drift: drift,
    })
}

/// Wire whose scaled radius rho_i / rho_res,i is smallest and below
/// `threshold`; ties go to the lower index.
pub fn classify_basin_with(params: &DressedParams, assembly: &WireAssembly, p: &Vec3, threshold: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, w) in assembly.wires().iter().enumerate() {
        let Ok(rho_res) = resonance_radius(&params.species, &params.drive, w.i_dc) else {
            continue;
        };
        if rho_res <= 0.0 {
            continue;
        }
        let scaled = w.geometry.distance(p) / rho_res;
        if scaled < threshold && best.is_none_or(|(_, s)| scaled < s) {
            best = Some((i, scaled));
        }
    }
    best.map(|(i, _)| i)
}

/// [`classify_basin_with`] at the default threshold of 2.
pub fn classify_basin(params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Option<usize> {
    classify_basin_with(params, assembly, p, DEFAULT_BASIN_THRESHOLD)
}

/// Harmonic period of the stiffest direction at `well` divided by 200.
pub fn default_time_step(params: &DressedParams, assembly: &WireAssembly, well: &Vec3) -> Result<f64> {
    let (_, dist) = assembly.nearest_wire(well);
    let surface = DressedSurface::new(params, assembly);
    let h = hessian(&surface, well, 1e-4 * dist)?;
    let k_max = eigenvalues(&h)[2];
    if !(k_max > 0.0) {
        return Err(Error::NotFound("no positive curvature at the seed well".into()));
    }
    let period = 2.0 * std::f64::consts::PI * (params.species.mass / k_max).sqrt();
    Ok(period / STEPS_PER_PERIOD)
}

/// Well of `wire`: lowest point of its minimum surface near the closest
/// approach to the other wires, relaxed by descent.
pub fn seed_well(params: &DressedParams, assembly: &WireAssembly, wire: usize) -> Result<Vec3> {
    let w = assembly
        .wires()
        .get(wire)
        .ok_or_else(|| Error::InvalidArgument(format!("no wire with index {wire}")))?;
    let rho = resonance_radius(&params.species, &params.drive, w.i_dc)?;
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("wire {wire} carries no DC current")));
    }
    let axial0 = closest_axial(assembly, wire);
    let axials: Vec<f64> = (-4..=4).map(|k| axial0 + k as f64 * 0.5 * rho).collect();
    let range = ((0.05 * rho).max(2.0 * assembly.eps_axis()), 3.0 * rho);
    let surface = minimum_surface(params, assembly, wire, 32, &axials, range)?;
    let start = surface
        .lowest()
        .ok_or_else(|| Error::NotFound(format!("no radial minimum around wire {wire}")))?
        .position;
    let s = DressedSurface::new(params, assembly);
    let scale = params.species.m_tilde.abs() * CONSTANTS.hbar * params.drive.omega();
    let d = descend(
        &s,
        start,
        &DescentOptions {
            tol_grad: 1e-7 * scale / rho,
            max_step: 0.05 * rho,
            max_iter: 3000,
        },
    )?;
    Ok(d.position)
}

/// Arc length along `wire` of its closest approach to any other wire (0 when alone).
pub fn closest_axial(assembly: &WireAssembly, wire: usize) -> f64 {
    use crate::analysis::barrier::closest_points;
    use crate::magnetostatics::WireGeometry;
    let wires = assembly.wires();
    let own = &wires[wire].geometry;
    let best = wires
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != wire)
        .map(|(_, o)| closest_points(own, &o.geometry))
        .min_by(|a, b| (a.0 - a.1).norm().total_cmp(&(b.0 - b.1).norm()));
    let Some((p, _)) = best else {
        return 0.0;
    };
    match own {
        WireGeometry::InfiniteLine { point, direction } => (p - point).dot(direction),
        WireGeometry::Polyline { vertices } => {
            let mut acc = 0.0;
            let mut best = (f64::INFINITY, 0.0);
            for w in vertices.windows(2) {
                let seg = w[1] - w[0];
                let len = seg.norm();
                let s = ((p - w[0]).dot(&seg) / (len * len)).clamp(0.0, 1.0);
                let d = (w[0] + seg * s - p).norm();
                if d < best.0 {
                    best = (d, acc + s * len);
                }
                acc += len;
            }
            best.1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub wire: usize,
    pub particles: usize,
    /// Standard deviation of each velocity component [m/s].
    pub thermal_speed: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Time step; `None` uses [`default_time_step`] at the seed well.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Defaults to a cube of half-width 10 rho_res (largest wire) around the seed well.
    pub domain: Option<Aabb>,
    pub eta_max: f64,
    pub basin_threshold: f64,
}

impl EnsembleOptions {
    pub fn new(t_max: f64) -> Self {
        Self {
            dt: None,
            t_max,
            domain: None,
            eta_max: DEFAULT_ETA_MAX,
            basin_threshold: DEFAULT_BASIN_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleOutcome {
    pub transferred: bool,
    pub transfer_time: Option<f64>,
    pub termination: Termination,
    pub max_eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferStats {
    pub n_particles: usize,
    /// Particles that reached the basin of another wire.
    pub n_transferred: usize,
    /// Particles that left the domain, hit a fence or violated adiabaticity before transferring.
    pub n_lost: usize,
    /// Mean first-arrival time of the transferred particles [s]; NaN when none transferred.
    pub mean_transfer_time: f64,
    pub seed_well: Vec3,
    pub seed_well_energy: f64,
    /// Largest initial 1/2 m v^2 [J].
    pub max_initial_kinetic: f64,
    pub dt: f64,
    pub outcomes: Vec<ParticleOutcome>,
}

/// Seed well and initial states: every particle starts at the well with an
/// isotropic Gaussian velocity drawn from a ChaCha8 stream seeded with `seed.seed`.
pub fn ensemble_initial_states(params: &DressedParams, assembly: &WireAssembly, seed: &SeedSpec) -> Result<(Vec3, Vec<ParticleState>)> {
    if !(seed.thermal_speed >= 0.0 && seed.thermal_speed.is_finite()) {
        return Err(Error::InvalidArgument("thermal speed must be non-negative".into()));
    }
    let well = seed_well(params, assembly, seed.wire)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.seed);
    let states = (0..seed.particles)
        .map(|_| {
            let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            ParticleState {
                time: 0.0,
                position: well,
                velocity: Vec3::from(v) * seed.thermal_speed,
            }
        })
        .collect();
    Ok((well, states))
}

/// Integrates an ensemble seeded in the well of `seed.wire` and counts the
/// particles that reach another wire's basin.
pub fn ensemble_transfer(
    params: &DressedParams,
    assembly: &WireAssembly,
    schedule: &BiasSchedule,
    seed: &SeedSpec,
    opts: &EnsembleOptions,
) -> Result<TransferStats> {
    let (well, states) = ensemble_initial_states(params, assembly, seed)?;
    let surface = DressedSurface::new(params, assembly).with_bias(schedule.at(0.0));
    let well_energy = crate::surface::EnergySurface::energy(&surface, &well)?;
    let dt = match opts.dt {
        Some(dt) => dt,
        None => default_time_step(params, assembly, &well)?,
    };
    let domain = match opts.domain {
        Some(d) => d,
        None => {
            let rho = assembly
                .wires()
                .iter()
                .filter_map(|w| resonance_radius(&params.species, &params.drive, w.i_dc).ok())
                .fold(0.0, f64::max);
            Aabb::new(well - Vec3::repeat(10.0 * rho), well + Vec3::repeat(10.0 * rho))?
        }
    };
    let integ = IntegratorOptions {
        dt,
        t_max: opts.t_max,
        domain: Some(domain),
        eta_max: opts.eta_max,
        record_every: 1,
    };
    let outcomes: Vec<ParticleOutcome> = states
        .par_iter()
        .map(|s0| {
            let mut transfer_time = None;
            let mut max_eta: f64 = 0.0;
            let (termination, _) = run(params, assembly, schedule, s0, &integ, |p| {
                max_eta = max_eta.max(p.eta);
                match classify_basin_with(params, assembly, &p.state.position, opts.basin_threshold) {
                    Some(b) if b != seed.wire => {
                        transfer_time = Some(p.state.time);
                        ControlFlow::Break(())
                    }
                    _ => ControlFlow::Continue(()),
                }
            })?;
            if termination == Termination::AdiabaticityViolation && max_eta <= opts.eta_max {
                max_eta = f64::INFINITY;
            }
            Ok(ParticleOutcome {
                transferred: transfer_time.is_some(),
                transfer_time,
                termination,
                max_eta,
            })
        })
        .collect::<Result<_>>()?;
    let n_transferred = outcomes.iter().filter(|o| o.transferred).count();
    let n_lost = outcomes
        .iter()
        .filter(|o| !o.transferred && o.termination != Termination::TimeLimit)
        .count();
    let mean_transfer_time = if n_transferred > 0 {
        outcomes.iter().filter_map(|o| o.transfer_time).sum::<f64>() / n_transferred as f64
    } else {
        f64::NAN
    };
    let mass = params.species.mass;
    let max_initial_kinetic = states.iter().map(|s| 0.5 * mass * s.velocity.norm_squared()).fold(0.0, f64::max);
    Ok(TransferStats {
        n_particles: states.len(),
        n_transferred,
        n_lost,
        mean_transfer_time,
        seed_well: well,
        seed_well_energy: well_energy,
        max_initial_kinetic,
        dt,
        outcomes,
    })
}

#[cfg(test)]
mod tests;
