//! Barrier between the traps of two wires and the estimators used by
//! critical-current searches.
//!
//! Two estimators are registered:
//! - `full`: wells seeded from a sampled potential grid, relaxed by descent,
//!   saddle located by a climbing-image elastic band;
//! - `geometric`: separation of the isolated-wire resonance cylinders,
//!   `d_axis - rho_res,a - rho_res,b` [m]. Cheap and exact for parallel wires.

use serde::Serialize;

use super::grid::{sample_grid, GridSpec, Potential};
use super::optimize::{descend, DescentOptions};
use super::saddle::{find_saddle, BarrierResult, SaddleOptions, Stationary};
use crate::dressed::DressedParams;
use crate::error::{Error, Result};
use crate::magnetostatics::{Aabb, WireAssembly, WireGeometry};
use crate::model::{resonance_radius, CONSTANTS};
use crate::registry::{Named, Registry};
use crate::surface::{DressedSurface, EnergySurface};
use crate::Vec3;

/// Half-length used when an infinite line enters a segment computation [m].
const LINE_HALF_LENGTH: f64 = 1e3;

/// Samples along the straight inter-well line used for the well depth.
const LINE_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierOptions {
    /// The two wires whose traps are compared.
    pub wires: (usize, usize),
    /// Interior elastic-band images.
    pub images: usize,
    pub max_iter: usize,
    /// Gradient tolerance relative to `|m_tilde| hbar omega / |B - A|`.
    pub tol_grad_rel: f64,
    /// Touch tolerance as a fraction of the shallower well's depth.
    pub touch_rel: f64,
    /// Absolute touch tolerance; overrides `touch_rel` when set [J or m].
    pub touch_abs: Option<f64>,
    /// A well belongs to its wire only if it is closer to it than
    /// `ownership` times its distance to the other wire.
    pub ownership: f64,
    /// Grid used to seed the wells.
    pub grid_resolution: [usize; 3],
    /// Seeding box; defaults to a cube around the wires' closest approach.
    pub analysis_box: Option<Aabb>,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            wires: (0, 1),
            images: 15,
            max_iter: 4000,
            tol_grad_rel: 1e-6,
            touch_rel: 1e-3,
            touch_abs: None,
            ownership: 0.9,
            grid_resolution: [96, 96, 96],
            analysis_box: None,
        }
    }
}

/// Outcome of [`barrier_height`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub min_a: Stationary,
    pub min_b: Stationary,
    /// Elastic-band result; absent when the wells merged.
    pub saddle: Option<BarrierResult>,
    /// min(barrierA, barrierB), or 0 when the wells merged [J].
    pub barrier: f64,
    /// Max U on the straight inter-well line minus the higher well minimum [J].
    pub well_depth: f64,
    /// Touch tolerance actually applied [J].
    pub tolerance: f64,
    /// Both seeds relaxed into one well, or into a well not owned by its wire.
    pub merged: bool,
    pub touching: bool,
    pub warnings: Vec<String>,
}

fn energy_scale(params: &DressedParams) -> f64 {
    params.species.m_tilde.abs() * CONSTANTS.hbar * params.drive.omega()
}

/// Closest points between two wire geometries, `(on_a, on_b)`.
pub fn closest_points(a: &WireGeometry, b: &WireGeometry) -> (Vec3, Vec3) {
    let sa = segments(a);
    let sb = segments(b);
    let mut best = (Vec3::zeros(), Vec3::zeros(), f64::INFINITY);
    for (p0, p1) in &sa {
        for (q0, q1) in &sb {
            let (x, y) = segment_closest(p0, p1, q0, q1);
            let d = (x - y).norm();
            if d < best.2 {
                best = (x, y, d);
            }
        }
    }
    (best.0, best.1)
}

fn segments(g: &WireGeometry) -> Vec<(Vec3, Vec3)> {
    match g {
        WireGeometry::InfiniteLine { point, direction } => {
            vec![(point - direction * LINE_HALF_LENGTH, point + direction * LINE_HALF_LENGTH)]
        }
        WireGeometry::Polyline { vertices } => vertices.windows(2).map(|w| (w[0], w[1])).collect(),
    }
}

/// Closest points of segments [p0, p1] and [q0, q1].
fn segment_closest(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> (Vec3, Vec3) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let (a, e, f) = (d1.norm_squared(), d2.norm_squared(), d2.dot(&r));
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (p0 + d1 * s, q0 + d2 * t)
}

/// Default seeding box: a cube centred on the midpoint of the wires' closest
/// points, half-width max(axis distance, 2 max rho_res).
pub fn default_analysis_box(params: &DressedParams, assembly: &WireAssembly, wires: (usize, usize)) -> Result<Aabb> {
    let (wa, wb) = wire_pair(assembly, wires)?;
    let (pa, pb) = closest_points(&wa.geometry, &wb.geometry);
    let ra = resonance_radius(&params.species, &params.drive, wa.i_dc)?;
    let rb = resonance_radius(&params.species, &params.drive, wb.i_dc)?;
    let half = (pa - pb).norm().max(2.0 * ra.max(rb));
    if !(half > 0.0) {
        return Err(Error::InvalidGeometry("wires intersect and carry no DC current".into()));
    }
    let c = (pa + pb) * 0.5;
    Aabb::new(c - Vec3::repeat(half), c + Vec3::repeat(half))
}

fn wire_pair(assembly: &WireAssembly, wires: (usize, usize)) -> Result<(&crate::magnetostatics::Wire, &crate::magnetostatics::Wire)> {
    let w = assembly.wires();
    if wires.0 == wires.1 || wires.0 >= w.len() || wires.1 >= w.len() {
        return Err(Error::InvalidArgument(format!(
            "wire pair ({}, {}) invalid for an assembly of {} wires",
            wires.0,
            wires.1,
            w.len()
        )));
    }
    Ok((&w[wires.0], &w[wires.1]))
}

/// Lowest sampled potential node nearest to each wire of the pair. Returns the seeds and the grid.
pub fn grid_seeds(params: &DressedParams, assembly: &WireAssembly, opts: &BarrierOptions) -> Result<(Vec3, Vec3, GridSpec)> {
    wire_pair(assembly, opts.wires)?;
    let bounds = match opts.analysis_box {
        Some(b) => b,
        None => default_analysis_box(params, assembly, opts.wires)?,
    };
    let spec = GridSpec::from_box(&bounds, opts.grid_resolution)?;
    let field = sample_grid(&Potential, params, assembly, &spec)?;
    let mut best: [Option<(f64, usize)>; 2] = [None, None];
    for n in 0..spec.len() {
        if !field.mask[n] {
            continue;
        }
        let (i, j, k) = spec.unflatten(n);
        let p = spec.node(i, j, k);
        let (nearest, _) = assembly.nearest_wire(&p);
        let slot = if nearest == opts.wires.0 {
            0
        } else if nearest == opts.wires.1 {
            1
        } else {
            continue;
        };
        let v = field.values[n];
        if best[slot].is_none_or(|(bv, _)| v < bv) {
            best[slot] = Some((v, n));
        }
    }
    let node = |slot: usize, wire: usize| -> Result<Vec3> {
        let (_, n) = best[slot].ok_or_else(|| Error::NotFound(format!("no valid grid node near wire {wire}")))?;
        let (i, j, k) = spec.unflatten(n);
        Ok(spec.node(i, j, k))
    };
    Ok((node(0, opts.wires.0)?, node(1, opts.wires.1)?, spec))
}

/// Relaxes both seeds to wells, runs the saddle search between them and
/// classifies the pair as touching when the barrier is within tolerance or
/// the wells merged.
///
/// The wells belong to the wires nearest to `seed_a` and `seed_b`.
pub fn barrier_height(
    params: &DressedParams,
    assembly: &WireAssembly,
    seed_a: Vec3,
    seed_b: Vec3,
    opts: &BarrierOptions,
) -> Result<BarrierReport> {
    let length = (seed_b - seed_a).norm();
    if !(length > 0.0) {
        return Err(Error::DegenerateEndpoints("well seeds coincide".into()));
    }
    let (wire_a, _) = assembly.nearest_wire(&seed_a);
    let (wire_b, _) = assembly.nearest_wire(&seed_b);
    if wire_a == wire_b {
        return Err(Error::InvalidArgument(format!("both seeds are nearest to wire {wire_a}")));
    }
    let surface = DressedSurface::new(params, assembly);
    let scale = energy_scale(params);
    let descent = DescentOptions {
        tol_grad: opts.tol_grad_rel * scale / length,
        max_step: 0.02 * length,
        max_iter: 3000,
    };
    let da = descend(&surface, seed_a, &descent)?;
    let db = descend(&surface, seed_b, &descent)?;
    let min_a = Stationary {
        position: da.position,
        u: da.energy,
    };
    let min_b = Stationary {
        position: db.position,
        u: db.energy,
    };
    let mut warnings = Vec::new();
    for (name, d) in [("A", &da), ("B", &db)] {
        if !d.converged {
            warnings.push(format!("descent from seed {name} stopped with |grad U| = {:.3e} J/m", d.grad_norm));
        }
    }

    let owned = |p: &Vec3, own: usize, other: usize| {
        let w = assembly.wires();
        w[own].geometry.distance(p) < opts.ownership * w[other].geometry.distance(p)
    };
    let separation = (min_b.position - min_a.position).norm();
    let merged = separation < 1e-3 * length || !owned(&min_a.position, wire_a, wire_b) || !owned(&min_b.position, wire_b, wire_a);

    let well_depth = if separation > 0.0 {
        let line_max = (0..LINE_SAMPLES)
            .filter_map(|i| {
                let t = i as f64 / (LINE_SAMPLES - 1) as f64;
                surface.energy(&(min_a.position + (min_b.position - min_a.position) * t)).ok()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        (line_max - min_a.u.max(min_b.u)).max(0.0)
    } else {
        0.0
    };
    let tolerance = opts.touch_abs.unwrap_or(opts.touch_rel * well_depth);

    if merged {
        return Ok(BarrierReport {
            min_a,
            min_b,
            saddle: None,
            barrier: 0.0,
            well_depth,
            tolerance,
            merged: true,
            touching: true,
            warnings,
        });
    }

    let mut saddle_opts = SaddleOptions::new(opts.images, opts.max_iter, opts.tol_grad_rel * scale / separation);
    // bend the initial path off the straight line by one seeding cell
    let axis = (min_b.position - min_a.position) / separation;
    let k = (0..3).min_by(|&i, &j| axis[i].abs().total_cmp(&axis[j].abs())).unwrap();
    let normal = (Vec3::ith(k, 1.0) - axis * axis[k]).normalize();
    saddle_opts.via = Some((min_a.position + min_b.position) * 0.5 + normal * (separation / opts.images as f64));

    let result = match find_saddle(&surface, min_a.position, min_b.position, &saddle_opts) {
        Ok(r) => r,
        Err(Error::NoConvergence {
            iterations,
            residual,
            best_path,
        }) => {
            warnings.push(format!(
                "saddle search not converged after {iterations} iterations (|grad U| = {residual:.3e} J/m); barrier taken from the best path"
            ));
            unconverged_result(&surface, min_a, min_b, best_path, iterations, residual)
        }
        Err(e) => return Err(e),
    };
    warnings.extend(result.warnings.iter().cloned());
    let barrier = result.min_barrier();
    Ok(BarrierReport {
        min_a,
        min_b,
        touching: barrier <= tolerance,
        saddle: Some(result),
        barrier,
        well_depth,
        tolerance,
        merged: false,
        warnings,
    })
}

fn unconverged_result(
    surface: &dyn EnergySurface,
    min_a: Stationary,
    min_b: Stationary,
    path: Vec<Vec3>,
    iterations: usize,
    residual: f64,
) -> BarrierResult {
    let energies: Vec<f64> = path.iter().map(|p| surface.energy(p).unwrap_or(f64::NAN)).collect();
    let top = (0..path.len())
        .filter(|&i| energies[i].is_finite())
        .max_by(|&i, &j| energies[i].total_cmp(&energies[j]))
        .unwrap_or(0);
    let saddle = Stationary {
        position: path[top],
        u: energies[top],
    };
    BarrierResult {
        min_a,
        min_b,
        saddle,
        barrier_a: saddle.u - min_a.u,
        barrier_b: saddle.u - min_b.u,
        path,
        path_energies: energies,
        converged: false,
        residual,
        hessian_index: 0,
        iterations,
        warnings: Vec::new(),
    }
}

/// Scalar barrier measure used by critical searches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierEstimate {
    pub mode: &'static str,
    /// Barrier [J] (full) or resonance-cylinder separation [m] (geometric).
    pub value: f64,
    pub unit: &'static str,
    /// Bound on |value| that counts as closed.
    pub tolerance: f64,
    pub touching: bool,
    pub report: Option<BarrierReport>,
}

pub trait BarrierEstimator: Named + Send + Sync {
    fn estimate(&self, params: &DressedParams, assembly: &WireAssembly, opts: &BarrierOptions) -> Result<BarrierEstimate>;
}

/// Dressed-potential barrier from grid-seeded wells.
pub struct FullBarrier;

impl Named for FullBarrier {
    fn name(&self) -> &'static str {
        "full"
    }
}

impl BarrierEstimator for FullBarrier {
    fn estimate(&self, params: &DressedParams, assembly: &WireAssembly, opts: &BarrierOptions) -> Result<BarrierEstimate> {
        let (a, b, _) = grid_seeds(params, assembly, opts)?;
        let report = barrier_height(params, assembly, a, b, opts)?;
        Ok(BarrierEstimate {
            mode: self.name(),
            value: report.barrier,
            unit: "J",
            tolerance: report.tolerance,
            touching: report.touching,
            report: Some(report),
        })
    }
}

/// Resonance-cylinder separation of the two wires treated in isolation.
///
/// Touching when the separation is <= 0; the tolerance is `touch_rel` times
/// the axis distance (or `touch_abs`).
pub struct GeometricBarrier;

impl Named for GeometricBarrier {
    fn name(&self) -> &'static str {
        "geometric"
    }
}

impl BarrierEstimator for GeometricBarrier {
    fn estimate(&self, params: &DressedParams, assembly: &WireAssembly, opts: &BarrierOptions) -> Result<BarrierEstimate> {
        let (value, axis) = geometric_separation(params, assembly, opts.wires)?;
        Ok(BarrierEstimate {
            mode: self.name(),
            value,
            unit: "m",
            tolerance: opts.touch_abs.unwrap_or(opts.touch_rel * axis),
            touching: value <= 0.0,
            report: None,
        })
    }
}

/// `(axis distance - rho_res,a - rho_res,b, axis distance)` [m].
pub fn geometric_separation(params: &DressedParams, assembly: &WireAssembly, wires: (usize, usize)) -> Result<(f64, f64)> {
    let (wa, wb) = wire_pair(assembly, wires)?;
    let (pa, pb) = closest_points(&wa.geometry, &wb.geometry);
    let axis = (pa - pb).norm();
    let ra = resonance_radius(&params.species, &params.drive, wa.i_dc)?;
    let rb = resonance_radius(&params.species, &params.drive, wb.i_dc)?;
    Ok((axis - ra - rb, axis))
}

pub fn barrier_estimators() -> Registry<dyn BarrierEstimator> {
    let mut r: Registry<dyn BarrierEstimator> = Registry::new("barrier estimator");
    r.register(Box::new(FullBarrier)).register(Box::new(GeometricBarrier));
    r
}
