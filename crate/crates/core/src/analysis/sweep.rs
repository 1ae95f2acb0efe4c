//! One-parameter sweeps of a trap observable.

use rayon::prelude::*;
use serde::Serialize;

use super::barrier::{geometric_separation, BarrierEstimator, BarrierOptions, FullBarrier};
use super::params::Parameter;
use super::radial::radial_trap_minimum;
use crate::dressed::DressedParams;
use crate::error::{Error, Result};
use crate::magnetostatics::WireAssembly;
use crate::model::resonance_radius;
use crate::registry::{Named, Registry};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepContext {
    pub barrier: BarrierOptions,
    /// Wire observed by `min-radius`.
    pub wire: usize,
    /// Azimuths tried by `min-radius`.
    pub azimuths: usize,
    /// Axial position (arc length) used by `min-radius` [m].
    pub axial: f64,
}

impl Default for SweepContext {
    fn default() -> Self {
        Self {
            barrier: BarrierOptions::default(),
            wire: 0,
            azimuths: 16,
            axial: 0.0,
        }
    }
}

pub trait Observable: Named + Send + Sync {
    fn unit(&self) -> &'static str;

    fn observe(&self, params: &DressedParams, assembly: &WireAssembly, ctx: &SweepContext) -> Result<f64>;
}

/// Full-mode barrier [J]; 0 once the traps touch.
pub struct BarrierObservable;
/// 1 when the traps touch, else 0.
pub struct TouchingObservable;
/// Radius of the lowest radial minimum around one wire [m].
pub struct MinRadiusObservable;
/// Resonance-cylinder separation [m].
pub struct SeparationObservable;

impl Named for BarrierObservable {
    fn name(&self) -> &'static str {
        "barrier"
    }
}
impl Observable for BarrierObservable {
    fn unit(&self) -> &'static str {
        "J"
    }
    fn observe(&self, params: &DressedParams, assembly: &WireAssembly, ctx: &SweepContext) -> Result<f64> {
        let e = FullBarrier.estimate(params, assembly, &ctx.barrier)?;
        Ok(if e.touching { 0.0 } else { e.value })
    }
}

impl Named for TouchingObservable {
    fn name(&self) -> &'static str {
        "touching"
    }
}
impl Observable for TouchingObservable {
    fn unit(&self) -> &'static str {
        "1"
    }
    fn observe(&self, params: &DressedParams, assembly: &WireAssembly, ctx: &SweepContext) -> Result<f64> {
        Ok(FullBarrier.estimate(params, assembly, &ctx.barrier)?.touching as u8 as f64)
    }
}

impl Named for MinRadiusObservable {
    fn name(&self) -> &'static str {
        "min-radius"
    }
}
impl Observable for MinRadiusObservable {
    fn unit(&self) -> &'static str {
        "m"
    }
    /// Searches radii in [0.05, 3] rho_res of the observed wire.
    fn observe(&self, params: &DressedParams, assembly: &WireAssembly, ctx: &SweepContext) -> Result<f64> {
        let wire = assembly
            .wires()
            .get(ctx.wire)
            .ok_or_else(|| Error::InvalidArgument(format!("no wire with index {}", ctx.wire)))?;
        let rho = resonance_radius(&params.species, &params.drive, wire.i_dc)?;
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument("observed wire carries no DC current".into()));
        }
        let range = ((0.05 * rho).max(2.0 * assembly.eps_axis()), 3.0 * rho);
        let n = ctx.azimuths.max(1);
        (0..n)
            .filter_map(|k| {
                let az = std::f64::consts::TAU * k as f64 / n as f64;
                radial_trap_minimum(params, assembly, ctx.wire, az, ctx.axial, range).ok()
            })
            .min_by(|a, b| a.sample.u.total_cmp(&b.sample.u))
            .map(|m| m.radius)
            .ok_or_else(|| Error::NotFound("no radial minimum at any azimuth".into()))
    }
}

impl Named for SeparationObservable {
    fn name(&self) -> &'static str {
        "separation"
    }
}
impl Observable for SeparationObservable {
    fn unit(&self) -> &'static str {
        "m"
    }
    fn observe(&self, params: &DressedParams, assembly: &WireAssembly, ctx: &SweepContext) -> Result<f64> {
        Ok(geometric_separation(params, assembly, ctx.barrier.wires)?.0)
    }
}

pub fn observables() -> Registry<dyn Observable> {
    let mut r: Registry<dyn Observable> = Registry::new("observable");
    r.register(Box::new(BarrierObservable))
        .register(Box::new(TouchingObservable))
        .register(Box::new(MinRadiusObservable))
        .register(Box::new(SeparationObservable));
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    /// NaN when the observation failed.
    pub observable: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: Parameter,
    pub parameter_unit: &'static str,
    pub observable: &'static str,
    pub observable_unit: &'static str,
    /// Ascending parameter order.
    pub rows: Vec<SweepRow>,
}

/// Parameter values of a sweep: `steps` evenly spaced points between the
/// range ends, in ascending order. A zero-length range or `steps == 1` gives one value.
pub fn sweep_values(range: (f64, f64), steps: usize) -> Result<Vec<f64>> {
    let (a, b) = range;
    if !(a.is_finite() && b.is_finite()) || steps == 0 {
        return Err(Error::InvalidArgument(format!("invalid sweep range [{a}, {b}] with {steps} steps")));
    }
    let (lo, hi) = (a.min(b), a.max(b));
    if steps == 1 || lo == hi {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect())
}

/// Evaluates `observable` at each parameter value; rows run in parallel and
/// failures are recorded per row.
pub fn parameter_sweep(
    params: &DressedParams,
    assembly: &WireAssembly,
    param: Parameter,
    range: (f64, f64),
    steps: usize,
    observable: &dyn Observable,
    ctx: &SweepContext,
) -> Result<SweepTable> {
    let values = sweep_values(range, steps)?;
    let rows = values
        .par_iter()
        .map(
            |&v| match param.apply(params, assembly, v).and_then(|(p, a)| observable.observe(&p, &a, ctx)) {
                Ok(o) => SweepRow {
                    value: v,
                    observable: o,
                    error: None,
                },
                Err(e) => SweepRow {
                    value: v,
                    observable: f64::NAN,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    Ok(SweepTable {
        parameter: param,
        parameter_unit: param.unit(),
        observable: observable.name(),
        observable_unit: observable.unit(),
        rows,
    })
}
