//! Bisection for the parameter value at which the barrier between two wire
//! traps closes.

use rayon::prelude::*;
use serde::Serialize;

use super::barrier::{BarrierEstimate, BarrierEstimator, BarrierOptions};
use super::params::Parameter;
use crate::dressed::DressedParams;
use crate::error::{Error, Result};
use crate::magnetostatics::WireAssembly;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalOptions {
    pub bracket: (f64, f64),
    /// Stop once the bracket is narrower than this.
    pub tol_param: f64,
    /// Interior points of the coarse pre-scan (0 disables it).
    pub prescan: usize,
    pub max_iter: usize,
    pub barrier: BarrierOptions,
}

impl CriticalOptions {
    pub fn new(bracket: (f64, f64), tol_param: f64) -> Self {
        Self {
            bracket,
            tol_param,
            prescan: 6,
            max_iter: 200,
            barrier: BarrierOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSearchResult {
    pub parameter: Parameter,
    pub unit: &'static str,
    pub mode: &'static str,
    /// First parameter value (on the touching side) within `tolerance_achieved` of the closing point.
    pub critical_value: f64,
    pub bracket: (f64, f64),
    /// Final (open side, touching side) pair.
    pub final_bracket: (f64, f64),
    pub iterations: usize,
    pub barrier_at_solution: f64,
    pub barrier_unit: &'static str,
    pub touch_tolerance: f64,
    /// Width of the final bracket.
    pub tolerance_achieved: f64,
    /// Midpoints of every open/touching transition seen in the pre-scan.
    pub crossings: Vec<f64>,
    pub warnings: Vec<String>,
    pub estimate: BarrierEstimate,
}

/// Bisects `param` over `opts.bracket` on the estimator's touching flag.
pub fn critical_parameter(
    params: &DressedParams,
    assembly: &WireAssembly,
    param: Parameter,
    estimator: &dyn BarrierEstimator,
    opts: &CriticalOptions,
) -> Result<CriticalSearchResult> {
    let (lo, hi) = opts.bracket;
    if !(lo.is_finite() && hi.is_finite() && lo != hi) {
        return Err(Error::InvalidArgument(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(opts.tol_param > 0.0) {
        return Err(Error::InvalidArgument("tol_param must be positive".into()));
    }
    let eval = |v: f64| -> Result<BarrierEstimate> {
        let (p, a) = param.apply(params, assembly, v)?;
        estimator.estimate(&p, &a, &opts.barrier)
    };

    let n = opts.prescan + 2;
    let points: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let scan: Vec<BarrierEstimate> = points.par_iter().map(|&v| eval(v)).collect::<Result<_>>()?;
    if scan[0].touching == scan[n - 1].touching {
        return Err(Error::NoBracket { lo, hi });
    }
    let changes: Vec<usize> = (0..n - 1).filter(|&k| scan[k].touching != scan[k + 1].touching).collect();
    let crossings: Vec<f64> = changes.iter().map(|&k| 0.5 * (points[k] + points[k + 1])).collect();
    let mut warnings = Vec::new();
    if changes.len() > 1 {
        warnings.push(format!(
            "ambiguous bracket: touching flag changes {} times on the pre-scan (near {}); bisecting the first transition",
            changes.len(),
            crossings.iter().map(|c| format!("{c:.6e}")).collect::<Vec<_>>().join(", ")
        ));
    }
    let k = changes[0];
    let (mut open, mut closed, mut closed_est) = if scan[k].touching {
        (points[k + 1], points[k], scan[k].clone())
    } else {
        (points[k], points[k + 1], scan[k + 1].clone())
    };

    let mut iterations = 0;
    while iterations < opts.max_iter {
        let width = (closed - open).abs();
        if width <= opts.tol_param && closed_est.value.abs() <= closed_est.tolerance {
            break;
        }
        if width <= f64::EPSILON * closed.abs().max(open.abs()) {
            break;
        }
        iterations += 1;
        let mid = 0.5 * (open + closed);
        let est = eval(mid)?;
        if est.touching {
            closed = mid;
            closed_est = est;
        } else {
            open = mid;
        }
    }
    if closed_est.value.abs() > closed_est.tolerance {
        warnings.push(format!(
            "barrier at the solution ({:.3e} {}) exceeds the touch tolerance ({:.3e})",
            closed_est.value, closed_est.unit, closed_est.tolerance
        ));
    }
    if let Some(r) = &closed_est.report {
        warnings.extend(r.warnings.iter().cloned());
    }
    Ok(CriticalSearchResult {
        parameter: param,
        unit: param.unit(),
        mode: estimator.name(),
        critical_value: closed,
        bracket: (lo, hi),
        final_bracket: (open, closed),
        iterations,
        barrier_at_solution: closed_est.value,
        barrier_unit: closed_est.unit,
        touch_tolerance: closed_est.tolerance,
        tolerance_achieved: (closed - open).abs(),
        crossings,
        warnings,
        estimate: closed_est,
    })
}
