//! Cold atoms in the RF-dressed potential of two crossed current-carrying wires.
//!
//! The crate evaluates the static and quasi-static RF magnetic fields of wire
//! assemblies, builds the adiabatic dressed potential
//! `U = m_tilde * hbar * sqrt(delta^2 + Omega^2)` with its analytic gradient,
//! and analyses the resulting traps: minimum surfaces around each wire,
//! isosurfaces, the saddle between two wire traps, the currents at which that
//! barrier closes, and classical transport of atoms across it.
//!
//! Interchangeable algorithms (scalar sources for grids, barrier estimators,
//! sweep observables, scan parameters) sit behind traits and are looked up by
//! name in [`registry::Registry`] instances, so the CLI and configuration files
//! select them at runtime.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dressed;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod magnetostatics;
pub mod model;
pub mod registry;
pub mod surface;

pub use error::{Error, Result};

/// Position [m] or magnetic field [T].
pub type Vec3 = nalgebra::Vector3<f64>;

/// Jacobian of a vector field, `J[(i, j)] = d v_i / d x_j`.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Runs `f` on a dedicated rayon pool with `workers` threads.
///
/// All parallel routines in this crate collect results by index, so the
/// worker count never changes their output.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("failed to build worker pool");
    pool.install(f)
}
