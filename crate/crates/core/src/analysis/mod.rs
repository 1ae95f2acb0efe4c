//! Trap analysis: grids, isosurfaces, minimum surfaces, wells, saddles,
//! barriers, critical parameters and sweeps.

pub mod barrier;
pub mod critical;
pub mod grid;
pub mod isosurface;
pub mod optimize;
pub mod params;
pub mod radial;
pub mod saddle;
pub mod sweep;
