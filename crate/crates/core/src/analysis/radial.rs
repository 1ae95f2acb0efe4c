//! Minimum of the dressed potential along radial rays around a wire, and the
//! cloud surface assembled from those minima.

use rayon::prelude::*;
use serde::Serialize;

use super::optimize::golden_minimize;
use crate::dressed::{dressed_potential, potential_value, DressedParams, PotentialSample};
use crate::error::{Error, Result};
use crate::magnetostatics::{WireAssembly, WireGeometry};
use crate::Vec3;

/// Number of uniform samples used to bracket the minimum before golden-section refinement.
const BRACKET_SAMPLES: usize = 96;

/// Local frame of a wire at a given axial position.
#[derive(Debug, Clone, Copy)]
pub struct WireFrame {
    pub origin: Vec3,
    pub axis: Vec3,
    /// Azimuth zero direction.
    pub e1: Vec3,
    /// `axis x e1`.
    pub e2: Vec3,
}

impl WireFrame {
    /// Frame at arc length `axial` along the wire. For an infinite line the
    /// arc length is measured from the line's anchor point.
    ///
    /// `e1` is the projection of the coordinate axis least aligned with the wire.
    pub fn at(geometry: &WireGeometry, axial: f64) -> Self {
        let (origin, axis) = match geometry {
            WireGeometry::InfiniteLine { point, direction } => (point + direction * axial, *direction),
            WireGeometry::Polyline { vertices } => {
                let mut remaining = axial.max(0.0);
                let mut out = None;
                for w in vertices.windows(2) {
                    let seg = w[1] - w[0];
                    let len = seg.norm();
                    if remaining <= len {
                        out = Some((w[0] + seg * (remaining / len), seg / len));
                        break;
                    }
                    remaining -= len;
                }
                out.unwrap_or_else(|| {
                    let n = vertices.len();
                    let seg = vertices[n - 1] - vertices[n - 2];
                    (vertices[n - 1], seg / seg.norm())
                })
            }
        };
        let k = (0..3).min_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap();
        let reference = Vec3::ith(k, 1.0);
        let e1 = (reference - axis * reference.dot(&axis)).normalize();
        let e2 = axis.cross(&e1);
        Self { origin, axis, e1, e2 }
    }

    pub fn point(&self, radius: f64, azimuth: f64) -> Vec3 {
        self.origin + (self.e1 * azimuth.cos() + self.e2 * azimuth.sin()) * radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialMinimum {
    pub radius: f64,
    pub position: Vec3,
    pub sample: PotentialSample,
}

/// Minimizes U along the ray from the wire axis at (`azimuth`, `axial`) over
/// radii in `search_range`.
pub fn radial_trap_minimum(
    params: &DressedParams,
    assembly: &WireAssembly,
    wire_index: usize,
    azimuth: f64,
    axial: f64,
    search_range: (f64, f64),
) -> Result<RadialMinimum> {
    let wire = assembly
        .wires()
        .get(wire_index)
        .ok_or_else(|| Error::InvalidArgument(format!("no wire with index {wire_index}")))?;
    let (lo, hi) = search_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("invalid radial search range [{lo}, {hi}]")));
    }
    if lo < assembly.eps_axis() {
        return Err(Error::InvalidArgument("radial search range reaches into the wire fence".into()));
    }
    let frame = WireFrame::at(&wire.geometry, axial);
    let energy = |r: f64| potential_value(params, assembly, &frame.point(r, azimuth));

    let step = (hi - lo) / (BRACKET_SAMPLES - 1) as f64;
    let samples: Vec<f64> = (0..BRACKET_SAMPLES)
        .map(|i| energy(lo + step * i as f64).unwrap_or(f64::INFINITY))
        .collect();
    let best = (0..BRACKET_SAMPLES).min_by(|&a, &b| samples[a].total_cmp(&samples[b])).unwrap();
    if !samples[best].is_finite() {
        return Err(Error::NotFound("potential undefined along the whole ray".into()));
    }
    if best == 0 || best == BRACKET_SAMPLES - 1 {
        return Err(Error::NotFound(format!(
            "minimum at the edge of the radial range ({} m)",
            lo + step * best as f64
        )));
    }
    let (a, b) = (lo + step * (best - 1) as f64, lo + step * (best + 1) as f64);
    let (radius, _) = golden_minimize(energy, a, b, 1e-12 * hi);
    let position = frame.point(radius, azimuth);
    let sample = dressed_potential(params, assembly, &position)?;
    Ok(RadialMinimum { radius, position, sample })
}

/// Radial minima on an (axial x azimuth) grid; axial index varies slowest.
#[derive(Debug, Clone, Serialize)]
pub struct MinimumSurface {
    pub wire_index: usize,
    pub azimuths: Vec<f64>,
    pub axials: Vec<f64>,
    pub cells: Vec<Option<RadialMinimum>>,
}

impl MinimumSurface {
    pub fn cell(&self, axial_index: usize, azimuth_index: usize) -> Option<&RadialMinimum> {
        self.cells[axial_index * self.azimuths.len() + azimuth_index].as_ref()
    }

    pub fn found(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn not_found(&self) -> usize {
        self.cells.len() - self.found()
    }

    /// Lowest-energy cell.
    pub fn lowest(&self) -> Option<&RadialMinimum> {
        self.cells.iter().flatten().min_by(|a, b| a.sample.u.total_cmp(&b.sample.u))
    }

    /// Triangulates neighbouring found cells (azimuth wraps around).
    pub fn to_mesh(&self) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let na = self.azimuths.len();
        let mut index = vec![usize::MAX; self.cells.len()];
        let mut vertices = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if let Some(c) = c {
                index[i] = vertices.len();
                vertices.push(c.position);
            }
        }
        let mut triangles = Vec::new();
        for ax in 0..self.axials.len().saturating_sub(1) {
            for az in 0..na {
                let az1 = (az + 1) % na;
                let q = [
                    index[ax * na + az],
                    index[ax * na + az1],
                    index[(ax + 1) * na + az1],
                    index[(ax + 1) * na + az],
                ];
                if q.iter().all(|&v| v != usize::MAX) {
                    triangles.push([q[0], q[1], q[2]]);
                    triangles.push([q[0], q[2], q[3]]);
                }
            }
        }
        (vertices, triangles)
    }
}

/// Applies [`radial_trap_minimum`] over `azimuth_samples` equally spaced
/// azimuths and the given axial positions.
pub fn minimum_surface(
    params: &DressedParams,
    assembly: &WireAssembly,
    wire_index: usize,
    azimuth_samples: usize,
    axials: &[f64],
    search_range: (f64, f64),
) -> Result<MinimumSurface> {
    if wire_index >= assembly.wires().len() {
        return Err(Error::InvalidArgument(format!("no wire with index {wire_index}")));
    }
    if azimuth_samples == 0 || axials.is_empty() {
        return Err(Error::InvalidArgument(
            "minimum surface needs at least one azimuth and one axial sample".into(),
        ));
    }
    let azimuths: Vec<f64> = (0..azimuth_samples)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / azimuth_samples as f64)
        .collect();
    let cells = (0..axials.len() * azimuth_samples)
        .into_par_iter()
        .map(|k| {
            let (ax, az) = (k / azimuth_samples, k % azimuth_samples);
            radial_trap_minimum(params, assembly, wire_index, azimuths[az], axials[ax], search_range).ok()
        })
        .collect();
    Ok(MinimumSurface {
        wire_index,
        azimuths,
        axials: axials.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{resonance_field, AtomSpecies, RfDrive, CONSTANTS};
    use std::f64::consts::PI;

    fn params() -> DressedParams {
        DressedParams::new(AtomSpecies::rb87_like(), RfDrive::new(0.8e6).unwrap()).unwrap()
    }

    fn rho_res(i: f64) -> f64 {
        let p = params();
        CONSTANTS.mu0 * i / (2.0 * PI * resonance_field(&p.species, &p.drive).unwrap())
    }

    #[test]
    fn single_wire_minimum_at_resonance_radius() {
        let p = params();
        for i_rf in [0.05, 0.0] {
            let a = WireAssembly::single(0.0925, i_rf, Vec3::zeros(), p.drive).unwrap();
            let mut radii = Vec::new();
            for az in [0.0, 1.1, 2.5, 4.4] {
                let m = radial_trap_minimum(&p, &a, 0, az, 3e-4, (1e-5, 6e-4)).unwrap();
                assert!((m.radius - rho_res(0.0925)).abs() < 1e-7, "{} vs {}", m.radius, rho_res(0.0925));
                assert!(m.sample.u.abs() < 1e-3 * CONSTANTS.hbar * p.drive.omega());
                radii.push(m.radius);
            }
            assert!(radii.iter().all(|r| (r - radii[0]).abs() < 1e-12));
        }
    }

    #[test]
    fn minimum_outside_range_not_found() {
        let p = params();
        let a = WireAssembly::single(0.0925, 0.05, Vec3::zeros(), p.drive).unwrap();
        assert!(matches!(
            radial_trap_minimum(&p, &a, 0, 0.0, 0.0, (2e-4, 5e-4)),
            Err(Error::NotFound(_))
        ));
        assert!(radial_trap_minimum(&p, &a, 0, 0.0, 0.0, (1e-10, 5e-4)).is_err());
        assert!(radial_trap_minimum(&p, &a, 3, 0.0, 0.0, (1e-5, 5e-4)).is_err());
    }

    #[test]
    fn frame_is_orthonormal() {
        let g = WireGeometry::line(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.2, -0.4, 0.9)).unwrap();
        let f = WireFrame::at(&g, 0.5);
        assert!((f.e1.norm() - 1.0).abs() < 1e-14 && (f.e2.norm() - 1.0).abs() < 1e-14);
        assert!(f.e1.dot(&f.axis).abs() < 1e-14 && f.e2.dot(&f.axis).abs() < 1e-14);
        let x = WireFrame::at(&WireGeometry::line(Vec3::zeros(), Vec3::x()).unwrap(), 0.0);
        assert_eq!((x.e1, x.e2), (Vec3::y(), Vec3::z()));
    }

    #[test]
    fn isolated_wire_surface_is_cylinder() {
        let p = params();
        let a = WireAssembly::single(0.0925, 0.05, Vec3::zeros(), p.drive).unwrap();
        let s = minimum_surface(&p, &a, 0, 12, &[-1e-3, 0.0, 1e-3], (1e-5, 6e-4)).unwrap();
        assert_eq!(s.not_found(), 0);
        for c in s.cells.iter().flatten() {
            assert!((c.radius - rho_res(0.0925)).abs() < 1e-7);
        }
        let (v, t) = s.to_mesh();
        assert_eq!(v.len(), 36);
        assert_eq!(t.len(), 2 * 2 * 12);
    }

    #[test]
    fn strong_bias_pushes_resonance_out_of_range() {
        let p = params();
        let b_res = resonance_field(&p.species, &p.drive).unwrap();
        let a = WireAssembly::crossed(0.0925, 0.05, 3e-4, Vec3::new(3.0, 3.0, 0.0) * b_res, p.drive).unwrap();
        let s = minimum_surface(&p, &a, 0, 8, &[-5e-4, 0.0, 5e-4], (1e-5, 1.5e-4)).unwrap();
        assert!(s.not_found() > s.found());
    }
}
