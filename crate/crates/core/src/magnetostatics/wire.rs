//! Biot-Savart kernels for infinite lines and finite straight segments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CONSTANTS;
use crate::{Mat3, Vec3};

/// Default exclusion radius around every wire [m].
pub const DEFAULT_EPS_AXIS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireGeometry {
    InfiniteLine { point: Vec3, direction: Vec3 },
    Polyline { vertices: Vec<Vec3> },
}

impl WireGeometry {
    /// Infinite line; `direction` is normalised here.
    pub fn line(point: Vec3, direction: Vec3) -> Result<Self> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidGeometry("line direction must be nonzero".into()));
        }
        let g = WireGeometry::InfiniteLine {
            point,
            direction: direction / n,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn polyline(vertices: Vec<Vec3>) -> Result<Self> {
        let g = WireGeometry::Polyline { vertices };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WireGeometry::InfiniteLine { point, direction } => {
                if !finite(point) || !finite(direction) {
                    return Err(Error::InvalidGeometry("non-finite line parameters".into()));
                }
                if (direction.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidGeometry(format!(
                        "line direction must have unit norm, got {}",
                        direction.norm()
                    )));
                }
            }
            WireGeometry::Polyline { vertices } => {
                if vertices.len() < 2 {
                    return Err(Error::InvalidGeometry("polyline needs at least two vertices".into()));
                }
                if vertices.iter().any(|v| !finite(v)) {
                    return Err(Error::InvalidGeometry("non-finite polyline vertex".into()));
                }
                if vertices.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidGeometry("repeated consecutive polyline vertex".into()));
                }
            }
        }
        Ok(())
    }

    /// Shortest distance from `p` to the conductor.
    pub fn distance(&self, p: &Vec3) -> f64 {
        match self {
            WireGeometry::InfiniteLine { point, direction } => perpendicular(p - point, direction).norm(),
            WireGeometry::Polyline { vertices } => vertices
                .windows(2)
                .map(|w| segment_distance(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Field per ampere at `p`, or `None` inside the exclusion radius.
    pub fn field_per_amp(&self, p: &Vec3, eps_axis: f64) -> Option<Vec3> {
        match self {
            WireGeometry::InfiniteLine { point, direction } => line_field(point, direction, p, eps_axis, false).map(|(b, _)| b),
            WireGeometry::Polyline { vertices } => {
                let mut b = Vec3::zeros();
                for w in vertices.windows(2) {
                    b += segment_field(&w[0], &w[1], p, eps_axis, false)?.0;
                }
                Some(b)
            }
        }
    }

    /// Field per ampere and its Jacobian at `p`.
    pub fn field_and_jacobian_per_amp(&self, p: &Vec3, eps_axis: f64) -> Option<(Vec3, Mat3)> {
        match self {
            WireGeometry::InfiniteLine { point, direction } => line_field(point, direction, p, eps_axis, true),
            WireGeometry::Polyline { vertices } => {
                let mut b = Vec3::zeros();
                let mut j = Mat3::zeros();
                for w in vertices.windows(2) {
                    let (bs, js) = segment_field(&w[0], &w[1], p, eps_axis, true)?;
                    b += bs;
                    j += js;
                }
                Some((b, j))
            }
        }
    }

    /// Reverses the direction of current flow.
    pub fn reversed(&self) -> Self {
        match self {
            WireGeometry::InfiniteLine { point, direction } => WireGeometry::InfiniteLine {
                point: *point,
                direction: -direction,
            },
            WireGeometry::Polyline { vertices } => WireGeometry::Polyline {
                vertices: vertices.iter().rev().copied().collect(),
            },
        }
    }
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

fn perpendicular(r: Vec3, d: &Vec3) -> Vec3 {
    r - d * r.dot(d)
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Azimuthal field of an infinite line, `(mu0 / 2 pi rho) (d x rho_hat)` per ampere.
fn line_field(point: &Vec3, d: &Vec3, p: &Vec3, eps: f64, with_jacobian: bool) -> Option<(Vec3, Mat3)> {
    let rp = perpendicular(p - point, d);
    let rho2 = rp.norm_squared();
    if rho2.sqrt() < eps {
        return None;
    }
    let k = CONSTANTS.mu0_over_2pi();
    let u = d.cross(&rp);
    let b = u * (k / rho2);
    if !with_jacobian {
        return Some((b, Mat3::zeros()));
    }
    let mut j = Mat3::zeros();
    for c in 0..3 {
        let e = Vec3::ith(c, 1.0);
        let col = d.cross(&e) * (k / rho2) - u * (2.0 * k * rp[c] / (rho2 * rho2));
        j.set_column(c, &col);
    }
    Some((b, j))
}

/// Exact field of the straight segment a -> b, per ampere.
fn segment_field(a: &Vec3, b: &Vec3, p: &Vec3, eps: f64, with_jacobian: bool) -> Option<(Vec3, Mat3)> {
    if segment_distance(p, a, b) < eps {
        return None;
    }
    let ab = b - a;
    let t = ab / ab.norm();
    let ra = p - a;
    let rb = p - b;
    let (la, lb) = (ra.norm(), rb.norm());
    let rp = perpendicular(ra, &t);
    let rho2 = rp.norm_squared();
    if rho2 == 0.0 {
        // on the line extension, outside the segment: no field
        return Some((Vec3::zeros(), Mat3::zeros()));
    }
    let c = CONSTANTS.mu0 / (4.0 * PI);
    let cos_a = t.dot(&ra) / la;
    let cos_b = t.dot(&rb) / lb;
    let span = cos_a - cos_b;
    let u = t.cross(&ra);
    let field = u * (c * span / rho2);
    if !with_jacobian {
        return Some((field, Mat3::zeros()));
    }
    let mut j = Mat3::zeros();
    for k in 0..3 {
        let e = Vec3::ith(k, 1.0);
        let dcos_a = t[k] / la - t.dot(&ra) * ra[k] / (la * la * la);
        let dcos_b = t[k] / lb - t.dot(&rb) * rb[k] / (lb * lb * lb);
        let col = t.cross(&e) * (c * span / rho2) - u * (2.0 * c * span * rp[k] / (rho2 * rho2)) + u * (c * (dcos_a - dcos_b) / rho2);
        j.set_column(k, &col);
    }
    Some((field, j))
}

/// Field of an infinite straight wire carrying `current` [A] at `p`.
pub fn field_infinite_wire(point: &Vec3, direction: &Vec3, current: f64, p: &Vec3, eps_axis: f64) -> Result<Vec3> {
    let g = WireGeometry::line(*point, *direction)?;
    g.field_per_amp(p, eps_axis)
        .map(|b| b * current)
        .ok_or(Error::Singularity { wire: 0, point: *p })
}

/// Field of a polyline carrying `current` [A] at `p`: sum of exact segment contributions.
pub fn field_polyline(vertices: &[Vec3], current: f64, p: &Vec3, eps_axis: f64) -> Result<Vec3> {
    let g = WireGeometry::polyline(vertices.to_vec())?;
    g.field_per_amp(p, eps_axis)
        .map(|b| b * current)
        .ok_or(Error::Singularity { wire: 0, point: *p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(g: &WireGeometry, p: &Vec3, h: f64) -> Mat3 {
        let mut j = Mat3::zeros();
        for k in 0..3 {
            let e = Vec3::ith(k, h);
            let col = (g.field_per_amp(&(p + e), 0.0).unwrap() - g.field_per_amp(&(p - e), 0.0).unwrap()) / (2.0 * h);
            j.set_column(k, &col);
        }
        j
    }

    #[test]
    fn infinite_wire_right_hand_rule() {
        let b = field_infinite_wire(&Vec3::zeros(), &Vec3::x(), 1.0, &Vec3::new(0.0, 0.01, 0.0), DEFAULT_EPS_AXIS).unwrap();
        let expect = CONSTANTS.mu0 / (2.0 * PI * 0.01);
        assert!(b.x.abs() < 1e-30 && b.y.abs() < 1e-30);
        assert!((b.z - expect).abs() < 1e-12 * expect);
        assert!((b.z - 2e-5).abs() < 1e-13);
        let neg = field_infinite_wire(&Vec3::zeros(), &Vec3::x(), -1.0, &Vec3::new(0.0, 0.01, 0.0), DEFAULT_EPS_AXIS).unwrap();
        assert_eq!(neg, -b);
    }

    #[test]
    fn on_axis_is_singular() {
        let r = field_infinite_wire(&Vec3::zeros(), &Vec3::x(), 1.0, &Vec3::new(3.0, 0.0, 0.0), DEFAULT_EPS_AXIS);
        assert!(matches!(r, Err(Error::Singularity { .. })));
        let r = field_polyline(&[Vec3::zeros(), Vec3::x()], 1.0, &Vec3::new(0.5, 1e-10, 0.0), DEFAULT_EPS_AXIS);
        assert!(matches!(r, Err(Error::Singularity { .. })));
    }

    #[test]
    fn long_segment_matches_infinite_line() {
        let p = Vec3::new(0.0, 0.01, 0.0);
        let seg = field_polyline(&[Vec3::new(-1e3, 0.0, 0.0), Vec3::new(1e3, 0.0, 0.0)], 1.0, &p, DEFAULT_EPS_AXIS).unwrap();
        let inf = field_infinite_wire(&Vec3::zeros(), &Vec3::x(), 1.0, &p, DEFAULT_EPS_AXIS).unwrap();
        assert!((seg - inf).norm() / inf.norm() < 1e-8);
    }

    /// Adaptive Simpson quadrature of dB = mu0 I / 4 pi * dl x r / |r|^3.
    fn quadrature_segment(a: &Vec3, b: &Vec3, p: &Vec3) -> Vec3 {
        let dl = b - a;
        let integrand = |s: f64| {
            let r = p - (a + dl * s);
            dl.cross(&r) / r.norm().powi(3)
        };
        #[allow(clippy::too_many_arguments)]
        fn simpson(f: &dyn Fn(f64) -> Vec3, lo: f64, hi: f64, fa: Vec3, fm: Vec3, fb: Vec3, whole: Vec3, tol: f64, depth: u32) -> Vec3 {
            let m = 0.5 * (lo + hi);
            let (lm, rm) = (0.5 * (lo + m), 0.5 * (m + hi));
            let (flm, frm) = (f(lm), f(rm));
            let left = (fa + flm * 4.0 + fm) * ((m - lo) / 6.0);
            let right = (fm + frm * 4.0 + fb) * ((hi - m) / 6.0);
            let diff = left + right - whole;
            if depth == 0 || diff.norm() <= 15.0 * tol {
                left + right + diff / 15.0
            } else {
                simpson(f, lo, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, hi, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fm, fb) = (integrand(0.0), integrand(0.5), integrand(1.0));
        let whole = (fa + fm * 4.0 + fb) / 6.0;
        simpson(&integrand, 0.0, 1.0, fa, fm, fb, whole, 1e-12 * whole.norm().max(1.0), 50) * (CONSTANTS.mu0 / (4.0 * PI))
    }

    #[test]
    fn segment_matches_quadrature() {
        let a = Vec3::new(-0.3, 0.1, 0.0);
        let b = Vec3::new(0.4, -0.2, 0.25);
        for p in [Vec3::new(0.1, 0.3, -0.2), Vec3::new(1.0, 1.0, 1.0), Vec3::new(-0.5, 0.05, 0.1)] {
            let exact = field_polyline(&[a, b], 1.0, &p, DEFAULT_EPS_AXIS).unwrap();
            let quad = quadrature_segment(&a, &b, &p);
            assert!((exact - quad).norm() / exact.norm() < 1e-8, "{exact:?} vs {quad:?}");
        }
    }

    #[test]
    fn square_loop_center() {
        // B = 2 sqrt(2) mu0 I / (pi a) at the centre of a square of side a
        let a = 0.02;
        let h = a / 2.0;
        let verts = vec![
            Vec3::new(-h, -h, 0.0),
            Vec3::new(h, -h, 0.0),
            Vec3::new(h, h, 0.0),
            Vec3::new(-h, h, 0.0),
            Vec3::new(-h, -h, 0.0),
        ];
        let b = field_polyline(&verts, 2.0, &Vec3::zeros(), DEFAULT_EPS_AXIS).unwrap();
        let expect = 2.0 * 2f64.sqrt() * CONSTANTS.mu0 * 2.0 / (PI * a);
        assert!((b.z - expect).abs() / expect < 1e-12);
        assert!(b.x.abs() < 1e-18 && b.y.abs() < 1e-18);
        let rev: Vec<Vec3> = verts.iter().rev().copied().collect();
        let br = field_polyline(&rev, 2.0, &Vec3::zeros(), DEFAULT_EPS_AXIS).unwrap();
        assert!((br + b).norm() < 1e-15 * b.norm());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let line = WireGeometry::line(Vec3::new(0.0, 0.0, -1e-4), Vec3::new(0.3, 1.0, 0.2)).unwrap();
        let poly = WireGeometry::polyline(vec![
            Vec3::new(-1e-3, 0.0, 0.0),
            Vec3::new(2e-4, 1e-4, 0.0),
            Vec3::new(1e-3, 5e-4, 3e-4),
        ])
        .unwrap();
        for g in [&line, &poly] {
            for p in [Vec3::new(1e-4, 2e-4, 3e-5), Vec3::new(-3e-4, 1e-4, 2e-4)] {
                let (_, j) = g.field_and_jacobian_per_amp(&p, 0.0).unwrap();
                let fd = fd_jacobian(g, &p, 1e-9);
                assert!((j - fd).norm() / j.norm() < 1e-6, "{j} vs {fd}");
            }
        }
    }
}
