use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WireAssembly;
use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Default |B_DC| below which a point counts as a field zero [T].
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-8;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|k| !(max[k] > min[k])) {
            return Err(Error::InvalidGrid("box max must exceed min on every axis".into()));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldZeros {
    /// Refined zero positions in lexicographic order.
    pub zeros: Vec<Vec3>,
    pub threshold: f64,
    pub domain: Aabb,
}

/// Scans `domain` on a regular grid for local minima of |B_DC| and refines
/// each candidate with damped Gauss-Newton steps on B_DC = 0.
pub fn find_field_zeros(assembly: &WireAssembly, domain: Aabb, resolution: [usize; 3], threshold: f64) -> Result<FieldZeros> {
    if resolution.iter().any(|&n| n < 8) {
        return Err(Error::InvalidGrid("zero search needs at least 8 nodes per axis".into()));
    }
    let [nx, ny, nz] = resolution;
    let step = Vec3::new(
        (domain.max.x - domain.min.x) / (nx - 1) as f64,
        (domain.max.y - domain.min.y) / (ny - 1) as f64,
        (domain.max.z - domain.min.z) / (nz - 1) as f64,
    );
    let diag = step.norm();
    let node = |i: usize, j: usize, k: usize| domain.min + Vec3::new(i as f64 * step.x, j as f64 * step.y, k as f64 * step.z);

    let values: Vec<f64> = (0..nx * ny * nz)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx % nx, (idx / nx) % ny, idx / (nx * ny));
            assembly.b_dc(&node(i, j, k)).map(|b| b.norm()).unwrap_or(f64::NAN)
        })
        .collect();

    let candidates: Vec<usize> = (0..values.len())
        .filter(|&idx| {
            let v = values[idx];
            if !v.is_finite() {
                return false;
            }
            let (i, j, k) = ((idx % nx) as isize, ((idx / nx) % ny) as isize, (idx / (nx * ny)) as isize);
            for dk in -1..=1 {
                for dj in -1..=1 {
                    for di in -1..=1 {
                        let (a, b, c) = (i + di, j + dj, k + dk);
                        if a < 0 || b < 0 || c < 0 || a >= nx as isize || b >= ny as isize || c >= nz as isize {
                            continue;
                        }
                        let w = values[a as usize + nx * (b as usize + ny * c as usize)];
                        if w.is_finite() && w < v {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect();

    let mut refined: Vec<Vec3> = candidates
        .par_iter()
        .filter_map(|&idx| {
            let start = node(idx % nx, (idx / nx) % ny, idx / (nx * ny));
            refine_zero(assembly, &domain, start, threshold)
        })
        .collect();

    refined.sort_by(lexicographic);
    let mut zeros: Vec<Vec3> = Vec::new();
    for p in refined {
        if zeros.iter().all(|q| (q - p).norm() > diag) {
            zeros.push(p);
        }
    }
    Ok(FieldZeros { zeros, threshold, domain })
}

fn lexicographic(a: &Vec3, b: &Vec3) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

fn refine_zero(assembly: &WireAssembly, domain: &Aabb, start: Vec3, threshold: f64) -> Option<Vec3> {
    let mut p = start;
    let mut jet = assembly.jet(&p).ok()?;
    let mut cost = jet.b_dc.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..100 {
        if cost.sqrt() < threshold * 1e-3 {
            break;
        }
        let j = jet.j_dc;
        let jt = j.transpose();
        let normal = jt * j;
        let scale = normal.trace() / 3.0;
        let rhs = -(jt * jet.b_dc);
        let mut improved = false;
        for _ in 0..30 {
            let damped = normal + Mat3::identity() * (lambda * scale);
            let Some(inv) = damped.try_inverse() else {
                lambda *= 10.0;
                continue;
            };
            let trial = domain.clamp(&(p + inv * rhs));
            match assembly.jet(&trial) {
                Ok(t) if t.b_dc.norm_squared() < cost => {
                    p = trial;
                    jet = t;
                    cost = t.b_dc.norm_squared();
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    (cost.sqrt() < threshold && domain.contains(&p)).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RfDrive, CONSTANTS};
    use std::f64::consts::PI;

    fn drive() -> RfDrive {
        RfDrive::new(0.8e6).unwrap()
    }

    fn cube(h: f64) -> Aabb {
        Aabb::new(Vec3::new(-h, -h, -h), Vec3::new(h, h, h)).unwrap()
    }

    #[test]
    fn parallel_wires_zero_on_midline() {
        let a = WireAssembly::parallel(0.1, 0.0, 2e-4, Vec3::zeros(), drive()).unwrap();
        let z = find_field_zeros(&a, cube(3.1e-4), [12, 13, 13], DEFAULT_ZERO_THRESHOLD).unwrap();
        assert!(!z.zeros.is_empty());
        for p in &z.zeros {
            assert!(p.y.abs() < 1e-9 && p.z.abs() < 1e-9, "{p:?}");
            assert!(a.b_dc(p).unwrap().norm() < DEFAULT_ZERO_THRESHOLD);
        }
        let mut sorted = z.zeros.clone();
        sorted.sort_by(lexicographic);
        assert_eq!(sorted, z.zeros);
    }

    #[test]
    fn strong_axial_bias_removes_zeros() {
        let a = WireAssembly::parallel(0.1, 0.0, 2e-4, Vec3::new(5e-5, 0.0, 0.0), drive()).unwrap();
        let domain = cube(3.1e-4);
        let z = find_field_zeros(&a, domain, [12, 13, 13], DEFAULT_ZERO_THRESHOLD).unwrap();
        assert!(z.zeros.is_empty());
        // dense scan oracle: |B| never approaches the threshold
        let mut min = f64::INFINITY;
        let n = 60;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = |m: usize| -3.1e-4 + 6.2e-4 * m as f64 / (n - 1) as f64;
                    if let Ok(b) = a.b_dc(&Vec3::new(t(i), t(j), t(k))) {
                        min = min.min(b.norm());
                    }
                }
            }
        }
        assert!(min > DEFAULT_ZERO_THRESHOLD);
        assert!(min >= 5e-5 * (1.0 - 1e-12));
    }

    #[test]
    fn side_guide_zero_line() {
        let (i, bb) = (0.05, 5e-5);
        let a = WireAssembly::single(i, 0.0, Vec3::new(0.0, 0.0, -bb), drive()).unwrap();
        let r0 = CONSTANTS.mu0 * i / (2.0 * PI * bb);
        let domain = Aabb::new(Vec3::new(-1e-4, -4e-4, -4e-4), Vec3::new(1e-4, 4e-4, 4e-4)).unwrap();
        let res = [9, 21, 21];
        let z = find_field_zeros(&a, domain, res, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert!(!z.zeros.is_empty());
        let diag = Vec3::new(2e-4 / 8.0, 8e-4 / 20.0, 8e-4 / 20.0).norm();
        for p in &z.zeros {
            assert!((p - Vec3::new(p.x, r0, 0.0)).norm() < diag, "{p:?} vs r0 {r0}");
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let a = WireAssembly::single(0.05, 0.0, Vec3::zeros(), drive()).unwrap();
        assert!(find_field_zeros(&a, cube(1e-3), [7, 8, 8], 1e-8).is_err());
    }
}
