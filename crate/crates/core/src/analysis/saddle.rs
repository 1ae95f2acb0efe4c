//! Climbing-image elastic band between two wells, finished by a Newton
//! polish of the climbing image and a Hessian index check.

use rayon::prelude::*;
use serde::Serialize;

use super::optimize::{hessian, morse_index, newton_stationary};
use crate::error::{Error, Result};
use crate::surface::EnergySurface;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stationary {
    pub position: Vec3,
    /// Energy [J].
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierResult {
    pub min_a: Stationary,
    pub min_b: Stationary,
    pub saddle: Stationary,
    /// U_saddle - U_minA [J].
    pub barrier_a: f64,
    /// U_saddle - U_minB [J].
    pub barrier_b: f64,
    pub path: Vec<Vec3>,
    pub path_energies: Vec<f64>,
    pub converged: bool,
    /// |grad U| at the saddle [J/m].
    pub residual: f64,
    /// Number of negative Hessian eigenvalues at the saddle.
    pub hessian_index: usize,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl BarrierResult {
    pub fn min_barrier(&self) -> f64 {
        self.barrier_a.min(self.barrier_b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SaddleOptions {
    /// Interior images.
    pub images: usize,
    pub max_iter: usize,
    /// Convergence threshold on |grad U| at the saddle [J/m].
    pub tol_grad: f64,
    /// Optional waypoint for the initial path.
    pub via: Option<Vec3>,
}

impl SaddleOptions {
    pub fn new(images: usize, max_iter: usize, tol_grad: f64) -> Self {
        Self {
            images,
            max_iter,
            tol_grad,
            via: None,
        }
    }
}

fn initial_path(a: &Vec3, b: &Vec3, via: Option<Vec3>, n: usize) -> Vec<Vec3> {
    let total = n + 2;
    match via {
        None => (0..total).map(|i| a + (b - a) * (i as f64 / (total - 1) as f64)).collect(),
        Some(w) => {
            let (l1, l2) = ((w - a).norm(), (b - w).norm());
            let len = l1 + l2;
            (0..total)
                .map(|i| {
                    let s = len * i as f64 / (total - 1) as f64;
                    if s <= l1 {
                        a + (w - a) * (s / l1)
                    } else {
                        w + (b - w) * ((s - l1) / l2)
                    }
                })
                .collect()
        }
    }
}

/// Tangent estimate that follows the uphill neighbour, blending near extrema.
fn tangent(prev: &Vec3, cur: &Vec3, next: &Vec3, e_prev: f64, e_cur: f64, e_next: f64) -> Vec3 {
    let tp = next - cur;
    let tm = cur - prev;
    let t = if e_next > e_cur && e_cur > e_prev {
        tp
    } else if e_next < e_cur && e_cur < e_prev {
        tm
    } else {
        let dmax = (e_next - e_cur).abs().max((e_prev - e_cur).abs());
        let dmin = (e_next - e_cur).abs().min((e_prev - e_cur).abs());
        if e_next > e_prev {
            tp * dmax + tm * dmin
        } else {
            tp * dmin + tm * dmax
        }
    };
    let n = t.norm();
    if n > 0.0 {
        t / n
    } else {
        (next - prev).normalize()
    }
}

/// Locates the saddle between the fixed endpoints `end_a` and `end_b`.
pub fn find_saddle(surface: &dyn EnergySurface, end_a: Vec3, end_b: Vec3, opts: &SaddleOptions) -> Result<BarrierResult> {
    let length = (end_b - end_a).norm();
    if !(length > 1e-12 * (end_a.norm() + end_b.norm()).max(1e-300)) {
        return Err(Error::DegenerateEndpoints("well endpoints coincide".into()));
    }
    if opts.images < 3 {
        return Err(Error::InvalidArgument("elastic band needs at least 3 interior images".into()));
    }
    let mut path = initial_path(&end_a, &end_b, opts.via, opts.images);
    let n = path.len();
    let e_a = surface.energy(&end_a)?;
    let e_b = surface.energy(&end_b)?;

    let evaluate =
        |path: &[Vec3]| -> Result<Vec<(f64, Vec3)>> { path[1..n - 1].par_iter().map(|p| surface.energy_and_gradient(p)).collect() };

    let mut eg = evaluate(&path)?;
    let e_max0 = eg.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let e_ref = e_a.max(e_b);
    let mut energy_scale = (e_max0 - e_a.min(e_b)).abs();
    if !(energy_scale > 0.0) {
        energy_scale = e_ref.abs().max(1e-300);
    }
    // forces in units of energy_scale / length
    let to_scaled = length / energy_scale;
    let spring = (n - 1) as f64;

    let mut velocity = vec![Vec3::zeros(); n];
    let (dt_max, n_min, f_inc, f_dec, alpha0, f_alpha): (f64, usize, f64, f64, f64, f64) = (0.05, 5, 1.1, 0.5, 0.1, 0.99);
    let mut dt: f64 = 0.01;
    let mut alpha = alpha0;
    let mut since_negative = 0usize;
    let max_disp = 0.02;
    let mut warnings = Vec::new();
    let mut climber = 0usize;
    let mut iterations = 0usize;
    let mut saddle: Option<(Vec3, f64, f64)> = None;
    let mut next_polish = 0.05;

    while iterations < opts.max_iter {
        iterations += 1;
        let energies: Vec<f64> = std::iter::once(e_a)
            .chain(eg.iter().map(|x| x.0))
            .chain(std::iter::once(e_b))
            .collect();
        climber = (1..n - 1).max_by(|&i, &j| energies[i].total_cmp(&energies[j])).unwrap();
        let climbing = iterations > 20;

        let mut forces = vec![Vec3::zeros(); n];
        for i in 1..n - 1 {
            let tau = tangent(&path[i - 1], &path[i], &path[i + 1], energies[i - 1], energies[i], energies[i + 1]);
            let g = eg[i - 1].1 * to_scaled;
            let f = if climbing && i == climber {
                -g + tau * (2.0 * g.dot(&tau))
            } else {
                let dl = ((path[i + 1] - path[i]).norm() - (path[i] - path[i - 1]).norm()) / length;
                -(g - tau * g.dot(&tau)) + tau * (spring * dl)
            };
            forces[i] = f;
        }

        let ci_grad = eg[climber - 1].1.norm();
        if climbing && ci_grad <= opts.tol_grad {
            let (e, _) = eg[climber - 1];
            saddle = Some((path[climber], e, ci_grad));
            break;
        }
        // try a Newton polish once the climbing image is roughly converged
        let ci_scaled = forces[climber].norm();
        if climbing && ci_scaled < next_polish {
            next_polish *= 0.3;
            if let Some(s) = polish(surface, &path[climber], length, opts.tol_grad, e_ref) {
                saddle = Some(s);
                break;
            }
        }

        // FIRE
        let power: f64 = (1..n - 1).map(|i| forces[i].dot(&velocity[i])).sum();
        let vnorm: f64 = (1..n - 1).map(|i| velocity[i].norm_squared()).sum::<f64>().sqrt();
        let fnorm: f64 = (1..n - 1).map(|i| forces[i].norm_squared()).sum::<f64>().sqrt();
        if power > 0.0 {
            for i in 1..n - 1 {
                velocity[i] = velocity[i] * (1.0 - alpha) + forces[i] * (alpha * vnorm / fnorm.max(1e-300));
            }
            since_negative += 1;
            if since_negative > n_min {
                dt = (dt * f_inc).min(dt_max);
                alpha *= f_alpha;
            }
        } else {
            for v in velocity.iter_mut() {
                *v = Vec3::zeros();
            }
            dt *= f_dec;
            alpha = alpha0;
            since_negative = 0;
        }
        for i in 1..n - 1 {
            velocity[i] += forces[i] * dt;
            let mut disp = velocity[i] * dt;
            if disp.norm() > max_disp {
                disp *= max_disp / disp.norm();
            }
            path[i] += disp * length;
        }
        eg = match evaluate(&path) {
            Ok(v) => v,
            Err(e) => {
                warnings.push(format!("image evaluation failed: {e}"));
                return Err(e);
            }
        };
    }

    let energies: Vec<f64> = std::iter::once(e_a)
        .chain(eg.iter().map(|x| x.0))
        .chain(std::iter::once(e_b))
        .collect();
    let Some((sp, se, residual)) = saddle else {
        let residual = eg[climber - 1].1.norm();
        return Err(Error::NoConvergence {
            iterations,
            residual,
            best_path: path,
        });
    };
    let h = hessian(surface, &sp, 1e-6 * length)?;
    let index = morse_index(&h);
    if index != 1 {
        warnings.push(format!("degenerate saddle: Hessian has {index} negative eigenvalues"));
    }
    Ok(BarrierResult {
        min_a: Stationary { position: end_a, u: e_a },
        min_b: Stationary { position: end_b, u: e_b },
        saddle: Stationary { position: sp, u: se },
        barrier_a: se - e_a,
        barrier_b: se - e_b,
        path,
        path_energies: energies,
        converged: true,
        residual,
        hessian_index: index,
        iterations,
        warnings,
    })
}

fn polish(surface: &dyn EnergySurface, start: &Vec3, length: f64, tol_grad: f64, e_floor: f64) -> Option<(Vec3, f64, f64)> {
    let (p, res) = newton_stationary(surface, *start, 1e-6 * length, 0.05 * length, tol_grad, 40).ok()?;
    if res > tol_grad || (p - start).norm() > 0.1 * length {
        return None;
    }
    let h = hessian(surface, &p, 1e-6 * length).ok()?;
    if morse_index(&h) != 1 {
        return None;
    }
    let e = surface.energy(&p).ok()?;
    (e >= e_floor - 1e-12 * e_floor.abs()).then_some((p, e, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::DoubleWell;

    #[test]
    fn double_well_barrier() {
        for a in [0.5, 1.0, 1.7] {
            let w = DoubleWell { a, scale: 1.0 };
            let r = find_saddle(
                &w,
                Vec3::new(-a, 0.0, 0.0),
                Vec3::new(a, 0.0, 0.0),
                &SaddleOptions::new(9, 2000, 1e-10),
            )
            .unwrap();
            let barrier = a.powi(4);
            assert!(
                (r.barrier_a - barrier).abs() / barrier < 1e-6,
                "a={a}: {} vs {barrier}",
                r.barrier_a
            );
            assert!(r.saddle.position.norm() < 1e-6 * a);
            assert_eq!(r.hessian_index, 1);
        }
    }

    #[test]
    fn curved_start_path() {
        let w = DoubleWell { a: 1.0, scale: 3.0 };
        let mut o = SaddleOptions::new(11, 3000, 1e-10);
        o.via = Some(Vec3::new(0.2, 0.8, -0.5));
        let r = find_saddle(&w, Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), &o).unwrap();
        assert!((r.barrier_b - 3.0).abs() < 3e-6);
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let w = DoubleWell { a: 1.0, scale: 1.0 };
        let p = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            find_saddle(&w, p, p, &SaddleOptions::new(7, 10, 1e-8)),
            Err(Error::DegenerateEndpoints(_))
        ));
    }

    #[test]
    fn reports_non_convergence() {
        let w = DoubleWell { a: 1.0, scale: 1.0 };
        let r = find_saddle(
            &w,
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            &SaddleOptions::new(7, 3, 1e-14),
        );
        assert!(matches!(r, Err(Error::NoConvergence { ref best_path, .. }) if best_path.len() == 9));
    }
}
