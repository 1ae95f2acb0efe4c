//! Small local optimizers shared by the trap analysis routines.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::surface::EnergySurface;
use crate::{Mat3, Vec3};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of `f` on `[lo, hi]`, finished by a
/// parabolic step through the final bracket when that step improves `f`.
///
/// Returns `(x, f(x))`. Evaluation failures are treated as `+inf`.
pub fn golden_minimize(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let eval = |x: f64| f(x).unwrap_or(f64::INFINITY);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
    }
    let (mut x, mut fx) = if fc < fd { (c, fc) } else { (d, fd) };
    // parabola through the ends and midpoint of the final bracket
    let (x0, x1, x2) = (a, 0.5 * (a + b), b);
    let (f0, f1, f2) = (eval(x0), eval(x1), eval(x2));
    let denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
    if denom.abs() > 0.0 && f0.is_finite() && f1.is_finite() && f2.is_finite() {
        let num = (x1 - x0).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - f0);
        let xp = x1 - 0.5 * num / denom;
        if xp > a && xp < b {
            let fp = eval(xp);
            if fp < fx {
                x = xp;
                fx = fp;
            }
        }
    }
    if f1 < fx {
        x = x1;
        fx = f1;
    }
    (x, fx)
}

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    /// Stop when |grad U| falls below this [J/m].
    pub tol_grad: f64,
    /// Maximum trial step [m].
    pub max_step: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Descent {
    pub position: Vec3,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS descent with a backtracking line search and a trust cap on the step length.
pub fn descend(surface: &dyn EnergySurface, start: Vec3, opts: &DescentOptions) -> Result<Descent> {
    let mut x = start;
    let (mut e, mut g) = surface.energy_and_gradient(&x)?;
    let mut inv_h = Mat3::identity();
    let mut h0_set = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if g.norm() <= opts.tol_grad {
            return Ok(Descent {
                position: x,
                energy: e,
                grad_norm: g.norm(),
                iterations,
                converged: true,
            });
        }
        iterations += 1;
        if !h0_set {
            // initial inverse Hessian guess: a step of max_step / 10 along -g
            inv_h = Mat3::identity() * (0.1 * opts.max_step / g.norm());
            h0_set = true;
        }
        let mut dir = -(inv_h * g);
        if dir.dot(&g) >= 0.0 {
            inv_h = Mat3::identity() * (0.1 * opts.max_step / g.norm());
            dir = -(inv_h * g);
        }
        if dir.norm() > opts.max_step {
            dir *= opts.max_step / dir.norm();
        }
        let slope = dir.dot(&g);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = x + dir * t;
            if let Ok((et, gt)) = surface.energy_and_gradient(&trial) {
                if et <= e + 1e-4 * t * slope {
                    accepted = Some((trial, et, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, en, gn)) = accepted else {
            break;
        };
        let s = xn - x;
        let y = gn - g;
        let sy = s.dot(&y);
        if sy > 1e-30 * s.norm() * y.norm() && sy > 0.0 {
            let rho = 1.0 / sy;
            let i = Mat3::identity();
            inv_h = (i - s * y.transpose() * rho) * inv_h * (i - y * s.transpose() * rho) + s * s.transpose() * rho;
        }
        let stalled = s.norm() < 1e-15 * (1.0 + x.norm());
        x = xn;
        e = en;
        g = gn;
        if stalled {
            break;
        }
    }
    Ok(Descent {
        position: x,
        energy: e,
        grad_norm: g.norm(),
        iterations,
        converged: g.norm() <= opts.tol_grad,
    })
}

/// Symmetrised central-difference Hessian built from analytic gradients.
pub fn hessian(surface: &dyn EnergySurface, p: &Vec3, h: f64) -> Result<Mat3> {
    let mut m = Mat3::zeros();
    for k in 0..3 {
        let e = Vec3::ith(k, h);
        let col = (surface.gradient(&(p + e))? - surface.gradient(&(p - e))?) / (2.0 * h);
        m.set_column(k, &col);
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(m: &Mat3) -> [f64; 3] {
    let eig = SymmetricEigen::new(*m);
    let mut v = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    v.sort_by(f64::total_cmp);
    v
}

/// Number of eigenvalues below `-tol * max|eigenvalue|`.
pub fn morse_index(m: &Mat3) -> usize {
    let ev = eigenvalues(m);
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ev.iter().filter(|&&v| v < -1e-9 * scale).count()
}

/// Newton iteration on grad U = 0 with a trust radius. Converges to the
/// nearest stationary point of any index.
pub fn newton_stationary(
    surface: &dyn EnergySurface,
    start: Vec3,
    h: f64,
    trust: f64,
    tol_grad: f64,
    max_iter: usize,
) -> Result<(Vec3, f64)> {
    let mut x = start;
    let mut g = surface.gradient(&x)?;
    for _ in 0..max_iter {
        if g.norm() <= tol_grad {
            break;
        }
        let hm = hessian(surface, &x, h)?;
        let step = match hm.try_inverse() {
            Some(inv) => -(inv * g),
            None => return Err(Error::NotFound("singular Hessian in Newton refinement".into())),
        };
        let step = if step.norm() > trust { step * (trust / step.norm()) } else { step };
        let xn = x + step;
        let gn = surface.gradient(&xn)?;
        x = xn;
        g = gn;
    }
    Ok((x, g.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::DoubleWell;

    #[test]
    fn golden_on_parabola_and_kink() {
        let (x, fx) = golden_minimize(|x| Ok((x - 0.3).powi(2) + 1.0), -1.0, 2.0, 1e-10);
        // a smooth minimum is only resolvable to ~sqrt(machine epsilon)
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
        let (x, _) = golden_minimize(|x| Ok((x - 1.234e-4).abs()), 1e-6, 1e-3, 1e-12);
        assert!((x - 1.234e-4).abs() < 1e-11);
    }

    #[test]
    fn descend_double_well() {
        let w = DoubleWell { a: 1.3, scale: 1.0 };
        let d = descend(
            &w,
            Vec3::new(0.9, 0.4, -0.2),
            &DescentOptions {
                tol_grad: 1e-12,
                max_step: 0.2,
                max_iter: 500,
            },
        )
        .unwrap();
        assert!(d.converged);
        assert!((d.position - Vec3::new(1.3, 0.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn hessian_index_of_double_well_saddle() {
        let w = DoubleWell { a: 0.7, scale: 2.0 };
        let h = hessian(&w, &Vec3::zeros(), 1e-5).unwrap();
        assert_eq!(morse_index(&h), 1);
        let ev = eigenvalues(&h);
        assert!((ev[0] + 8.0 * 0.49).abs() < 1e-6);
        assert_eq!(morse_index(&hessian(&w, &Vec3::new(0.7, 0.0, 0.0), 1e-5).unwrap()), 0);
    }
}
