//! Adiabatic RF-dressed potential.
//!
//! Reconstructed from the standard dressed-atom treatment with a directional
//! coupling: only the RF component perpendicular to the local static field
//! drives transitions.
//!
//! ```text
//! delta = |g_F| mu_B |B_DC| / hbar - omega
//! Omega = |g_F| mu_B |B_RF,perp| / (2 hbar)
//! U     = m_tilde hbar sqrt(delta^2 + Omega^2)
//! ```
//!
//! Rotating-wave approximation, no gravity. The sign of `m_tilde` selects
//! the branch: weak-field seekers (`g_F m_tilde > 0`) sit in minima of `U`,
//! strong-field seekers see the same surface inverted.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::magnetostatics::{FieldJet, WireAssembly, DEFAULT_ZERO_THRESHOLD};
use crate::model::{AtomSpecies, RfDrive, CONSTANTS};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DressedParams {
    pub species: AtomSpecies,
    pub drive: RfDrive,
    /// |B_DC| below which the quantization axis is considered undefined [T].
    pub zero_threshold: f64,
}

impl DressedParams {
    pub fn new(species: AtomSpecies, drive: RfDrive) -> Result<Self> {
        species.validate()?;
        Ok(Self {
            species,
            drive,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
        })
    }

    fn gamma(&self) -> f64 {
        self.species.gyromagnetic_ratio()
    }

    /// m_tilde * hbar: converts sqrt(delta^2 + Omega^2) to energy.
    fn energy_scale(&self) -> f64 {
        self.species.m_tilde * CONSTANTS.hbar
    }
}

/// Potential and its ingredients at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSample {
    pub p: Vec3,
    /// Energy [J].
    pub u: f64,
    /// Gradient [J/m]; `None` at the conical point delta = Omega = 0.
    pub grad: Option<Vec3>,
    /// Detuning [rad/s].
    pub delta: f64,
    /// Rabi frequency [rad/s].
    pub rabi: f64,
    /// |B_DC| [T].
    pub b_mag: f64,
}

impl PotentialSample {
    /// CSV column order used by the CLI.
    pub const CSV_HEADER: &'static str =
        "x_m,y_m,z_m,u_J,grad_x_J_per_m,grad_y_J_per_m,grad_z_J_per_m,delta_rad_per_s,rabi_rad_per_s,b_mag_T";

    pub fn csv_row(&self) -> String {
        let g = self.grad.map(|g| [g.x, g.y, g.z]).unwrap_or([f64::NAN; 3]);
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.p.x, self.p.y, self.p.z, self.u, g[0], g[1], g[2], self.delta, self.rabi, self.b_mag
        )
    }
}

fn perpendicular_rf(b_dc: &Vec3, b_rf: &Vec3) -> (Vec3, Vec3) {
    let hat = b_dc / b_dc.norm();
    (b_rf - hat * b_rf.dot(&hat), hat)
}

pub fn detuning(params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
    let b = assembly.b_dc(p)?;
    Ok(params.gamma() * b.norm() - params.drive.omega())
}

pub fn rabi_frequency(params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
    let b = assembly.b_dc(p)?;
    if b.norm() < params.zero_threshold {
        return Err(Error::UndefinedQuantizationAxis { field: b.norm() });
    }
    let rf = assembly.b_rf_amplitude(p)?;
    Ok(rabi_from_fields(params, &b, &rf))
}

fn rabi_from_fields(params: &DressedParams, b_dc: &Vec3, b_rf: &Vec3) -> f64 {
    let (perp, _) = perpendicular_rf(b_dc, b_rf);
    0.5 * params.gamma() * perp.norm()
}

/// Potential without gradient, from already evaluated fields.
pub fn potential_from_fields(params: &DressedParams, p: &Vec3, b_dc: &Vec3, b_rf: &Vec3) -> Result<PotentialSample> {
    let b_mag = b_dc.norm();
    if b_mag < params.zero_threshold {
        return Err(Error::UndefinedQuantizationAxis { field: b_mag });
    }
    let delta = params.gamma() * b_mag - params.drive.omega();
    let rabi = rabi_from_fields(params, b_dc, b_rf);
    Ok(PotentialSample {
        p: *p,
        u: params.energy_scale() * delta.hypot(rabi),
        grad: None,
        delta,
        rabi,
        b_mag,
    })
}

/// Potential and analytic gradient from a field jet.
pub fn potential_from_jet(params: &DressedParams, p: &Vec3, jet: &FieldJet) -> Result<PotentialSample> {
    let mut s = potential_from_fields(params, p, &jet.b_dc, &jet.b_rf)?;
    let root = s.delta.hypot(s.rabi);
    if root <= 1e-12 * params.drive.omega() {
        return Ok(s);
    }
    let gamma = params.gamma();
    let (perp, hat) = perpendicular_rf(&jet.b_dc, &jet.b_rf);
    // grad(delta) = gamma J_dc^T b_hat
    let grad_delta = jet.j_dc.transpose() * hat * gamma;
    // Omega grad(Omega) = (gamma/2)^2 [J_rf^T P - (R.b_hat / |B|) J_dc^T P], with P the perpendicular RF part
    let along = jet.b_rf.dot(&hat) / s.b_mag;
    let rabi_grad_rabi = (jet.j_rf.transpose() * perp - jet.j_dc.transpose() * perp * along) * (0.25 * gamma * gamma);
    s.grad = Some((grad_delta * s.delta + rabi_grad_rabi) * (params.energy_scale() / root));
    Ok(s)
}

/// Full sample (potential, gradient and components) at `p`.
pub fn dressed_potential(params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<PotentialSample> {
    potential_from_jet(params, p, &assembly.jet(p)?)
}

/// Potential evaluated with `bias` in place of the assembly's stored bias.
pub fn dressed_potential_with_bias(params: &DressedParams, assembly: &WireAssembly, p: &Vec3, bias: &Vec3) -> Result<PotentialSample> {
    potential_from_jet(params, p, &assembly.jet_with_bias(p, bias)?)
}

/// Potential only; cheaper than [`dressed_potential`].
pub fn potential_value(params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
    let b = assembly.b_dc(p)?;
    let rf = assembly.b_rf_amplitude(p)?;
    Ok(potential_from_fields(params, p, &b, &rf)?.u)
}

pub fn potential_gradient(params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<Vec3> {
    dressed_potential(params, assembly, p)?.grad.ok_or(Error::NonDifferentiable)
}
