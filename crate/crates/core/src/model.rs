//! Physical constants, atom species and RF drive parameters.
//!
//! Everything inside the crate is SI. Conversions to frequency or
//! temperature units happen only in [`energy_report`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Magnetic constant [T m / A].
    pub mu0: f64,
    /// Reduced Planck constant [J s].
    pub hbar: f64,
    /// Bohr magneton [J / T].
    pub mu_b: f64,
    /// Boltzmann constant [J / K].
    pub k_b: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    mu0: 1.256_637_062_12e-6,
    hbar: 1.054_571_817e-34,
    mu_b: 9.274_010_078_3e-24,
    k_b: 1.380_649e-23,
};

impl PhysicalConstants {
    /// Planck constant h = 2 pi hbar [J s].
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// mu0 / (2 pi): prefactor of the infinite-wire field.
    pub fn mu0_over_2pi(&self) -> f64 {
        self.mu0 / (2.0 * PI)
    }
}

/// Upper drive frequency for which the quasi-static RF treatment is considered valid.
pub const QUASI_STATIC_LIMIT_HZ: f64 = 1.0e6;

/// Atom species and the dressed level it is prepared in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpecies {
    pub name: String,
    /// Landé g-factor (sign allowed, nonzero).
    pub g_f: f64,
    /// Total spin F.
    pub f: f64,
    /// Dressed level index, |m_tilde| <= F.
    pub m_tilde: f64,
    /// Atomic mass [kg].
    pub mass: f64,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, g_f: f64, f: f64, m_tilde: f64, mass: f64) -> Result<Self> {
        let s = Self {
            name: name.into(),
            g_f,
            f,
            m_tilde,
            mass,
        };
        s.validate()?;
        Ok(s)
    }

    /// Rb-87-like weak-field seeker in F = 2, m_tilde = 2.
    pub fn rb87_like() -> Self {
        Self {
            name: "Rb87-like".into(),
            g_f: 0.5,
            f: 2.0,
            m_tilde: 2.0,
            mass: 1.443_16e-25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpecies(msg));
        if !self.g_f.is_finite() || self.g_f == 0.0 {
            return bad(format!("g_f must be finite and nonzero, got {}", self.g_f));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if !(self.f.is_finite() && self.f >= 0.0) || !is_half_integer(self.f) {
            return bad(format!("F must be a non-negative integer or half-integer, got {}", self.f));
        }
        if !self.m_tilde.is_finite() || !is_half_integer(self.m_tilde) {
            return bad(format!("m_tilde must be an integer or half-integer, got {}", self.m_tilde));
        }
        if self.m_tilde.abs() > self.f {
            return bad(format!("|m_tilde| = {} exceeds F = {}", self.m_tilde.abs(), self.f));
        }
        if !is_half_integer(self.f - self.m_tilde) || (2.0 * (self.f - self.m_tilde)).round() % 2.0 != 0.0 {
            return bad(format!(
                "F - m_tilde must be an integer (F = {}, m_tilde = {})",
                self.f, self.m_tilde
            ));
        }
        Ok(())
    }

    /// Weak-field seekers (g_F m_tilde > 0) are trapped at minima of the dressed potential.
    pub fn is_weak_field_seeker(&self) -> bool {
        self.g_f * self.m_tilde > 0.0
    }

    /// Gyromagnetic ratio |g_F| mu_B / hbar [rad / (s T)].
    pub fn gyromagnetic_ratio(&self) -> f64 {
        self.g_f.abs() * CONSTANTS.mu_b / CONSTANTS.hbar
    }
}

fn is_half_integer(v: f64) -> bool {
    let twice = 2.0 * v;
    (twice - twice.round()).abs() < 1e-9
}

/// RF drive. Construct through [`RfDrive::new`] so that `omega` stays tied to `frequency`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RfDrive {
    frequency: f64,
    omega: f64,
}

impl RfDrive {
    pub fn new(frequency: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::InvalidDrive(format!("frequency must be positive, got {frequency}")));
        }
        Ok(Self {
            frequency,
            omega: 2.0 * PI * frequency,
        })
    }

    /// Drive frequency f [Hz].
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Angular frequency 2 pi f [rad/s].
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// True when f exceeds 1 MHz and the quasi-static field treatment becomes questionable.
    /// This is a warning only.
    pub fn quasi_static_warning(&self) -> bool {
        self.frequency > QUASI_STATIC_LIMIT_HZ
    }
}

/// Static field magnitude at which the detuning vanishes: hbar omega / (|g_F| mu_B).
pub fn resonance_field(species: &AtomSpecies, drive: &RfDrive) -> Result<f64> {
    if species.g_f == 0.0 || !species.g_f.is_finite() {
        return Err(Error::InvalidSpecies("g_f must be nonzero".into()));
    }
    Ok(CONSTANTS.hbar * drive.omega() / (species.g_f.abs() * CONSTANTS.mu_b))
}

/// Radius at which an isolated straight wire carrying `current` reaches the resonance field.
pub fn resonance_radius(species: &AtomSpecies, drive: &RfDrive, current: f64) -> Result<f64> {
    Ok(CONSTANTS.mu0_over_2pi() * current.abs() / resonance_field(species, drive)?)
}

/// An energy expressed in the three unit systems used by run reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub joule: f64,
    pub hertz: f64,
    pub kelvin: f64,
}

pub fn energy_report(energy: f64) -> EnergyReport {
    EnergyReport {
        joule: energy,
        hertz: energy / CONSTANTS.h(),
        kelvin: energy / CONSTANTS.k_b,
    }
}
