//! Energy surfaces consumed by the minimizers, the saddle search and the integrator.

use crate::dressed::{dressed_potential_with_bias, potential_from_fields, DressedParams};
use crate::error::{Error, Result};
use crate::magnetostatics::WireAssembly;
use crate::Vec3;

pub trait EnergySurface: Sync {
    fn energy(&self, p: &Vec3) -> Result<f64>;

    fn energy_and_gradient(&self, p: &Vec3) -> Result<(f64, Vec3)>;

    fn gradient(&self, p: &Vec3) -> Result<Vec3> {
        Ok(self.energy_and_gradient(p)?.1)
    }
}

/// Dressed potential of a wire assembly, optionally with a bias override.
#[derive(Debug, Clone)]
pub struct DressedSurface<'a> {
    pub params: &'a DressedParams,
    pub assembly: &'a WireAssembly,
    pub bias: Vec3,
}

impl<'a> DressedSurface<'a> {
    pub fn new(params: &'a DressedParams, assembly: &'a WireAssembly) -> Self {
        Self {
            params,
            assembly,
            bias: assembly.bias(),
        }
    }

    pub fn with_bias(mut self, bias: Vec3) -> Self {
        self.bias = bias;
        self
    }
}

impl EnergySurface for DressedSurface<'_> {
    fn energy(&self, p: &Vec3) -> Result<f64> {
        let b = self.assembly.b_dc_with_bias(p, &self.bias)?;
        let rf = self.assembly.b_rf_amplitude(p)?;
        Ok(potential_from_fields(self.params, p, &b, &rf)?.u)
    }

    fn energy_and_gradient(&self, p: &Vec3) -> Result<(f64, Vec3)> {
        let s = dressed_potential_with_bias(self.params, self.assembly, p, &self.bias)?;
        Ok((s.u, s.grad.ok_or(Error::NonDifferentiable)?))
    }
}

/// `scale * [(x^2 - a^2)^2 + y^2 + z^2]`: minima at (+/-a, 0, 0), saddle at the
/// origin with barrier `scale * a^4`.
#[derive(Debug, Clone, Copy)]
pub struct DoubleWell {
    pub a: f64,
    pub scale: f64,
}

impl EnergySurface for DoubleWell {
    fn energy(&self, p: &Vec3) -> Result<f64> {
        let q = p.x * p.x - self.a * self.a;
        Ok(self.scale * (q * q + p.y * p.y + p.z * p.z))
    }

    fn energy_and_gradient(&self, p: &Vec3) -> Result<(f64, Vec3)> {
        let q = p.x * p.x - self.a * self.a;
        let g = Vec3::new(4.0 * p.x * q, 2.0 * p.y, 2.0 * p.z) * self.scale;
        Ok((self.energy(p)?, g))
    }
}
