//! Regular sampling grids and the scalar quantities that can be sampled on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{detuning, potential_value, rabi_frequency, DressedParams};
use crate::error::{Error, Result};
use crate::magnetostatics::{Aabb, WireAssembly};
use crate::registry::{Named, Registry};
use crate::Vec3;

/// Regular grid; node (i, j, k) sits at `origin + (i dx, j dy, k dz)` with
/// `d = extents / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec3,
    pub extents: Vec3,
    pub resolution: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Vec3, extents: Vec3, resolution: [usize; 3]) -> Result<Self> {
        let spec = Self {
            origin,
            extents,
            resolution,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid spanning `bounds` with `n` nodes per axis.
    pub fn from_box(bounds: &Aabb, resolution: [usize; 3]) -> Result<Self> {
        Self::new(bounds.min, bounds.max - bounds.min, resolution)
    }

    pub fn validate(&self) -> Result<()> {
        if (0..3).any(|k| !(self.extents[k] > 0.0 && self.extents[k].is_finite())) {
            return Err(Error::InvalidGrid("extents must be positive and finite".into()));
        }
        if self.resolution.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid("every axis needs at least 2 nodes".into()));
        }
        if !self.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> Vec3 {
        Vec3::new(
            self.extents.x / (self.resolution[0] - 1) as f64,
            self.extents.y / (self.resolution[1] - 1) as f64,
            self.extents.z / (self.resolution[2] - 1) as f64,
        )
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing().norm()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, x fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution[0] * (j + self.resolution[1] * k)
    }

    pub fn unflatten(&self, n: usize) -> (usize, usize, usize) {
        let [nx, ny, _] = self.resolution;
        (n % nx, (n / nx) % ny, n / (nx * ny))
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let d = self.spacing();
        self.origin + Vec3::new(i as f64 * d.x, j as f64 * d.y, k as f64 * d.z)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: self.origin,
            max: self.origin + self.extents,
        }
    }
}

/// Sampled scalar with a validity mask; masked nodes hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField3D {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ScalarField3D {
    /// Builds a field by evaluating `f` at every node (errors mask the node).
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Vec3) -> Result<f64> + Sync) -> Self {
        let samples: Vec<Option<f64>> = (0..spec.len())
            .into_par_iter()
            .map(|n| {
                let (i, j, k) = spec.unflatten(n);
                f(&spec.node(i, j, k)).ok().filter(|v| v.is_finite())
            })
            .collect();
        let mask = samples.iter().map(Option::is_some).collect();
        let values = samples.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Self { spec, values, mask }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        let n = self.spec.index(i, j, k);
        self.mask[n].then(|| self.values[n])
    }

    /// (min, max) over valid nodes.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .fold(None, |acc, (&v, _)| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }
}

/// A scalar quantity that can be sampled on a grid.
pub trait ScalarSource: Named + Send + Sync {
    fn unit(&self) -> &'static str;

    fn evaluate(&self, params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64>;
}

/// |B_DC| [T].
pub struct StaticFieldMagnitude;
/// |B_RF| amplitude [T].
pub struct RfFieldMagnitude;
/// Dressed potential U [J].
pub struct Potential;
/// Detuning delta [rad/s].
pub struct Detuning;
/// Rabi frequency Omega [rad/s].
pub struct Rabi;

impl Named for StaticFieldMagnitude {
    fn name(&self) -> &'static str {
        "bdc"
    }
}
impl ScalarSource for StaticFieldMagnitude {
    fn unit(&self) -> &'static str {
        "T"
    }
    fn evaluate(&self, _: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
        Ok(assembly.b_dc(p)?.norm())
    }
}

impl Named for RfFieldMagnitude {
    fn name(&self) -> &'static str {
        "brf"
    }
}
impl ScalarSource for RfFieldMagnitude {
    fn unit(&self) -> &'static str {
        "T"
    }
    fn evaluate(&self, _: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
        Ok(assembly.b_rf_amplitude(p)?.norm())
    }
}

impl Named for Potential {
    fn name(&self) -> &'static str {
        "potential"
    }
}
impl ScalarSource for Potential {
    fn unit(&self) -> &'static str {
        "J"
    }
    fn evaluate(&self, params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
        potential_value(params, assembly, p)
    }
}

impl Named for Detuning {
    fn name(&self) -> &'static str {
        "detuning"
    }
}
impl ScalarSource for Detuning {
    fn unit(&self) -> &'static str {
        "rad/s"
    }
    fn evaluate(&self, params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
        detuning(params, assembly, p)
    }
}

impl Named for Rabi {
    fn name(&self) -> &'static str {
        "rabi"
    }
}
impl ScalarSource for Rabi {
    fn unit(&self) -> &'static str {
        "rad/s"
    }
    fn evaluate(&self, params: &DressedParams, assembly: &WireAssembly, p: &Vec3) -> Result<f64> {
        rabi_frequency(params, assembly, p)
    }
}

/// Registry of the built-in scalar sources.
pub fn scalar_sources() -> Registry<dyn ScalarSource> {
    let mut r: Registry<dyn ScalarSource> = Registry::new("scalar source");
    r.register(Box::new(StaticFieldMagnitude))
        .register(Box::new(RfFieldMagnitude))
        .register(Box::new(Potential))
        .register(Box::new(Detuning))
        .register(Box::new(Rabi));
    r
}

/// Samples `source` at every node of `spec`. Fenced nodes and nodes where the
/// quantity is undefined are masked.
pub fn sample_grid(source: &dyn ScalarSource, params: &DressedParams, assembly: &WireAssembly, spec: &GridSpec) -> Result<ScalarField3D> {
    spec.validate()?;
    Ok(ScalarField3D::from_fn(*spec, |p| source.evaluate(params, assembly, p)))
}
