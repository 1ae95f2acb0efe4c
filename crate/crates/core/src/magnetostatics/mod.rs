//! Static and quasi-static RF magnetic fields of wire assemblies.

mod wire;
mod zeros;

pub use wire::{field_infinite_wire, field_polyline, WireGeometry, DEFAULT_EPS_AXIS};
pub use zeros::{find_field_zeros, Aabb, FieldZeros, DEFAULT_ZERO_THRESHOLD};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RfDrive;
use crate::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Wire {
    pub geometry: WireGeometry,
    /// DC current [A], signed.
    pub i_dc: f64,
    /// RF current amplitude [A], non-negative.
    pub i_rf: f64,
    /// RF phase [rad].
    pub rf_phase: f64,
}

impl Wire {
    pub fn new(geometry: WireGeometry, i_dc: f64, i_rf: f64) -> Self {
        Self {
            geometry,
            i_dc,
            i_rf,
            rf_phase: 0.0,
        }
    }
}

/// DC and RF fields with their Jacobians at one point; the bias is already included in `b_dc`.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet {
    pub b_dc: Vec3,
    pub j_dc: Mat3,
    pub b_rf: Vec3,
    pub j_rf: Mat3,
}

/// The scene: wires, uniform bias and the shared drive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireAssembly {
    wires: Vec<Wire>,
    bias: Vec3,
    drive: RfDrive,
    eps_axis: f64,
}

impl WireAssembly {
    pub fn new(wires: Vec<Wire>, bias: Vec3, drive: RfDrive) -> Result<Self> {
        if wires.is_empty() {
            return Err(Error::InvalidGeometry("assembly needs at least one wire".into()));
        }
        for (i, w) in wires.iter().enumerate() {
            w.geometry.validate()?;
            if !(w.i_dc.is_finite() && w.i_rf.is_finite() && w.rf_phase.is_finite()) {
                return Err(Error::InvalidGeometry(format!("wire {i}: non-finite current or phase")));
            }
            if w.i_rf < 0.0 {
                return Err(Error::InvalidGeometry(format!("wire {i}: RF amplitude must be >= 0")));
            }
        }
        if !bias.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite bias".into()));
        }
        Ok(Self {
            wires,
            bias,
            drive,
            eps_axis: DEFAULT_EPS_AXIS,
        })
    }

    /// Two infinite wires: wire 0 along +x through the origin, wire 1 along +y through (0, 0, -gap).
    pub fn crossed(i_dc: f64, i_rf: f64, gap: f64, bias: Vec3, drive: RfDrive) -> Result<Self> {
        let w0 = Wire::new(WireGeometry::line(Vec3::zeros(), Vec3::x())?, i_dc, i_rf);
        let w1 = Wire::new(WireGeometry::line(Vec3::new(0.0, 0.0, -gap), Vec3::y())?, i_dc, i_rf);
        Self::new(vec![w0, w1], bias, drive)
    }

    /// Two parallel infinite wires along +x at y = +/- separation / 2 with co-directed currents.
    pub fn parallel(i_dc: f64, i_rf: f64, separation: f64, bias: Vec3, drive: RfDrive) -> Result<Self> {
        let h = separation / 2.0;
        let w0 = Wire::new(WireGeometry::line(Vec3::new(0.0, -h, 0.0), Vec3::x())?, i_dc, i_rf);
        let w1 = Wire::new(WireGeometry::line(Vec3::new(0.0, h, 0.0), Vec3::x())?, i_dc, i_rf);
        Self::new(vec![w0, w1], bias, drive)
    }

    /// A single infinite wire along +x through the origin.
    pub fn single(i_dc: f64, i_rf: f64, bias: Vec3, drive: RfDrive) -> Result<Self> {
        let w = Wire::new(WireGeometry::line(Vec3::zeros(), Vec3::x())?, i_dc, i_rf);
        Self::new(vec![w], bias, drive)
    }

    pub fn with_eps_axis(mut self, eps_axis: f64) -> Self {
        self.eps_axis = eps_axis;
        self
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn wires_mut(&mut self) -> &mut [Wire] {
        &mut self.wires
    }

    pub fn bias(&self) -> Vec3 {
        self.bias
    }

    pub fn set_bias(&mut self, bias: Vec3) {
        self.bias = bias;
    }

    pub fn drive(&self) -> &RfDrive {
        &self.drive
    }

    pub fn set_drive(&mut self, drive: RfDrive) {
        self.drive = drive;
    }

    pub fn eps_axis(&self) -> f64 {
        self.eps_axis
    }

    /// Scales every DC current and the bias by `alpha`.
    pub fn scale_dc(&mut self, alpha: f64) {
        for w in &mut self.wires {
            w.i_dc *= alpha;
        }
        self.bias *= alpha;
    }

    /// Index and distance of the closest wire.
    pub fn nearest_wire(&self, p: &Vec3) -> (usize, f64) {
        self.wires
            .iter()
            .enumerate()
            .map(|(i, w)| (i, w.geometry.distance(p)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Error if `p` lies inside any exclusion radius.
    pub fn check_fence(&self, p: &Vec3) -> Result<()> {
        for (i, w) in self.wires.iter().enumerate() {
            if w.geometry.distance(p) < self.eps_axis {
                return Err(Error::Singularity { wire: i, point: *p });
            }
        }
        Ok(())
    }

    fn rf_in_phase(&self) -> Result<()> {
        let mut phase = None;
        for (i, w) in self.wires.iter().enumerate() {
            if w.i_rf == 0.0 {
                continue;
            }
            match phase {
                None => phase = Some(w.rf_phase),
                Some(p0) if (w.rf_phase - p0).abs() > 1e-12 => {
                    return Err(Error::Unsupported(format!(
                        "wire {i} RF phase {} differs from {p0}; only in-phase RF currents are supported",
                        w.rf_phase
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Static field: bias plus the DC contribution of every wire.
    pub fn b_dc(&self, p: &Vec3) -> Result<Vec3> {
        self.b_dc_with_bias(p, &self.bias)
    }

    /// Static field evaluated with an explicit bias instead of the stored one.
    pub fn b_dc_with_bias(&self, p: &Vec3, bias: &Vec3) -> Result<Vec3> {
        let mut b = *bias;
        for (i, w) in self.wires.iter().enumerate() {
            let unit = w
                .geometry
                .field_per_amp(p, self.eps_axis)
                .ok_or(Error::Singularity { wire: i, point: *p })?;
            b += unit * w.i_dc;
        }
        Ok(b)
    }

    /// Real RF amplitude vector; the bias does not contribute.
    pub fn b_rf_amplitude(&self, p: &Vec3) -> Result<Vec3> {
        self.rf_in_phase()?;
        let mut b = Vec3::zeros();
        for (i, w) in self.wires.iter().enumerate() {
            let unit = w
                .geometry
                .field_per_amp(p, self.eps_axis)
                .ok_or(Error::Singularity { wire: i, point: *p })?;
            b += unit * w.i_rf;
        }
        Ok(b)
    }

    /// DC and RF fields with Jacobians, using `bias` as the uniform field.
    pub fn jet_with_bias(&self, p: &Vec3, bias: &Vec3) -> Result<FieldJet> {
        self.rf_in_phase()?;
        let mut jet = FieldJet {
            b_dc: *bias,
            j_dc: Mat3::zeros(),
            b_rf: Vec3::zeros(),
            j_rf: Mat3::zeros(),
        };
        for (i, w) in self.wires.iter().enumerate() {
            let (b, j) = w
                .geometry
                .field_and_jacobian_per_amp(p, self.eps_axis)
                .ok_or(Error::Singularity { wire: i, point: *p })?;
            jet.b_dc += b * w.i_dc;
            jet.j_dc += j * w.i_dc;
            jet.b_rf += b * w.i_rf;
            jet.j_rf += j * w.i_rf;
        }
        Ok(jet)
    }

    pub fn jet(&self, p: &Vec3) -> Result<FieldJet> {
        self.jet_with_bias(p, &self.bias)
    }
}
