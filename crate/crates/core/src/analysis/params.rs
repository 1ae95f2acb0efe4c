//! Scalar scene parameters that sweeps and critical searches can vary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dressed::DressedParams;
use crate::error::{Error, Result};
use crate::magnetostatics::WireAssembly;
use crate::model::RfDrive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Parameter {
    /// DC current magnitude of every wire [A]; each wire keeps its sign.
    IDc,
    /// RF current amplitude of every wire [A].
    IRf,
    /// One component of the uniform bias [T].
    Bias(usize),
    /// Drive frequency [Hz].
    Frequency,
}

impl Parameter {
    pub const NAMES: [&'static str; 6] = ["idc", "irf", "bias-x", "bias-y", "bias-z", "frequency"];

    pub fn unit(&self) -> &'static str {
        match self {
            Parameter::IDc | Parameter::IRf => "A",
            Parameter::Bias(_) => "T",
            Parameter::Frequency => "Hz",
        }
    }

    /// Current value in `assembly` (wire 0 for currents).
    pub fn value(&self, assembly: &WireAssembly) -> f64 {
        match self {
            Parameter::IDc => assembly.wires().first().map_or(0.0, |w| w.i_dc.abs()),
            Parameter::IRf => assembly.wires().first().map_or(0.0, |w| w.i_rf),
            Parameter::Bias(k) => assembly.bias()[*k],
            Parameter::Frequency => assembly.drive().frequency(),
        }
    }

    /// Copies of the inputs with the parameter set to `value`.
    pub fn apply(&self, params: &DressedParams, assembly: &WireAssembly, value: f64) -> Result<(DressedParams, WireAssembly)> {
        let mut p = params.clone();
        let mut a = assembly.clone();
        match self {
            Parameter::IDc => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "DC current magnitude must be non-negative, got {value}"
                    )));
                }
                for w in a.wires_mut() {
                    w.i_dc = if w.i_dc < 0.0 { -value } else { value };
                }
            }
            Parameter::IRf => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidArgument(format!("RF amplitude must be non-negative, got {value}")));
                }
                for w in a.wires_mut() {
                    w.i_rf = value;
                }
            }
            Parameter::Bias(k) => {
                let mut b = a.bias();
                b[*k] = value;
                a.set_bias(b);
            }
            Parameter::Frequency => {
                let drive = RfDrive::new(value)?;
                p.drive = drive;
                a.set_drive(drive);
            }
        }
        Ok((p, a))
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Parameter::IDc => "idc",
            Parameter::IRf => "irf",
            Parameter::Bias(0) => "bias-x",
            Parameter::Bias(1) => "bias-y",
            Parameter::Bias(_) => "bias-z",
            Parameter::Frequency => "frequency",
        };
        f.write_str(s)
    }
}

impl From<Parameter> for String {
    fn from(p: Parameter) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Parameter {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idc" | "i_dc" => Ok(Parameter::IDc),
            "irf" | "i_rf" => Ok(Parameter::IRf),
            "bias-x" | "bias_x" | "bx" => Ok(Parameter::Bias(0)),
            "bias-y" | "bias_y" | "by" => Ok(Parameter::Bias(1)),
            "bias-z" | "bias_z" | "bz" => Ok(Parameter::Bias(2)),
            "frequency" | "f" => Ok(Parameter::Frequency),
            _ => Err(Error::UnknownStrategy {
                kind: "parameter",
                name: s.to_string(),
                available: Self::NAMES.join(", "),
            }),
        }
    }
}
