//! Scene configuration files.
//!
//! Scenes are TOML documents:
//!
//! ```toml
//! seed = 42                       # optional, default 0
//!
//! [species]                       # required
//! name = "Rb87-like"
//! g_f = 0.5
//! f = 2.0
//! m_tilde = 2.0
//! mass = 1.44316e-25              # kg
//!
//! [drive]                         # required
//! frequency = 0.8e6               # Hz
//!
//! [[wire]]                        # one block per wire, at least one
//! kind = "line"                   # "line" (point, direction) or "polyline" (vertices)
//! point = [0.0, 0.0, 0.0]         # m
//! direction = [1.0, 0.0, 0.0]
//! i_dc = 0.0925                   # A
//! i_rf = 0.05                     # A, optional, default 0
//! rf_phase = 0.0                  # rad, optional, default 0
//!
//! [bias]                          # optional, default zero field
//! field = [0.0, 0.0, 0.0]         # T
//! schedule = [[0.0, bx, by, bz], [t1, bx, by, bz]]   # s, T; replaces `field` in dynamics
//!
//! [analysis]                      # optional; every key has a default
//! [dynamics]                      # optional; every key has a default
//! ```
//!
//! Unknown keys anywhere are errors.

use serde::{Deserialize, Serialize};

use crate::analysis::barrier::{default_analysis_box, BarrierOptions};
use crate::analysis::critical::CriticalOptions;
use crate::analysis::radial::WireFrame;
use crate::dressed::DressedParams;
use crate::dynamics::{BiasSchedule, EnsembleOptions, SeedSpec, DEFAULT_BASIN_THRESHOLD, DEFAULT_ETA_MAX};
use crate::error::{Error, Result};
use crate::magnetostatics::{Aabb, Wire, WireAssembly, WireGeometry, DEFAULT_EPS_AXIS, DEFAULT_ZERO_THRESHOLD};
use crate::model::{resonance_radius, AtomSpecies, RfDrive};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub seed: u64,
    pub species: AtomSpecies,
    pub drive: DriveConfig,
    #[serde(rename = "wire")]
    pub wires: Vec<WireConfig>,
    #[serde(default)]
    pub bias: BiasConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireKind {
    Line,
    Polyline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireConfig {
    pub kind: WireKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 3]>>,
    pub i_dc: f64,
    #[serde(default)]
    pub i_rf: f64,
    #[serde(default)]
    pub rf_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<[f64; 3]>,
    /// `[t, bx, by, bz]` knots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Wire pair whose barrier is analysed.
    pub wires: [usize; 2],
    pub grid_resolution: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_min: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_max: Option<[f64; 3]>,
    pub touch_rel: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub touch_abs: Option<f64>,
    pub ownership: f64,
    pub saddle_images: usize,
    pub saddle_max_iter: usize,
    pub tol_grad_rel: f64,
    pub bracket: [f64; 2],
    pub tol_param: f64,
    pub prescan: usize,
    /// Exclusion radius around every wire [m].
    pub eps_axis: f64,
    /// |B_DC| below which the quantization axis is undefined [T].
    pub zero_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let b = BarrierOptions::default();
        Self {
            wires: [b.wires.0, b.wires.1],
            grid_resolution: b.grid_resolution,
            box_min: None,
            box_max: None,
            touch_rel: b.touch_rel,
            touch_abs: None,
            ownership: b.ownership,
            saddle_images: b.images,
            saddle_max_iter: b.max_iter,
            tol_grad_rel: b.tol_grad_rel,
            bracket: [0.01, 0.2],
            tol_param: 1e-4,
            prescan: 6,
            eps_axis: DEFAULT_EPS_AXIS,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// Time step [s]; absent means T_trap / 200 at the seed well.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_max: f64,
    pub eta_max: f64,
    pub basin_threshold: f64,
    pub seed_wire: usize,
    pub particles: usize,
    /// Per-component velocity spread [m/s].
    pub thermal_speed: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 0.05,
            eta_max: DEFAULT_ETA_MAX,
            basin_threshold: DEFAULT_BASIN_THRESHOLD,
            seed_wire: 0,
            particles: 100,
            thermal_speed: 5e-3,
        }
    }
}

/// Validated, ready-to-use scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub params: DressedParams,
    pub assembly: WireAssembly,
    pub schedule: BiasSchedule,
    pub barrier: BarrierOptions,
    pub critical: CriticalOptions,
    pub ensemble: EnsembleOptions,
    pub seed: SeedSpec,
}

impl Scene {
    /// Configured analysis box, else the default box around the analysed wire
    /// pair, else (single wire) a cube of half-width 2 rho_res around the wire anchor.
    pub fn analysis_box(&self) -> Result<Aabb> {
        if let Some(b) = self.barrier.analysis_box {
            return Ok(b);
        }
        if self.assembly.wires().len() >= 2 {
            return default_analysis_box(&self.params, &self.assembly, self.barrier.wires);
        }
        let w = &self.assembly.wires()[0];
        let rho = resonance_radius(&self.params.species, &self.params.drive, w.i_dc)?;
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(
                "wire 0 carries no DC current; give analysis.box_min/box_max".into(),
            ));
        }
        let c = WireFrame::at(&w.geometry, 0.0).origin;
        let h = Vec3::repeat(2.0 * rho);
        Aabb::new(c - h, c + h)
    }
}

fn cfg_err(field: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {e}"))
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

impl SceneConfig {
    /// Parses and validates a scene.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SceneConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.build()?;
        Ok(cfg)
    }

    /// Canonical TOML text; parsing it yields an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene config is always serializable")
    }

    pub fn build(&self) -> Result<Scene> {
        let species = self.species.clone();
        species.validate().map_err(|e| cfg_err("species", e))?;
        let drive = RfDrive::new(self.drive.frequency).map_err(|e| cfg_err("drive.frequency", e))?;
        let mut params = DressedParams::new(species, drive).map_err(|e| cfg_err("species", e))?;
        let an = &self.analysis;
        if !(an.zero_threshold > 0.0) {
            return Err(cfg_err("analysis.zero_threshold", "must be positive"));
        }
        params.zero_threshold = an.zero_threshold;

        if self.wires.is_empty() {
            return Err(cfg_err("wire", "at least one [[wire]] block is required"));
        }
        let mut wires = Vec::with_capacity(self.wires.len());
        for (i, w) in self.wires.iter().enumerate() {
            let field = |k: &str| format!("wire[{i}].{k}");
            let geometry = match w.kind {
                WireKind::Line => {
                    if w.vertices.is_some() {
                        return Err(cfg_err(&field("vertices"), "not allowed for kind = \"line\""));
                    }
                    let point = w.point.ok_or_else(|| cfg_err(&field("point"), "missing"))?;
                    let direction = w.direction.ok_or_else(|| cfg_err(&field("direction"), "missing"))?;
                    WireGeometry::line(vec3(point), vec3(direction)).map_err(|e| cfg_err(&field("direction"), e))?
                }
                WireKind::Polyline => {
                    if w.point.is_some() || w.direction.is_some() {
                        return Err(cfg_err(&field("point"), "point/direction not allowed for kind = \"polyline\""));
                    }
                    let vertices = w.vertices.as_ref().ok_or_else(|| cfg_err(&field("vertices"), "missing"))?;
                    WireGeometry::polyline(vertices.iter().map(|v| vec3(*v)).collect()).map_err(|e| cfg_err(&field("vertices"), e))?
                }
            };
            if !w.i_dc.is_finite() {
                return Err(cfg_err(&field("i_dc"), "must be finite"));
            }
            if !(w.i_rf.is_finite() && w.i_rf >= 0.0) {
                return Err(cfg_err(&field("i_rf"), "must be a non-negative amplitude"));
            }
            if !w.rf_phase.is_finite() {
                return Err(cfg_err(&field("rf_phase"), "must be finite"));
            }
            wires.push(Wire {
                geometry,
                i_dc: w.i_dc,
                i_rf: w.i_rf,
                rf_phase: w.rf_phase,
            });
        }

        let schedule = match (&self.bias.field, &self.bias.schedule) {
            (Some(_), Some(_)) => return Err(cfg_err("bias", "give either `field` or `schedule`, not both")),
            (Some(f), None) => {
                if !f.iter().all(|v| v.is_finite()) {
                    return Err(cfg_err("bias.field", "must be finite"));
                }
                BiasSchedule::constant(vec3(*f))
            }
            (None, Some(knots)) => BiasSchedule::new(knots.iter().map(|k| (k[0], Vec3::new(k[1], k[2], k[3]))).collect())
                .map_err(|e| cfg_err("bias.schedule", e))?,
            (None, None) => BiasSchedule::constant(Vec3::zeros()),
        };
        if !(an.eps_axis > 0.0) {
            return Err(cfg_err("analysis.eps_axis", "must be positive"));
        }
        let assembly = WireAssembly::new(wires, schedule.at(0.0), drive)
            .map_err(|e| cfg_err("wire", e))?
            .with_eps_axis(an.eps_axis);

        // Single-wire scenes have no pair; barrier commands reject them later.
        let n = self.wires.len();
        if n >= 2 && (an.wires[0] == an.wires[1] || an.wires.iter().any(|&w| w >= n)) {
            return Err(cfg_err("analysis.wires", format!("need two distinct wire indices below {n}")));
        }
        if an.grid_resolution.iter().any(|&r| r < 4) {
            return Err(cfg_err("analysis.grid_resolution", "need at least 4 nodes per axis"));
        }
        let analysis_box = match (an.box_min, an.box_max) {
            (Some(lo), Some(hi)) => Some(Aabb::new(vec3(lo), vec3(hi)).map_err(|e| cfg_err("analysis.box_max", e))?),
            (None, None) => None,
            _ => return Err(cfg_err("analysis.box_min", "box_min and box_max must be given together")),
        };
        for (name, v) in [
            ("touch_rel", an.touch_rel),
            ("tol_grad_rel", an.tol_grad_rel),
            ("tol_param", an.tol_param),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err(&format!("analysis.{name}"), "must be positive"));
            }
        }
        if an.touch_abs.is_some_and(|t| !(t >= 0.0)) {
            return Err(cfg_err("analysis.touch_abs", "must be non-negative"));
        }
        if !(an.ownership > 0.0 && an.ownership <= 1.0) {
            return Err(cfg_err("analysis.ownership", "must lie in (0, 1]"));
        }
        if an.saddle_images < 3 {
            return Err(cfg_err("analysis.saddle_images", "need at least 3"));
        }
        if !(an.bracket[0].is_finite() && an.bracket[1].is_finite() && an.bracket[0] != an.bracket[1]) {
            return Err(cfg_err("analysis.bracket", "ends must be finite and distinct"));
        }
        let barrier = BarrierOptions {
            wires: (an.wires[0], an.wires[1]),
            images: an.saddle_images,
            max_iter: an.saddle_max_iter,
            tol_grad_rel: an.tol_grad_rel,
            touch_rel: an.touch_rel,
            touch_abs: an.touch_abs,
            ownership: an.ownership,
            grid_resolution: an.grid_resolution,
            analysis_box,
        };
        let critical = CriticalOptions {
            bracket: (an.bracket[0], an.bracket[1]),
            tol_param: an.tol_param,
            prescan: an.prescan,
            max_iter: 200,
            barrier: barrier.clone(),
        };

        let dy = &self.dynamics;
        if dy.dt.is_some_and(|dt| !(dt > 0.0 && dt.is_finite())) {
            return Err(cfg_err("dynamics.dt", "must be positive"));
        }
        if !(dy.t_max >= 0.0 && dy.t_max.is_finite()) {
            return Err(cfg_err("dynamics.t_max", "must be non-negative"));
        }
        if !(dy.eta_max > 0.0) {
            return Err(cfg_err("dynamics.eta_max", "must be positive"));
        }
        if !(dy.basin_threshold > 0.0) {
            return Err(cfg_err("dynamics.basin_threshold", "must be positive"));
        }
        if dy.seed_wire >= n {
            return Err(cfg_err("dynamics.seed_wire", format!("no wire with index {}", dy.seed_wire)));
        }
        if !(dy.thermal_speed >= 0.0 && dy.thermal_speed.is_finite()) {
            return Err(cfg_err("dynamics.thermal_speed", "must be non-negative"));
        }
        let ensemble = EnsembleOptions {
            dt: dy.dt,
            t_max: dy.t_max,
            domain: None,
            eta_max: dy.eta_max,
            basin_threshold: dy.basin_threshold,
        };
        let seed = SeedSpec {
            wire: dy.seed_wire,
            particles: dy.particles,
            thermal_speed: dy.thermal_speed,
            seed: self.seed,
        };
        Ok(Scene {
            params,
            assembly,
            schedule,
            barrier,
            critical,
            ensemble,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{bundled_scene, BUNDLED_SCENES};

    fn crossed() -> String {
        BUNDLED_SCENES[0].1.to_string()
    }

    #[test]
    fn bundled_scenes_parse_and_round_trip() {
        for (name, _) in BUNDLED_SCENES {
            let cfg = bundled_scene(name).unwrap();
            let echo = cfg.to_toml();
            assert_eq!(SceneConfig::parse(&echo).unwrap(), cfg, "{name}");
            assert_eq!(SceneConfig::parse(&echo).unwrap().to_toml(), echo);
        }
    }

    #[test]
    fn default_scene_values() {
        let s = bundled_scene("crossed").unwrap().build().unwrap();
        assert_eq!(s.params.drive.frequency(), 0.8e6);
        assert_eq!(s.assembly.wires().len(), 2);
        assert!(s.assembly.wires().iter().all(|w| w.i_dc == 0.0925 && w.i_rf == 0.05));
        assert_eq!(s.seed.seed, 2024);
    }

    #[test]
    fn empty_text_reports_missing_species() {
        let e = SceneConfig::parse("").unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("species")), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for (section, key) in [
            ("[drive]", "phase = 1.0"),
            ("[analysis]", "touch = 1.0"),
            ("[dynamics]", "steps = 3"),
        ] {
            let text = crossed().replace(section, &format!("{section}\n{key}"));
            let text = if text.contains(section) {
                text
            } else {
                format!("{}\n{section}\n{key}\n", crossed())
            };
            let e = SceneConfig::parse(&text).unwrap_err();
            assert!(matches!(&e, Error::Config(m) if m.contains("unknown field")), "{section}: {e}");
        }
        let e = SceneConfig::parse(&format!("colour = 1\n{}", crossed())).unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn invalid_values_name_their_field() {
        let cases = [
            ("frequency = 0.8e6", "frequency = -0.8e6", "drive.frequency"),
            ("g_f = 0.5", "g_f = 0.0", "species"),
            (
                "field = [2.3e-5, 2.3e-5, 0.0]",
                "field = [2.3e-5, 2.3e-5, 0.0]\nschedule = [[0.0, 0.0, 0.0, 0.0]]",
                "bias",
            ),
            ("tol_param = 1e-4", "tol_param = 1e-4\nwires = [0, 0]", "analysis.wires"),
            ("direction = [1.0, 0.0, 0.0]", "direction = [0.0, 0.0, 0.0]", "wire[0].direction"),
        ];
        for (from, to, field) in cases {
            let e = SceneConfig::parse(&crossed().replacen(from, to, 1)).unwrap_err();
            assert!(matches!(&e, Error::Config(m) if m.starts_with(field)), "{to}: {e}");
        }
    }

    #[test]
    fn schedule_and_polyline() {
        let text = crossed()
            .replace(
                "field = [2.3e-5, 2.3e-5, 0.0]",
                "schedule = [[0.0, 2.3e-5, 2.3e-5, 0.0], [1e-3, 0.0, 0.0, 0.0]]",
            )
            .replacen(
                "kind = \"line\"\npoint = [0.0, 0.0, 0.0]\ndirection = [1.0, 0.0, 0.0]",
                "kind = \"polyline\"\nvertices = [[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]",
                1,
            );
        let cfg = SceneConfig::parse(&text).unwrap();
        assert_eq!(SceneConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        let s = cfg.build().unwrap();
        assert!(!s.schedule.is_static());
        assert!(matches!(s.assembly.wires()[0].geometry, WireGeometry::Polyline { .. }));
        assert_eq!(s.assembly.bias(), Vec3::new(2.3e-5, 2.3e-5, 0.0));
    }
}
