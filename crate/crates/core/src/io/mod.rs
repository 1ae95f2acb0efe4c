//! Scene files, bundled scenes, output formats and run reports.

pub mod config;
pub mod export;
pub mod report;

pub use config::{Scene, SceneConfig};
pub use report::RunReport;

use crate::error::{Error, Result};

/// Scenes shipped with the crate, by name. The first is the default.
pub const BUNDLED_SCENES: [(&str, &str); 3] = [
    ("crossed", include_str!("../../scenes/crossed.toml")),
    ("single", include_str!("../../scenes/single.toml")),
    ("parallel", include_str!("../../scenes/parallel.toml")),
];

pub fn bundled_scene(name: &str) -> Result<SceneConfig> {
    let (_, text) = BUNDLED_SCENES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "scene",
            name: name.to_string(),
            available: BUNDLED_SCENES.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        })?;
    SceneConfig::parse(text)
}

pub fn default_scene() -> SceneConfig {
    bundled_scene(BUNDLED_SCENES[0].0).expect("bundled scene is valid")
}
