//! JSON run reports written by every CLI invocation.

use serde::Serialize;
use serde_json::Value;

use super::config::SceneConfig;

pub const TOOL: &str = "qsynapse";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    /// Command line as given, program name excluded.
    pub command: Vec<String>,
    pub subcommand: String,
    /// Canonical TOML of the scene used; absent when the scene could not be loaded.
    pub config: Option<String>,
    pub workers: usize,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub results: Value,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: Vec<String>, subcommand: &str, workers: usize) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            subcommand: subcommand.to_string(),
            config: None,
            workers,
            status: "ok",
            exit_code: 0,
            error: None,
            warnings: Vec::new(),
            results: Value::Null,
            wall_time_s: 0.0,
        }
    }

    pub fn with_config(mut self, cfg: &SceneConfig) -> Self {
        self.config = Some(cfg.to_toml());
        self
    }

    pub fn fail(&mut self, exit_code: i32, message: String) {
        self.status = if exit_code == 2 { "usage-error" } else { "domain-error" };
        self.exit_code = exit_code;
        self.error = Some(message);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}
