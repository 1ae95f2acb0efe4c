use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const WORKERS_ENV: &str = "QSYNAPSE_WORKERS";

/// RF-dressed wire traps: fields, potentials, barriers and transport.
#[derive(Debug, Parser)]
#[command(name = "qsynapse", version)]
pub struct Cli {
    /// Bundled scene (crossed, single, parallel); ignored when --config is given.
    #[arg(long, global = true, default_value = "crossed")]
    pub scene: String,

    /// Scene file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,

    /// Where the JSON run report goes ("-" for stdout).
    #[arg(long, global = true, default_value = "qsynapse-report.json")]
    pub report: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static and RF field at a point.
    Field(PointArgs),
    /// Dressed potential sample at a point.
    Potential(PointArgs),
    /// Sample a scalar on a regular grid.
    Grid(GridArgs),
    /// Isosurface or minimum-surface mesh as ASCII PLY.
    Surface(SurfaceArgs),
    /// Zeros of the static field.
    Zeros(ZerosArgs),
    /// Barrier between the analysed wire traps.
    Barrier(BarrierArgs),
    /// Parameter value at which the barrier closes.
    Critical(CriticalArgs),
    /// One-parameter sweep of an observable.
    Sweep(SweepArgs),
    /// Classical trajectory or ensemble transfer.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Point in metres: x,y,z.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub at: [f64; 3],

    #[arg(long, value_enum, default_value = "csv")]
    pub format: PointFormat,
}

#[derive(Debug, Args)]
pub struct BoxArgs {
    /// Box in metres: xmin,ymin,zmin,xmax,ymax,zmax (default: scene analysis box).
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    pub bounds: Option<[f64; 6]>,

    /// Nodes per axis: n or nx,ny,nz (default: scene grid resolution).
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<[usize; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridFormat {
    Csv,
    Binary,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub grid: BoxArgs,

    /// Scalar to sample (bdc, brf, potential, detuning, rabi).
    #[arg(long, default_value = "potential")]
    pub source: String,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: GridFormat,

    /// Output file (default stdout; required for binary).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceKind {
    Iso,
    Minimum,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long, value_enum, default_value = "iso")]
    pub kind: SurfaceKind,

    #[command(flatten)]
    pub grid: BoxArgs,

    /// Scalar for the isosurface.
    #[arg(long, default_value = "potential")]
    pub source: String,

    /// Absolute iso level in the source's unit.
    #[arg(long, conflicts_with = "above_min", allow_hyphen_values = true)]
    pub level: Option<f64>,

    /// Iso level as an offset above the sampled minimum (default: 10% of the sampled range).
    #[arg(long)]
    pub above_min: Option<f64>,

    /// Wire for the minimum surface.
    #[arg(long, default_value_t = 0)]
    pub wire: usize,

    #[arg(long, default_value_t = 32)]
    pub azimuths: usize,

    /// Axial stations, centred on the closest approach to the other wires.
    #[arg(long, default_value_t = 9)]
    pub axials: usize,

    /// Axial spacing in units of the wire's resonance radius.
    #[arg(long, default_value_t = 0.5)]
    pub axial_step: f64,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZerosArgs {
    #[command(flatten)]
    pub grid: BoxArgs,
}

#[derive(Debug, Args)]
pub struct BarrierArgs {
    /// Estimator (full, geometric).
    #[arg(long, default_value = "full")]
    pub mode: String,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Parameter to vary (idc, irf, bias-x, bias-y, bias-z, frequency).
    #[arg(long, default_value = "idc")]
    pub vary: String,

    /// Search bracket lo,hi (default: scene analysis.bracket).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub bracket: Option<[f64; 2]>,

    #[arg(long, default_value = "full")]
    pub mode: String,

    /// Bracket width at which to stop (default: scene analysis.tol_param).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "idc")]
    pub vary: String,

    /// Range lo,hi.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub range: [f64; 2],

    #[arg(long, default_value_t = 11)]
    pub steps: usize,

    /// Observable (barrier, touching, min-radius, separation).
    #[arg(long, default_value = "barrier")]
    pub observable: String,

    /// Wire observed by min-radius.
    #[arg(long, default_value_t = 0)]
    pub wire: usize,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Run a thermal ensemble from the seed well instead of one trajectory.
    #[arg(long)]
    pub ensemble: bool,

    /// Start position in metres (default: seed well of dynamics.seed_wire).
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub position: Option<[f64; 3]>,

    /// Start velocity in m/s.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    pub velocity: [f64; 3],

    /// Duration in seconds (default: dynamics.t_max).
    #[arg(long)]
    pub t_max: Option<f64>,

    /// Time step in seconds (default: dynamics.dt, else trap period / 200).
    #[arg(long)]
    pub dt: Option<f64>,

    /// Keep every n-th step of a single trajectory.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,

    /// Ensemble size (default: dynamics.particles).
    #[arg(long)]
    pub particles: Option<usize>,

    /// Ensemble RNG seed (default: scene seed).
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(v)
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v = parse_list(s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_box(s: &str) -> Result<[f64; 6], String> {
    let v = parse_list(s, 6)?;
    Ok([v[0], v[1], v[2], v[3], v[4], v[5]])
}

fn parse_resolution(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [n] => Ok([*n; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err("expected n or nx,ny,nz".into()),
    }
}
