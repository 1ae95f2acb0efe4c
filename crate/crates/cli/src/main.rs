#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use qsynapse::io::{bundled_scene, RunReport, SceneConfig};
use qsynapse::Error;

use args::{Cli, Command};
use commands::{CliError, CliResult, Outcome};

const EXIT_DOMAIN: i32 = 1;
const EXIT_USAGE: i32 = 2;

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Field(_) => "field",
        Command::Potential(_) => "potential",
        Command::Grid(_) => "grid",
        Command::Surface(_) => "surface",
        Command::Zeros(_) => "zeros",
        Command::Barrier(_) => "barrier",
        Command::Critical(_) => "critical",
        Command::Sweep(_) => "sweep",
        Command::Trace(_) => "trace",
    }
}

fn load_config(cli: &Cli) -> CliResult<SceneConfig> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            SceneConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        }
        None => Ok(bundled_scene(&cli.scene)?),
    }
}

fn dispatch(cli: &Cli, cfg: &SceneConfig) -> CliResult<Outcome> {
    let scene = cfg.build()?;
    let mut warnings = Vec::new();
    if scene.params.drive.quasi_static_warning() {
        warnings.push(format!(
            "drive frequency {:e} Hz is above 1 MHz; the quasi-static RF field model may not hold",
            scene.params.drive.frequency()
        ));
    }
    if !scene.schedule.is_static() && !matches!(cli.command, Command::Trace(_)) {
        warnings.push("bias schedule present; static analyses use its value at t = 0".into());
    }
    let mut out = match &cli.command {
        Command::Field(a) => commands::field(&scene, a),
        Command::Potential(a) => commands::potential(&scene, a),
        Command::Grid(a) => commands::grid(&scene, a),
        Command::Surface(a) => commands::surface(&scene, a),
        Command::Zeros(a) => commands::zeros(&scene, a),
        Command::Barrier(a) => commands::barrier(&scene, a),
        Command::Critical(a) => commands::critical(&scene, a),
        Command::Sweep(a) => commands::sweep(&scene, a),
        Command::Trace(a) => commands::trace(&scene, a),
    }?;
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

fn write_report(report: &RunReport, path: &Path) {
    let json = report.to_json();
    if path == Path::new("-") {
        println!("{json}");
    } else if let Err(e) = std::fs::write(path, json + "\n") {
        eprintln!("error: cannot write report {}: {e}", path.display());
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    return ExitCode::from(if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_USAGE as u8
                    } else {
                        0
                    });
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            let path = report_path_from_argv(&argv);
            let mut report = RunReport::new(argv, "", 1);
            report.fail(code, e.render().to_string().trim_end().to_string());
            write_report(&report, Path::new(&path));
            return ExitCode::from(code as u8);
        }
    };

    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);
    let start = Instant::now();
    let mut report = RunReport::new(argv, subcommand_name(&cli.command), workers);

    let result = load_config(&cli).and_then(|cfg| {
        report.config = Some(cfg.to_toml());
        qsynapse::with_workers(workers, || dispatch(&cli, &cfg))
    });
    let code = match result {
        Ok(out) => {
            report.results = out.results;
            report.warnings = out.warnings;
            0
        }
        Err(e) => {
            let (code, msg) = match e {
                CliError::Usage(m) => (EXIT_USAGE, m),
                CliError::Domain(e) => (EXIT_DOMAIN, domain_message(&e)),
            };
            eprintln!("error: {msg}");
            report.fail(code, msg);
            code
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    write_report(&report, &cli.report);
    ExitCode::from(code as u8)
}

/// Best-effort `--report` lookup for runs whose arguments failed to parse.
fn report_path_from_argv(argv: &[String]) -> String {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--report" {
            if let Some(p) = it.next() {
                return p.clone();
            }
        } else if let Some(p) = a.strip_prefix("--report=") {
            return p.to_string();
        }
    }
    "qsynapse-report.json".into()
}

fn domain_message(e: &Error) -> String {
    match e {
        Error::NoBracket { .. } => format!("{e} (widen --bracket)"),
        _ => e.to_string(),
    }
}
