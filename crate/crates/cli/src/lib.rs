//! Command-line driver: configuration, experiments and result files.

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use config::Config;
use experiments::RunError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cqreduce",
    version,
    about = "Coherent-state reduction experiments",
    after_help = "COMMAND is an experiment name, `validate`, `list` (experiment names) or `keys` (config keys)."
)]
struct Cli {
    command: String,
    /// Config file for `validate`, as an alternative to --config.
    path: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; results land in `<out>/<experiment>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` overrides applied after the config file.
    #[arg(long = "override", visible_alias = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, String> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Config::from_toml(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Config::default(),
    };
    for o in overrides {
        config
            .apply_override(o)
            .map_err(|e| format!("--set {o}: {e}"))?;
    }
    Ok(config)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    let config_path = cli.config.as_deref().or(cli.path.as_deref());
    match cli.command.as_str() {
        "list" => {
            for name in experiments::NAMES {
                println!("{name}");
            }
            EXIT_PASS
        }
        "keys" => {
            for key in config::keys() {
                println!("{key}");
            }
            EXIT_PASS
        }
        "validate" => match load(config_path, &cli.overrides) {
            Ok(c) => {
                print!("{}", c.canonical());
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        experiment => {
            if cli.path.is_some() {
                eprintln!("error: pass the config file with --config");
                return EXIT_CONFIG;
            }
            run_experiment(experiment, config_path, cli.out, &cli.overrides)
        }
    }
}

fn run_experiment(
    experiment: &str,
    config_path: Option<&Path>,
    out: Option<PathBuf>,
    overrides: &[String],
) -> i32 {
    if !experiments::NAMES.contains(&experiment) {
        eprintln!(
            "error: unknown experiment `{experiment}`; expected one of {}",
            experiments::NAMES.join(", ")
        );
        return EXIT_CONFIG;
    }
    let config = match load(config_path, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if !config.experiment.is_empty() && config.experiment != experiment {
        eprintln!(
            "error: config is for `{}` but `{experiment}` was requested",
            config.experiment
        );
        return EXIT_CONFIG;
    }
    let record = match experiments::run(experiment, &config) {
        Ok(r) => r,
        Err(e @ RunError::Config(_)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e @ RunError::Internal(_)) => {
            eprintln!("error: {e}");
            return EXIT_INTERNAL;
        }
    };
    let dir = out
        .unwrap_or_else(|| PathBuf::from(&config.output_dir))
        .join(experiment);
    if let Err(e) = record.write(&dir) {
        eprintln!("error: writing {}: {e}", dir.display());
        return EXIT_INTERNAL;
    }
    for (name, value) in &record.metrics.0 {
        println!("{name} = {}", output::format_float(*value));
    }
    for f in &record.failures {
        println!("failed: {f}");
    }
    println!(
        "{experiment}: {} ({})",
        if record.passed { "PASS" } else { "FAIL" },
        dir.display()
    );
    if record.passed {
        EXIT_PASS
    } else {
        EXIT_TOLERANCE
    }
}
