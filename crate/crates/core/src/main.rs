use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prox_langevin::experiments::{run_command, Command, ExperimentConfig};
use prox_langevin::Error;

#[derive(Parser)]
#[command(name = "prox-langevin", version, about = "Proximal Langevin samplers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Step sizes and step counts over a grid of condition numbers.
    TheoryTable(RunArgs),
    /// Gaussian-mixture denoising: per-pixel W2 of exact, IMLA, ILA and ULA.
    Gmm(RunArgs),
    /// MYULA, IMLA and ILA on a one-dimensional target.
    Onedim(RunArgs),
    /// R-MYULA and R-IMLA on a TV-regularised deconvolution posterior.
    Deconv(RunArgs),
    /// A single chain, or a Gaussian moment sweep when `sample.replicas > 0`.
    Sample(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config overrides as `--section.key value` pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, Error> {
    let mut pairs = Vec::new();
    let mut it = raw.iter();
    while let Some(tok) = it.next() {
        let key = tok
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --key, found {tok:?}")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Error::Config(format!("--{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        let key = key.replace('-', "_");
        if key == "out" {
            pairs.push(("output_dir".into(), toml::Value::String(value).to_string()));
        } else {
            pairs.push((key, value));
        }
    }
    Ok(pairs)
}

fn run(cmd: Command, args: RunArgs) -> Result<serde_json::Value, Error> {
    let mut overrides = parse_overrides(&args.overrides)?;
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &args.out {
        overrides.push(("output_dir".into(), toml::Value::String(out.display().to_string()).to_string()));
    }
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, &overrides)?,
        None => {
            let mut table = toml::Table::new();
            prox_langevin::experiments::config::apply_overrides(&mut table, &overrides)?;
            ExperimentConfig::from_table(table)?
        }
    };
    run_command(cmd, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::TheoryTable(a) => (Command::TheoryTable, a),
        Cmd::Gmm(a) => (Command::Gmm, a),
        Cmd::Onedim(a) => (Command::Onedim, a),
        Cmd::Deconv(a) => (Command::Deconv, a),
        Cmd::Sample(a) => (Command::Sample, a),
    };
    match run(cmd, args) {
        Ok(summary) => {
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else if matches!(e, Error::Config(_) | Error::InvalidParameter(_) | Error::Unsupported(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
