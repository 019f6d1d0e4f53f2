use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use super::config::{ExperimentSpec, ModelConfig, OutputFormat};
use super::report::{emit_chains_csv, emit_csv, emit_json, Report};
use super::run::{oracles, run_checks, run_experiment, run_experiment_with_workers};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tula", version, about = "Tamed Langevin sampler benchmarks")]
struct Cli {
    /// Override the master seed of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the output directory of the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Which reports to write.
    #[arg(long, global = true, value_parser = ["csv", "json", "both"])]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write the summary reports.
    Run { config: PathBuf },
    /// Print the assumption-checker reports for a config as JSON.
    Check { config: PathBuf },
    /// Print the reference moments of a model. For ginzburg_landau, D is the lattice side.
    Oracle { model: String, d: usize },
}

/// Entry point of the `tula` binary. Returns the process exit code:
/// 0 on success, 2 on invalid input, 1 on runtime failure.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(seed) = cli.seed {
        spec.master_seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        spec.output.dir = dir.clone();
    }
    if let Some(f) = &cli.format {
        spec.output.format = f.parse()?;
    }
    if cli.workers == Some(0) {
        return Err(Error::InvalidArgument("--workers must be >= 1".into()));
    }
    Ok(spec)
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let spec = load(&cli, config)?;
            run(&spec, cli.workers)
        }
        Command::Check { config } => {
            let spec = load(&cli, config)?;
            let diag = run_checks(&spec)?;
            let text = serde_json::to_string_pretty(&diag)
                .map_err(|e| Error::NumericalFailure(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::Oracle { model, d } => oracle(model, *d),
    }
}

fn run(spec: &ExperimentSpec, workers: Option<usize>) -> Result<()> {
    let out = match workers {
        Some(w) => run_experiment_with_workers(spec, w)?,
        None => run_experiment(spec)?,
    };
    let dir = &spec.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let format: OutputFormat = spec.output.format;
    if format.csv() {
        let path = dir.join(&spec.output.csv);
        emit_csv(&out.rows, &path)?;
        println!("wrote {}", path.display());
    }
    if format.json() {
        let diagnostics = run_checks(spec)?;
        let report = Report::new(spec.clone(), out.rows.clone(), diagnostics, oracles(spec)?);
        let path = dir.join(&spec.output.json);
        emit_json(&report, &path)?;
        println!("wrote {}", path.display());
    }
    if spec.output.persist_raw {
        let path = dir.join("chains.csv");
        emit_chains_csv(&out.chains, &path)?;
        println!("wrote {}", path.display());
    }
    let diverged: usize = out.chains.iter().filter(|c| c.result.diverged).count();
    let excluded: usize = out.chains.iter().filter(|c| c.result.excluded).count();
    info!("{} chains, {diverged} diverged, {excluded} excluded", out.chains.len());
    Ok(())
}

fn oracle(name: &str, d: usize) -> Result<()> {
    let config = match name {
        "gaussian" => ModelConfig::Gaussian {
            dimension: d,
            variances: None,
        },
        "ill_conditioned_gaussian" => ModelConfig::IllConditionedGaussian {
            dimension: d,
            smallest_variance: 1e-5,
        },
        "double_well" => ModelConfig::DoubleWell { dimension: d },
        "ginzburg_landau" => ModelConfig::GinzburgLandau {
            side: d,
            tau: crate::potentials::DEFAULT_GL_TAU,
            alpha: crate::potentials::DEFAULT_GL_ALPHA,
            lambda: crate::potentials::DEFAULT_GL_LAMBDA,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown model {other:?}; expected gaussian, ill_conditioned_gaussian, double_well or ginzburg_landau"
            )))
        }
    };
    let model = config.build()?;
    println!("{} (d = {})", model.name(), model.dimension());
    for order in [1, 2] {
        let values: Vec<_> = model
            .reference_moments()
            .iter()
            .filter(|m| m.order == order)
            .collect();
        if values.is_empty() {
            println!("E[x_i^{order}]: no reference value");
        } else if values.len() == model.dimension() && values.iter().all(|m| m.value == values[0].value) {
            println!("E[x_i^{order}] = {} for every coordinate", values[0].value);
        } else {
            for m in values {
                println!("E[x_{}^{order}] = {}", m.coordinate, m.value);
            }
        }
    }
    Ok(())
}
