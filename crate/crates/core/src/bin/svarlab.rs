use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use svarlab_core::pipeline::stages::*;
use svarlab_core::pipeline::{run_pipeline, PipelineConfig};

#[derive(Parser)]
#[command(name = "svarlab", version, about = "Bayesian VARs with sign and zero restrictions, survey indexes and state-dependent local projections")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory relative output paths are written under.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate data from a ground-truth structural VAR.
    Simulate(SimulateArgs),
    /// Diffusion and uncertainty indexes from a firm-level survey panel.
    Indexes(IndexesArgs),
    /// Sample the BVAR posterior.
    Estimate(EstimateArgs),
    /// Rotate posterior draws to satisfy sign and zero restrictions.
    Identify(IdentifyArgs),
    /// Impulse responses with pointwise credible bands.
    Irf(IrfArgs),
    /// Historical decomposition with the median-target draw.
    Hd(HdArgs),
    /// Recursive responses to the first variable of a model.
    Girf(GirfArgs),
    /// State-dependent local projections.
    Lp(LpArgs),
    /// Run a pipeline config.
    Run(RunArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "paper-like")]
    preset: String,
    #[arg(long, default_value_t = 300)]
    t: usize,
    /// Multiply structural shocks in 2020Q2..2020Q4.
    #[arg(long, default_value_t = 1.0)]
    covid_factor: f64,
    #[arg(long, default_value = "data.csv")]
    out: PathBuf,
    #[arg(long)]
    shocks_out: Option<PathBuf>,
}

#[derive(Args)]
struct IndexesArgs {
    #[arg(long)]
    panel: PathBuf,
    /// Key=value schema describing the panel columns.
    #[arg(long)]
    schema: PathBuf,
    /// Factor for the diffusion index (repeatable; default all).
    #[arg(long)]
    factor: Vec<String>,
    /// Also compute the round-number uncertainty index and state variable.
    #[arg(long)]
    uncertainty: bool,
    #[arg(long, default_value_t = 0.5)]
    base: f64,
    #[arg(long, default_value_t = 0.2)]
    p0: f64,
    #[arg(long, default_value = "multiply")]
    scaling: String,
    #[arg(long)]
    informed_only: bool,
    #[arg(long, default_value = "indexes.csv")]
    out: PathBuf,
    /// Directory for per-index CSVs with bands.
    #[arg(long)]
    bands_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset CSV (repeatable; joined on dates).
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    variables: Vec<String>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    end: Option<String>,
    #[arg(long, default_value_t = 4)]
    lags: usize,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long)]
    optimize_lambda: bool,
    #[arg(long)]
    covid_correction: bool,
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    #[arg(long, default_value = "posterior")]
    out: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    posterior: PathBuf,
    /// Restriction file or `builtin:paper`.
    #[arg(long, default_value = "builtin:paper")]
    restrictions: String,
    #[arg(long, default_value_t = 1000)]
    accepted: usize,
    #[arg(long, default_value_t = 1000)]
    max_tries: usize,
    #[arg(long)]
    importance_weights: bool,
    #[arg(long, default_value = "drawset")]
    out: PathBuf,
    /// Data for extracting posterior-median structural shocks.
    #[arg(long)]
    data: Vec<PathBuf>,
    #[arg(long, requires = "data")]
    shocks_out: Option<PathBuf>,
}

#[derive(Args)]
struct IrfArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    drawset: PathBuf,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value_t = 0.68)]
    coverage: f64,
    #[arg(long, default_value = "irf.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct HdArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    drawset: PathBuf,
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value = "hd.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GirfArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value_t = 0.68)]
    coverage: f64,
    #[arg(long, default_value = "girf.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct LpArgs {
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long)]
    y: String,
    #[arg(long)]
    shock: String,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    s: Option<String>,
    /// `--z` already holds probabilities.
    #[arg(long)]
    z_prob: bool,
    #[arg(long)]
    s_prob: bool,
    #[arg(long, default_value_t = 5.0)]
    eta: f64,
    #[arg(long, default_value_t = 12)]
    horizons: usize,
    #[arg(long, default_value_t = 2)]
    lags: usize,
    #[arg(long, default_value_t = 2)]
    shock_lags: usize,
    /// Newey–West bandwidth: `auto`, `off` or an integer.
    #[arg(long, default_value = "auto")]
    nw: String,
    #[arg(long, default_value_t = 0.5)]
    rho_d: f64,
    #[arg(long)]
    no_covid_dummy: bool,
    #[arg(long, default_value = "lp.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
}

fn output(out_dir: &Option<PathBuf>, path: &Path) -> Result<PathBuf> {
    let full = match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    };
    if let Some(parent) = full.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(full)
}

fn execute(cli: Cli) -> Result<()> {
    let dir = &cli.out_dir;
    match cli.command {
        Command::Simulate(a) => {
            let p = SimulateParams { preset: a.preset, t: a.t, seed: None, covid_factor: a.covid_factor };
            let shocks = a.shocks_out.map(|s| output(dir, &s)).transpose()?;
            run_simulate(&p, cli.seed, &output(dir, &a.out)?, shocks.as_deref())?;
        }
        Command::Indexes(a) => {
            let p = IndexesParams {
                factors: a.factor,
                uncertainty: a.uncertainty,
                base: a.base,
                p0: a.p0,
                scaling: a.scaling,
                informed_only: a.informed_only,
                ..Default::default()
            };
            let bands = a.bands_dir.map(|b| output(dir, &b)).transpose()?;
            run_indexes(&p, &a.panel, &a.schema, &output(dir, &a.out)?, bands.as_deref())?;
        }
        Command::Estimate(a) => {
            let p = EstimateParams {
                variables: a.variables,
                start: a.start,
                end: a.end,
                lags: a.lags,
                delta: a.delta,
                lambda: a.lambda,
                optimize_lambda: a.optimize_lambda,
                covid_correction: a.covid_correction,
                draws: a.draws,
                ..Default::default()
            };
            run_estimate(&p, &a.data, cli.seed, &output(dir, &a.out)?)?;
        }
        Command::Identify(a) => {
            let p = IdentifyParams {
                accepted: a.accepted,
                max_tries: a.max_tries,
                importance_weights: a.importance_weights,
                ..Default::default()
            };
            let restrictions = load_restrictions(&a.restrictions, |r| Ok(PathBuf::from(r)))?;
            let shocks = a.shocks_out.map(|s| output(dir, &s)).transpose()?;
            run_identify(&p, &a.posterior, &restrictions, &a.data, cli.seed, &output(dir, &a.out)?, shocks.as_deref())?;
        }
        Command::Irf(a) => {
            let p = IrfParams { horizon: a.horizon, coverage: a.coverage, ..Default::default() };
            run_irf(&p, &a.posterior, &a.drawset, &output(dir, &a.out)?)?;
        }
        Command::Hd(a) => {
            let p = HdParams { horizon: a.horizon, ..Default::default() };
            run_hd(&p, &a.posterior, &a.drawset, &a.data, &output(dir, &a.out)?)?;
        }
        Command::Girf(a) => {
            let p = GirfParams { horizon: a.horizon, coverage: a.coverage, ..Default::default() };
            run_girf(&p, &a.posterior, &output(dir, &a.out)?)?;
        }
        Command::Lp(a) => {
            let p = LpParams {
                y: a.y,
                shock: a.shock,
                z: a.z,
                s: a.s,
                z_prob: a.z_prob,
                s_prob: a.s_prob,
                eta: a.eta,
                horizons: a.horizons,
                lags: a.lags,
                shock_lags: a.shock_lags,
                nw: a.nw,
                rho_d: a.rho_d,
                covid_dummy: !a.no_covid_dummy,
                ..Default::default()
            };
            run_lp(&p, &a.data, &output(dir, &a.out)?)?;
        }
        Command::Run(a) => {
            let mut cfg = PipelineConfig::load(&a.config)?;
            if let Some(d) = dir {
                cfg.out_dir = d.clone();
            }
            let manifest = run_pipeline(&cfg)?;
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
