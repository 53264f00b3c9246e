//! `swgmm` command-line interface.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors, 3 when a fit
//! breaks down numerically.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use swgmm::experiments::{self, CompareConfig, Scenario};
use swgmm::ot1d::DEFAULT_GRID;
use swgmm::swm::GradientRule;
use swgmm::{datasets, io, Distribution, EmConfig, Error, FitTrace, SwmConfig};

#[derive(Parser)]
#[command(name = "swgmm", version, about = "Gaussian mixtures fitted by sliced-Wasserstein descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Fit a mixture to CSV data and write the model as JSON.
    Fit(FitArgs),
    /// Print NLL and sliced-Wasserstein distance of a model on data as JSON.
    Eval(EvalArgs),
    /// Tabulate the NLL and Wasserstein energy landscapes of a 1-D toy problem.
    Landscape(LandscapeArgs),
    /// Fit EM and SWM from shared random initializations and compare them.
    Compare(CompareArgs),
    /// Draw samples from a model.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetName {
    RingSquareLine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Swm,
    Em,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gradient {
    Transport,
    Density,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Nll,
    Sw,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dataset: DatasetName,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = datasets::DEFAULT_NOISE)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_enum, default_value = "swm")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directions per iteration.
    #[arg(long)]
    projections: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Quadrature nodes per direction.
    #[arg(long)]
    quad: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum)]
    gradient: Option<Gradient>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "nll,sw")]
    metrics: Vec<Metric>,
    #[arg(long, default_value_t = 500)]
    projections: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(clap::Args)]
struct LandscapeArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    scenario: u8,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative NLL gap to the best run that still counts as a success.
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    /// SWM iterations per run.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
        Command::Landscape(a) => landscape(a),
        Command::Compare(a) => compare(a),
        Command::Sample(a) => sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn write(path: &Path, text: &str) -> swgmm::Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn gen(a: GenArgs) -> swgmm::Result<()> {
    let data = match a.dataset {
        DatasetName::RingSquareLine => datasets::gen_ring_square_line(a.n as usize, a.seed, a.noise)?,
    };
    datasets::save_csv(&data, &a.out)
}

fn fit(a: FitArgs) -> swgmm::Result<()> {
    let data = datasets::load_csv(&a.input)?;
    let k = a.k as usize;
    let result = match a.method {
        Method::Swm => {
            let d = SwmConfig::default();
            let config = SwmConfig {
                seed: a.seed,
                l: a.projections.unwrap_or(d.l),
                iters: a.iters.unwrap_or(d.iters),
                lr: a.lr.unwrap_or(d.lr),
                quad_points: a.quad.unwrap_or(d.quad_points),
                p: a.p.unwrap_or(d.p),
                gradient: match a.gradient {
                    Some(Gradient::Density) => GradientRule::Density,
                    Some(Gradient::Transport) | None => GradientRule::Transport,
                },
                ..d
            };
            swgmm::fit_swm(&data, k, &config, None)
        }
        Method::Em => {
            let d = EmConfig::default();
            let config = EmConfig { seed: a.seed, iters: a.iters.unwrap_or(d.iters), ..d };
            swgmm::fit_em(&data, k, &config, None)
        }
    };
    match result {
        Ok((model, trace)) => {
            io::save_model(&model, &a.out)?;
            write_trace(a.trace.as_deref(), &trace)
        }
        Err(Error::Diverged { iteration, trace }) => {
            write_trace(a.trace.as_deref(), &trace)?;
            Err(Error::Diverged { iteration, trace })
        }
        Err(e) => Err(e),
    }
}

fn write_trace(path: Option<&Path>, trace: &FitTrace) -> swgmm::Result<()> {
    match path {
        Some(p) => trace.write_csv(p),
        None => Ok(()),
    }
}

fn eval(a: EvalArgs) -> swgmm::Result<()> {
    let model = io::load_model(&a.model)?;
    let data = datasets::load_csv(&a.input)?;
    let mut out = serde_json::Map::new();
    if a.metrics.contains(&Metric::Nll) {
        out.insert("nll".into(), swgmm::nll(&model, &data)?.into());
    }
    if a.metrics.contains(&Metric::Sw) {
        let sw = swgmm::sliced_wasserstein(
            Distribution::Model(&model),
            Distribution::Data(&data),
            a.p,
            a.projections,
            DEFAULT_GRID,
            a.seed,
        )?;
        out.insert("sw".into(), sw.into());
    }
    println!("{}", serde_json::Value::Object(out));
    Ok(())
}

fn landscape(a: LandscapeArgs) -> swgmm::Result<()> {
    let scenario = Scenario::try_from(a.scenario)?;
    let l = experiments::landscape(scenario, a.n as usize, a.grid as usize, a.seed, a.p)?;
    write(&a.out, &l.to_csv())
}

fn compare(a: CompareArgs) -> swgmm::Result<()> {
    let data = datasets::load_csv(&a.input)?;
    let d = CompareConfig::default();
    let swm = SwmConfig { iters: a.iters.unwrap_or(d.swm.iters), ..d.swm.clone() };
    let config = CompareConfig { k: a.k as usize, runs: a.runs as usize, seed: a.seed, delta: a.delta, swm, ..d };
    let report = experiments::compare(&data, &config)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write(&a.out, &text)
}

fn sample(a: SampleArgs) -> swgmm::Result<()> {
    let model = io::load_model(&a.model)?;
    let data = datasets::gen_gmm_samples(&model, a.n as usize, a.seed)?;
    datasets::save_csv(&data, &a.out)
}
