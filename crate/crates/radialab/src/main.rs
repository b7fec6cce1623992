//! Command-line front end: resolve a configuration from defaults, an
//! optional TOML file, and flags (in that order), run the experiment, and
//! write the report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use radialab::error::{Error, Result};
use radialab::exec;
use radialab::experiments::{
    self, ExperimentConfig, ExperimentKind, OutputFormat, Overrides, ShapeConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "radialab",
    about = "Concentration experiments for radial densities in high dimension",
    after_help = "Precedence: built-in defaults, then --config file values, then flags.\n\
                  RADIALAB_THREADS caps the worker count (0 or unset = one per core)."
)]
struct Cli {
    /// Experiment: sweep, limit-ks, constant-check, ud-check, indistinguishability.
    experiment: String,

    /// TOML config file with [experiment], [shape] (or [shape.A]/[shape.B]), [output].
    #[arg(long)]
    config: Option<PathBuf>,

    /// Shape name (uniform-ball, triangle, gaussian, power, logpoly, log-tail).
    /// For indistinguishability this fills both slots (a null comparison).
    #[arg(long)]
    shape: Option<String>,

    /// Shape parameters as comma-separated key=value pairs, e.g. alpha=1,beta=2.
    /// Replaces any parameters from the config file.
    #[arg(long)]
    params: Option<String>,

    /// Comma-separated dimension grid, e.g. 10,100,1000.
    #[arg(long)]
    dims: Option<String>,

    /// Samples per (dimension, replicate) cell.
    #[arg(long)]
    n: Option<usize>,

    /// Sampling replicates per dimension.
    #[arg(long)]
    replicates: Option<usize>,

    /// Master seed for the counter-based sampler.
    #[arg(long)]
    seed: Option<u64>,

    /// Quadrature relative tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Report file; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format: csv or json.
    #[arg(long)]
    format: Option<String>,

    /// Directory for raw sample batches (one file per shape, dimension, replicate).
    #[arg(long = "dump-samples")]
    dump_samples: Option<PathBuf>,
}

fn parse_dims(text: &str) -> Result<Vec<f64>> {
    let mut dims = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        dims.push(part.parse::<f64>().map_err(|_| {
            Error::Config(format!("--dims entry {part:?} is not a number"))
        })?);
    }
    if dims.is_empty() {
        return Err(Error::Config("--dims is empty".into()));
    }
    Ok(dims)
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut params = BTreeMap::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part.split_once('=').ok_or_else(|| {
            Error::Config(format!("--params entry {part:?} is not key=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::Config(format!("--params value for {:?} is not a number", key.trim()))
        })?;
        params.insert(key.trim().to_owned(), value);
    }
    Ok(params)
}

fn flag_overrides(cli: &Cli, current: &ExperimentConfig) -> Result<Overrides> {
    let mut o = Overrides::default();
    if cli.shape.is_some() || cli.params.is_some() {
        let params = match &cli.params {
            Some(text) => parse_params(text)?,
            None => BTreeMap::new(),
        };
        let shapes = match &cli.shape {
            Some(name) => {
                let one = ShapeConfig {
                    name: name.clone(),
                    params,
                };
                if current.experiment == ExperimentKind::Indistinguishability {
                    vec![one.clone(), one]
                } else {
                    vec![one]
                }
            }
            // --params without --shape re-parameterizes the configured shapes.
            None => current
                .shapes
                .iter()
                .map(|s| ShapeConfig {
                    name: s.name.clone(),
                    params: params.clone(),
                })
                .collect(),
        };
        o.shapes = Some(shapes);
    }
    if let Some(dims) = &cli.dims {
        o.d_grid = Some(parse_dims(dims)?);
    }
    o.n = cli.n;
    o.replicates = cli.replicates;
    o.master_seed = cli.seed;
    o.tol = cli.tol;
    o.out = cli.out.clone();
    if let Some(format) = &cli.format {
        o.format = Some(OutputFormat::from_name(format)?);
    }
    o.dump_dir = cli.dump_samples.clone();
    Ok(o)
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let kind = ExperimentKind::from_name(&cli.experiment)?;
    let mut config = ExperimentConfig::defaults(kind);
    if let Some(path) = &cli.config {
        let (name, file) = experiments::load_config_file(path)?;
        if let Some(name) = name {
            let file_kind = ExperimentKind::from_name(&name)?;
            if file_kind != kind {
                return Err(Error::Config(format!(
                    "config file names experiment {}, but {} was requested",
                    file_kind.name(),
                    kind.name()
                )));
            }
        }
        config.apply(file);
    }
    let flags = flag_overrides(cli, &config)?;
    config.apply(flags);
    Ok(config)
}

fn try_main(cli: &Cli) -> Result<()> {
    let config = resolve_config(cli)?;
    let report = match exec::configured_threads()? {
        Some(threads) => exec::with_threads(threads, || experiments::run(&config)),
        None => experiments::run(&config),
    }?;
    let cells = config.d_grid.len() * config.replicates;
    match &config.out {
        Some(path) => {
            report.write_atomic(path, config.format)?;
            println!(
                "{}: {} rows across {} cells -> {}",
                report.experiment,
                report.rows.len(),
                cells,
                path.display()
            );
        }
        None => {
            // The report owns stdout, so the summary moves to stderr.
            print!("{}", report.render(config.format));
            eprintln!(
                "{}: {} rows across {} cells",
                report.experiment,
                report.rows.len(),
                cells
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match try_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
