//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad or inconsistent
//! flags), 3 for data errors (unreadable inputs, invalid specs, estimator
//! preconditions).

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::domain::{Location, Margin, Region};
use crate::error::Error;
use crate::estimators::{estimate_grid, lambda_slice_with, EstimatorKind, LambdaConvention};
use crate::ingest::{
    align, analyze_pair, analyze_slice, export_grid, export_panel, export_slice,
    load_station_csv, AlignPolicy, FileFormat,
};
use crate::m4::{analytic_grid, simulate_m4, M4Spec};
use crate::study::{default_grid, run_study, StudyConfig};

#[derive(Debug, Parser)]
#[command(name = "madogram", version, about = "Generalized madogram toolkit")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: FormatArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for FileFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => FileFormat::Csv,
            FormatArg::Json => FileFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorArg {
    KnownMargins,
    EmpiricalMargins,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::KnownMargins => EstimatorKind::KnownMargins,
            EstimatorArg::EmpiricalMargins => EstimatorKind::EmpiricalMargins,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    PerLocation,
    Figure9,
}

impl From<ConventionArg> for LambdaConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::PerLocation => LambdaConvention::PerLocation,
            ConventionArg::Figure9 => LambdaConvention::Figure9,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    CompleteYears,
    FailOnMissing,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an M4 field and write the panel as CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Locations as "(i,j);(i,j)"; defaults to every location in the spec.
        #[arg(long)]
        locations: Option<String>,
        /// Number of independent fields (rows).
        #[arg(short = 'T', long = "fields")]
        fields: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form madogram grid.
    Analytic {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        regions: LatticeRegions,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a grid or lambda slice from a panel CSV.
    Estimate {
        #[arg(long)]
        panel: PathBuf,
        #[command(flatten)]
        regions: LatticeRegions,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        slice: SliceArgs,
        #[arg(long, value_enum, default_value = "empirical-margins")]
        estimator: EstimatorArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a replication study from a JSON config.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze station annual maxima.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        /// Station ids, comma separated.
        #[arg(long = "region-x")]
        region_x: String,
        #[arg(long = "region-y")]
        region_y: String,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        slice: SliceArgs,
        #[arg(long, value_enum, default_value = "complete-years")]
        policy: PolicyArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct LatticeRegions {
    /// Region x as "(i,j);(i,j)".
    #[arg(long = "region-x")]
    pub region_x: String,
    #[arg(long = "region-y")]
    pub region_y: String,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// "start:stop:step", a comma list, or one value; defaults to 0.2:20:0.2.
    #[arg(long, visible_alias = "alpha")]
    pub alphas: Option<String>,
    #[arg(long, visible_alias = "beta")]
    pub betas: Option<String>,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// Lambda values in (0, 1); switches output to a lambda slice.
    #[arg(long, visible_alias = "lambda")]
    pub lambdas: Option<String>,
    #[arg(long, value_enum, default_value = "per-location")]
    pub convention: ConventionArg,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `start:stop:step`, `a,b,c` or a single number.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("invalid number {t:?} in grid {s:?}")))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("range {s:?} must be start:stop:step")));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && stop >= start) {
            return Err(usage(format!("range {s:?} needs step > 0 and stop >= start")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(usage(format!("grid {s:?} is empty")));
    }
    Ok(values)
}

fn positive_grid(s: Option<&str>) -> Result<Vec<f64>, CliError> {
    let values = match s {
        Some(s) => parse_grid(s)?,
        None => default_grid(),
    };
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(usage(format!("grid values must be > 0, got {bad}")));
    }
    Ok(values)
}

fn lambda_list(s: &str) -> Result<Vec<f64>, CliError> {
    let values = parse_grid(s)?;
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(usage(format!("lambda values must lie in (0, 1), got {bad}")));
    }
    Ok(values)
}

fn lattice_regions(r: &LatticeRegions) -> Result<(Region, Region), CliError> {
    let x = Region::parse_lattice(&r.region_x).map_err(usage)?;
    let y = Region::parse_lattice(&r.region_y).map_err(usage)?;
    Ok((x, y))
}

fn station_ids(s: &str) -> Result<Vec<String>, CliError> {
    let ids: Vec<String> = s
        .split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    if ids.is_empty() {
        return Err(usage(format!("no station ids in {s:?}")));
    }
    Ok(ids)
}

enum Output {
    Grid(Vec<f64>, Vec<f64>),
    Slice(Vec<f64>, LambdaConvention),
}

fn output_mode(grid: &GridArgs, slice: &SliceArgs) -> Result<Output, CliError> {
    match &slice.lambdas {
        Some(l) => {
            if grid.alphas.is_some() || grid.betas.is_some() {
                return Err(usage("--lambdas cannot be combined with --alphas/--betas"));
            }
            Ok(Output::Slice(lambda_list(l)?, slice.convention.into()))
        }
        None => Ok(Output::Grid(
            positive_grid(grid.alphas.as_deref())?,
            positive_grid(grid.betas.as_deref())?,
        )),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let format: FileFormat = cli.format.into();
    match cli.command {
        Command::Simulate {
            spec,
            locations,
            fields,
            seed,
            out,
        } => {
            let locs = locations
                .as_deref()
                .map(|s| Region::parse_lattice(s).map_err(usage))
                .transpose()?;
            if fields == 0 {
                return Err(usage("-T must be at least 1"));
            }
            let spec = M4Spec::load(&spec)?;
            let locs: Vec<Location> = match locs {
                Some(r) => r.locations().to_vec(),
                None => spec.locations().copied().collect(),
            };
            let panel = simulate_m4(&spec, &locs, fields, seed)?;
            export_panel(&panel, &out)?;
        }
        Command::Analytic {
            spec,
            regions,
            grid,
            out,
        } => {
            let (x, y) = lattice_regions(&regions)?;
            let alphas = positive_grid(grid.alphas.as_deref())?;
            let betas = positive_grid(grid.betas.as_deref())?;
            let spec = M4Spec::load(&spec)?;
            let g = analytic_grid(&spec, &x, &y, &alphas, &betas)?;
            export_grid(&g, &out, format)?;
        }
        Command::Estimate {
            panel,
            regions,
            grid,
            slice,
            estimator,
            out,
        } => {
            let (x, y) = lattice_regions(&regions)?;
            let mode = output_mode(&grid, &slice)?;
            let kind: EstimatorKind = estimator.into();
            let margin = match kind {
                EstimatorKind::KnownMargins => Margin::UnitFrechet,
                EstimatorKind::EmpiricalMargins => Margin::Raw,
            };
            let panel = crate::ingest::import_panel(&panel, margin)?;
            match mode {
                Output::Grid(alphas, betas) => {
                    let g = estimate_grid(&panel, &x, &y, &alphas, &betas, kind)?;
                    export_grid(&g, &out, format)?;
                }
                Output::Slice(lambdas, convention) => {
                    let s = lambda_slice_with(&panel, &x, &y, &lambdas, convention, kind)?;
                    export_slice(&s, &out, format)?;
                }
            }
        }
        Command::Study { config, seed, out } => {
            let mut cfg = StudyConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = run_study(&cfg)?;
            let file = File::create(&out).map_err(|e| Error::io(&out, e))?;
            let mut w = BufWriter::new(file);
            match format {
                FileFormat::Json => serde_json::to_writer_pretty(&mut w, &report).map_err(Error::from)?,
                FileFormat::Csv => report.write_csv(&mut w)?,
            }
            std::io::Write::flush(&mut w).map_err(|e| Error::io(&out, e))?;
        }
        Command::Analyze {
            data,
            region_x,
            region_y,
            grid,
            slice,
            policy,
            out,
        } => {
            let x = station_ids(&region_x)?;
            let y = station_ids(&region_y)?;
            let mode = output_mode(&grid, &slice)?;
            let policy = match policy {
                PolicyArg::CompleteYears => AlignPolicy::CompleteYears,
                PolicyArg::FailOnMissing => AlignPolicy::FailOnMissing,
            };
            let dataset = align(&load_station_csv(&data)?, policy)?;
            for d in &dataset.dropped_years {
                eprintln!("dropped {}: {}", d.year, d.reason);
            }
            match mode {
                Output::Grid(alphas, betas) => {
                    let g = analyze_pair(&dataset, &x, &y, &alphas, &betas)?;
                    export_grid(&g, &out, format)?;
                }
                Output::Slice(lambdas, convention) => {
                    let s = analyze_slice(&dataset, &x, &y, &lambdas, convention)?;
                    export_slice(&s, &out, format)?;
                }
            }
        }
    }
    Ok(())
}
