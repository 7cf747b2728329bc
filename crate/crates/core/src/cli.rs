//! Command-line front end.
//!
//! Every subcommand has a parameter section that can come from a TOML run
//! config (`--config`), with command-line flags taking precedence. With
//! `--out DIR` results are written into `DIR` next to a `resolved.toml` that
//! reproduces the run when passed back through `--config`; without it the
//! primary table goes to standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bandwidths::{make_grid, BandwidthSchedule, GridKind};
use crate::densities::{DensityModel, DensityName, SeededStream};
use crate::error::{invalid, Error, Result};
use crate::estimator::{ww_evaluate, ww_evaluate_grid, EvaluationGrid};
use crate::experiments::{
    frozen_gamma_protocol, gamma_mean_experiment, mise_protocol, online_selection_protocol, select_on_sample,
    BenchMethod, FrozenConfig, GammaMeanConfig, MiseConfig, OnlineConfig, OnlineSelector, ProtocolSettings,
    ReplicationGrid,
};
use crate::io;
use crate::kernels::StandardKernel;
use crate::selection::{gl_select, lmr_select, SelectionMethod, SelectionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "wwkde", version, about = "Recursive kernel density estimation with adaptive bandwidth exponents")]
pub struct Cli {
    /// TOML run config with one section per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the recursive estimator of a sample on a grid.
    Estimate(EstimateArgs),
    /// Select the bandwidth exponent of a sample (LMR or GL).
    Select(SelectArgs),
    /// Monte-Carlo MISE table.
    Benchmark(BenchmarkArgs),
    /// Select on n0 observations, freeze, continue for n1 more.
    Frozen(FrozenArgs),
    /// Online re-selection after every observation of a simulated stream.
    Trajectory(TrajectoryArgs),
    /// Online re-selection over observations read from a file or stdin.
    Stream(StreamArgs),
    /// Mean selected exponent per sample size.
    GammaMean(GammaMeanArgs),
    /// Draw a seeded sample from a benchmark density.
    Sample(SampleArgs),
    /// Per-candidate estimates and a beam of selected estimates.
    Curves(CurvesArgs),
}

/// Sections of a run config; each command reads its own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select: Option<SelectParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frozen: Option<FrozenParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_mean: Option<GammaMeanParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curves: Option<CurvesParams>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Copies every flag that was given onto the parameter section.
macro_rules! override_fields {
    ($params:expr, $args:expr; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $params.$field = v; })*
    };
}

/// Same, for parameters that are themselves optional.
macro_rules! override_optional {
    ($params:expr, $args:expr; $($field:ident),* $(,)?) => {
        $(if $args.$field.is_some() { $params.$field = $args.$field.clone(); })*
    };
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output directory; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    /// Sample file; standard input when absent or `-`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub kernel: StandardKernel,
    pub gamma: f64,
    /// Constant bandwidth (Parzen-Rosenblatt) instead of the power law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Grid ends; default to the sample range widened by three kernel
    /// standard deviations at the first bandwidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub points: usize,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            input: None,
            kernel: StandardKernel::K1,
            gamma: 0.2,
            h: None,
            a: None,
            b: None,
            points: 101,
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Sample file (`-` for stdin).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    /// Bandwidth exponent: h_k = k^-gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Constant bandwidth instead of the power-law schedule.
    #[arg(long)]
    pub h: Option<f64>,
    /// Left end of the evaluation grid.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Right end of the evaluation grid.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl EstimateArgs {
    fn resolve(&self, base: Option<EstimateParams>) -> EstimateParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; kernel, gamma, points);
        override_optional!(p, self; input, h, a, b);
        override_fields!(p, self.output; format);
        override_optional!(p, self.output; out);
        p
    }
}

pub fn cmd_estimate(p: &EstimateParams) -> Result<()> {
    let sample = io::read_sample_path(p.input.as_deref())?;
    let kernel = p.kernel.kernel();
    let schedule = match p.h {
        Some(h) => BandwidthSchedule::constant(h)?,
        None => BandwidthSchedule::power_law(p.gamma)?,
    };
    let (lo, hi) = sample.range().expect("non-empty sample");
    let reach = 3.0 * kernel.max_variance().sqrt() * schedule.bandwidth_at(1)?;
    let a = p.a.unwrap_or(lo - reach);
    let b = p.b.unwrap_or(hi + reach);
    let grid = EvaluationGrid::linspace(a, b, p.points)?;
    let values = ww_evaluate(&sample, &kernel, &schedule, grid.points())?;
    let name = match p.format {
        Format::Csv => "estimate.csv",
        Format::Json => "estimate.json",
    };
    emit(p.out.as_deref(), name, |w| match p.format {
        Format::Csv => io::write_estimate_csv(w, grid.points(), &values),
        Format::Json => io::write_estimate_json(w, grid.points(), &values),
    })?;
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            estimate: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- select

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub method: SelectionMethod,
    pub kernel: StandardKernel,
    pub grid: GridKind,
    pub grid_size: usize,
    /// Largest exponent, or largest bandwidth for `fixed_h_lmr` grids.
    pub gamma_max: f64,
    pub upsilon: f64,
    /// Points on the observed range.
    pub points: usize,
    pub pad_sd: f64,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for SelectParams {
    fn default() -> Self {
        let s = ProtocolSettings::default();
        Self {
            input: None,
            method: SelectionMethod::Lmr,
            kernel: StandardKernel::K1,
            grid: GridKind::EquispacedLmr,
            grid_size: s.grid_size,
            gamma_max: s.gamma_max,
            upsilon: 1.0,
            points: s.points,
            pad_sd: s.pad_sd,
            format: Format::Json,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// Sample file; standard input when absent or `-`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Selection method.
    #[arg(long)]
    pub method: Option<SelectionMethod>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    /// equispaced_lmr, sqrt_log_gl or fixed_h_lmr.
    #[arg(long)]
    pub grid: Option<GridKind>,
    /// Number of candidates M.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Largest candidate exponent.
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// GL variance multiplier.
    #[arg(long)]
    pub upsilon: Option<f64>,
    /// Number of evaluation points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Selection grid padding, in kernel standard deviations.
    #[arg(long)]
    pub pad_sd: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl SelectArgs {
    fn resolve(&self, base: Option<SelectParams>) -> SelectParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; method, kernel, grid, grid_size, gamma_max, upsilon, points, pad_sd);
        override_optional!(p, self; input);
        override_fields!(p, self.output; format);
        override_optional!(p, self.output; out);
        p
    }
}

/// Runs the selection described by `p` on an in-memory sample.
pub fn run_select(sample: &crate::estimator::Sample, p: &SelectParams) -> Result<SelectionResult> {
    let kernel = p.kernel.kernel();
    let grid = make_grid(p.grid, sample.len(), p.grid_size, p.gamma_max)?;
    let settings = ProtocolSettings {
        points: p.points,
        pad_sd: p.pad_sd,
        ..ProtocolSettings::default()
    };
    let eval = ReplicationGrid::new(sample, &kernel, &grid, &settings)?;
    match p.method {
        SelectionMethod::Lmr => lmr_select(sample, &kernel, &grid, &eval.grid),
        SelectionMethod::Gl => gl_select(sample, &kernel, &grid, p.upsilon, &eval.grid),
    }
}

pub fn cmd_select(p: &SelectParams) -> Result<()> {
    let sample = io::read_sample_path(p.input.as_deref())?;
    let result = run_select(&sample, p)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    match p.out.as_deref() {
        Some(dir) => {
            write_file(&dir.join("selection.json"), |w| io::write_json(w, &result))?;
            write_file(&dir.join("criterion.csv"), |w| io::write_criterion_csv(w, &result))?;
        }
        None => match p.format {
            Format::Json => io::write_json(io::stdout_lock(), &result)?,
            Format::Csv => io::write_criterion_csv(io::stdout_lock(), &result)?,
        },
    }
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            select: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- shared protocol flags

#[derive(Debug, Clone, Default, Args)]
pub struct ProtocolArgs {
    /// Monte-Carlo replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed of the simulated streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of candidates M.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Largest candidate exponent.
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Largest bandwidth of the fixed-h grid.
    #[arg(long)]
    pub h_max: Option<f64>,
    /// Risk grid points on the observed range.
    #[arg(long)]
    pub points: Option<usize>,
    /// Selection grid padding, in kernel standard deviations.
    #[arg(long)]
    pub pad_sd: Option<f64>,
}

impl ProtocolArgs {
    fn apply(&self, reps: &mut usize, s: &mut ProtocolSettings) {
        if let Some(r) = self.reps {
            *reps = r;
        }
        override_fields!(s, self; seed, grid_size, gamma_max, h_max, points, pad_sd);
    }
}

// ---------------------------------------------------------------- benchmark

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkParams {
    pub densities: Vec<DensityName>,
    pub methods: Vec<BenchMethod>,
    pub kernels: Vec<StandardKernel>,
    pub ns: Vec<usize>,
    pub reps: usize,
    /// Grid and discretization settings, as a `[<command>.settings]` table.
    pub settings: ProtocolSettings,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            densities: vec![DensityName::F1],
            methods: vec![BenchMethod::WwLmr],
            kernels: vec![StandardKernel::K1],
            ns: vec![250],
            reps: 50,
            settings: ProtocolSettings::default(),
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated densities.
    #[arg(long = "density", value_delimiter = ',')]
    pub densities: Option<Vec<DensityName>>,
    /// Comma-separated methods: ww_lmr, lmr_fixed, ww_frozen.
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Option<Vec<BenchMethod>>,
    /// Comma-separated kernels.
    #[arg(long = "kernel", value_delimiter = ',')]
    pub kernels: Option<Vec<StandardKernel>>,
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl BenchmarkArgs {
    fn resolve(&self, base: Option<BenchmarkParams>) -> BenchmarkParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; densities, methods, kernels, ns);
        self.protocol.apply(&mut p.reps, &mut p.settings);
        override_fields!(p, self.output; format);
        override_optional!(p, self.output; out);
        p
    }
}

/// All cells of the benchmark, in density, n, method, kernel order.
pub fn run_benchmark(p: &BenchmarkParams) -> Result<Vec<crate::experiments::MiseReport>> {
    let mut reports = Vec::new();
    for &density in &p.densities {
        for &n in &p.ns {
            for &method in &p.methods {
                for &kernel in &p.kernels {
                    log::info!("{density} n={n} {method} {kernel}");
                    reports.push(mise_protocol(&MiseConfig {
                        density,
                        method,
                        kernel,
                        n,
                        replications: p.reps,
                        settings: p.settings,
                    })?);
                }
            }
        }
    }
    Ok(reports)
}

pub fn cmd_benchmark(p: &BenchmarkParams) -> Result<()> {
    let reports = run_benchmark(p)?;
    match p.out.as_deref() {
        Some(dir) => {
            write_file(&dir.join("mise.csv"), |w| io::write_mise_csv(w, &reports))?;
            write_file(&dir.join("report.json"), |w| io::write_json(w, &reports))?;
        }
        None => match p.format {
            Format::Csv => io::write_mise_csv(io::stdout_lock(), &reports)?,
            Format::Json => io::write_json(io::stdout_lock(), &reports)?,
        },
    }
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            benchmark: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- frozen

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrozenParams {
    pub densities: Vec<DensityName>,
    pub kernel: StandardKernel,
    pub n0: usize,
    pub n1: usize,
    pub reps: usize,
    /// Grid and discretization settings, as a `[<command>.settings]` table.
    pub settings: ProtocolSettings,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for FrozenParams {
    fn default() -> Self {
        Self {
            densities: vec![DensityName::F1, DensityName::F2, DensityName::F3, DensityName::F4],
            kernel: StandardKernel::K7,
            n0: 500,
            n1: 500,
            reps: 50,
            settings: ProtocolSettings::default(),
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FrozenArgs {
    /// Comma-separated densities.
    #[arg(long = "density", value_delimiter = ',')]
    pub densities: Option<Vec<DensityName>>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    /// Selection-phase size n0; also the default of n1.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Frozen-phase size.
    #[arg(long)]
    pub n1: Option<usize>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl FrozenArgs {
    fn resolve(&self, base: Option<FrozenParams>) -> FrozenParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; densities, kernel);
        if let Some(n) = self.n {
            p.n0 = n;
            p.n1 = n;
        }
        override_fields!(p, self; n1);
        self.protocol.apply(&mut p.reps, &mut p.settings);
        override_fields!(p, self.output; format);
        override_optional!(p, self.output; out);
        p
    }
}

pub fn cmd_frozen(p: &FrozenParams) -> Result<()> {
    let pairs = p
        .densities
        .iter()
        .map(|&density| {
            log::info!("frozen {density}");
            frozen_gamma_protocol(&FrozenConfig {
                density,
                kernel: p.kernel,
                n0: p.n0,
                n1: p.n1,
                replications: p.reps,
                settings: p.settings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match p.out.as_deref() {
        Some(dir) => {
            write_file(&dir.join("frozen.csv"), |w| io::write_frozen_csv(w, &pairs))?;
            write_file(&dir.join("report.json"), |w| io::write_json(w, &pairs))?;
        }
        None => match p.format {
            Format::Csv => io::write_frozen_csv(io::stdout_lock(), &pairs)?,
            Format::Json => io::write_json(io::stdout_lock(), &pairs)?,
        },
    }
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            frozen: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- trajectory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    pub density: DensityName,
    pub kernel: StandardKernel,
    pub n_start: usize,
    pub n: usize,
    pub grid_size: usize,
    pub gamma_max: f64,
    pub points: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            density: DensityName::F2,
            kernel: StandardKernel::K1,
            n_start: 50,
            n: 1000,
            grid_size: 50,
            gamma_max: 0.5,
            points: 100,
            seed: 1,
            stream_id: 0,
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    /// Benchmark density.
    #[arg(long)]
    pub density: Option<DensityName>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    /// First sample size with a selection (the warm-up length).
    #[arg(long)]
    pub n_start: Option<usize>,
    /// Final sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of candidates M.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Largest candidate exponent.
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Evaluation points K.
    #[arg(long)]
    pub points: Option<usize>,
    /// Base seed of the simulated streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stream index of the simulated sample.
    #[arg(long)]
    pub stream_id: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl TrajectoryArgs {
    fn resolve(&self, base: Option<TrajectoryParams>) -> TrajectoryParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; density, kernel, n_start, n, grid_size, gamma_max, points, seed, stream_id);
        override_fields!(p, self.output; format);
        override_optional!(p, self.output; out);
        p
    }
}

pub fn cmd_trajectory(p: &TrajectoryParams) -> Result<()> {
    let record = online_selection_protocol(&OnlineConfig {
        density: p.density,
        kernel: p.kernel,
        n_start: p.n_start,
        n_end: p.n,
        grid_size: p.grid_size,
        gamma_max: p.gamma_max,
        points: p.points,
        seed: p.seed,
        stream_id: p.stream_id,
    })?;
    match p.out.as_deref() {
        Some(dir) => {
            write_file(&dir.join("trajectory.csv"), |w| io::write_trajectory_csv(w, &record.gammas))?;
            write_file(&dir.join("trajectory.json"), |w| io::write_json(w, &record))?;
        }
        None => match p.format {
            Format::Csv => io::write_trajectory_csv(io::stdout_lock(), &record.gammas)?,
            Format::Json => io::write_json(io::stdout_lock(), &record)?,
        },
    }
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            trajectory: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- stream

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub kernel: StandardKernel,
    pub grid_size: usize,
    pub gamma_max: f64,
    pub points: usize,
    /// Observations buffered before the evaluation grid is fixed.
    pub warmup: usize,
    /// Fixed evaluation range; otherwise derived from the warm-up sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    /// Write a matrix snapshot every this many observations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for StreamParams {
    fn default() -> Self {
        Self {
            input: None,
            kernel: StandardKernel::K1,
            grid_size: 50,
            gamma_max: 0.5,
            points: 100,
            warmup: 50,
            range: None,
            snapshot_every: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    /// Sample file; standard input when absent or `-`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    /// Number of candidates M.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Largest candidate exponent.
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Number of evaluation points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Observations buffered before the evaluation grid is fixed.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Evaluation range as `a,b`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub range: Option<[f64; 2]>,
    /// Write a matrix snapshot every this many observations.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Directory for snapshots and the resolved config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl StreamArgs {
    fn resolve(&self, base: Option<StreamParams>) -> StreamParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; kernel, grid_size, gamma_max, points, warmup);
        override_optional!(p, self; input, range, snapshot_every, out);
        p
    }
}

fn parse_range(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected a,b, got {s:?}"));
    };
    let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if !(b > a) {
        return Err(format!("empty range [{a}, {b}]"));
    }
    Ok([a, b])
}

/// Reads observations one at a time, writes `n,gamma` per selection to `trajectory`.
///
/// Snapshots go to `snapshot_<n>.csv` every `snapshot_every` observations and
/// to `snapshot.csv` at end of input, when an output directory is set.
pub fn run_stream<R: std::io::BufRead, W: Write>(p: &StreamParams, input: R, trajectory: W) -> Result<usize> {
    let grid = make_grid(GridKind::EquispacedLmr, 0, p.grid_size, p.gamma_max)?;
    let range = p.range.map(|[a, b]| (a, b));
    let mut selector = OnlineSelector::new(p.kernel.kernel(), grid, p.points, p.warmup, range)?;
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(trajectory);
    out.write_record(["n", "gamma"])?;
    out.flush()?;
    let record = |out: &mut csv::Writer<W>, n: usize, sel: &SelectionResult| -> Result<()> {
        out.write_record([n.to_string(), io::format_number(sel.chosen_gamma)])?;
        out.flush()?;
        Ok(())
    };
    for x in io::Observations::new(input) {
        if let Some(sel) = selector.push(x?)? {
            record(&mut out, selector.n(), &sel)?;
        }
        if let (Some(every), Some(dir), Some(m)) = (p.snapshot_every, p.out.as_deref(), selector.matrix()) {
            if every > 0 && m.n() % every == 0 {
                write_file(&dir.join(format!("snapshot_{}.csv", m.n())), |w| io::write_matrix_csv(w, m))?;
            }
        }
    }
    if let Some(sel) = selector.finish()? {
        record(&mut out, selector.n(), &sel)?;
    }
    if let (Some(dir), Some(m)) = (p.out.as_deref(), selector.matrix()) {
        write_file(&dir.join("snapshot.csv"), |w| io::write_matrix_csv(w, m))?;
    }
    Ok(selector.n())
}

pub fn cmd_stream(p: &StreamParams) -> Result<()> {
    let input = io::open_input(p.input.as_deref())?;
    let n = run_stream(p, input, io::stdout_lock())?;
    log::info!("absorbed {n} observations");
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            stream: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- gamma-mean

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaMeanParams {
    pub density: DensityName,
    pub kernel: StandardKernel,
    pub ns: Vec<usize>,
    pub reps: usize,
    /// Grid and discretization settings, as a `[<command>.settings]` table.
    pub settings: ProtocolSettings,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for GammaMeanParams {
    fn default() -> Self {
        Self {
            density: DensityName::F1,
            kernel: StandardKernel::K7,
            ns: vec![250, 1000, 2000, 4000],
            reps: 50,
            settings: ProtocolSettings::default(),
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GammaMeanArgs {
    /// Benchmark density.
    #[arg(long)]
    pub density: Option<DensityName>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    #[arg(long = "n", value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl GammaMeanArgs {
    fn resolve(&self, base: Option<GammaMeanParams>) -> GammaMeanParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; density, kernel, ns);
        self.protocol.apply(&mut p.reps, &mut p.settings);
        override_fields!(p, self.output; format);
        override_optional!(p, self.output; out);
        p
    }
}

pub fn cmd_gamma_mean(p: &GammaMeanParams) -> Result<()> {
    let rows = gamma_mean_experiment(&GammaMeanConfig {
        density: p.density,
        kernel: p.kernel,
        ns: p.ns.clone(),
        replications: p.reps,
        settings: p.settings,
    })?;
    let (d, k) = (p.density.to_string(), p.kernel.to_string());
    match p.out.as_deref() {
        Some(dir) => {
            write_file(&dir.join("gamma_mean.csv"), |w| io::write_gamma_mean_csv(w, &d, &k, &rows))?;
            write_file(&dir.join("gamma_mean.json"), |w| io::write_json(w, &rows))?;
        }
        None => match p.format {
            Format::Csv => io::write_gamma_mean_csv(io::stdout_lock(), &d, &k, &rows)?,
            Format::Json => io::write_json(io::stdout_lock(), &rows)?,
        },
    }
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            gamma_mean: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- sample

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleParams {
    pub density: DensityName,
    pub n: usize,
    pub seed: u64,
    pub stream_id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            density: DensityName::F1,
            n: 1000,
            seed: 1,
            stream_id: 0,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Benchmark density.
    #[arg(long)]
    pub density: Option<DensityName>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Base seed of the simulated streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stream index of the simulated sample.
    #[arg(long)]
    pub stream_id: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SampleArgs {
    fn resolve(&self, base: Option<SampleParams>) -> SampleParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; density, n, seed, stream_id);
        override_optional!(p, self; out);
        p
    }
}

pub fn cmd_sample(p: &SampleParams) -> Result<()> {
    let model = DensityModel::named(p.density)?;
    let sample = crate::densities::density_sample(&model, SeededStream::new(p.seed, p.stream_id), p.n)?;
    emit(p.out.as_deref(), "sample.txt", |w| io::write_observations(w, sample.observations()))?;
    write_resolved(
        p.out.as_deref(),
        RunConfig {
            sample: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- curves

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesParams {
    pub density: DensityName,
    pub kernel: StandardKernel,
    pub n: usize,
    /// Selected estimates in the beam.
    pub reps: usize,
    /// Grid and discretization settings, as a `[<command>.settings]` table.
    pub settings: ProtocolSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for CurvesParams {
    fn default() -> Self {
        Self {
            density: DensityName::F1,
            kernel: StandardKernel::K1,
            n: 1000,
            reps: 20,
            settings: ProtocolSettings::default(),
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CurvesArgs {
    /// Benchmark density.
    #[arg(long)]
    pub density: Option<DensityName>,
    /// Kernel K1, K3, K5 or K7.
    #[arg(long)]
    pub kernel: Option<StandardKernel>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Output directory (required).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CurvesArgs {
    fn resolve(&self, base: Option<CurvesParams>) -> CurvesParams {
        let mut p = base.unwrap_or_default();
        override_fields!(p, self; density, kernel, n);
        self.protocol.apply(&mut p.reps, &mut p.settings);
        override_optional!(p, self; out);
        p
    }
}

/// `curves.csv`: every candidate estimate of replication 0 on its risk grid,
/// with the true density. `beam.csv`: the selected estimate of each
/// replication on one common grid.
pub fn cmd_curves(p: &CurvesParams) -> Result<()> {
    let dir = p
        .out
        .as_deref()
        .ok_or_else(|| invalid("curves writes two tables and needs --out"))?;
    if p.reps == 0 {
        return Err(invalid("the beam needs at least one replication"));
    }
    let model = DensityModel::named(p.density)?;
    let kernel = p.kernel.kernel();
    let candidates = p.settings.gamma_grid()?;
    let samples: Vec<_> = (0..p.reps as u64)
        .map(|j| model.sample(SeededStream::new(p.settings.seed, j), p.n))
        .collect();

    let first = select_on_sample(&samples[0], &kernel, &candidates, &p.settings)?;
    let xs = first.grid.risk_points().to_vec();
    let k = first.grid.grid.len();
    let pad = first.grid.pad;
    let truth: Vec<f64> = xs.iter().map(|&x| model.eval(x)).collect();
    let mut labels: Vec<String> = candidates.values().iter().map(|g| format!("gamma={}", io::format_number(*g))).collect();
    labels.push("truth".to_string());
    let mut curves: Vec<&[f64]> = first
        .rows
        .chunks(k)
        .map(|row| &row[pad..pad + xs.len()])
        .collect();
    curves.push(&truth);
    write_file(&dir.join("curves.csv"), |w| io::write_curves_csv(w, &xs, &labels, &curves))?;

    let lo = samples.iter().filter_map(|s| s.range()).map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().filter_map(|s| s.range()).map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let common = EvaluationGrid::linspace(lo, hi, p.settings.points)?;
    let mut beam = Vec::with_capacity(p.reps + 1);
    let mut beam_labels = Vec::with_capacity(p.reps + 1);
    for (j, sample) in samples.iter().enumerate() {
        let sel = select_on_sample(sample, &kernel, &candidates, &p.settings)?;
        let schedule = candidates.schedule(sel.selection.chosen_index);
        beam.push(ww_evaluate_grid(sample, &kernel, &schedule, &common)?);
        beam_labels.push(format!("rep{j}"));
    }
    beam.push(common.points().iter().map(|&x| model.eval(x)).collect());
    beam_labels.push("truth".to_string());
    let beam_refs: Vec<&[f64]> = beam.iter().map(|v| v.as_slice()).collect();
    write_file(&dir.join("beam.csv"), |w| io::write_curves_csv(w, common.points(), &beam_labels, &beam_refs))?;
    write_resolved(
        Some(dir),
        RunConfig {
            curves: Some(p.clone()),
            ..Default::default()
        },
    )
}

// ---------------------------------------------------------------- dispatch

fn write_file(path: &Path, f: impl FnOnce(&mut io::BufFile) -> Result<()>) -> Result<()> {
    let mut w = io::BufFile::new(io::create_file(path)?);
    f(&mut w)?;
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes to `dir/name`, or to standard output without a directory.
fn emit(dir: Option<&Path>, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match dir {
        Some(d) => write_file(&d.join(name), |w| f(w)),
        None => {
            let mut out = io::stdout_lock();
            f(&mut out)
        }
    }
}

fn write_resolved(dir: Option<&Path>, config: RunConfig) -> Result<()> {
    let text = config.to_toml()?;
    match dir {
        Some(d) => write_file(&d.join("resolved.toml"), |w| {
            w.write_all(text.as_bytes())?;
            Ok(())
        }),
        None => {
            log::info!("resolved config:\n{text}");
            Ok(())
        }
    }
}

/// Resolves the config section of the parsed command and runs it.
pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(&a.resolve(config.estimate)),
        Command::Select(a) => cmd_select(&a.resolve(config.select)),
        Command::Benchmark(a) => cmd_benchmark(&a.resolve(config.benchmark)),
        Command::Frozen(a) => cmd_frozen(&a.resolve(config.frozen)),
        Command::Trajectory(a) => cmd_trajectory(&a.resolve(config.trajectory)),
        Command::Stream(a) => cmd_stream(&a.resolve(config.stream)),
        Command::GammaMean(a) => cmd_gamma_mean(&a.resolve(config.gamma_mean)),
        Command::Sample(a) => cmd_sample(&a.resolve(config.sample)),
        Command::Curves(a) => cmd_curves(&a.resolve(config.curves)),
    }
}

/// Entry point of the binary: parses `args`, runs, reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> std::process::ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return std::process::ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(Error::Stream(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
