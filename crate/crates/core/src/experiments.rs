//! Monte-Carlo protocols: MISE tables, the frozen-exponent strategy, online
//! re-selection trajectories and the mean selected exponent.
//!
//! Replication `j` always draws from `SeededStream::new(seed, j)`, and results
//! are gathered in replication order, so serial and parallel runs agree bit for bit.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidths::{make_grid, GammaGrid, GridKind};
use crate::densities::{DensityModel, DensityName, SeededStream};
use crate::error::{invalid, Error, Result};
use crate::estimator::{EstimatorMatrix, EvaluationGrid, Sample};
use crate::kernels::{GaussianMixtureKernel, StandardKernel};
use crate::selection::{candidate_rows, lmr_select_matrix, lmr_select_with_rows, PenaltyTracker, SelectionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    /// LMR selection of the power-law exponent of the recursive estimator.
    WwLmr,
    /// LMR selection of a single bandwidth for the Parzen-Rosenblatt estimator.
    LmrFixed,
    /// Exponent selected on the first half, then frozen for recursive updates.
    WwFrozen,
}

impl BenchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::WwLmr => "ww_lmr",
            Self::LmrFixed => "lmr_fixed",
            Self::WwFrozen => "ww_frozen",
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ww_lmr" => Ok(Self::WwLmr),
            "lmr_fixed" => Ok(Self::LmrFixed),
            "ww_frozen" => Ok(Self::WwFrozen),
            other => Err(invalid(format!(
                "unknown benchmark method {other:?}; expected ww_lmr, lmr_fixed or ww_frozen"
            ))),
        }
    }
}

/// Grid and discretization parameters shared by the batch protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSettings {
    /// Points `P` of the risk grid on the observed range.
    pub points: usize,
    /// Number of candidates `M`.
    pub grid_size: usize,
    /// Largest exponent of the power-law grid.
    pub gamma_max: f64,
    /// Largest bandwidth of the fixed-h grid.
    pub h_max: f64,
    /// Padding of the selection grid beyond the observed range, in standard
    /// deviations of the widest kernel component at the smoothest candidate's
    /// latest bandwidth.
    pub pad_sd: f64,
    pub seed: u64,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            points: 100,
            grid_size: 40,
            gamma_max: 0.5,
            h_max: 1.0,
            pad_sd: 3.0,
            seed: 1,
        }
    }
}

impl ProtocolSettings {
    pub fn gamma_grid(&self) -> Result<GammaGrid> {
        make_grid(GridKind::EquispacedLmr, 0, self.grid_size, self.gamma_max)
    }

    pub fn h_grid(&self) -> Result<GammaGrid> {
        make_grid(GridKind::FixedHLmr, 0, self.grid_size, self.h_max)
    }

    fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(invalid("risk grid needs at least two points"));
        }
        if !(self.pad_sd >= 0.0 && self.pad_sd.is_finite()) {
            return Err(invalid("pad_sd must be non-negative"));
        }
        Ok(())
    }
}

/// Risk grid `x_ℓ = a + ℓ(b−a)/P` on the observed range, padded for selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationGrid {
    pub grid: EvaluationGrid,
    /// Number of padding points on each side.
    pub pad: usize,
    pub points: usize,
}

impl ReplicationGrid {
    pub fn new(
        sample: &Sample,
        kernel: &GaussianMixtureKernel,
        candidates: &GammaGrid,
        settings: &ProtocolSettings,
    ) -> Result<Self> {
        let (a, b) = sample
            .range()
            .ok_or_else(|| invalid("cannot build a risk grid from an empty sample"))?;
        if !(b > a) {
            return Err(invalid("observed range is degenerate"));
        }
        let spacing = (b - a) / settings.points as f64;
        let smooth = candidates.schedule(candidates.smoothest_index()).bandwidth(sample.len());
        let extent = settings.pad_sd * kernel.max_variance().sqrt() * smooth;
        let pad = (extent / spacing).ceil() as usize;
        Ok(Self {
            grid: EvaluationGrid::observation_grid(a, b, settings.points, pad)?,
            pad,
            points: settings.points,
        })
    }

    /// The unpadded risk points.
    pub fn risk_points(&self) -> &[f64] {
        &self.grid.points()[self.pad..self.pad + self.points]
    }

    /// `((b−a)/P) Σ_ℓ (f̂(x_ℓ) − f(x_ℓ))²` for values given on the padded grid.
    pub fn ise(&self, padded_values: &[f64], truth: &DensityModel) -> f64 {
        ise_on_points(&padded_values[self.pad..self.pad + self.points], self.risk_points(), truth, self.grid.spacing())
    }
}

/// Riemann integrated squared error of `values` against `truth` at `points`.
pub fn ise_on_points(values: &[f64], points: &[f64], truth: &DensityModel, spacing: f64) -> f64 {
    spacing
        * values
            .iter()
            .zip(points)
            .map(|(v, &x)| (v - truth.eval(x)).powi(2))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub stream_id: u64,
    pub ise: f64,
    /// Selected exponent (or bandwidth for `lmr_fixed`).
    pub chosen: f64,
    /// ISE of every candidate on the same risk grid.
    pub candidate_ise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiseReport {
    pub density: DensityName,
    pub method: BenchMethod,
    pub kernel: StandardKernel,
    pub n: usize,
    pub replications: usize,
    pub mise_times_100: f64,
    pub std_times_100: f64,
    pub per_replication: Vec<Replication>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl MiseReport {
    fn from_replications(
        density: DensityName,
        method: BenchMethod,
        kernel: StandardKernel,
        n: usize,
        per_replication: Vec<Replication>,
    ) -> Self {
        let ises: Vec<f64> = per_replication.iter().map(|r| r.ise).collect();
        let (mean, std) = mean_std(&ises);
        Self {
            density,
            method,
            kernel,
            n,
            replications: per_replication.len(),
            mise_times_100: 100.0 * mean,
            std_times_100: 100.0 * std,
            per_replication,
        }
    }

    /// Mean and standard deviation of the selected values.
    pub fn chosen_mean_std(&self) -> (f64, f64) {
        let chosen: Vec<f64> = self.per_replication.iter().map(|r| r.chosen).collect();
        mean_std(&chosen)
    }
}

/// One batch selection + risk evaluation.
#[derive(Debug, Clone)]
pub struct SelectedEstimate {
    pub selection: SelectionResult,
    pub grid: ReplicationGrid,
    pub rows: Vec<f64>,
}

impl SelectedEstimate {
    pub fn chosen_row(&self) -> &[f64] {
        let k = self.grid.grid.len();
        let j = self.selection.chosen_index;
        &self.rows[j * k..(j + 1) * k]
    }

    pub fn candidate_ise(&self, truth: &DensityModel) -> Vec<f64> {
        let k = self.grid.grid.len();
        self.rows.chunks(k).map(|row| self.grid.ise(row, truth)).collect()
    }
}

/// LMR selection over `candidates` on the padded observation grid of `sample`.
pub fn select_on_sample(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    candidates: &GammaGrid,
    settings: &ProtocolSettings,
) -> Result<SelectedEstimate> {
    let grid = ReplicationGrid::new(sample, kernel, candidates, settings)?;
    let rows = candidate_rows(sample, kernel, candidates, &grid.grid)?;
    let selection = lmr_select_with_rows(sample.len(), kernel, candidates, &grid.grid, &rows)?;
    Ok(SelectedEstimate { selection, grid, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiseConfig {
    pub density: DensityName,
    pub method: BenchMethod,
    pub kernel: StandardKernel,
    pub n: usize,
    pub replications: usize,
    pub settings: ProtocolSettings,
}

/// Monte-Carlo MISE of one table cell.
///
/// For [`BenchMethod::WwFrozen`] the exponent is selected on the first `n/2`
/// observations and the report is the one of the full-sample continuation.
pub fn mise_protocol(config: &MiseConfig) -> Result<MiseReport> {
    if config.replications < 2 {
        return Err(invalid("MISE needs at least two replications"));
    }
    if config.n < 2 {
        return Err(invalid("MISE needs n >= 2"));
    }
    config.settings.validate()?;
    if config.method == BenchMethod::WwFrozen {
        let n0 = config.n / 2;
        let frozen = FrozenConfig {
            density: config.density,
            kernel: config.kernel,
            n0,
            n1: config.n - n0,
            replications: config.replications,
            settings: config.settings,
        };
        return frozen_gamma_protocol(&frozen).map(|(_, phase2)| phase2);
    }
    let model = DensityModel::named(config.density)?;
    let kernel = config.kernel.kernel();
    let candidates = match config.method {
        BenchMethod::LmrFixed => config.settings.h_grid()?,
        _ => config.settings.gamma_grid()?,
    };
    let per_replication = (0..config.replications as u64)
        .into_par_iter()
        .map(|j| {
            let sample = model.sample(SeededStream::new(config.settings.seed, j), config.n);
            let est = select_on_sample(&sample, &kernel, &candidates, &config.settings)?;
            Ok(Replication {
                stream_id: j,
                ise: est.grid.ise(est.chosen_row(), &model),
                chosen: est.selection.chosen_gamma,
                candidate_ise: est.candidate_ise(&model),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MiseReport::from_replications(
        config.density,
        config.method,
        config.kernel,
        config.n,
        per_replication,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenConfig {
    pub density: DensityName,
    pub kernel: StandardKernel,
    pub n0: usize,
    pub n1: usize,
    pub replications: usize,
    pub settings: ProtocolSettings,
}

/// Select on the first `n0` observations, freeze the exponent, stream the next `n1`.
///
/// Returns the reports after `n0` and after `n0 + n1` observations; each is
/// scored on the risk grid of the observations seen so far.
pub fn frozen_gamma_protocol(config: &FrozenConfig) -> Result<(MiseReport, MiseReport)> {
    if config.n0 < 2 {
        return Err(invalid("the selection phase needs n0 >= 2"));
    }
    if config.replications < 2 {
        return Err(invalid("MISE needs at least two replications"));
    }
    config.settings.validate()?;
    let model = DensityModel::named(config.density)?;
    let kernel = config.kernel.kernel();
    let candidates = config.settings.gamma_grid()?;
    let total = config.n0 + config.n1;
    let outcomes = (0..config.replications as u64)
        .into_par_iter()
        .map(|j| {
            let sample = model.sample(SeededStream::new(config.settings.seed, j), total);
            let first = sample.prefix(config.n0);
            let est = select_on_sample(&first, &kernel, &candidates, &config.settings)?;
            let gamma = est.selection.chosen_gamma;
            let phase1 = Replication {
                stream_id: j,
                ise: est.grid.ise(est.chosen_row(), &model),
                chosen: gamma,
                candidate_ise: est.candidate_ise(&model),
            };
            if config.n1 == 0 {
                return Ok((phase1.clone(), phase1));
            }
            // Recursive continuation under the frozen exponent, on the final risk grid.
            let frozen = GammaGrid::new(vec![gamma], GridKind::EquispacedLmr)?;
            let grid = ReplicationGrid::new(&sample, &kernel, &frozen, &config.settings)?;
            let mut state = EstimatorMatrix::new(kernel.clone(), frozen, grid.grid.clone(), false);
            for &x in sample.observations() {
                state.update(x)?;
            }
            let phase2 = Replication {
                stream_id: j,
                ise: grid.ise(state.row(0), &model),
                chosen: gamma,
                candidate_ise: Vec::new(),
            };
            Ok((phase1, phase2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (first, second): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok((
        MiseReport::from_replications(config.density, BenchMethod::WwFrozen, config.kernel, config.n0, first),
        MiseReport::from_replications(config.density, BenchMethod::WwFrozen, config.kernel, total, second),
    ))
}

/// Streaming selector: keeps the estimator matrix and running penalties and
/// re-selects after every observation.
///
/// The evaluation grid is fixed once, either from an explicit range or from
/// the range of the first `warmup` observations widened by a quarter of its
/// length on each side; the warm-up observations are then absorbed in order.
#[derive(Debug, Clone)]
pub struct OnlineSelector {
    kernel: GaussianMixtureKernel,
    grid: GammaGrid,
    points: usize,
    warmup: usize,
    range: Option<(f64, f64)>,
    buffer: Vec<f64>,
    state: Option<(EstimatorMatrix, PenaltyTracker)>,
    keep_sample: bool,
}

impl OnlineSelector {
    pub fn new(
        kernel: GaussianMixtureKernel,
        grid: GammaGrid,
        points: usize,
        warmup: usize,
        range: Option<(f64, f64)>,
    ) -> Result<Self> {
        if points < 2 {
            return Err(invalid("the streaming grid needs at least two points"));
        }
        if let Some((a, b)) = range {
            if !(b > a) {
                return Err(invalid(format!("empty streaming range [{a}, {b}]")));
            }
        }
        Ok(Self {
            kernel,
            grid,
            points,
            warmup: warmup.max(1),
            range,
            buffer: Vec::new(),
            state: None,
            keep_sample: false,
        })
    }

    /// Retain the raw observations inside the matrix (for oracle checks).
    pub fn keep_sample(mut self, keep: bool) -> Self {
        self.keep_sample = keep;
        self
    }

    fn initialize(&mut self) -> Result<()> {
        let (a, b) = match self.range {
            Some(r) => r,
            None => {
                let lo = self.buffer.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = self.buffer.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let width = if hi > lo { hi - lo } else { 1.0 };
                (lo - 0.25 * width, hi + 0.25 * width)
            }
        };
        let eval = EvaluationGrid::linspace(a, b, self.points)?;
        let mut matrix = EstimatorMatrix::new(self.kernel.clone(), self.grid.clone(), eval, self.keep_sample);
        let mut tracker = PenaltyTracker::new(self.kernel.clone(), &self.grid);
        for &x in &self.buffer {
            matrix.update(x)?;
            tracker.advance();
        }
        self.buffer.clear();
        self.state = Some((matrix, tracker));
        Ok(())
    }

    fn select(&self) -> Result<SelectionResult> {
        let (matrix, tracker) = self.state.as_ref().expect("initialized");
        lmr_select_matrix(matrix, &tracker.penalties())
    }

    /// Absorbs `x`; returns the new selection once the warm-up is complete.
    pub fn push(&mut self, x: f64) -> Result<Option<SelectionResult>> {
        if !x.is_finite() {
            return Err(invalid(format!("observation {x} is not finite")));
        }
        match self.state.as_mut() {
            Some((matrix, tracker)) => {
                matrix.update(x)?;
                tracker.advance();
            }
            None => {
                self.buffer.push(x);
                if self.buffer.len() < self.warmup {
                    return Ok(None);
                }
                self.initialize()?;
            }
        }
        self.select().map(Some)
    }

    /// Flushes a partial warm-up at end of input; `None` if nothing was seen
    /// or the last observation already produced a selection.
    pub fn finish(&mut self) -> Result<Option<SelectionResult>> {
        if self.state.is_some() || self.buffer.is_empty() {
            return Ok(None);
        }
        self.initialize()?;
        self.select().map(Some)
    }

    pub fn matrix(&self) -> Option<&EstimatorMatrix> {
        self.state.as_ref().map(|(m, _)| m)
    }

    pub fn n(&self) -> usize {
        self.state.as_ref().map_or(self.buffer.len(), |(m, _)| m.n())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineConfig {
    pub density: DensityName,
    pub kernel: StandardKernel,
    pub n_start: usize,
    pub n_end: usize,
    /// Candidates `M`.
    pub grid_size: usize,
    pub gamma_max: f64,
    /// Evaluation points `K`.
    pub points: usize,
    pub seed: u64,
    pub stream_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub density: DensityName,
    pub n_start: usize,
    pub n_end: usize,
    pub seed: u64,
    pub stream_id: u64,
    /// `(n, γ̃_n)` for `n = n_start..=n_end`.
    pub gammas: Vec<(usize, f64)>,
    /// Final chosen row of the matrix.
    pub final_estimate: Vec<f64>,
    pub eval_points: Vec<f64>,
    /// Matrix cells rewritten per update (constant `M·K`).
    pub cells_per_update: u64,
}

/// Online re-selection after every observation from `n_start` to `n_end`.
pub fn online_selection_protocol(config: &OnlineConfig) -> Result<TrajectoryRecord> {
    if config.n_start < 1 || config.n_end < config.n_start {
        return Err(invalid("need 1 <= n_start <= n_end"));
    }
    let model = DensityModel::named(config.density)?;
    let grid = make_grid(GridKind::EquispacedLmr, 0, config.grid_size, config.gamma_max)?;
    let sample = model.sample(SeededStream::new(config.seed, config.stream_id), config.n_end);
    let mut selector = OnlineSelector::new(config.kernel.kernel(), grid, config.points, config.n_start, None)?;
    let mut gammas = Vec::with_capacity(config.n_end - config.n_start + 1);
    let mut last = None;
    for &x in sample.observations() {
        if let Some(sel) = selector.push(x)? {
            gammas.push((selector.n(), sel.chosen_gamma));
            last = Some(sel);
        }
    }
    let last = last.expect("n_end >= n_start >= 1 yields a selection");
    let matrix = selector.matrix().expect("initialized");
    let counters = matrix.counters();
    Ok(TrajectoryRecord {
        density: config.density,
        n_start: config.n_start,
        n_end: config.n_end,
        seed: config.seed,
        stream_id: config.stream_id,
        gammas,
        final_estimate: matrix.row(last.chosen_index).to_vec(),
        eval_points: matrix.eval_grid().points().to_vec(),
        cells_per_update: counters.cells / counters.updates.max(1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaMeanRow {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub per_replication: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaMeanConfig {
    pub density: DensityName,
    pub kernel: StandardKernel,
    pub ns: Vec<usize>,
    pub replications: usize,
    pub settings: ProtocolSettings,
}

/// Mean (and std) over replications of the LMR-selected exponent, per sample size.
pub fn gamma_mean_experiment(config: &GammaMeanConfig) -> Result<Vec<GammaMeanRow>> {
    if config.replications < 2 {
        return Err(invalid("need at least two replications"));
    }
    config.settings.validate()?;
    let model = DensityModel::named(config.density)?;
    let kernel = config.kernel.kernel();
    let candidates = config.settings.gamma_grid()?;
    config
        .ns
        .iter()
        .map(|&n| {
            let chosen = (0..config.replications as u64)
                .into_par_iter()
                .map(|j| {
                    let sample = model.sample(SeededStream::new(config.settings.seed, j), n);
                    let est = select_on_sample(&sample, &kernel, &candidates, &config.settings)?;
                    Ok(est.selection.chosen_gamma)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean, std) = mean_std(&chosen);
            Ok(GammaMeanRow {
                n,
                mean,
                std,
                per_replication: chosen,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_settings() -> ProtocolSettings {
        ProtocolSettings {
            grid_size: 8,
            seed: 5,
            ..ProtocolSettings::default()
        }
    }

    #[test]
    fn ise_of_truth_is_zero() {
        let model = DensityModel::named(DensityName::F2).unwrap();
        let sample = model.sample(SeededStream::new(3, 0), 50);
        let kernel = StandardKernel::K1.kernel();
        let candidates = small_settings().gamma_grid().unwrap();
        let grid = ReplicationGrid::new(&sample, &kernel, &candidates, &small_settings()).unwrap();
        let truth: Vec<f64> = grid.grid.points().iter().map(|&x| model.eval(x)).collect();
        assert_eq!(grid.ise(&truth, &model), 0.0);
        assert_eq!(grid.risk_points().len(), 100);
        let (a, b) = sample.range().unwrap();
        assert!((grid.risk_points()[99] - b).abs() < 1e-12);
        assert!((grid.risk_points()[0] - (a + (b - a) / 100.0)).abs() < 1e-12);
    }

    #[test]
    fn mise_is_deterministic_and_validated() {
        let config = MiseConfig {
            density: DensityName::F1,
            method: BenchMethod::WwLmr,
            kernel: StandardKernel::K3,
            n: 60,
            replications: 3,
            settings: small_settings(),
        };
        let a = mise_protocol(&config).unwrap();
        let b = mise_protocol(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_replication.len(), 3);
        let mean = a.per_replication.iter().map(|r| r.ise).sum::<f64>() / 3.0;
        assert!((a.mise_times_100 - 100.0 * mean).abs() < 1e-12);
        assert!(mise_protocol(&MiseConfig { replications: 1, ..config }).is_err());
        assert!(mise_protocol(&MiseConfig { n: 1, ..config }).is_err());
    }

    #[test]
    fn frozen_without_updates_repeats_phase_one() {
        let config = FrozenConfig {
            density: DensityName::F4,
            kernel: StandardKernel::K1,
            n0: 40,
            n1: 0,
            replications: 2,
            settings: small_settings(),
        };
        let (a, b) = frozen_gamma_protocol(&config).unwrap();
        assert_eq!(a.per_replication, b.per_replication);
        assert_eq!(a.mise_times_100, b.mise_times_100);
    }

    #[test]
    fn frozen_continuation_matches_batch() {
        let config = FrozenConfig {
            density: DensityName::F1,
            kernel: StandardKernel::K5,
            n0: 50,
            n1: 30,
            replications: 2,
            settings: small_settings(),
        };
        let (_, phase2) = frozen_gamma_protocol(&config).unwrap();
        let model = DensityModel::named(DensityName::F1).unwrap();
        let kernel = StandardKernel::K5.kernel();
        for rep in &phase2.per_replication {
            let sample = model.sample(SeededStream::new(5, rep.stream_id), 80);
            let frozen = GammaGrid::new(vec![rep.chosen], GridKind::EquispacedLmr).unwrap();
            let grid = ReplicationGrid::new(&sample, &kernel, &frozen, &config.settings).unwrap();
            let batch = crate::estimator::ww_evaluate_grid(&sample, &kernel, &frozen.schedule(0), &grid.grid).unwrap();
            assert!((grid.ise(&batch, &model) - rep.ise).abs() < 1e-12);
        }
    }

    #[test]
    fn online_single_step_and_closure() {
        let config = OnlineConfig {
            density: DensityName::F2,
            kernel: StandardKernel::K1,
            n_start: 30,
            n_end: 30,
            grid_size: 10,
            gamma_max: 0.5,
            points: 50,
            seed: 9,
            stream_id: 0,
        };
        let t = online_selection_protocol(&config).unwrap();
        assert_eq!(t.gammas.len(), 1);
        assert_eq!(t.gammas[0].0, 30);
        let t = online_selection_protocol(&OnlineConfig { n_end: 120, ..config }).unwrap();
        assert_eq!(t.gammas.len(), 91);
        let grid = make_grid(GridKind::EquispacedLmr, 0, 10, 0.5).unwrap();
        assert!(t.gammas.iter().all(|(_, g)| grid.values().contains(g)));
        assert_eq!(t.cells_per_update, 10 * 50);
    }

    #[test]
    fn online_selector_handles_short_input() {
        let grid = make_grid(GridKind::EquispacedLmr, 0, 5, 0.5).unwrap();
        let mut s = OnlineSelector::new(StandardKernel::K1.kernel(), grid.clone(), 20, 10, None).unwrap();
        assert!(s.finish().unwrap().is_none());
        for x in [0.1, 0.4, -0.2] {
            assert!(s.push(x).unwrap().is_none());
        }
        let sel = s.finish().unwrap().unwrap();
        assert!(grid.values().contains(&sel.chosen_gamma));
        assert_eq!(s.matrix().unwrap().n(), 3);
        assert!(s.push(f64::NAN).is_err());
    }

    #[test]
    fn method_names() {
        for m in [BenchMethod::WwLmr, BenchMethod::LmrFixed, BenchMethod::WwFrozen] {
            assert_eq!(m.as_str().parse::<BenchMethod>().unwrap(), m);
        }
        assert!("ks".parse::<BenchMethod>().is_err());
    }
}
