//! Data-driven choice of the bandwidth exponent.
//!
//! * Penalized comparison to the overfitting candidate (LMR):
//!   `Crit(γ) = ‖f̂_γ − f̂_{γmax}‖² + (2/n²) Σ_k ⟨K_{h_k(γmax)}, K_{h_k(γ)}⟩`.
//! * Goldenshluger-Lepski (GL): minimize `A_n(γ) + V_n(γ)` with
//!   `A_n(γ) = max_{γ'} (‖f̂_{γ'} − f̂_{γ,γ'}‖² − V_n(γ'))₊`.
//!
//! Distances are Riemann sums over the supplied evaluation grid; penalties are
//! exact sums of Gaussian inner products.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bandwidths::{BandwidthSchedule, GammaGrid, GridKind};
use crate::error::{invalid, Result};
use crate::estimator::{riemann_distance_sq, EstimatorMatrix, EvaluationGrid, GaussianSum, Sample};
use crate::kernels::{GaussianMixtureKernel, KernelConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Lmr,
    Gl,
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Self::Lmr => "lmr",
            Self::Gl => "gl",
        })
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lmr" => Ok(Self::Lmr),
            "gl" => Ok(Self::Gl),
            other => Err(invalid(format!("unknown selection method {other:?}; expected lmr or gl"))),
        }
    }
}

/// Criterion breakdown for one candidate.
///
/// For LMR `penalty` is `pen(γ)` and `distance` is `‖f̂_γ − f̂_{γmax}‖²`;
/// for GL they hold `V_n(γ)` and `A_n(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub gamma: f64,
    pub criterion: f64,
    pub penalty: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub grid_kind: GridKind,
    pub chosen_gamma: f64,
    pub chosen_index: usize,
    pub tie_broken: bool,
    pub per_candidate: Vec<CandidateScore>,
    pub warnings: Vec<String>,
}

/// Picks the minimal criterion, scanning from the smoothest candidate so ties keep it.
fn argmin(grid: &GammaGrid, criteria: &[f64]) -> (usize, bool) {
    let order = grid.smooth_to_rough();
    let mut best = order[0];
    for &j in &order[1..] {
        if criteria[j] < criteria[best] {
            best = j;
        }
    }
    let ties = criteria.iter().filter(|&&c| c == criteria[best]).count();
    (best, ties > 1)
}

/// `⟨K_a, K_b⟩₂` for two rescalings of the same kernel.
#[inline]
fn scaled_inner(kernel: &GaussianMixtureKernel, a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    let mut acc = 0.0;
    for ci in kernel.components() {
        for cj in kernel.components() {
            acc += ci.weight * cj.weight / (2.0 * PI * (ci.variance * a2 + cj.variance * b2)).sqrt();
        }
    }
    acc
}

/// `Σ_{k=1..n} ⟨K_{h_k(reference)}, K_{h_k(candidate)}⟩₂`.
fn penalty_sum(
    kernel: &GaussianMixtureKernel,
    candidate: &BandwidthSchedule,
    reference: &BandwidthSchedule,
    n: usize,
) -> f64 {
    match (candidate, reference) {
        (BandwidthSchedule::Constant { h }, BandwidthSchedule::Constant { h: r }) => {
            n as f64 * scaled_inner(kernel, *r, *h)
        }
        _ => (1..=n)
            .map(|k| scaled_inner(kernel, reference.bandwidth(k), candidate.bandwidth(k)))
            .sum(),
    }
}

/// `pen(γ) = (2/n²) Σ_{k=1..n} ⟨K_{h_k(γmax)}, K_{h_k(γ)}⟩₂` for power-law schedules.
pub fn lmr_penalty(kernel: &GaussianMixtureKernel, n: usize, gamma: f64, gamma_max: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("penalty needs n >= 1"));
    }
    if gamma > gamma_max {
        return Err(invalid(format!("gamma {gamma} exceeds the reference {gamma_max}")));
    }
    let candidate = BandwidthSchedule::power_law(gamma)?;
    let reference = BandwidthSchedule::power_law(gamma_max)?;
    let nf = n as f64;
    Ok(2.0 * penalty_sum(kernel, &candidate, &reference, n) / (nf * nf))
}

/// LMR penalties of every grid candidate against the grid's reference.
pub fn lmr_penalties(kernel: &GaussianMixtureKernel, grid: &GammaGrid, n: usize) -> Vec<f64> {
    let reference = grid.schedule(grid.reference_index());
    let nf = n as f64;
    grid.schedules()
        .iter()
        .map(|s| 2.0 * penalty_sum(kernel, s, &reference, n) / (nf * nf))
        .collect()
}

/// Running penalty sums for the streaming selector: one `O(M·J²)` step per observation.
#[derive(Debug, Clone)]
pub struct PenaltyTracker {
    kernel: GaussianMixtureKernel,
    schedules: Vec<BandwidthSchedule>,
    reference: BandwidthSchedule,
    sums: Vec<f64>,
    n: usize,
}

impl PenaltyTracker {
    pub fn new(kernel: GaussianMixtureKernel, grid: &GammaGrid) -> Self {
        Self {
            kernel,
            schedules: grid.schedules(),
            reference: grid.schedule(grid.reference_index()),
            sums: vec![0.0; grid.len()],
            n: 0,
        }
    }

    pub fn advance(&mut self) {
        self.n += 1;
        let r = self.reference.bandwidth(self.n);
        for (sum, s) in self.sums.iter_mut().zip(&self.schedules) {
            *sum += scaled_inner(&self.kernel, r, s.bandwidth(self.n));
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn penalties(&self) -> Vec<f64> {
        let nf = self.n as f64;
        self.sums.iter().map(|s| 2.0 * s / (nf * nf)).collect()
    }
}

/// Ratio `‖K‖_∞‖K‖₁ / (n h_n(γmax))`, which the LMR guarantee wants at most 1.
fn overfit_ratio(constants: &KernelConstants, grid: &GammaGrid, n: usize) -> f64 {
    let h = grid.schedule(grid.reference_index()).bandwidth(n.max(1));
    constants.sup_norm * constants.l1_norm / (n as f64 * h)
}

fn overfit_warnings(kernel: &GaussianMixtureKernel, grid: &GammaGrid, n: usize) -> Vec<String> {
    match kernel.norms() {
        Ok(c) => {
            let ratio = overfit_ratio(&c, grid, n);
            if ratio > 1.0 {
                let msg = format!(
                    "‖K‖∞‖K‖₁/(n·h_n) = {ratio:.4} exceeds 1 at n = {n}; the overfitting reference is too smooth"
                );
                log::warn!("{msg}");
                vec![msg]
            } else {
                Vec::new()
            }
        }
        Err(e) => vec![format!("kernel norms unavailable: {e}")],
    }
}

/// LMR selection from precomputed rows (row-major, `grid.len()` rows of `k` values).
pub fn lmr_select_rows(
    grid: &GammaGrid,
    rows: &[f64],
    spacing: f64,
    penalties: &[f64],
) -> Result<SelectionResult> {
    let m = grid.len();
    if m == 0 || rows.len() % m != 0 || penalties.len() != m {
        return Err(invalid("rows / penalties do not match the candidate grid"));
    }
    let k = rows.len() / m;
    let r = grid.reference_index();
    let reference = &rows[r * k..(r + 1) * k];
    let per_candidate: Vec<CandidateScore> = (0..m)
        .map(|j| {
            let distance = if j == r {
                0.0
            } else {
                riemann_distance_sq(&rows[j * k..(j + 1) * k], reference, spacing)
            };
            CandidateScore {
                gamma: grid.values()[j],
                criterion: distance + penalties[j],
                penalty: penalties[j],
                distance,
            }
        })
        .collect();
    let criteria: Vec<f64> = per_candidate.iter().map(|c| c.criterion).collect();
    let (chosen_index, tie_broken) = argmin(grid, &criteria);
    Ok(SelectionResult {
        method: SelectionMethod::Lmr,
        grid_kind: grid.kind(),
        chosen_gamma: grid.values()[chosen_index],
        chosen_index,
        tie_broken,
        per_candidate,
        warnings: Vec::new(),
    })
}

/// Evaluates every candidate estimate on `eval_grid` (row-major).
pub fn candidate_rows(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    grid: &GammaGrid,
    eval_grid: &EvaluationGrid,
) -> Result<Vec<f64>> {
    let mut rows = Vec::with_capacity(grid.len() * eval_grid.len());
    for s in grid.schedules() {
        rows.extend(GaussianSum::ww(sample, kernel, &s)?.eval_grid(eval_grid));
    }
    Ok(rows)
}

/// LMR selection over any candidate grid: power-law exponents, or constant
/// bandwidths when the grid is of kind [`GridKind::FixedHLmr`].
pub fn lmr_select(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    grid: &GammaGrid,
    eval_grid: &EvaluationGrid,
) -> Result<SelectionResult> {
    let rows = candidate_rows(sample, kernel, grid, eval_grid)?;
    lmr_select_with_rows(sample.len(), kernel, grid, eval_grid, &rows)
}

/// As [`lmr_select`] with candidate rows already evaluated on `eval_grid`.
pub fn lmr_select_with_rows(
    n: usize,
    kernel: &GaussianMixtureKernel,
    grid: &GammaGrid,
    eval_grid: &EvaluationGrid,
    rows: &[f64],
) -> Result<SelectionResult> {
    if n == 0 {
        return Err(invalid("selection needs a non-empty sample"));
    }
    let penalties = lmr_penalties(kernel, grid, n);
    let mut result = lmr_select_rows(grid, rows, eval_grid.spacing(), &penalties)?;
    result.warnings = overfit_warnings(kernel, grid, n);
    Ok(result)
}

/// LMR selection with a data-independent bandwidth `h`, the smallest `h` acting as reference.
pub fn lmr_select_fixed_h(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    h_grid: &GammaGrid,
    eval_grid: &EvaluationGrid,
) -> Result<SelectionResult> {
    if h_grid.kind() != GridKind::FixedHLmr {
        return Err(invalid(format!(
            "fixed-h selection needs a fixed_h_lmr grid, got {}",
            h_grid.kind()
        )));
    }
    lmr_select(sample, kernel, h_grid, eval_grid)
}

/// LMR selection directly from the streaming matrix.
pub fn lmr_select_matrix(matrix: &EstimatorMatrix, penalties: &[f64]) -> Result<SelectionResult> {
    if matrix.n() == 0 {
        return Err(invalid("selection needs at least one absorbed observation"));
    }
    lmr_select_rows(
        matrix.gamma_grid(),
        matrix.values(),
        matrix.eval_grid().spacing(),
        penalties,
    )
}

/// `V_n = υ ‖K‖₂² ‖K‖₁² (1/n²) Σ_k h_k⁻¹`.
pub fn gl_vn(constants: &KernelConstants, schedule: &BandwidthSchedule, n: usize, upsilon: f64) -> f64 {
    let nf = n as f64;
    upsilon * constants.l2_norm_sq * constants.l1_norm.powi(2) * schedule.inverse_bandwidth_sum(n) / (nf * nf)
}

/// Goldenshluger-Lepski selection.
pub fn gl_select(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    grid: &GammaGrid,
    upsilon: f64,
    eval_grid: &EvaluationGrid,
) -> Result<SelectionResult> {
    if sample.is_empty() {
        return Err(invalid("selection needs a non-empty sample"));
    }
    if !(upsilon >= 0.0 && upsilon.is_finite()) {
        return Err(invalid(format!("upsilon must be non-negative, got {upsilon}")));
    }
    let n = sample.len();
    let constants = kernel.norms()?;
    let schedules = grid.schedules();
    let vn: Vec<f64> = schedules.iter().map(|s| gl_vn(&constants, s, n, upsilon)).collect();
    let plain: Vec<Vec<f64>> = schedules
        .iter()
        .map(|s| Ok(GaussianSum::ww(sample, kernel, s)?.eval_grid(eval_grid)))
        .collect::<Result<_>>()?;
    let mut per_candidate = Vec::with_capacity(grid.len());
    for (j, s) in schedules.iter().enumerate() {
        let mut a_n: f64 = 0.0;
        for (jp, sp) in schedules.iter().enumerate() {
            let smoothed = GaussianSum::gl_convolved(sample, kernel, s, sp)?.eval_grid(eval_grid);
            let d = riemann_distance_sq(&plain[jp], &smoothed, eval_grid.spacing());
            a_n = a_n.max(d - vn[jp]);
        }
        per_candidate.push(CandidateScore {
            gamma: grid.values()[j],
            criterion: a_n + vn[j],
            penalty: vn[j],
            distance: a_n,
        });
    }
    let criteria: Vec<f64> = per_candidate.iter().map(|c| c.criterion).collect();
    let (chosen_index, tie_broken) = argmin(grid, &criteria);
    Ok(SelectionResult {
        method: SelectionMethod::Gl,
        grid_kind: grid.kind(),
        chosen_gamma: grid.values()[chosen_index],
        chosen_index,
        tie_broken,
        per_candidate,
        warnings: Vec::new(),
    })
}
