//! Bandwidth schedules `h_k = k^(-γ)`, candidate grids and rate diagnostics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Bandwidth attached to the `k`-th observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthSchedule {
    /// `h_k = k^(-γ)`, `γ ∈ [0, 1]`.
    PowerLaw { gamma: f64 },
    /// `h_k = h` for every `k` (Parzen-Rosenblatt).
    Constant { h: f64 },
}

impl BandwidthSchedule {
    pub fn power_law(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        Ok(Self::PowerLaw { gamma })
    }

    pub fn constant(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(invalid(format!("constant bandwidth must lie in (0, 1], got {h}")));
        }
        Ok(Self::Constant { h })
    }

    pub fn bandwidth_at(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(invalid("observation indices start at 1"));
        }
        Ok(self.bandwidth(k))
    }

    /// Unchecked variant of [`bandwidth_at`](Self::bandwidth_at); `k ≥ 1`.
    #[inline]
    pub(crate) fn bandwidth(&self, k: usize) -> f64 {
        match *self {
            Self::PowerLaw { gamma } => (k as f64).powf(-gamma),
            Self::Constant { h } => h,
        }
    }

    /// `Σ_{k=1..n} 1/h_k`.
    pub fn inverse_bandwidth_sum(&self, n: usize) -> f64 {
        match *self {
            Self::PowerLaw { gamma } => (1..=n).map(|k| (k as f64).powf(gamma)).sum(),
            Self::Constant { h } => n as f64 / h,
        }
    }

    /// `𝔥_n = n / Σ_{k=1..n} h_k⁻¹`.
    pub fn harmonic_aggregate(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(invalid("harmonic aggregate needs n >= 1"));
        }
        Ok(n as f64 / self.inverse_bandwidth_sum(n))
    }
}

/// `(1/n²) |Σ_{k=1..n} h_k^β|²` for `h_k = k^(-γ)`, summed exactly.
pub fn theoretical_bias_sq(beta: f64, gamma: f64, n: usize) -> f64 {
    let sum: f64 = (1..=n).map(|k| (k as f64).powf(-gamma * beta)).sum();
    let nf = n as f64;
    sum * sum / (nf * nf)
}

/// `(1/n²) Σ_{k=1..n} k^γ`, summed exactly.
pub fn theoretical_variance(gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    (1..=n).map(|k| (k as f64).powf(gamma)).sum::<f64>() / (nf * nf)
}

/// Rate-optimal exponent `1/(2β+1)` for smoothness `β`.
pub fn optimal_gamma(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("smoothness must be positive, got {beta}")));
    }
    Ok(1.0 / (2.0 * beta + 1.0))
}

/// Heuristic smoothness read-out `(1/γ − 1)/2` from a selected exponent.
pub fn beta_from_gamma(gamma: f64) -> f64 {
    (1.0 / gamma - 1.0) / 2.0
}

/// How a candidate grid was built, which also fixes how its values are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// `{i·γ_max/M}` exponents of power-law schedules.
    EquispacedLmr,
    /// `{(i/⌊log n⌋)^{1/2}}` exponents of power-law schedules.
    SqrtLogGl,
    /// `{i·h_max/M}` constant bandwidths.
    FixedHLmr,
}

impl GridKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EquispacedLmr => "equispaced_lmr",
            Self::SqrtLogGl => "sqrt_log_gl",
            Self::FixedHLmr => "fixed_h_lmr",
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "equispaced_lmr" => Ok(Self::EquispacedLmr),
            "sqrt_log_gl" => Ok(Self::SqrtLogGl),
            "fixed_h_lmr" => Ok(Self::FixedHLmr),
            other => Err(invalid(format!(
                "unknown grid kind {other:?}; expected equispaced_lmr, sqrt_log_gl or fixed_h_lmr"
            ))),
        }
    }
}

/// Strictly increasing candidate values in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaGrid {
    values: Vec<f64>,
    kind: GridKind,
}

impl GammaGrid {
    pub fn new(values: Vec<f64>, kind: GridKind) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("candidate grid is empty"));
        }
        if values.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(invalid("candidate values must lie in (0, 1]"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("candidate values must be strictly increasing"));
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Schedule of candidate `j`.
    pub fn schedule(&self, j: usize) -> BandwidthSchedule {
        let v = self.values[j];
        match self.kind {
            GridKind::FixedHLmr => BandwidthSchedule::Constant { h: v },
            _ => BandwidthSchedule::PowerLaw { gamma: v },
        }
    }

    pub fn schedules(&self) -> Vec<BandwidthSchedule> {
        (0..self.len()).map(|j| self.schedule(j)).collect()
    }

    /// Index of the candidate with the smallest bandwidths (the overfitting reference).
    pub fn reference_index(&self) -> usize {
        match self.kind {
            GridKind::FixedHLmr => 0,
            _ => self.len() - 1,
        }
    }

    /// Index of the smoothest candidate, preferred on ties.
    pub fn smoothest_index(&self) -> usize {
        match self.kind {
            GridKind::FixedHLmr => self.len() - 1,
            _ => 0,
        }
    }

    /// Candidates ordered from smoothest to roughest.
    pub fn smooth_to_rough(&self) -> Vec<usize> {
        match self.kind {
            GridKind::FixedHLmr => (0..self.len()).rev().collect(),
            _ => (0..self.len()).collect(),
        }
    }
}

/// Builds a candidate grid.
///
/// * `EquispacedLmr` / `FixedHLmr`: `{i·gamma_max/size : i = 1..size}`.
/// * `SqrtLogGl`: `{(i/⌊log n⌋)^{1/2}}`; `size` and `gamma_max` are ignored.
pub fn make_grid(kind: GridKind, n: usize, size: usize, gamma_max: f64) -> Result<GammaGrid> {
    match kind {
        GridKind::EquispacedLmr | GridKind::FixedHLmr => {
            if size == 0 {
                return Err(invalid("grid size must be at least 1"));
            }
            if !(gamma_max > 0.0 && gamma_max <= 1.0) {
                return Err(invalid(format!("grid maximum must lie in (0, 1], got {gamma_max}")));
            }
            let values = (1..=size)
                .map(|i| i as f64 * gamma_max / size as f64)
                .collect();
            GammaGrid::new(values, kind)
        }
        GridKind::SqrtLogGl => {
            if n == 0 {
                return Err(invalid("sqrt_log_gl grid needs n >= 1"));
            }
            let count = ((n as f64).ln().floor() as usize).max(1);
            let values = (1..=count)
                .map(|i| (i as f64 / count as f64).sqrt())
                .collect();
            GammaGrid::new(values, kind)
        }
    }
}
