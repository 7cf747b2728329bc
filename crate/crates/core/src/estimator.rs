//! Wolverton-Wagner estimates, their recursive matrix form, the doubly
//! smoothed estimates used by the Goldenshluger-Lepski rule, and L2 geometry.
//!
//! Every estimator built here is a finite sum of weighted normal densities
//! [`GaussianSum`], so it can be evaluated exactly on any point set and its
//! squared L2 distance to another estimator has a closed-form expansion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bandwidths::{BandwidthSchedule, GammaGrid};
use crate::error::{invalid, Result};
use crate::kernels::{normal_density, GaussianMixtureKernel};

// exp(-746) is exactly 0.0 in f64, so terms farther than sqrt(2·746·v) from
// their center contribute nothing and can be skipped without changing a bit.
const UNDERFLOW_Z2: f64 = 2.0 * 746.0;

/// Observations in arrival order. The order fixes which bandwidth each one gets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    observations: Vec<f64>,
}

impl Sample {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = observations.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(invalid(format!("observation {} is not finite ({x})", i + 1)));
        }
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// `(min, max)` of the observations.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.observations.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    pub fn prefix(&self, n: usize) -> Sample {
        Sample {
            observations: self.observations[..n.min(self.len())].to_vec(),
        }
    }
}

impl From<Sample> for Vec<f64> {
    fn from(s: Sample) -> Self {
        s.observations
    }
}

/// Equispaced, strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    points: Vec<f64>,
    spacing: f64,
}

impl EvaluationGrid {
    /// `count` points from `start` with step `spacing`.
    pub fn with_spacing(start: f64, spacing: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid("an evaluation grid needs at least two points"));
        }
        if !(spacing > 0.0 && spacing.is_finite() && start.is_finite()) {
            return Err(invalid(format!("bad grid start {start} / spacing {spacing}")));
        }
        let points = (0..count).map(|i| start + i as f64 * spacing).collect();
        Ok(Self { points, spacing })
    }

    /// `count` points spanning `[a, b]`, both ends included.
    pub fn linspace(a: f64, b: f64, count: usize) -> Result<Self> {
        if !(b > a) {
            return Err(invalid(format!("empty grid range [{a}, {b}]")));
        }
        if count < 2 {
            return Err(invalid("an evaluation grid needs at least two points"));
        }
        let spacing = (b - a) / (count - 1) as f64;
        let mut grid = Self::with_spacing(a, spacing, count)?;
        *grid.points.last_mut().unwrap() = b;
        Ok(grid)
    }

    /// Observation-range grid `x_ℓ = a + ℓ(b−a)/P`, `ℓ = 1..P`, padded with
    /// `pad` extra points of the same spacing on both sides.
    pub fn observation_grid(a: f64, b: f64, points: usize, pad: usize) -> Result<Self> {
        if !(b > a) {
            return Err(invalid(format!("empty observation range [{a}, {b}]")));
        }
        let spacing = (b - a) / points as f64;
        let count = points + 2 * pad;
        if count < 2 {
            return Err(invalid("an evaluation grid needs at least two points"));
        }
        let points = (0..count)
            .map(|i| a + (i as f64 + 1.0 - pad as f64) * spacing)
            .collect();
        Ok(Self { points, spacing })
    }

    /// Validates arbitrary points as an equispaced grid (relative tolerance 1e-12).
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("an evaluation grid needs at least two points"));
        }
        let spacing = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        if !(spacing > 0.0) {
            return Err(invalid("grid points must be strictly increasing"));
        }
        let scale = points[0].abs().max(points[points.len() - 1].abs()).max(spacing);
        for (i, w) in points.windows(2).enumerate() {
            let expected = points[0] + (i + 1) as f64 * spacing;
            if w[1] <= w[0] || (w[1] - expected).abs() > 1e-12 * scale {
                return Err(invalid(format!("grid point {} breaks equispacing", i + 2)));
            }
        }
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    /// Index window `[lo, hi)` of points within `radius` of `center` (one point of slack each side).
    #[inline]
    fn window(&self, center: f64, radius: f64) -> (usize, usize) {
        let start = self.points[0];
        let lo = ((center - radius - start) / self.spacing).floor() - 1.0;
        let hi = ((center + radius - start) / self.spacing).ceil() + 2.0;
        let len = self.points.len() as f64;
        (lo.clamp(0.0, len) as usize, hi.clamp(0.0, len) as usize)
    }
}

/// One `weight · φ_variance(· − center)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub center: f64,
    pub weight: f64,
    pub variance: f64,
}

impl GaussianTerm {
    /// Adds this term to `out` at the grid points.
    ///
    /// Walks outward from the point nearest the center using the ratio
    /// recurrence of a Gaussian on an equispaced grid, so each point costs
    /// two multiplications instead of an `exp`. Relative drift is a few ulps
    /// per step.
    #[inline]
    fn accumulate(&self, grid: &EvaluationGrid, out: &mut [f64]) {
        let coef = self.weight / (2.0 * PI * self.variance).sqrt();
        let v = self.variance;
        let (lo, hi) = grid.window(self.center, (UNDERFLOW_Z2 * v).sqrt());
        if lo >= hi {
            return;
        }
        let dx = grid.spacing;
        let start = grid.points[0];
        let nearest = ((self.center - start) / dx).round().clamp(lo as f64, (hi - 1) as f64) as usize;
        let d0 = grid.points[nearest] - self.center;
        let peak = coef * (-0.5 * d0 * d0 / v).exp();
        let q = (-dx * dx / v).exp();
        out[nearest] += peak;

        let mut g = peak;
        let mut r = (-(2.0 * d0 * dx + dx * dx) / (2.0 * v)).exp();
        for o in &mut out[nearest + 1..hi] {
            g *= r;
            if g == 0.0 {
                break;
            }
            *o += g;
            r *= q;
        }
        let mut g = peak;
        let mut r = (-(-2.0 * d0 * dx + dx * dx) / (2.0 * v)).exp();
        for o in out[lo..nearest].iter_mut().rev() {
            g *= r;
            if g == 0.0 {
                break;
            }
            *o += g;
            r *= q;
        }
    }
}

/// An estimator in mixture form: `Σ_t w_t φ_{v_t}(x − c_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSum {
    terms: Vec<GaussianTerm>,
}

impl GaussianSum {
    pub fn new(terms: Vec<GaussianTerm>) -> Self {
        Self { terms }
    }

    /// `(1/n) Σ_k K_{h_k}(X_k − x)`.
    pub fn ww(sample: &Sample, kernel: &GaussianMixtureKernel, schedule: &BandwidthSchedule) -> Result<Self> {
        if sample.is_empty() {
            return Err(invalid("cannot build an estimate from an empty sample"));
        }
        let inv_n = 1.0 / sample.len() as f64;
        let mut terms = Vec::with_capacity(sample.len() * kernel.components().len());
        for (k, &x) in sample.observations().iter().enumerate() {
            let h = schedule.bandwidth(k + 1);
            let h2 = h * h;
            for c in kernel.components() {
                terms.push(GaussianTerm {
                    center: x,
                    weight: c.weight * inv_n,
                    variance: c.variance * h2,
                });
            }
        }
        Ok(Self { terms })
    }

    /// `(1/n) Σ_k (K_{h_k(γ')} ∗ K_{h_k(γ)})(X_k − x)`.
    pub fn gl_convolved(
        sample: &Sample,
        kernel: &GaussianMixtureKernel,
        schedule: &BandwidthSchedule,
        schedule_prime: &BandwidthSchedule,
    ) -> Result<Self> {
        if sample.is_empty() {
            return Err(invalid("cannot build an estimate from an empty sample"));
        }
        let inv_n = 1.0 / sample.len() as f64;
        let comps = kernel.components();
        let mut terms = Vec::with_capacity(sample.len() * comps.len() * comps.len());
        for (k, &x) in sample.observations().iter().enumerate() {
            let h2 = schedule.bandwidth(k + 1).powi(2);
            let hp2 = schedule_prime.bandwidth(k + 1).powi(2);
            for a in comps {
                for b in comps {
                    terms.push(GaussianTerm {
                        center: x,
                        weight: a.weight * b.weight * inv_n,
                        variance: a.variance * hp2 + b.variance * h2,
                    });
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * normal_density(t.variance, x - t.center))
            .sum()
    }

    pub fn eval_points(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn eval_grid(&self, grid: &EvaluationGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        for t in &self.terms {
            t.accumulate(grid, &mut out);
        }
        out
    }

    /// `⟨self, other⟩₂` by the pairwise expansion `Σ w_s w_t φ_{v_s+v_t}(c_s − c_t)`.
    pub fn inner_product(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for s in &self.terms {
            for t in &other.terms {
                acc += s.weight * t.weight * normal_density(s.variance + t.variance, s.center - t.center);
            }
        }
        acc
    }
}

/// Evaluates the Wolverton-Wagner estimate at arbitrary points.
///
/// With a [`BandwidthSchedule::Constant`] schedule this is the Parzen-Rosenblatt estimate.
pub fn ww_evaluate(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    schedule: &BandwidthSchedule,
    xs: &[f64],
) -> Result<Vec<f64>> {
    Ok(GaussianSum::ww(sample, kernel, schedule)?.eval_points(xs))
}

/// Grid variant of [`ww_evaluate`]; skips exactly-underflowing terms.
pub fn ww_evaluate_grid(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    schedule: &BandwidthSchedule,
    grid: &EvaluationGrid,
) -> Result<Vec<f64>> {
    Ok(GaussianSum::ww(sample, kernel, schedule)?.eval_grid(grid))
}

/// Evaluates the doubly smoothed estimate `f̂_{n,γ,γ'}` at arbitrary points.
pub fn gl_convolved_evaluate(
    sample: &Sample,
    kernel: &GaussianMixtureKernel,
    schedule: &BandwidthSchedule,
    schedule_prime: &BandwidthSchedule,
    xs: &[f64],
) -> Result<Vec<f64>> {
    Ok(GaussianSum::gl_convolved(sample, kernel, schedule, schedule_prime)?.eval_points(xs))
}

/// How to compute a squared L2 distance.
#[derive(Debug, Clone)]
pub enum L2Method<'a> {
    /// Riemann sum `spacing · Σ diff²` over the grid.
    Grid(&'a EvaluationGrid),
    /// Full pairwise expansion; cost grows with the square of the term count.
    Exact,
}

/// `‖fa − fb‖₂²`.
pub fn l2_distance_sq(fa: &GaussianSum, fb: &GaussianSum, method: &L2Method<'_>) -> f64 {
    match method {
        L2Method::Grid(grid) => {
            let a = fa.eval_grid(grid);
            let b = fb.eval_grid(grid);
            riemann_distance_sq(&a, &b, grid.spacing())
        }
        L2Method::Exact => {
            let aa = fa.inner_product(fa);
            let bb = fb.inner_product(fb);
            let ab = fa.inner_product(fb);
            (aa + bb - 2.0 * ab).max(0.0)
        }
    }
}

#[inline]
pub(crate) fn riemann_distance_sq(a: &[f64], b: &[f64], spacing: f64) -> f64 {
    spacing
        * a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
}

/// Tabulated function on an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: EvaluationGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: EvaluationGrid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Riemann-sum squared distance; both functions must live on the same grid.
    pub fn distance_sq(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(invalid("squared distance between functions on different grids"));
        }
        Ok(riemann_distance_sq(&self.values, &other.values, self.grid.spacing()))
    }
}

/// Work counters of the streaming state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCounters {
    pub updates: u64,
    /// Matrix cells rewritten, summed over all updates.
    pub cells: u64,
}

/// The `M × K` matrix of Wolverton-Wagner estimates, one row per candidate,
/// updated in place as observations arrive.
#[derive(Debug, Clone)]
pub struct EstimatorMatrix {
    kernel: GaussianMixtureKernel,
    gamma_grid: GammaGrid,
    schedules: Vec<BandwidthSchedule>,
    eval_grid: EvaluationGrid,
    values: Vec<f64>,
    n: usize,
    sample: Option<Vec<f64>>,
    counters: UpdateCounters,
    scratch: Vec<f64>,
}

impl EstimatorMatrix {
    /// Empty state. With `keep_sample` the raw observations are retained for oracle checks.
    pub fn new(
        kernel: GaussianMixtureKernel,
        gamma_grid: GammaGrid,
        eval_grid: EvaluationGrid,
        keep_sample: bool,
    ) -> Self {
        let schedules = gamma_grid.schedules();
        let cells = schedules.len() * eval_grid.len();
        Self {
            kernel,
            gamma_grid,
            schedules,
            values: vec![0.0; cells],
            scratch: vec![0.0; eval_grid.len()],
            eval_grid,
            n: 0,
            sample: keep_sample.then(Vec::new),
            counters: UpdateCounters::default(),
        }
    }

    /// Batch construction: each row is the direct Wolverton-Wagner sum over `sample`.
    pub fn from_sample(
        kernel: GaussianMixtureKernel,
        gamma_grid: GammaGrid,
        eval_grid: EvaluationGrid,
        sample: &Sample,
    ) -> Result<Self> {
        let mut m = Self::new(kernel, gamma_grid, eval_grid, true);
        if sample.is_empty() {
            return Ok(m);
        }
        let k = m.eval_grid.len();
        for (j, schedule) in m.schedules.iter().enumerate() {
            let row = ww_evaluate_grid(sample, &m.kernel, schedule, &m.eval_grid)?;
            m.values[j * k..(j + 1) * k].copy_from_slice(&row);
        }
        m.n = sample.len();
        m.sample = Some(sample.observations().to_vec());
        Ok(m)
    }

    /// Absorbs one observation: `F_{n+1} = n/(n+1) F_n + 1/(n+1) (K_{h_{n+1}}(x_new − x_k))_{j,k}`.
    pub fn update(&mut self, x_new: f64) -> Result<()> {
        if !x_new.is_finite() {
            return Err(invalid(format!("observation {x_new} is not finite")));
        }
        self.n += 1;
        let n = self.n as f64;
        let keep = (n - 1.0) / n;
        let add = 1.0 / n;
        let k = self.eval_grid.len();
        for (j, schedule) in self.schedules.iter().enumerate() {
            let h = schedule.bandwidth(self.n);
            let h2 = h * h;
            self.scratch.iter_mut().for_each(|v| *v = 0.0);
            for c in self.kernel.components() {
                GaussianTerm {
                    center: x_new,
                    weight: c.weight,
                    variance: c.variance * h2,
                }
                .accumulate(&self.eval_grid, &mut self.scratch);
            }
            for (v, s) in self.values[j * k..(j + 1) * k].iter_mut().zip(&self.scratch) {
                *v = keep * *v + add * s;
            }
        }
        if let Some(sample) = self.sample.as_mut() {
            sample.push(x_new);
        }
        self.counters.updates += 1;
        self.counters.cells += self.values.len() as u64;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> &GaussianMixtureKernel {
        &self.kernel
    }

    pub fn gamma_grid(&self) -> &GammaGrid {
        &self.gamma_grid
    }

    pub fn eval_grid(&self) -> &EvaluationGrid {
        &self.eval_grid
    }

    pub fn rows(&self) -> usize {
        self.schedules.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let k = self.eval_grid.len();
        &self.values[j * k..(j + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn counters(&self) -> UpdateCounters {
        self.counters
    }

    /// Retained observations, if the state was built with `keep_sample`.
    pub fn sample(&self) -> Option<&[f64]> {
        self.sample.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidths::{make_grid, GridKind};
    use crate::kernels::make_standard;
    use crate::quadrature::trapezoid_values;

    fn k(order: u32) -> GaussianMixtureKernel {
        make_standard(order).unwrap()
    }

    fn pseudo_sample(n: usize, seed: u64) -> Sample {
        // small LCG, good enough for spreading test points
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let obs = (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0
            })
            .collect();
        Sample::new(obs).unwrap()
    }

    #[test]
    fn ww_examples() {
        let one = Sample::new(vec![0.0]).unwrap();
        let s = BandwidthSchedule::power_law(0.7).unwrap();
        let v = ww_evaluate(&one, &k(1), &s, &[0.0]).unwrap();
        assert!((v[0] - 0.398942).abs() < 1e-6);

        let two = Sample::new(vec![0.0, 0.0]).unwrap();
        let s = BandwidthSchedule::power_law(1.0).unwrap();
        let v = ww_evaluate(&two, &k(1), &s, &[0.0]).unwrap();
        assert!((v[0] - 0.598414).abs() < 1e-6);

        let sample = pseudo_sample(30, 3);
        let xs = [-1.0, 0.0, 0.3, 2.0];
        let a = ww_evaluate(&sample, &k(5), &BandwidthSchedule::power_law(0.0).unwrap(), &xs).unwrap();
        let b = ww_evaluate(&sample, &k(5), &BandwidthSchedule::constant(1.0).unwrap(), &xs).unwrap();
        assert_eq!(a, b);

        let empty = Sample::new(vec![]).unwrap();
        assert!(ww_evaluate(&empty, &k(1), &s, &xs).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let sample = pseudo_sample(50, 9);
        let grid = EvaluationGrid::linspace(-8.0, 8.0, 301).unwrap();
        for order in [1, 7] {
            let s = BandwidthSchedule::power_law(0.5).unwrap();
            let a = ww_evaluate_grid(&sample, &k(order), &s, &grid).unwrap();
            let b = ww_evaluate(&sample, &k(order), &s, grid.points()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grids() {
        let g = EvaluationGrid::linspace(-3.0, 3.0, 61).unwrap();
        assert_eq!(g.len(), 61);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!(g.points().iter().any(|&x| x == 0.0) || g.points()[30].abs() < 1e-15);
        let obs = EvaluationGrid::observation_grid(0.0, 1.0, 100, 0).unwrap();
        assert_eq!(obs.len(), 100);
        assert!((obs.points()[0] - 0.01).abs() < 1e-15);
        assert_eq!(obs.points()[99], 1.0);
        let padded = EvaluationGrid::observation_grid(0.0, 1.0, 100, 5).unwrap();
        assert_eq!(padded.len(), 110);
        assert_eq!(&padded.points()[5..105], obs.points());
        assert!(EvaluationGrid::from_points(vec![0.0, 0.1, 0.2, 0.3]).is_ok());
        assert!(EvaluationGrid::from_points(vec![0.0, 0.1, 0.25]).is_err());
        assert!(EvaluationGrid::from_points(vec![0.0]).is_err());
        assert!(EvaluationGrid::linspace(1.0, 1.0, 5).is_err());
    }

    #[test]
    fn matrix_first_and_second_update() {
        let grid = make_grid(GridKind::EquispacedLmr, 10, 4, 0.5).unwrap();
        let eval = EvaluationGrid::linspace(-4.0, 4.0, 81).unwrap();
        let mut m = EstimatorMatrix::new(k(3), grid.clone(), eval.clone(), false);
        m.update(0.4).unwrap();
        assert_eq!(m.n(), 1);
        let first: Vec<f64> = eval.points().iter().map(|&x| k(3).eval(x - 0.4)).collect();
        for j in 0..m.rows() {
            for (a, b) in m.row(j).iter().zip(&first) {
                assert!((a - b).abs() < 1e-13);
            }
        }
        let before: Vec<Vec<f64>> = (0..m.rows()).map(|j| m.row(j).to_vec()).collect();
        m.update(-1.0).unwrap();
        for j in 0..m.rows() {
            let h = grid.schedule(j).bandwidth_at(2).unwrap();
            let kh = k(3).scale(h).unwrap();
            for (i, &x) in eval.points().iter().enumerate() {
                let expected = 0.5 * before[j][i] + 0.5 * kh.eval(x + 1.0);
                assert!((m.row(j)[i] - expected).abs() < 1e-13);
            }
        }
        assert!(m.update(f64::INFINITY).is_err());
        assert_eq!(m.counters().updates, 2);
        assert_eq!(m.counters().cells, 2 * 4 * 81);
    }

    #[test]
    fn recursive_matches_batch() {
        let sample = pseudo_sample(200, 17);
        let grid = make_grid(GridKind::EquispacedLmr, 200, 10, 0.5).unwrap();
        let eval = EvaluationGrid::linspace(-5.0, 5.0, 120).unwrap();
        for order in [1, 7] {
            let mut m = EstimatorMatrix::new(k(order), grid.clone(), eval.clone(), true);
            for &x in sample.observations() {
                m.update(x).unwrap();
            }
            let batch = EstimatorMatrix::from_sample(k(order), grid.clone(), eval.clone(), &sample).unwrap();
            let diff = m
                .values()
                .iter()
                .zip(batch.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "{diff}");
            assert_eq!(m.sample().unwrap(), sample.observations());
        }
    }

    #[test]
    fn convolved_estimates() {
        let one = Sample::new(vec![0.0]).unwrap();
        let flat = BandwidthSchedule::power_law(0.0).unwrap();
        let v = gl_convolved_evaluate(&one, &k(1), &flat, &flat, &[0.0]).unwrap();
        assert!((v[0] - 0.282095).abs() < 1e-6);

        let sample = pseudo_sample(15, 4);
        let a = BandwidthSchedule::power_law(0.2).unwrap();
        let b = BandwidthSchedule::power_law(0.6).unwrap();
        let xs = [-2.0, -0.1, 0.5, 1.7];
        let ab = gl_convolved_evaluate(&sample, &k(3), &a, &b, &xs).unwrap();
        let ba = gl_convolved_evaluate(&sample, &k(3), &b, &a, &xs).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            assert!((x - y).abs() < 1e-14);
        }

        // Convolving with a vanishing bandwidth recovers the plain estimate.
        let tiny = BandwidthSchedule::constant(1e-6).unwrap();
        let x1 = Sample::new(vec![0.3]).unwrap();
        let conv = gl_convolved_evaluate(&x1, &k(5), &a, &tiny, &xs).unwrap();
        let plain = ww_evaluate(&x1, &k(5), &a, &xs).unwrap();
        for (x, y) in conv.iter().zip(&plain) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(gl_convolved_evaluate(&Sample::new(vec![]).unwrap(), &k(1), &a, &b, &xs).is_err());
    }

    #[test]
    fn l2_distance_methods_agree() {
        let sample = pseudo_sample(20, 11);
        let fa = GaussianSum::ww(&sample, &k(1), &BandwidthSchedule::power_law(0.1).unwrap()).unwrap();
        let fb = GaussianSum::ww(&sample, &k(1), &BandwidthSchedule::power_law(0.5).unwrap()).unwrap();
        let grid = EvaluationGrid::linspace(-13.0, 13.0, 2000).unwrap();
        let g = l2_distance_sq(&fa, &fb, &L2Method::Grid(&grid));
        let e = l2_distance_sq(&fa, &fb, &L2Method::Exact);
        assert!(((g - e) / e).abs() < 1e-3, "{g} vs {e}");
        assert_eq!(l2_distance_sq(&fa, &fa, &L2Method::Grid(&grid)), 0.0);
        assert!(l2_distance_sq(&fa, &fa, &L2Method::Exact) < 1e-15);

        let one = Sample::new(vec![0.0]).unwrap();
        let s = BandwidthSchedule::constant(1.0).unwrap();
        let f1 = GaussianSum::ww(&one, &k(1), &s).unwrap();
        let f2 = GaussianSum::ww(&one, &k(1), &BandwidthSchedule::power_law(0.4).unwrap()).unwrap();
        assert_eq!(l2_distance_sq(&f1, &f2, &L2Method::Grid(&grid)), 0.0);
        assert!(l2_distance_sq(&f1, &f2, &L2Method::Exact) < 1e-15);
    }

    #[test]
    fn grid_distance_converges_when_refined() {
        let sample = pseudo_sample(8, 5);
        let fa = GaussianSum::ww(&sample, &k(3), &BandwidthSchedule::power_law(0.9).unwrap()).unwrap();
        let fb = GaussianSum::ww(&sample, &k(3), &BandwidthSchedule::power_law(0.3).unwrap()).unwrap();
        let exact = l2_distance_sq(&fa, &fb, &L2Method::Exact);
        let gap = |points: usize| {
            let grid = EvaluationGrid::with_spacing(-10.0, 20.0 / points as f64, points).unwrap();
            (l2_distance_sq(&fa, &fb, &L2Method::Grid(&grid)) - exact).abs()
        };
        for points in [60usize, 80, 100] {
            let coarse = gap(points);
            let fine = gap(2 * points);
            assert!(coarse > 0.0 && fine <= 0.5 * coarse, "{coarse} -> {fine}");
        }
    }

    #[test]
    fn mismatched_grid_functions() {
        let g1 = EvaluationGrid::linspace(0.0, 1.0, 11).unwrap();
        let g2 = EvaluationGrid::linspace(0.0, 2.0, 11).unwrap();
        let a = GridFunction::new(g1.clone(), vec![1.0; 11]).unwrap();
        let b = GridFunction::new(g2, vec![1.0; 11]).unwrap();
        assert!(a.distance_sq(&b).is_err());
        assert!(GridFunction::new(g1, vec![0.0; 3]).is_err());
        assert_eq!(a.distance_sq(&a).unwrap(), 0.0);
    }

    #[test]
    fn mass_preserved() {
        let sample = pseudo_sample(40, 21);
        for order in [1, 3, 5, 7] {
            let grid = EvaluationGrid::linspace(-30.0, 30.0, 12001).unwrap();
            let v = ww_evaluate_grid(&sample, &k(order), &BandwidthSchedule::power_law(0.4).unwrap(), &grid).unwrap();
            let mass = trapezoid_values(&v, grid.spacing());
            assert!((mass - 1.0).abs() < 1e-3, "order {order}: {mass}");
        }
    }

    #[test]
    fn permutation_sensitivity() {
        let sample = pseudo_sample(25, 2);
        let mut reversed = sample.observations().to_vec();
        reversed.reverse();
        let reversed = Sample::new(reversed).unwrap();
        let xs = [-1.0, 0.0, 1.0];
        let pl = BandwidthSchedule::power_law(0.4).unwrap();
        let a = ww_evaluate(&sample, &k(1), &pl, &xs).unwrap();
        let b = ww_evaluate(&reversed, &k(1), &pl, &xs).unwrap();
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-6));
        let c = BandwidthSchedule::constant(0.4).unwrap();
        let a = ww_evaluate(&sample, &k(1), &c, &xs).unwrap();
        let b = ww_evaluate(&reversed, &k(1), &c, &xs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
