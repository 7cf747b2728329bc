//! Benchmark densities with exact evaluation, CDFs and seeded sampling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, erf::erfc, gamma::gamma_lr, gamma::ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::estimator::Sample;
use crate::quadrature;

/// The seven benchmark densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityName {
    /// N(0, 1)
    F1,
    /// 0.5 N(-2, 1) + 0.5 N(2, 1)
    Fm1,
    /// Beta(3, 3)
    F2,
    /// 0.5 (Beta(3, 3) - 1) + 0.5 Beta(3, 3)
    Fm2,
    /// Gamma(shape 5, scale 5) / 10
    F3,
    /// 0.4 Gamma(2, 1/3) + 0.6 Gamma(7, 6) / 10
    Fm3,
    /// Laplace, (1/2) e^{-|x|}
    F4,
}

impl DensityName {
    pub const ALL: [DensityName; 7] = [
        Self::F1,
        Self::Fm1,
        Self::F2,
        Self::Fm2,
        Self::F3,
        Self::Fm3,
        Self::F4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::Fm1 => "fm1",
            Self::F2 => "f2",
            Self::Fm2 => "fm2",
            Self::F3 => "f3",
            Self::Fm3 => "fm3",
            Self::F4 => "f4",
        }
    }
}

impl fmt::Display for DensityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for DensityName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s.trim())
            .ok_or_else(|| invalid(format!("unknown density {s:?}; expected one of f1, fm1, f2, fm2, f3, fm3, f4")))
    }
}

/// Base law of a mixture component, before the affine map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Normal { mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
    /// Shape-scale parametrization.
    Gamma { shape: f64, scale: f64 },
    /// Centered Laplace with density `e^{-|y|/s} / (2s)`.
    Laplace { scale: f64 },
}

impl Family {
    fn pdf(&self, y: f64) -> f64 {
        match *self {
            Family::Normal { mean, sd } => {
                let z = (y - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Family::Beta { a, b } => {
                if !(0.0..=1.0).contains(&y) {
                    return 0.0;
                }
                let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                (y.powf(a - 1.0) * (1.0 - y).powf(b - 1.0)) * (-ln_beta).exp()
            }
            Family::Gamma { shape, scale } => {
                if y < 0.0 {
                    return 0.0;
                }
                ((shape - 1.0) * y.ln() - y / scale - ln_gamma(shape) - shape * scale.ln()).exp()
            }
            Family::Laplace { scale } => (-(y.abs()) / scale).exp() / (2.0 * scale),
        }
    }

    fn cdf(&self, y: f64) -> f64 {
        match *self {
            Family::Normal { mean, sd } => 0.5 * erfc(-(y - mean) / (sd * std::f64::consts::SQRT_2)),
            Family::Beta { a, b } => {
                if y <= 0.0 {
                    0.0
                } else if y >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, y)
                }
            }
            Family::Gamma { shape, scale } => {
                if y <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, y / scale)
                }
            }
            Family::Laplace { scale } => {
                if y < 0.0 {
                    0.5 * (y / scale).exp()
                } else {
                    1.0 - 0.5 * (-y / scale).exp()
                }
            }
        }
    }

    /// Interval carrying all but a negligible part of the mass.
    fn effective_support(&self) -> (f64, f64) {
        match *self {
            Family::Normal { mean, sd } => (mean - 40.0 * sd, mean + 40.0 * sd),
            Family::Beta { .. } => (0.0, 1.0),
            Family::Gamma { shape, scale } => (0.0, scale * (shape + 60.0 * shape.sqrt() + 60.0)),
            Family::Laplace { scale } => (-60.0 * scale, 60.0 * scale),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Normal { mean, sd } => Normal::new(mean, sd).expect("valid normal").sample(rng),
            Family::Beta { a, b } => Beta::new(a, b).expect("valid beta").sample(rng),
            Family::Gamma { shape, scale } => Gamma::new(shape, scale).expect("valid gamma").sample(rng),
            Family::Laplace { scale } => {
                // inverse CDF on u ∈ (-1/2, 1/2)
                let u: f64 = rng.random::<f64>() - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

/// `weight · law(a·Y + b)` with `Y ~ family`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub family: Family,
    pub scale: f64,
    pub shift: f64,
}

impl MixtureComponent {
    fn pdf(&self, x: f64) -> f64 {
        self.family.pdf((x - self.shift) / self.scale) / self.scale
    }

    fn cdf(&self, x: f64) -> f64 {
        self.family.cdf((x - self.shift) / self.scale)
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.family.effective_support();
        (self.scale * lo + self.shift, self.scale * hi + self.shift)
    }
}

/// Reproducible random stream: the same `(seed, stream_id)` always yields the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub name: DensityName,
    pub components: Vec<MixtureComponent>,
    /// Closed support `[lo, hi]`; infinite ends allowed.
    pub support: (f64, f64),
}

impl DensityModel {
    pub fn named(name: DensityName) -> Result<Self> {
        let c = |weight, family, scale, shift| MixtureComponent {
            weight,
            family,
            scale,
            shift,
        };
        let beta33 = Family::Beta { a: 3.0, b: 3.0 };
        let inf = f64::INFINITY;
        let (components, support) = match name {
            DensityName::F1 => (vec![c(1.0, Family::Normal { mean: 0.0, sd: 1.0 }, 1.0, 0.0)], (-inf, inf)),
            DensityName::Fm1 => (
                vec![
                    c(0.5, Family::Normal { mean: -2.0, sd: 1.0 }, 1.0, 0.0),
                    c(0.5, Family::Normal { mean: 2.0, sd: 1.0 }, 1.0, 0.0),
                ],
                (-inf, inf),
            ),
            DensityName::F2 => (vec![c(1.0, beta33, 1.0, 0.0)], (0.0, 1.0)),
            DensityName::Fm2 => (vec![c(0.5, beta33, 1.0, -1.0), c(0.5, beta33, 1.0, 0.0)], (-1.0, 1.0)),
            DensityName::F3 => (
                vec![c(1.0, Family::Gamma { shape: 5.0, scale: 5.0 }, 0.1, 0.0)],
                (0.0, inf),
            ),
            DensityName::Fm3 => (
                vec![
                    c(0.4, Family::Gamma { shape: 2.0, scale: 1.0 / 3.0 }, 1.0, 0.0),
                    c(0.6, Family::Gamma { shape: 7.0, scale: 6.0 }, 0.1, 0.0),
                ],
                (0.0, inf),
            ),
            DensityName::F4 => (vec![c(1.0, Family::Laplace { scale: 1.0 }, 1.0, 0.0)], (-inf, inf)),
        };
        let model = Self {
            name,
            components,
            support,
        };
        let mass = model.mass()?;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Numeric {
                message: format!("density {name} integrates to {mass}"),
                estimate: mass,
                error_bound: 0.0,
                evaluations: 0,
            });
        }
        Ok(model)
    }

    /// Exact density value (0 outside the support).
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        self.components.iter().map(|c| c.weight * c.pdf(x)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.cdf(x)).sum()
    }

    /// Quadrature of the density over its (effective) support.
    pub fn mass(&self) -> Result<f64> {
        let mut breaks: Vec<f64> = Vec::new();
        for c in &self.components {
            let (lo, hi) = c.support();
            breaks.extend([lo, hi, c.shift]);
        }
        breaks.retain(|b| b.is_finite());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Ok(quadrature::integrate_pieces(|x| self.eval(x), &breaks, 1e-10)?.value)
    }

    /// `n` draws from `stream`: pick a component, then draw from it.
    pub fn sample(&self, stream: SeededStream, n: usize) -> Sample {
        let mut rng = stream.rng();
        let observations = (0..n).map(|_| self.draw(&mut rng)).collect();
        Sample::new(observations).expect("generators produce finite values")
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = if self.components.len() == 1 {
            &self.components[0]
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = self.components.last().unwrap();
            for c in &self.components {
                acc += c.weight;
                if u < acc {
                    pick = c;
                    break;
                }
            }
            pick
        };
        c.scale * c.family.draw(rng) + c.shift
    }
}

/// Free-function form of [`DensityModel::eval`].
pub fn density_eval(model: &DensityModel, x: f64) -> f64 {
    model.eval(x)
}

/// Free-function form of [`DensityModel::sample`].
pub fn density_sample(model: &DensityModel, stream: SeededStream, n: usize) -> Result<Sample> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    Ok(model.sample(stream, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(name: DensityName) -> DensityModel {
        DensityModel::named(name).unwrap()
    }

    #[test]
    fn point_values() {
        assert!((model(DensityName::F1).eval(0.0) - 0.398942).abs() < 1e-6);
        assert!((model(DensityName::Fm1).eval(0.0) - 0.053991).abs() < 1e-6);
        assert!((model(DensityName::F2).eval(0.5) - 1.875).abs() < 1e-12);
        assert_eq!(model(DensityName::F2).eval(1.5), 0.0);
        assert!((model(DensityName::F4).eval(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(model(DensityName::F3).eval(-0.1), 0.0);
    }

    #[test]
    fn masses_and_supports() {
        for name in DensityName::ALL {
            let m = model(name);
            assert!((m.mass().unwrap() - 1.0).abs() < 1e-6, "{name}");
            let w: f64 = m.components.iter().map(|c| c.weight).sum();
            assert!((w - 1.0).abs() < 1e-15);
        }
        assert_eq!(model(DensityName::Fm2).support, (-1.0, 1.0));
        assert_eq!(model(DensityName::Fm3).support.0, 0.0);
    }

    #[test]
    fn cdf_is_integral_of_pdf() {
        for name in DensityName::ALL {
            let m = model(name);
            for x in [-1.5, -0.3, 0.2, 0.7, 1.9, 3.4] {
                let lo = match m.support.0 {
                    l if l.is_finite() => l,
                    _ => -60.0,
                };
                if x <= lo {
                    continue;
                }
                let breaks: Vec<f64> = {
                    let mut b = vec![lo, x];
                    for &p in &[-1.0, 0.0, 1.0] {
                        if p > lo && p < x {
                            b.push(p);
                        }
                    }
                    b.sort_by(f64::total_cmp);
                    b
                };
                let q = quadrature::integrate_pieces(|t| m.eval(t), &breaks, 1e-11).unwrap().value;
                assert!((q - m.cdf(x)).abs() < 1e-8, "{name} at {x}: {q} vs {}", m.cdf(x));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = model(DensityName::Fm3);
        let a = m.sample(SeededStream::new(7, 3), 10);
        let b = m.sample(SeededStream::new(7, 3), 10);
        let c = m.sample(SeededStream::new(7, 4), 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(density_sample(&m, SeededStream::new(1, 1), 0).is_err());
    }

    #[test]
    fn sample_moments() {
        let s = model(DensityName::F1).sample(SeededStream::new(11, 0), 100_000);
        let n = s.len() as f64;
        let mean = s.observations().iter().sum::<f64>() / n;
        let var = s.observations().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 1.0).abs() < 0.03, "{var}");

        let s = model(DensityName::F2).sample(SeededStream::new(11, 1), 100_000);
        assert!(s.observations().iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = s.observations().iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn kolmogorov_distance_small() {
        for (i, name) in DensityName::ALL.into_iter().enumerate() {
            let m = model(name);
            let mut xs: Vec<f64> = m.sample(SeededStream::new(2024, i as u64), 100_000).into();
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let d = xs
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let f = m.cdf(x);
                    (f - j as f64 / n).abs().max(((j + 1) as f64 / n - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(d < 0.01, "{name}: {d}");
        }
    }

    #[test]
    fn names_round_trip() {
        for name in DensityName::ALL {
            assert_eq!(name.as_str().parse::<DensityName>().unwrap(), name);
        }
        assert!("f9".parse::<DensityName>().is_err());
    }
}
