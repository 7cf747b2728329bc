//! Gaussian-type kernels as signed mixtures of centered normal densities.
//!
//! A kernel is stored as `Σ w_j φ_{v_j}` where `φ_v` is the centered normal
//! density with variance `v`. The family is closed under scaling
//! (`K_h = h⁻¹ K(·/h)` multiplies every variance by `h²`) and convolution
//! (`φ_u ∗ φ_v = φ_{u+v}`), so every L2 inner product between estimators built
//! from these kernels has a closed form.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Centered normal density with variance `variance` at `x`.
#[inline]
pub fn normal_density(variance: f64, x: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * PI * variance).sqrt()
}

/// One `weight · φ_variance` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub variance: f64,
}

/// The four shipped kernels, by the order of their vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StandardKernel {
    K1,
    K3,
    K5,
    K7,
}

impl StandardKernel {
    pub const ALL: [StandardKernel; 4] = [Self::K1, Self::K3, Self::K5, Self::K7];

    pub fn order(self) -> u32 {
        match self {
            Self::K1 => 1,
            Self::K3 => 3,
            Self::K5 => 5,
            Self::K7 => 7,
        }
    }

    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Self::K1),
            3 => Ok(Self::K3),
            5 => Ok(Self::K5),
            7 => Ok(Self::K7),
            other => Err(invalid(format!(
                "unsupported kernel order {other}; expected 1, 3, 5 or 7"
            ))),
        }
    }

    pub fn kernel(self) -> GaussianMixtureKernel {
        // Binomial weights: K_{2m-1} = Σ_{j=1..m} (-1)^{j+1} C(m, j) n_j.
        let m = (self.order() + 1) / 2;
        let mut binom = 1.0;
        let components = (1..=m)
            .map(|j| {
                binom = binom * f64::from(m - j + 1) / f64::from(j);
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                Component {
                    weight: sign * binom,
                    variance: f64::from(j),
                }
            })
            .collect();
        GaussianMixtureKernel {
            components,
            order: Some(self.order()),
        }
    }
}

impl fmt::Display for StandardKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("K{}", self.order()))
    }
}

impl FromStr for StandardKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "K1" | "k1" => Ok(Self::K1),
            "K3" | "k3" => Ok(Self::K3),
            "K5" | "k5" => Ok(Self::K5),
            "K7" | "k7" => Ok(Self::K7),
            other => Err(invalid(format!(
                "unknown kernel {other:?}; expected K1, K3, K5 or K7"
            ))),
        }
    }
}

/// Builds the standard kernel of the given order (1, 3, 5 or 7).
pub fn make_standard(order: u32) -> Result<GaussianMixtureKernel> {
    StandardKernel::from_order(order).map(StandardKernel::kernel)
}

/// Constants of a kernel entering the variance terms of the selection criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub l2_norm_sq: f64,
    pub l1_norm: f64,
    pub sup_norm: f64,
    pub order: Option<u32>,
}

/// A signed mixture of centered Gaussian densities in canonical form.
///
/// Canonical means: components sorted by variance, equal variances merged,
/// zero weights dropped. Equality compares canonical forms, so the order
/// metadata does not take part in it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianMixtureKernel {
    components: Vec<Component>,
    order: Option<u32>,
}

impl PartialEq for GaussianMixtureKernel {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
    }
}

impl GaussianMixtureKernel {
    /// Builds a kernel from arbitrary components, canonicalizing them.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("kernel needs at least one component"));
        }
        for c in &components {
            if !(c.variance > 0.0 && c.variance.is_finite()) || !c.weight.is_finite() {
                return Err(invalid(format!(
                    "component ({}, var {}) must have finite weight and positive variance",
                    c.weight, c.variance
                )));
            }
        }
        Ok(Self::canonical(components, None))
    }

    fn canonical(mut components: Vec<Component>, order: Option<u32>) -> Self {
        components.sort_by(|a, b| a.variance.total_cmp(&b.variance));
        let mut merged: Vec<Component> = Vec::with_capacity(components.len());
        for c in components {
            match merged.last_mut() {
                Some(last) if last.variance.to_bits() == c.variance.to_bits() => {
                    last.weight += c.weight
                }
                _ => merged.push(c),
            }
        }
        if merged.iter().any(|c| c.weight != 0.0) {
            merged.retain(|c| c.weight != 0.0);
        } else {
            merged.truncate(1);
        }
        Self {
            components: merged,
            order,
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Order metadata; only set for the shipped kernels and their rescalings.
    pub fn order(&self) -> Option<u32> {
        self.order
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn max_variance(&self) -> f64 {
        self.components.last().map_or(0.0, |c| c.variance)
    }

    /// `K_h = h⁻¹ K(·/h)`: every variance is multiplied by `h²`.
    pub fn scale(&self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {h}")));
        }
        let h2 = h * h;
        let components = self
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight,
                variance: c.variance * h2,
            })
            .collect();
        Ok(Self::canonical(components, self.order))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_density(c.variance, x))
            .sum()
    }

    /// `∫ Ka(t) Kb(t - offset) dt`, expanded over component pairs.
    pub fn inner_product(&self, other: &Self, offset: f64) -> f64 {
        let mut acc = 0.0;
        for a in &self.components {
            for b in &other.components {
                acc += a.weight * b.weight * normal_density(a.variance + b.variance, offset);
            }
        }
        acc
    }

    /// `Ka ∗ Kb`, again a canonical centered mixture.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            for b in &other.components {
                components.push(Component {
                    weight: a.weight * b.weight,
                    variance: a.variance + b.variance,
                });
            }
        }
        Self::canonical(components, None)
    }

    /// `∫ yⁱ K(y) dy`; odd moments vanish, `E[Y^{2m}] = (2m-1)!! v^m`.
    pub fn moment(&self, i: u32) -> f64 {
        if i % 2 == 1 {
            return 0.0;
        }
        let m = i / 2;
        let double_factorial: f64 = (1..=m).map(|k| f64::from(2 * k - 1)).product();
        self.components
            .iter()
            .map(|c| c.weight * double_factorial * c.variance.powi(m as i32))
            .sum()
    }

    fn half_width(&self) -> f64 {
        20.0 * self.max_variance().sqrt()
    }

    /// Sign changes of the kernel on `[-L, L]`, refined by bisection.
    fn zero_crossings(&self) -> Vec<f64> {
        let l = self.half_width();
        let steps = 4000;
        let dx = 2.0 * l / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = -l;
        let mut f0 = self.eval(x0);
        for i in 1..=steps {
            let x1 = -l + i as f64 * dx;
            let f1 = self.eval(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.eval(mid);
                    if fm * flo <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    /// `∫ |y|^β |K(y)| dy` by quadrature.
    pub fn absolute_moment(&self, beta: f64) -> Result<f64> {
        let l = self.half_width();
        let mut breaks = vec![-l];
        breaks.extend(self.zero_crossings());
        if !breaks.contains(&0.0) {
            breaks.push(0.0);
        }
        breaks.push(l);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let q = quadrature::integrate_pieces(
            |y| y.abs().powf(beta) * self.eval(y).abs(),
            &breaks,
            1e-10,
        )?;
        Ok(q.value)
    }

    /// `‖K‖₂²` exactly, `‖K‖₁` by quadrature split at the zero crossings,
    /// `‖K‖_∞` by a grid scan refined with golden-section search.
    pub fn norms(&self) -> Result<KernelConstants> {
        let l1 = self.absolute_moment(0.0)?;
        let l = self.half_width();
        let steps = 8000;
        let dx = 2.0 * l / steps as f64;
        let (mut best_x, mut best) = (0.0, self.eval(0.0).abs());
        for i in 0..=steps {
            let x = -l + i as f64 * dx;
            let v = self.eval(x).abs();
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let (mut lo, mut hi) = (best_x - dx, best_x + dx);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = hi - ratio * (hi - lo);
            let d = lo + ratio * (hi - lo);
            if self.eval(c).abs() > self.eval(d).abs() {
                hi = d;
            } else {
                lo = c;
            }
        }
        let sup = best.max(self.eval(0.5 * (lo + hi)).abs());
        Ok(KernelConstants {
            l2_norm_sq: self.inner_product(self, 0.0),
            l1_norm: l1,
            sup_norm: sup,
            order: self.order,
        })
    }
}

/// Free-function form of [`GaussianMixtureKernel::scale`].
pub fn scale(kernel: &GaussianMixtureKernel, h: f64) -> Result<GaussianMixtureKernel> {
    kernel.scale(h)
}

/// Free-function form of [`GaussianMixtureKernel::inner_product`].
pub fn inner_product(a: &GaussianMixtureKernel, b: &GaussianMixtureKernel, offset: f64) -> f64 {
    a.inner_product(b, offset)
}

/// Free-function form of [`GaussianMixtureKernel::convolve`].
pub fn convolve(a: &GaussianMixtureKernel, b: &GaussianMixtureKernel) -> GaussianMixtureKernel {
    a.convolve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(order: u32) -> GaussianMixtureKernel {
        make_standard(order).unwrap()
    }

    fn weights_and_variances(kernel: &GaussianMixtureKernel) -> Vec<(f64, f64)> {
        kernel
            .components()
            .iter()
            .map(|c| (c.weight, c.variance))
            .collect()
    }

    #[test]
    fn standard_kernels_have_listed_components() {
        assert_eq!(weights_and_variances(&k(1)), vec![(1.0, 1.0)]);
        assert_eq!(weights_and_variances(&k(3)), vec![(2.0, 1.0), (-1.0, 2.0)]);
        assert_eq!(
            weights_and_variances(&k(5)),
            vec![(3.0, 1.0), (-3.0, 2.0), (1.0, 3.0)]
        );
        assert_eq!(
            weights_and_variances(&k(7)),
            vec![(4.0, 1.0), (-6.0, 2.0), (4.0, 3.0), (-1.0, 4.0)]
        );
        for order in [1, 3, 5, 7] {
            assert_eq!(k(order).total_mass(), 1.0);
            assert_eq!(k(order).order(), Some(order));
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(matches!(make_standard(2), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_standard(9), Err(Error::InvalidArgument(_))));
        assert!("K4".parse::<StandardKernel>().is_err());
        assert_eq!("K5".parse::<StandardKernel>().unwrap(), StandardKernel::K5);
        assert_eq!(StandardKernel::K7.to_string(), "K7");
    }

    #[test]
    fn scaling_multiplies_variances() {
        assert_eq!(k(1).scale(1.0).unwrap(), k(1));
        assert_eq!(weights_and_variances(&k(1).scale(0.5).unwrap()), vec![(1.0, 0.25)]);
        assert_eq!(
            weights_and_variances(&k(3).scale(2.0).unwrap()),
            vec![(2.0, 4.0), (-1.0, 8.0)]
        );
        assert!(k(1).scale(0.0).is_err());
        assert!(k(1).scale(-1.0).is_err());
        let kernel = k(5);
        let scaled = kernel.scale(0.3).unwrap();
        for x in [-1.0, 0.0, 0.2, 0.9] {
            let direct = kernel.eval(x / 0.3) / 0.3;
            assert!((scaled.eval(x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn eval_at_zero() {
        assert!((k(1).eval(0.0) - 0.398942).abs() < 1e-6);
        assert!((k(3).eval(0.0) - 0.515790).abs() < 1e-6);
        assert!((k(7).eval(0.0) - 0.625046).abs() < 1e-6);
    }

    #[test]
    fn inner_products() {
        assert!((k(1).inner_product(&k(1), 0.0) - 0.282095).abs() < 1e-6);
        for h in [0.1, 0.5, 2.0] {
            let kh = k(1).scale(h).unwrap();
            let expected = 1.0 / (2.0 * h * PI.sqrt());
            assert!((kh.inner_product(&kh, 0.0) - expected).abs() < 1e-12 * expected.max(1.0));
        }
        assert!(k(1).inner_product(&k(1), 60.0) < 1e-300);
    }

    #[test]
    fn convolution() {
        let c = k(1).convolve(&k(1));
        assert_eq!(weights_and_variances(&c), vec![(1.0, 2.0)]);
        assert!((c.eval(0.0) - 0.282095).abs() < 1e-6);
        assert!((k(3).convolve(&k(5)).total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn convolution_with_narrow_kernel_approaches_identity() {
        let base = k(3);
        let narrow = k(5).scale(1e-3).unwrap();
        let conv = base.convolve(&narrow);
        let dist = quadrature::trapezoid(|x| (conv.eval(x) - base.eval(x)).powi(2), -15.0, 15.0, 6000);
        assert!(dist < 1e-10, "{dist}");
    }

    #[test]
    fn moments() {
        assert_eq!(k(3).moment(2), 0.0);
        assert_eq!(k(7).moment(6), 0.0);
        assert_eq!(k(1).moment(1), 0.0);
        assert_eq!(k(1).moment(2), 1.0);
        assert_eq!(k(1).moment(4), 3.0);
        for order in [1, 3, 5, 7] {
            assert_eq!(k(order).moment(0), 1.0);
        }
    }

    #[test]
    fn norms() {
        let c1 = k(1).norms().unwrap();
        assert!((c1.l2_norm_sq - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
        assert!((c1.l1_norm - 1.0).abs() < 1e-8);
        assert!((c1.sup_norm - 0.398942).abs() < 1e-6);

        // Oracle: fine trapezoid rule of |K3| on [-20, 20].
        let k3 = k(3);
        let oracle = quadrature::trapezoid(|x| k3.eval(x).abs(), -20.0, 20.0, 400_000);
        let c3 = k3.norms().unwrap();
        assert!(c3.l1_norm > 1.0);
        assert!((c3.l1_norm - oracle).abs() < 1e-8, "{} vs {}", c3.l1_norm, oracle);
        assert_eq!(c3.l2_norm_sq, k3.inner_product(&k3, 0.0));
    }

    #[test]
    fn canonical_merging() {
        let kernel = GaussianMixtureKernel::new(vec![
            Component { weight: 1.0, variance: 2.0 },
            Component { weight: 0.5, variance: 1.0 },
            Component { weight: -0.5, variance: 2.0 },
        ])
        .unwrap();
        assert_eq!(weights_and_variances(&kernel), vec![(0.5, 1.0), (0.5, 2.0)]);
        assert!(GaussianMixtureKernel::new(vec![]).is_err());
        assert!(GaussianMixtureKernel::new(vec![Component { weight: 1.0, variance: 0.0 }]).is_err());
    }
}
