//! Adaptive Gauss-Kronrod quadrature and the composite trapezoid rule.
//!
//! Used for quantities of the signed Gaussian mixtures that have no closed
//! form (L1 norm, absolute moments) and for mass checks of the test densities.

use crate::error::{Error, Result};

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and their weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// 7-point Gauss weights, aligned with the odd Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 60;
const MAX_INTERVALS: usize = 20_000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(crate::error::invalid(format!("bad integration range [{a}, {b}]")));
    }
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut value = 0.0;
    let mut error_bound = 0.0;
    let mut evaluations = 0;
    let mut intervals = 0;
    while let Some((lo, hi, local_tol, depth)) = stack.pop() {
        let (est, err) = kronrod(&f, lo, hi);
        evaluations += 15;
        intervals += 1;
        if err <= local_tol || depth >= MAX_DEPTH || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            value += est;
            error_bound += err;
            continue;
        }
        if intervals > MAX_INTERVALS {
            return Err(Error::Numeric {
                message: "adaptive quadrature did not converge".into(),
                estimate: value + est,
                error_bound: error_bound + err,
                evaluations,
            });
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, 0.5 * local_tol, depth + 1));
        stack.push((lo, mid, 0.5 * local_tol, depth + 1));
    }
    if !value.is_finite() {
        return Err(Error::Numeric {
            message: "integrand produced a non-finite value".into(),
            estimate: value,
            error_bound,
            evaluations,
        });
    }
    Ok(Quadrature {
        value,
        error_bound,
        evaluations,
    })
}

/// Integrates over a union of consecutive pieces `breaks[0]..breaks[1]..` with a shared tolerance.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Result<Quadrature> {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    let mut total = Quadrature {
        value: 0.0,
        error_bound: 0.0,
        evaluations: 0,
    };
    for w in breaks.windows(2) {
        let q = integrate(&f, w[0], w[1], tol / pieces)?;
        total.value += q.value;
        total.error_bound += q.error_bound;
        total.evaluations += q.evaluations;
    }
    Ok(total)
}

/// Composite trapezoid rule of `f` on `n` equal sub-intervals of `[a, b]`.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(1);
    let step = (b - a) / n as f64;
    let interior: f64 = (1..n).map(|i| f(a + i as f64 * step)).sum();
    step * (0.5 * (f(a) + f(b)) + interior)
}

/// Trapezoid rule over tabulated values with uniform `spacing`.
pub fn trapezoid_values(values: &[f64], spacing: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, .., last] => spacing * (values.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}
