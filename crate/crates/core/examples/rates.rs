//! Theoretical bias and variance orders of the power-law schedule, and the
//! rate-optimal exponent for a given smoothness.

use wwkde::bandwidths::{optimal_gamma, theoretical_bias_sq, theoretical_variance};

fn main() -> wwkde::Result<()> {
    for beta in [1.0, 2.0, 4.0] {
        let gamma = optimal_gamma(beta)?;
        println!("beta {beta}: optimal gamma {gamma:.4}");
        for n in [1_000, 10_000, 100_000] {
            let b = theoretical_bias_sq(beta, gamma, n);
            let v = theoretical_variance(gamma, n);
            println!("  n {n:<7} bias^2 {b:.3e}  variance {v:.3e}  ratio {:.3}", b / v);
        }
    }
    Ok(())
}
