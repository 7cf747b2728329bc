//! Monte-Carlo MISE of the recursive estimator with selected exponent against
//! the classical estimator with a selected fixed bandwidth.

use wwkde::densities::DensityName;
use wwkde::experiments::{mise_protocol, BenchMethod, MiseConfig, ProtocolSettings};
use wwkde::kernels::StandardKernel;

fn main() -> wwkde::Result<()> {
    let replications = 20;
    println!("density  n     kernel  method     100 x MISE (std)");
    for density in [DensityName::F1, DensityName::Fm1] {
        for n in [250, 1000] {
            for method in [BenchMethod::WwLmr, BenchMethod::LmrFixed] {
                let r = mise_protocol(&MiseConfig {
                    density,
                    method,
                    kernel: StandardKernel::K3,
                    n,
                    replications,
                    settings: ProtocolSettings::default(),
                })?;
                println!(
                    "{density:<8} {n:<5} {:<7} {method:<10} {:.4} ({:.4})",
                    r.kernel, r.mise_times_100, r.std_times_100
                );
            }
        }
    }
    Ok(())
}
