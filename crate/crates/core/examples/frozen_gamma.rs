//! Select the exponent once on a first batch, then keep it fixed and continue
//! recursively on a second batch.

use wwkde::densities::DensityName;
use wwkde::experiments::{frozen_gamma_protocol, FrozenConfig, ProtocolSettings};
use wwkde::kernels::StandardKernel;

fn main() -> wwkde::Result<()> {
    println!("density  after n0   after n0+n1");
    for density in [DensityName::F1, DensityName::F2, DensityName::F3, DensityName::F4] {
        let (one, two) = frozen_gamma_protocol(&FrozenConfig {
            density,
            kernel: StandardKernel::K7,
            n0: 500,
            n1: 500,
            replications: 10,
            settings: ProtocolSettings::default(),
        })?;
        println!("{density:<8} {:<10.4} {:.4}", one.mise_times_100, two.mise_times_100);
    }
    Ok(())
}
