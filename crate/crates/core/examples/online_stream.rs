//! Online re-selection: every new observation updates all candidate curves
//! in constant time and the exponent is chosen again.

use wwkde::bandwidths::{make_grid, GridKind};
use wwkde::densities::{DensityModel, DensityName, SeededStream};
use wwkde::experiments::OnlineSelector;
use wwkde::kernels::StandardKernel;

fn main() -> wwkde::Result<()> {
    let model = DensityModel::named(DensityName::F4)?;
    let stream = model.sample(SeededStream::new(3, 0), 5000);
    let grid = make_grid(GridKind::EquispacedLmr, 0, 50, 0.5)?;
    let mut selector = OnlineSelector::new(StandardKernel::K7.kernel(), grid, 100, 50, Some((-8.0, 8.0)))?;

    println!("n      gamma");
    for &x in stream.observations() {
        if let Some(sel) = selector.push(x)? {
            let n = selector.n();
            if n == 50 || n % 500 == 0 {
                println!("{n:<6} {:.3}", sel.chosen_gamma);
            }
        }
    }
    let counters = selector.matrix().unwrap().counters();
    println!("cells rewritten per update: {}", counters.cells / counters.updates);
    Ok(())
}
