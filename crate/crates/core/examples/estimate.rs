//! Recursive estimate on a simulated sample: the batch formula and the
//! one-observation-at-a-time update give the same curve.

use wwkde::bandwidths::{make_grid, BandwidthSchedule, GridKind};
use wwkde::densities::{DensityModel, DensityName, SeededStream};
use wwkde::estimator::{ww_evaluate, EstimatorMatrix, EvaluationGrid};
use wwkde::kernels::StandardKernel;

fn main() -> wwkde::Result<()> {
    let model = DensityModel::named(DensityName::Fm1)?;
    let sample = model.sample(SeededStream::new(42, 0), 2000);
    let kernel = StandardKernel::K3.kernel();
    let gamma = 0.2;
    let xs: Vec<f64> = (0..=16).map(|i| -4.0 + 0.5 * i as f64).collect();

    let batch = ww_evaluate(&sample, &kernel, &BandwidthSchedule::power_law(gamma)?, &xs)?;

    let grid = make_grid(GridKind::EquispacedLmr, 0, 5, 0.5)?;
    let row = grid.values().iter().position(|&g| (g - gamma).abs() < 1e-12).expect("0.2 is on the grid");
    let mut matrix = EstimatorMatrix::new(kernel, grid, EvaluationGrid::from_points(xs.clone())?, false);
    for &x in sample.observations() {
        matrix.update(x)?;
    }

    println!("x       truth     batch     recursive");
    for (i, &x) in xs.iter().enumerate() {
        println!("{x:<7.2} {:<9.5} {:<9.5} {:.5}", model.eval(x), batch[i], matrix.row(row)[i]);
    }
    Ok(())
}
