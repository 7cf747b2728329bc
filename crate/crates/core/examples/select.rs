//! Data-driven choice of the bandwidth exponent with the penalized (LMR)
//! and Goldenshluger-Lepski (GL) rules, compared with the ISE oracle.

use wwkde::bandwidths::{make_grid, GridKind};
use wwkde::densities::{DensityModel, DensityName, SeededStream};
use wwkde::estimator::EvaluationGrid;
use wwkde::experiments::{select_on_sample, ProtocolSettings};
use wwkde::kernels::StandardKernel;
use wwkde::selection::gl_select;

fn main() -> wwkde::Result<()> {
    let model = DensityModel::named(DensityName::F2)?;
    let sample = model.sample(SeededStream::new(7, 0), 1000);
    let kernel = StandardKernel::K7.kernel();
    let settings = ProtocolSettings::default();
    let grid = settings.gamma_grid()?;

    let lmr = select_on_sample(&sample, &kernel, &grid, &settings)?;
    let ise = lmr.candidate_ise(&model);
    let oracle = (0..ise.len()).min_by(|&a, &b| ise[a].total_cmp(&ise[b])).unwrap();
    println!(
        "LMR picks gamma {:.4} (ISE {:.5}); ISE oracle is gamma {:.4} (ISE {:.5})",
        lmr.selection.chosen_gamma,
        ise[lmr.selection.chosen_index],
        grid.values()[oracle],
        ise[oracle]
    );

    let (a, b) = sample.range().unwrap();
    let eval = EvaluationGrid::linspace(a - 0.5, b + 0.5, 200)?;
    let coarse = make_grid(GridKind::SqrtLogGl, sample.len(), 0, 0.5)?;
    for upsilon in [0.01, 1.0, 100.0] {
        let gl = gl_select(&sample, &kernel, &coarse, upsilon, &eval)?;
        println!("GL with upsilon {upsilon}: gamma {:.4}", gl.chosen_gamma);
    }
    Ok(())
}
