//! Sweep the component budget and the regularization weight on a small
//! synthetic problem and print the aggregated table. Larger component
//! budgets never hurt (the core stays expressible); the weight has a sweet
//! spot between underfitting and overshrinking.
//!
//! Run with: cargo run --release --example sensitivity_sweep

use lrfmtc::experiments::{run_sweep, Method, NoiseSpec, SweepGrid};

fn main() -> lrfmtc::Result<()> {
    let mut grid = SweepGrid::new([30, 30, 30]);
    grid.ranks = vec![[4, 4, 4]];
    grid.sampling_ratios = vec![0.3];
    grid.noises = vec![NoiseSpec::GaussianSnr { snr_db: 20.0 }];
    grid.methods = vec![Method::Lrfmtc];
    grid.alphas = vec![0.5, 5.0, 30.0, 150.0];
    grid.components = vec![10, 40, 80];
    grid.solver.max_outer = 80;
    grid.seed = 33;

    let trials = 3;
    println!("running {} cells x {trials} trials...", grid.alphas.len() * grid.components.len());
    let table = run_sweep(&grid, trials)?;

    println!("{:>8} {:>6} {:>18} {:>10} {:>10}", "alpha", "L", "mean est rank", "mean rse", "std rse");
    for (_, cell) in &table.cells {
        println!(
            "{:>8} {:>6} {:>18} {:>10.4} {:>10.4}",
            cell.alpha,
            cell.n_components,
            format!("{:.1?}", cell.mean_rank),
            cell.mean_rse,
            cell.std_rse
        );
    }
    Ok(())
}
