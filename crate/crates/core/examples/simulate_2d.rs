//! Two-dimensional run from random patches and a count of the spots that
//! remain at the end.
//!
//! ```text
//! cargo run --release --example simulate_2d -- [scenario] [t_fin] [cells] [seed]
//! ```

use std::time::Instant;

use vegtox::config::Scenario;
use vegtox::solver::{initial_condition_2d, run, spot_diagnostics, Grid, Model, SimConfig, StepOptions};

fn main() -> vegtox::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("ii").parse()?;
    let t_fin: f64 = args.next().map_or(100.0, |s| s.parse().expect("t_fin"));
    let cells: usize = args.next().map_or(80, |s| s.parse().expect("cells"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let params = scenario.params()?;
    let grid = Grid::two_d(8.0, cells)?;
    let opts = StepOptions { parallel: true, ..StepOptions::default() };
    let config = SimConfig::new(grid, &params, t_fin).with_cadence(10.0, t_fin).with_options(opts);

    let clock = Instant::now();
    let traj = run(&config, &params, Model::Limit, &initial_condition_2d(&grid, seed)?)?.into_result()?;
    let last = traj.diagnostics.last().expect("diagnostics recorded");
    println!(
        "t = {t_fin} after {:.1?}: L1(R) = {:.4}, R in [{:.3}, {:.3}]",
        clock.elapsed(),
        last.l1_r,
        last.min_r,
        last.max_r
    );

    let spots = spot_diagnostics(&traj.final_observable().expect("complete run"), &grid);
    println!("threshold {:.4}: {} spots, {} with a hollow centre and a toxicity peak", spots.threshold, spots.spots.len(), spots.qualifying());
    for (i, s) in spots.spots.iter().enumerate() {
        println!("  {i:>3}: {:>5} cells at ({:.1}, {:.1})", s.cells.len(), s.centroid.0, s.centroid.1);
    }
    Ok(())
}
