//! Simulate the limit system on `[0, 8]` from the centred Gaussian bump and
//! summarise the final pattern.
//!
//! ```text
//! cargo run --release --example simulate_1d -- [scenario] [t_fin] [cells]
//! ```

use std::time::Instant;

use vegtox::config::Scenario;
use vegtox::solver::{initial_condition_1d, pattern_diagnostics, run, Grid, Model, SimConfig};
use vegtox::ModelParams;

fn main() -> vegtox::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("ii").parse()?;
    let t_fin: f64 = args.next().map_or(200.0, |s| s.parse().expect("t_fin"));
    let cells: usize = args.next().map_or(400, |s| s.parse().expect("cells"));

    let (gamma, s, sigma) = scenario.triple();
    let params = ModelParams::reference(gamma, s, sigma)?;
    let grid = Grid::one_d(8.0, cells)?;
    let config = SimConfig::new(grid, &params, t_fin).with_cadence(10.0, 50.0);
    println!("scenario {scenario}: gamma = {gamma}, s = {s}, sigma = {sigma}, dt = {:.3e}", config.dt);

    let clock = Instant::now();
    let traj = run(&config, &params, Model::Limit, &initial_condition_1d(&grid)?)?.into_result()?;
    println!("integrated to t = {t_fin} in {:.1?}", clock.elapsed());

    println!("{:>8} {:>12} {:>10} {:>10} {:>10}", "t", "L1(R)", "min R", "max R", "std R");
    for row in &traj.diagnostics {
        println!(
            "{:>8.1} {:>12.6} {:>10.5} {:>10.5} {:>10.3e}",
            row.t, row.l1_r, row.min_r, row.max_r, row.std_r
        );
    }

    let fin = traj.final_observable().expect("complete run");
    let d = pattern_diagnostics(&fin, &grid);
    println!("toxicity peaks (interior): {}", d.interior_t_peaks());
    println!("biomass peaks per pulse:   {:?}", d.pulse_peaks);
    if let Some(w) = d.wavelength {
        println!("wavelength:                {w:.4}");
    }
    if let Some(phi) = d.phase_metric {
        println!("phase metric:              {phi:.4}");
    }
    Ok(())
}
