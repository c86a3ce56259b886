//! The three-species system with fast exchange between the two root states
//! approaches the cross-diffusion limit as `epsilon` shrinks.
//!
//! ```text
//! cargo run --release --example fast_reaction_convergence -- [scenario] [t_check]
//! ```

use vegtox::config::Scenario;
use vegtox::solver::{convergence_study, initial_condition_1d, Grid, SimConfig};

fn main() -> vegtox::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("ii").parse()?;
    let t_check: f64 = args.next().map_or(1.0, |s| s.parse().expect("t_check"));

    let params = scenario.params()?;
    let grid = Grid::one_d(8.0, 200)?;
    let config = SimConfig::new(grid, &params, t_check);
    let epsilons = [1e-1, 1e-2, 1e-3];
    let rows = convergence_study(&params, &epsilons, t_check, &config, &initial_condition_1d(&grid)?)?;

    println!("{:>8} {:>12} {:>12} {:>8}", "epsilon", "sup", "L1", "ratio");
    let mut prev: Option<f64> = None;
    for r in &rows {
        let ratio = prev.map_or(String::new(), |p| format!("{:.2}", p / r.sup_error));
        println!("{:>8.0e} {:>12.4e} {:>12.4e} {ratio:>8}", r.epsilon, r.sup_error, r.l1_error);
        prev = Some(r.sup_error);
    }
    Ok(())
}
