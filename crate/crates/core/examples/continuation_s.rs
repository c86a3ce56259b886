//! Steady states in the extra mortality `s` at `σ = 3, γ = 0`: the
//! homogeneous state is Turing unstable for small `s` and restabilises as
//! `s` approaches the feasibility ceiling.
//!
//! ```text
//! cargo run --release --example continuation_s -- [cells] [max_branches]
//! ```

use vegtox::continuation::{bifurcation_diagram, ActiveParameter, StepConfig, SteadyProblem};
use vegtox::solver::Grid;
use vegtox::turing::{sigma_l, sigma_onset};
use vegtox::ModelParams;

fn main() -> vegtox::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let cells: usize = args.next().map_or(100, |s| s.parse().expect("cells"));
    let max_branches: usize = args.next().map_or(2, |s| s.parse().expect("max_branches"));

    let params = ModelParams::reference(0.0, 0.5, 3.0)?;
    let problem = SteadyProblem::new(Grid::one_d(8.0, cells)?, params, ActiveParameter::S)?;
    let range = (0.0, 0.99);
    let diagram = bifurcation_diagram(&problem, range, max_branches, &StepConfig::new(range))?;

    let home = diagram.homogeneous();
    let first = home.points.first().expect("branch has points");
    let last = home.points.last().expect("branch has points");
    println!("homogeneous: {} unstable at s = {:.3}, {} unstable at s = {:.3}", first.n_unstable, first.param, last.n_unstable, last.param);
    let restable = home.points.windows(2).rfind(|w| !w[0].is_stable() && w[1].is_stable());
    if let Some(w) = restable {
        println!("restabilises between s = {:.5} and {:.5}", w[0].param, w[1].param);
    }
    for bp in home.branch_points() {
        println!("  branch point at s = {:.6}", bp.param);
    }

    println!("\n{:>6} {:>10} {:>10}", "s", "sigma_L", "onset");
    for i in 0..=10 {
        let s = 0.099 * i as f64;
        let p = params.with_s(s)?;
        let onset = sigma_onset(&p)?.map_or("-".to_string(), |v| format!("{v:.5}"));
        println!("{s:>6.3} {:>10.5} {onset:>10}", sigma_l(&p)?);
    }

    for (i, b) in diagram.patterned().iter().enumerate() {
        let stable = b.points.iter().filter(|p| p.is_stable()).count();
        println!("branch {}: {} points ({stable} stable), {:?}", i + 1, b.points.len(), b.termination);
        if let Some(l1) = b.stable_l1_at(0.5) {
            println!("  stable L1(R) at s = 0.5: {l1:.5}");
        }
    }
    Ok(())
}
