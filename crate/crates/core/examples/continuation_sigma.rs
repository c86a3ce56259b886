//! Bifurcation diagram in the propagation reduction `σ` for
//! `γ = 0.1, s = 0.5` on `[0, 8]`.
//!
//! ```text
//! cargo run --release --example continuation_sigma -- [cells] [max_branches]
//! ```

use vegtox::continuation::{
    bifurcation_diagram, bistability_intervals, ActiveParameter, StepConfig, SteadyProblem,
};
use vegtox::solver::Grid;
use vegtox::{ModelParams, ParamSet};

fn main() -> vegtox::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let cells: usize = args.next().map_or(100, |s| s.parse().expect("cells"));
    let max_branches: usize = args.next().map_or(4, |s| s.parse().expect("max_branches"));

    let params = ModelParams::new(ParamSet::reference(0.1, 0.5, 0.0))?;
    let d_r = params.root_diffusion;
    let problem = SteadyProblem::new(Grid::one_d(8.0, cells)?, params, ActiveParameter::Sigma)?;
    let range = (0.5 * d_r, 0.999 * d_r);
    let cfg = StepConfig::new(range);
    let diagram = bifurcation_diagram(&problem, range, max_branches, &cfg)?;

    let home = diagram.homogeneous();
    println!("homogeneous branch: {} points", home.points.len());
    for bp in home.branch_points() {
        println!("  branch point at sigma/d_R = {:.6}", bp.param / d_r);
    }
    for (i, b) in diagram.patterned().iter().enumerate() {
        let stable = b.points.iter().filter(|p| p.is_stable()).count();
        println!(
            "branch {}: {} points ({stable} stable), termination {:?}",
            i + 1,
            b.points.len(),
            b.termination
        );
        if std::env::var_os("VEGTOX_VERBOSE").is_some() {
            for pt in &b.points {
                println!("    {:.6} {:.5} {}", pt.param / d_r, pt.l1_r, pt.n_unstable);
            }
        }
        for sp in &b.special_points {
            println!("  {:<12} sigma/d_R = {:.6}  L1(R) = {:.5}", sp.kind.label(), sp.param / d_r, sp.l1_r);
        }
        if let Some(l1) = b.stable_l1_at(0.9 * d_r) {
            println!("  stable L1(R) at sigma/d_R = 0.9: {l1:.5}");
        }
    }
    for (lo, hi) in bistability_intervals(&diagram) {
        println!("bistable for sigma/d_R in [{:.5}, {:.5}]", lo / d_r, hi / d_r);
    }
    for f in &diagram.failures {
        println!("failed: {f}");
    }
    Ok(())
}
