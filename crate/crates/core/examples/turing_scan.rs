//! Map `sigma_L` over the `(gamma, s)` plane and report where a diffusion
//! driven instability is admissible at all (`sigma_L < d_R`).
//!
//! ```text
//! cargo run --release --example turing_scan -- [resolution]
//! ```

use vegtox::turing::{slope_sign_changes, turing_region_scan};
use vegtox::ParamSet;

fn main() {
    let res: usize = std::env::args().nth(1).map_or(101, |s| s.parse().expect("resolution"));
    let base = ParamSet::default();
    let scan = turing_region_scan(&base, (0.0, 10.0), (0.0, 1.0), (res, res));

    let values: Vec<f64> = scan.cells.iter().filter_map(|c| c.sigma_l).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("{} of {} cells feasible", values.len(), scan.cells.len());
    println!("sigma_L in [{lo:.5}, {hi:.5}], ceiling {}", scan.ceiling);
    println!("largest jump between neighbours: {:.3e}", scan.max_neighbour_jump());

    // coarse picture: '#' below the ceiling, '.' above, ' ' infeasible
    let step = (res / 25).max(1);
    for gi in (0..scan.gammas.len()).rev().step_by(step) {
        let row: String = (0..scan.ss.len())
            .step_by(step)
            .map(|si| match scan.get(gi, si).sigma_l {
                Some(v) if v < scan.ceiling => '#',
                Some(_) => '.',
                None => ' ',
            })
            .collect();
        println!("gamma {:>5.2} |{row}|", scan.gammas[gi]);
    }

    let area = scan.area_along_s();
    let turns = slope_sign_changes(&scan.ss, &area);
    println!("admissible area changes direction at s = {turns:.3?}");
}
