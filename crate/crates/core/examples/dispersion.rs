//! Dispersion relation at the coexistence state. Prints the leading growth
//! rate of every Neumann mode on `[0, L]` and marks the unstable ones.
//!
//! ```text
//! cargo run --example dispersion -- [scenario] [length] [modes]
//! ```

use vegtox::config::Scenario;
use vegtox::turing::{dispersion_relation, sigma_l, verdict, SpatialDim};

fn main() -> vegtox::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("ii").parse()?;
    let length: f64 = args.next().map_or(8.0, |s| s.parse().expect("length"));
    let modes: usize = args.next().map_or(24, |s| s.parse().expect("modes"));

    let params = scenario.params()?;
    let disp = dispersion_relation(&params, length, modes, SpatialDim::One)?;
    println!("sigma = {}, sigma_L = {:.5}", params.propagation_reduction, sigma_l(&params)?);
    println!("{:>5} {:>10} {:>14}", "k", "lambda", "Re growth");
    for m in &disp.modes {
        let flag = if m.max_real() > 0.0 { "  *" } else { "" };
        println!("{:>5} {:>10.4} {:>14.6e}{flag}", m.index, m.lambda, m.max_real());
    }
    let v = verdict(&disp);
    match v.critical_mode {
        Some(k) if v.unstable => println!("Turing unstable, fastest mode k = {k}"),
        _ => println!("no growing heterogeneous mode"),
    }
    Ok(())
}
