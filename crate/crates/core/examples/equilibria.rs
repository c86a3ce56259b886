//! Homogeneous steady states for each of the four reference scenarios.
//!
//! ```text
//! cargo run --example equilibria
//! ```

use vegtox::config::Scenario;
use vegtox::equilibria::classify_equilibria;

fn main() -> vegtox::Result<()> {
    for sc in Scenario::ALL {
        let params = sc.params()?;
        println!("scenario {sc}  (T_hat = {:.4})", params.critical_toxicity);
        for e in classify_equilibria(&params)? {
            let [a, b] = e.eigenvalues;
            println!(
                "  {:<12} R = {:>9.5}  T = {:>9.5}  eigenvalues {:.4}{:+.4}i, {:.4}{:+.4}i  stable: {}",
                format!("{:?}", e.kind), e.r_star, e.t_star, a.re, a.im, b.re, b.im, e.stable
            );
        }
    }
    Ok(())
}
