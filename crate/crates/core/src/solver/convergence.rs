use serde::Serialize;

use super::diagnostics::l1_norm;
use super::{run, Model, SimConfig, State2};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Distance between the fast system and the limit system at the check time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// `max(‖R_h + R_e - R‖∞, ‖T_fast - T‖∞)`.
    pub sup_error: f64,
    /// `‖R_h + R_e - R‖₁ + ‖T_fast - T‖₁`.
    pub l1_error: f64,
}

/// Run the limit system and the fast system for each `ε` from the same
/// initial data up to `t_check` and compare `(R_h + R_e, T)` with `(R, T)`.
pub fn convergence_study(
    params: &ModelParams,
    epsilons: &[f64],
    t_check: f64,
    config: &SimConfig,
    ic: &State2,
) -> Result<Vec<ConvergenceRow>> {
    let eps_max = epsilons.iter().copied().fold(0.0, f64::max);
    if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Usage("epsilon list must be nonempty and positive".into()));
    }
    if t_check < 10.0 * eps_max {
        return Err(Error::Usage(format!(
            "t_check = {t_check} must be at least 10 * max(epsilon) = {}",
            10.0 * eps_max
        )));
    }
    let cfg = SimConfig { t_fin: t_check, ..config.clone() };
    let vol = cfg.grid.cell_volume();
    let reference = run(&cfg, params, Model::Limit, ic)?.into_result()?;
    let limit = reference.final_observable().expect("complete run has a final state");
    epsilons
        .iter()
        .map(|&epsilon| {
            let traj = run(&cfg, params, Model::Fast { epsilon }, ic)?.into_result()?;
            let fast = traj.final_observable().expect("complete run has a final state");
            let dr: Vec<f64> = fast.r.iter().zip(&limit.r).map(|(a, b)| a - b).collect();
            let dt: Vec<f64> = fast.t.iter().zip(&limit.t).map(|(a, b)| a - b).collect();
            let sup = |f: &[f64]| f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(ConvergenceRow {
                epsilon,
                sup_error: sup(&dr).max(sup(&dt)),
                l1_error: l1_norm(&dr, vol) + l1_norm(&dt, vol),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{initial_condition_1d, Grid};

    #[test]
    fn rejects_short_check_time() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 20).unwrap();
        let ic = initial_condition_1d(&grid).unwrap();
        let cfg = SimConfig::new(grid, &p, 1.0);
        assert!(convergence_study(&p, &[0.1, 0.01], 0.5, &cfg, &ic).is_err());
        assert!(convergence_study(&p, &[], 1.0, &cfg, &ic).is_err());
    }

    #[test]
    fn error_shrinks_with_epsilon_on_coarse_grid() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 40).unwrap();
        let ic = initial_condition_1d(&grid).unwrap();
        let cfg = SimConfig::new(grid, &p, 1.0);
        let rows = convergence_study(&p, &[0.05, 0.005], 0.5, &cfg, &ic).unwrap();
        assert!(rows[1].sup_error < rows[0].sup_error);
        assert!(rows[1].l1_error < rows[0].l1_error);
    }
}
