use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::palc::{continue_branch, continue_from, Branch, SpecialKind, SpecialPoint, StepConfig};
use super::{newton_solve, steady_jacobian, steady_residual, ActiveParameter, SteadyProblem};
use crate::error::{Error, Result};

/// Right null vector of a nearly singular matrix by inverse iteration,
/// normalised to unit Euclidean length with a positive first component of
/// largest magnitude.
pub fn kernel_vector(jac: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = jac.nrows();
    let scale = jac.amax().max(1.0);
    let lu = jac.clone().lu();
    let shifted;
    let lu = if lu.is_invertible() {
        lu
    } else {
        shifted = (jac - DMatrix::identity(n, n) * (1e-12 * scale)).lu();
        shifted
    };
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * (1.3 * i as f64).sin());
    x /= x.norm();
    for _ in 0..50 {
        let Some(y) = lu.solve(&x) else {
            return Err(Error::Switching("kernel iteration hit a singular factorisation".into()));
        };
        let y = &y / y.norm();
        let aligned = if y.dot(&x) < 0.0 { -&y } else { y };
        let change = (&aligned - &x).norm();
        x = aligned;
        if change < 1e-12 {
            break;
        }
    }
    let defect = (jac * &x).norm();
    if !(defect < 1e-4 * scale) {
        return Err(Error::Switching(format!(
            "no kernel direction found (|J phi| = {defect:.3e}, |J| = {scale:.3e})"
        )));
    }
    let imax = x.iamax();
    if x[imax] < 0.0 {
        x = -x;
    }
    Ok(x)
}

/// A solved point on a bifurcating branch with the direction to continue.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchStart {
    pub u: DVector<f64>,
    pub param: f64,
    /// Continuation direction in `(u, p)`.
    pub direction: DVector<f64>,
    /// `+1` or `-1`: the side of the kernel direction.
    pub side: f64,
    pub kernel: DVector<f64>,
}

/// Switch onto the branch bifurcating at `sp`. The solution is offset by
/// `±δ φ` with `δ = 10⁻² ‖u‖` along the kernel `φ` and corrected with the
/// parameter free and the `φ` component held, once for each side. Returns
/// every side that succeeded.
pub fn branch_switch(
    sp: &SpecialPoint,
    problem: &SteadyProblem,
    cfg: &StepConfig,
) -> Result<Vec<SwitchStart>> {
    if sp.kind == SpecialKind::Fold {
        return Err(Error::Switching(format!(
            "{} = {} is a fold, not a branch point",
            problem.active.name(),
            sp.param
        )));
    }
    let n = problem.dim();
    let jac = steady_jacobian(&sp.u, sp.param, problem)?;
    let phi = kernel_vector(&jac)?;
    let mut starts = Vec::new();
    let mut errors = Vec::new();
    for side in [1.0, -1.0] {
        let mut dir = DVector::zeros(n + 1);
        dir.rows_mut(0, n).copy_from(&(&phi * side));
        let w = (dir.norm_squared() / n as f64).sqrt();
        dir /= w;
        // retry closer to the branch point if the first offset overshoots
        for rel in [1e-2, 2.5e-3] {
            let delta = rel * sp.u.norm();
            let mut x_pred = DVector::zeros(n + 1);
            x_pred.rows_mut(0, n).copy_from(&(&sp.u + &phi * (side * delta)));
            x_pred[n] = sp.param;
            match hold_component(problem, &x_pred, &dir, cfg) {
                Ok((u, p)) => {
                    starts.push(SwitchStart { u, param: p, direction: dir, side, kernel: phi.clone() });
                    break;
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::Switching(format!("corrector failed on both sides: {}", errors.join("; "))));
    }
    Ok(starts)
}

/// Solve `F(u, p) = 0` with `⟨d_u, u - u_pred⟩ = 0` and `p` free.
fn hold_component(
    problem: &SteadyProblem,
    x_pred: &DVector<f64>,
    dir: &DVector<f64>,
    cfg: &StepConfig,
) -> Result<(DVector<f64>, f64)> {
    let n = problem.dim();
    let mut x = x_pred.clone();
    let mut norm = f64::INFINITY;
    for it in 0..=cfg.max_corrector {
        let u = x.rows(0, n).into_owned();
        let p = x[n];
        let f = steady_residual(&u, p, problem)?;
        let g = dir.rows(0, n).dot(&(&u - x_pred.rows(0, n))) / n as f64;
        norm = f.amax();
        if norm < cfg.newton.tol && g.abs() < cfg.newton.tol {
            return Ok((u, p));
        }
        if !norm.is_finite() || it == cfg.max_corrector {
            break;
        }
        let mut b = DMatrix::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(&steady_jacobian(&u, p, problem)?);
        b.view_mut((0, n), (n, 1)).copy_from(&super::parameter_derivative(&u, p, problem)?);
        for j in 0..n {
            b[(n, j)] = dir[j] / n as f64;
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-f));
        rhs[n] = -g;
        let Some(delta) = b.lu().solve(&rhs) else { break };
        x += delta;
        if !(cfg.p_min..=cfg.p_max).contains(&x[n]) {
            break;
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_corrector, residual: norm })
}

#[derive(Clone, Debug, Serialize)]
pub struct BifurcationDiagram {
    pub parameter: ActiveParameter,
    /// The homogeneous branch comes first.
    pub branches: Vec<Branch>,
    /// For each branch, the `(branch, special point)` it was switched from.
    pub parents: Vec<Option<(usize, usize)>>,
    /// Branch points where switching or continuation failed.
    pub failures: Vec<String>,
}

impl BifurcationDiagram {
    pub fn homogeneous(&self) -> &Branch {
        &self.branches[0]
    }

    pub fn patterned(&self) -> &[Branch] {
        &self.branches[1..]
    }
}

/// Continue the homogeneous branch over `range`, switch at its first
/// `max_branches` branch points and continue each bifurcating branch once
/// (the two sides of a switch are related by symmetry).
pub fn bifurcation_diagram(
    problem: &SteadyProblem,
    range: (f64, f64),
    max_branches: usize,
    cfg: &StepConfig,
) -> Result<BifurcationDiagram> {
    let cfg = StepConfig { p_min: range.0, p_max: range.1, ..cfg.clone() };
    let u0 = newton_solve(&problem.homogeneous(range.0)?, range.0, problem)?.u;
    let homogeneous = continue_branch(&u0, range.0, problem, &cfg, 1.0)?;
    let mut diagram = BifurcationDiagram {
        parameter: problem.active,
        branches: vec![homogeneous],
        parents: vec![None],
        failures: Vec::new(),
    };
    let bps: Vec<(usize, SpecialPoint)> = diagram.branches[0]
        .special_points
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SpecialKind::BranchPoint)
        .take(max_branches)
        .map(|(i, s)| (i, s.clone()))
        .collect();
    for (idx, sp) in bps {
        let outcome = branch_switch(&sp, problem, &cfg).and_then(|starts| {
            let mut last = None;
            for start in &starts {
                match continue_from(&start.u, start.param, &start.direction, problem, &cfg) {
                    Ok(b) => return Ok(b),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("branch_switch returns at least one start"))
        });
        match outcome {
            Ok(branch) => {
                log::info!(
                    "branch from {} = {:.6}: {} points, {} folds, {:?}",
                    problem.active.name(),
                    sp.param,
                    branch.points.len(),
                    branch.folds().count(),
                    branch.termination
                );
                diagram.branches.push(branch);
                diagram.parents.push(Some((0, idx)));
            }
            Err(e) => diagram.failures.push(format!("{} = {}: {e}", problem.active.name(), sp.param)),
        }
    }
    Ok(diagram)
}

fn stable_segments(branch: &Branch) -> Vec<(f64, f64)> {
    branch
        .points
        .windows(2)
        .filter(|w| w[0].is_stable() && w[1].is_stable())
        .map(|w| (w[0].param.min(w[1].param), w[0].param.max(w[1].param)))
        .collect()
}

fn merge(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Parameter intervals where the homogeneous branch and at least one
/// patterned branch are both stable.
pub fn bistability_intervals(diagram: &BifurcationDiagram) -> Vec<(f64, f64)> {
    let home = merge(stable_segments(diagram.homogeneous()));
    let patterned = merge(diagram.patterned().iter().flat_map(stable_segments).collect());
    let mut out = Vec::new();
    for &(a, b) in &home {
        for &(c, d) in &patterned {
            let (lo, hi) = (a.max(c), b.min(d));
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    merge(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::solver::Grid;

    #[test]
    fn kernel_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 1.0, 0.0, 1.0]);
        let k = kernel_vector(&m).unwrap();
        assert!((&m * &k).norm() < 1e-10);
        assert!((k.norm() - 1.0).abs() < 1e-12);
        assert!(kernel_vector(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn folds_are_rejected() {
        let p = ModelParams::reference(0.1, 0.5, 2.0).unwrap();
        let pr = SteadyProblem::new(Grid::one_d(8.0, 20).unwrap(), p, ActiveParameter::Sigma).unwrap();
        let sp = SpecialPoint {
            kind: SpecialKind::Fold,
            param: 2.0,
            u: pr.homogeneous(2.0).unwrap(),
            l1_r: 0.0,
            after: 0,
            ambiguous: false,
        };
        let cfg = StepConfig::new((1.7, 3.3));
        assert!(matches!(branch_switch(&sp, &pr, &cfg), Err(Error::Switching(_))));
    }

    #[test]
    fn interval_merging() {
        assert_eq!(merge(vec![(2.0, 3.0), (0.0, 1.0), (0.5, 2.5)]), vec![(0.0, 3.0)]);
    }
}
