use std::f64::consts::PI;

use vegtox::continuation::{
    bifurcation_diagram, branch_switch, continue_branch, newton_solve, steady_residual, ActiveParameter,
    BifurcationDiagram, SpecialKind, StepConfig, SteadyProblem,
};
use vegtox::solver::{field_stats, Grid};
use vegtox::turing::{dispersion_for_spectrum, grid_laplacian_eigenvalues};
use vegtox::ModelParams;

fn problem(n: usize) -> SteadyProblem {
    let p = ModelParams::reference(0.1, 0.5, 0.0).unwrap();
    SteadyProblem::new(Grid::one_d(8.0, n).unwrap(), p, ActiveParameter::Sigma).unwrap()
}

fn range(pr: &SteadyProblem) -> (f64, f64) {
    (0.8 * pr.params.root_diffusion, 0.95 * pr.params.root_diffusion)
}

fn diagram(pr: &SteadyProblem, cfg: &StepConfig, max_branches: usize) -> BifurcationDiagram {
    bifurcation_diagram(pr, range(pr), max_branches, cfg).unwrap()
}

#[test]
fn accepted_points_are_converged() {
    let pr = problem(40);
    let d = diagram(&pr, &StepConfig::new(range(&pr)), 2);
    for b in &d.branches {
        for pt in &b.points {
            assert!(pt.residual < 1e-10, "residual {} at {}", pt.residual, pt.param);
        }
    }
}

#[test]
fn ordinate_is_the_solver_l1_diagnostic() {
    let pr = problem(40);
    let d = diagram(&pr, &StepConfig::new(range(&pr)), 1);
    for pt in &d.branches[1].points {
        assert_eq!(pt.l1_r, field_stats(&pr.to_state(&pt.u), &pr.grid).l1_r);
    }
}

#[test]
fn homogeneous_branch_is_reversible() {
    let pr = problem(40);
    let (lo, hi) = range(&pr);
    let cfg = StepConfig::new((lo, hi));
    let u0 = newton_solve(&pr.homogeneous(lo).unwrap(), lo, &pr).unwrap().u;
    let forward = continue_branch(&u0, lo, &pr, &cfg, 1.0).unwrap();
    let end = forward.points.last().unwrap();
    assert_eq!(end.param, hi);
    let back = continue_branch(&end.u, end.param, &pr, &cfg, -1.0).unwrap();
    let home = back.points.last().unwrap();
    assert_eq!(home.param, lo);
    let l1: f64 = (&home.u - &u0).iter().map(|v| v.abs()).sum::<f64>() * pr.grid.dx;
    assert!(l1 < 1e-6, "returned {l1:.3e} away");
}

#[test]
fn folds_do_not_move_when_the_step_cap_is_halved() {
    let pr = problem(40);
    let coarse = StepConfig::new(range(&pr));
    let fine = StepConfig { ds_max: 0.5 * coarse.ds_max, ..coarse.clone() };
    let folds = |cfg: &StepConfig| -> Vec<f64> {
        diagram(&pr, cfg, 2).patterned().iter().flat_map(|b| b.folds().map(|f| f.param).collect::<Vec<_>>()).collect()
    };
    let (a, b) = (folds(&coarse), folds(&fine));
    assert!(!a.is_empty(), "no fold found");
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!(((x - y) / x).abs() < 1e-4, "fold moved from {x} to {y}");
    }
}

#[test]
fn switched_solution_carries_the_critical_mode() {
    let pr = problem(40);
    let cfg = StepConfig::new(range(&pr));
    let d = diagram(&pr, &cfg, 0);
    let bp = d.homogeneous().special_points.iter().find(|s| s.kind == SpecialKind::BranchPoint).unwrap();

    let spectrum = grid_laplacian_eigenvalues(pr.grid.n, pr.grid.dx);
    let above = pr.params_at(bp.param + 1e-6).unwrap();
    let critical: Vec<usize> = dispersion_for_spectrum(&above, &spectrum)
        .unwrap()
        .unstable_modes()
        .map(|m| m.index)
        .collect();
    assert_eq!(critical.len(), 1);

    let starts = branch_switch(bp, &pr, &cfg).unwrap();
    assert_eq!(starts.len(), 2);
    let n = pr.grid.n;
    let dominant = |u: &nalgebra::DVector<f64>| {
        let r = &u.as_slice()[..n];
        let mean = r.iter().sum::<f64>() / n as f64;
        (1..n)
            .map(|k| {
                let c: f64 = r
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v - mean) * (k as f64 * PI * pr.grid.center(i) / pr.grid.length).cos())
                    .sum();
                (k, c.abs())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    };
    for s in &starts {
        assert!(steady_residual(&s.u, s.param, &pr).unwrap().amax() < 1e-10);
        assert_eq!(dominant(&s.u), critical[0]);
    }
    // the two sides are images of each other under a symmetry of the box
    let (a, b) = (&starts[0], &starts[1]);
    assert!((a.param - b.param).abs() < 1e-8 * a.param);
    assert!((pr.l1_norm(&a.u) - pr.l1_norm(&b.u)).abs() < 1e-8 * pr.l1_norm(&a.u));
}
