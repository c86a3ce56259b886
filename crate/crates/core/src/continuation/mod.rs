//! Steady states of the discretised 1D limit system and their branches in
//! `σ` or `s`.
//!
//! Unknowns are stacked as `u = (R_0, …, R_{n-1}, T_0, …, T_{n-1})`. The
//! residual uses exactly the stencil of the time stepper, so converged
//! simulations are steady states of [`steady_residual`].

mod diagram;
mod palc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equilibria::{coexistence_equilibrium, jacobian_homogeneous};
use crate::error::{Error, Result};
use crate::model::{HomogeneousState, ModelParams};
use crate::solver::{Grid, State2};
use crate::turing::SpatialDim;

pub use diagram::{
    bifurcation_diagram, bistability_intervals, branch_switch, kernel_vector, BifurcationDiagram,
    SwitchStart,
};
pub use palc::{
    continue_branch, continue_from, Branch, BranchPoint, SpecialKind, SpecialPoint, StepConfig,
    Termination,
};

/// The continuation parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActiveParameter {
    Sigma,
    S,
}

impl ActiveParameter {
    pub fn name(self) -> &'static str {
        match self {
            ActiveParameter::Sigma => "sigma",
            ActiveParameter::S => "s",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyProblem {
    pub grid: Grid,
    pub params: ModelParams,
    pub active: ActiveParameter,
}

impl SteadyProblem {
    pub fn new(grid: Grid, params: ModelParams, active: ActiveParameter) -> Result<Self> {
        if grid.dim != SpatialDim::One {
            return Err(Error::Usage("continuation works on 1D grids".into()));
        }
        Ok(Self { grid, params, active })
    }

    /// Residual dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.grid.n
    }

    /// Current value of the active parameter in `params`.
    pub fn parameter(&self) -> f64 {
        match self.active {
            ActiveParameter::Sigma => self.params.propagation_reduction,
            ActiveParameter::S => self.params.extra_mortality,
        }
    }

    /// Parameters with the active parameter set to `p`; a derived `T̂`
    /// follows `s`.
    pub fn params_at(&self, p: f64) -> Result<ModelParams> {
        match self.active {
            ActiveParameter::Sigma => self.params.with_sigma(p),
            ActiveParameter::S => self.params.with_s(p),
        }
    }

    /// The coexistence equilibrium replicated over the grid.
    pub fn homogeneous(&self, p: f64) -> Result<DVector<f64>> {
        let e = coexistence_equilibrium(&self.params_at(p)?)?;
        let n = self.grid.n;
        Ok(DVector::from_fn(2 * n, |i, _| if i < n { e.r_star } else { e.t_star }))
    }

    pub fn to_state(&self, u: &DVector<f64>) -> State2 {
        let n = self.grid.n;
        State2 { r: u.as_slice()[..n].to_vec(), t: u.as_slice()[n..].to_vec(), time: 0.0 }
    }

    pub fn from_state(&self, s: &State2) -> DVector<f64> {
        DVector::from_iterator(2 * self.grid.n, s.r.iter().chain(&s.t).copied())
    }

    /// L¹ norm of the biomass component, as in the simulation diagnostics.
    pub fn l1_norm(&self, u: &DVector<f64>) -> f64 {
        crate::solver::diagnostics_l1(&u.as_slice()[..self.grid.n], self.grid.cell_volume())
    }

    /// Largest deviation of either field from its spatial mean.
    pub fn heterogeneity(&self, u: &DVector<f64>) -> f64 {
        let n = self.grid.n;
        let spread = |f: &[f64]| {
            let mean = f.iter().sum::<f64>() / n as f64;
            f.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()))
        };
        spread(&u.as_slice()[..n]).max(spread(&u.as_slice()[n..]))
    }

    fn check_len(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::Usage(format!(
                "solution vector has length {}, expected {}",
                u.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Second-difference matrix with reflecting ends, scaled by `1/dx²`.
fn laplacian_entries(n: usize, i: usize) -> [(usize, f64); 3] {
    let lo = if i == 0 { 0 } else { i - 1 };
    let hi = if i + 1 == n { n - 1 } else { i + 1 };
    [(lo, 1.0), (i, -2.0), (hi, 1.0)]
}

/// Discrete steady-state right-hand side at parameter value `p`.
pub fn steady_residual(u: &DVector<f64>, p: f64, problem: &SteadyProblem) -> Result<DVector<f64>> {
    problem.check_len(u)?;
    let params = problem.params_at(p)?;
    Ok(residual_with(u, &params, &problem.grid))
}

fn residual_with(u: &DVector<f64>, params: &ModelParams, grid: &Grid) -> DVector<f64> {
    let n = grid.n;
    let (r, t) = u.as_slice().split_at(n);
    let w: Vec<f64> = r.iter().zip(t).map(|(&r, &t)| params.motility(t) * r).collect();
    let mut lap_w = vec![0.0; n];
    let mut lap_t = vec![0.0; n];
    grid.laplacian_into(&w, &mut lap_w, false);
    grid.laplacian_into(t, &mut lap_t, false);
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        let (fr, ft) = params.limit_rates(r[i], t[i]);
        out[i] = lap_w[i] + fr;
        out[n + i] = params.toxicity_diffusion * lap_t[i] + ft;
    }
    out
}

/// Analytic Jacobian of [`steady_residual`] with respect to `u`.
pub fn steady_jacobian(u: &DVector<f64>, p: f64, problem: &SteadyProblem) -> Result<DMatrix<f64>> {
    problem.check_len(u)?;
    let params = problem.params_at(p)?;
    Ok(jacobian_with(u, &params, &problem.grid))
}

fn jacobian_with(u: &DVector<f64>, params: &ModelParams, grid: &Grid) -> DMatrix<f64> {
    let n = grid.n;
    let inv = 1.0 / (grid.dx * grid.dx);
    let (r, t) = u.as_slice().split_at(n);
    let sigma = params.propagation_reduction;
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for (j, c) in laplacian_entries(n, i) {
            let c = c * inv;
            jac[(i, j)] += c * params.motility(t[j]);
            jac[(i, n + j)] += c * (-sigma * params.theta_prime(t[j]) * r[j]);
            jac[(n + i, n + j)] += c * params.toxicity_diffusion;
        }
        let local = jacobian_homogeneous(HomogeneousState::new(r[i], t[i]), params);
        jac[(i, i)] += local.a11;
        jac[(i, n + i)] += local.a12;
        jac[(n + i, i)] += local.a21;
        jac[(n + i, n + i)] += local.a22;
    }
    jac
}

/// Derivative of the residual with respect to the active parameter.
pub fn parameter_derivative(
    u: &DVector<f64>,
    p: f64,
    problem: &SteadyProblem,
) -> Result<DVector<f64>> {
    problem.check_len(u)?;
    let params = problem.params_at(p)?;
    let grid = &problem.grid;
    let n = grid.n;
    let (r, t) = u.as_slice().split_at(n);
    let mut out = DVector::zeros(2 * n);
    match problem.active {
        ActiveParameter::Sigma => {
            let w: Vec<f64> = r.iter().zip(t).map(|(&r, &t)| -params.theta(t) * r).collect();
            let mut lap = vec![0.0; n];
            grid.laplacian_into(&w, &mut lap, false);
            out.as_mut_slice()[..n].copy_from_slice(&lap);
        }
        ActiveParameter::S => {
            // θ = T / T̂(s) below the kink; a derived T̂ grows like c R̂ / k
            let dt_hat = if params.t_hat_derived() {
                params.conversion * params.reference_biomass / params.decay
            } else {
                0.0
            };
            let t_hat = params.critical_toxicity;
            let (g_inh, s, c) =
                (params.growth_inhibition, params.extra_mortality, params.conversion);
            let r_hat = params.reference_biomass;
            let sigma = params.propagation_reduction;
            let mut w = vec![0.0; n];
            for i in 0..n {
                let th = params.theta(t[i]);
                let th_s = if t[i] <= t_hat { -t[i] * dt_hat / (t_hat * t_hat) } else { 0.0 };
                w[i] = -sigma * th_s * r[i];
                let mort_s = th + s * th_s;
                out[i] = -g_inh * th_s * r[i] * (1.0 - r[i] / r_hat) - mort_s * r[i];
                out[n + i] = c * mort_s * r[i];
            }
            let mut lap = vec![0.0; n];
            grid.laplacian_into(&w, &mut lap, false);
            for i in 0..n {
                out[i] += lap[i];
            }
        }
    }
    Ok(out)
}

/// Settings for [`newton_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 30, max_halvings: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub u: DVector<f64>,
    pub iterations: usize,
    /// Final residual ∞-norm.
    pub residual: f64,
}

/// Damped Newton iteration at fixed parameter with the analytic Jacobian.
pub fn newton_solve(u0: &DVector<f64>, p: f64, problem: &SteadyProblem) -> Result<NewtonReport> {
    newton_solve_with(u0, p, problem, &NewtonOptions::default())
}

pub fn newton_solve_with(
    u0: &DVector<f64>,
    p: f64,
    problem: &SteadyProblem,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    problem.check_len(u0)?;
    let params = problem.params_at(p)?;
    let grid = &problem.grid;
    let mut u = u0.clone();
    let mut f = residual_with(&u, &params, grid);
    let mut norm = f.amax();
    for it in 0..=opts.max_iterations {
        if norm < opts.tol {
            return Ok(NewtonReport { u, iterations: it, residual: norm });
        }
        if it == opts.max_iterations {
            break;
        }
        let jac = jacobian_with(&u, &params, grid);
        let Some(delta) = jac.lu().solve(&(-&f)) else {
            return Err(Error::NonConvergence { iterations: it, residual: norm });
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial = &u + &delta * step;
            let ft = residual_with(&trial, &params, grid);
            let nt = ft.amax();
            if nt.is_finite() && nt < norm {
                u = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: it + 1, residual: norm });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations, residual: norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn problem(active: ActiveParameter) -> SteadyProblem {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        SteadyProblem::new(Grid::one_d(8.0, 30).unwrap(), p, active).unwrap()
    }

    fn bumpy(pr: &SteadyProblem, p: f64) -> DVector<f64> {
        let mut u = pr.homogeneous(p).unwrap();
        for i in 0..u.len() {
            u[i] *= 1.0 + 0.1 * (0.7 * i as f64).sin();
        }
        u
    }

    #[test]
    fn homogeneous_state_is_a_root() {
        for active in [ActiveParameter::Sigma, ActiveParameter::S] {
            let pr = problem(active);
            let p = pr.parameter();
            let u = pr.homogeneous(p).unwrap();
            assert!(steady_residual(&u, p, &pr).unwrap().amax() < 1e-12);
            let rep = newton_solve(&u, p, &pr).unwrap();
            assert!(rep.iterations <= 2);
        }
    }

    #[test]
    fn bare_soil_is_a_root() {
        let pr = problem(ActiveParameter::Sigma);
        let zero = DVector::zeros(pr.dim());
        let rep = newton_solve(&zero, 3.0, &pr).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.u, zero);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let pr = problem(ActiveParameter::Sigma);
        let u = bumpy(&pr, 3.0);
        let jac = steady_jacobian(&u, 3.0, &pr).unwrap();
        let h = 1e-6;
        for j in 0..u.len() {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let col = (steady_residual(&up, 3.0, &pr).unwrap()
                - steady_residual(&dn, 3.0, &pr).unwrap())
                / (2.0 * h);
            for i in 0..u.len() {
                let scale = jac[(i, j)].abs().max(1.0);
                assert!((col[i] - jac[(i, j)]).abs() < 1e-5 * scale, "({i},{j})");
            }
        }
    }

    #[test]
    fn parameter_derivatives_match_finite_differences() {
        for active in [ActiveParameter::Sigma, ActiveParameter::S] {
            let pr = problem(active);
            let p0 = if active == ActiveParameter::Sigma { 2.5 } else { 0.4 };
            let u = bumpy(&pr, p0);
            let h = 1e-6;
            let fd = (steady_residual(&u, p0 + h, &pr).unwrap()
                - steady_residual(&u, p0 - h, &pr).unwrap())
                / (2.0 * h);
            let an = parameter_derivative(&u, p0, &pr).unwrap();
            for i in 0..u.len() {
                assert_relative_eq!(fd[i], an[i], epsilon = 1e-5, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn residual_agrees_with_time_stepper() {
        use crate::solver::{step_limit, State2};
        let pr = problem(ActiveParameter::Sigma);
        let u = bumpy(&pr, 3.0);
        let s = pr.to_state(&u);
        let dt = 1e-6;
        let next = step_limit(&State2 { time: 0.0, ..s.clone() }, &pr.params, &pr.grid, dt).unwrap();
        let f = steady_residual(&u, 3.0, &pr).unwrap();
        let moved = pr.from_state(&next);
        for i in 0..u.len() {
            assert_relative_eq!((moved[i] - u[i]) / dt, f[i], epsilon = 1e-6, max_relative = 1e-8);
        }
        assert_eq!(pr.l1_norm(&u), crate::solver::field_stats(&s, &pr.grid).l1_r);
    }
}
