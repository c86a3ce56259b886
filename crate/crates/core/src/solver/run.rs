use serde::{Deserialize, Serialize};

use super::diagnostics::{field_stats, DiagnosticsRow};
use super::init::quasi_steady_split;
use super::{FastStepper, Grid, LimitStepper, Scheme, SimState, State2, StepOptions};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Which system to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Limit,
    Fast { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_fin: f64,
    /// Diagnostics cadence in years.
    pub output_every: f64,
    /// Full-field snapshot cadence in years.
    pub snapshot_every: f64,
    pub options: StepOptions,
}

impl SimConfig {
    /// Defaults: the largest stable step for the grid, diagnostics every year,
    /// snapshots every 50 years.
    pub fn new(grid: Grid, params: &ModelParams, t_fin: f64) -> Self {
        Self {
            grid,
            dt: grid.max_stable_dt(max_diffusivity(params)),
            t_fin,
            output_every: 1.0,
            snapshot_every: 50.0,
            options: StepOptions::default(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_cadence(mut self, output_every: f64, snapshot_every: f64) -> Self {
        self.output_every = output_every;
        self.snapshot_every = snapshot_every;
        self
    }

    pub fn with_options(mut self, options: StepOptions) -> Self {
        self.options = options;
        self
    }

    /// Number of steps and the effective step `t_fin / steps`.
    pub fn steps(&self) -> (u64, f64) {
        let steps = (self.t_fin / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        (steps, self.t_fin / steps as f64)
    }

    pub fn validate(&self, params: &ModelParams, model: Model) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Usage(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_fin.is_finite() && self.t_fin > 0.0) {
            return Err(Error::Usage(format!("t_fin must be > 0, got {}", self.t_fin)));
        }
        for (name, v) in [("output_every", self.output_every), ("snapshot_every", self.snapshot_every)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Usage(format!("{name} must be > 0, got {v}")));
            }
        }
        let dt_max = self.grid.max_stable_dt(max_diffusivity(params));
        if self.dt > dt_max * (1.0 + 1e-12) {
            return Err(Error::Usage(format!(
                "dt = {} exceeds the explicit stability bound {dt_max:.6e}",
                self.dt
            )));
        }
        if let Model::Fast { epsilon } = model {
            if !(epsilon.is_finite() && epsilon > 0.0) {
                return Err(Error::Parameter(format!("epsilon must be > 0, got {epsilon}")));
            }
            if self.options.scheme == Scheme::ExplicitEuler && self.dt > epsilon / 4.0 {
                return Err(Error::Usage(format!(
                    "explicit exchange needs dt <= epsilon/4 = {:.6e}, got {}",
                    epsilon / 4.0,
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

fn max_diffusivity(params: &ModelParams) -> f64 {
    params.root_diffusion.max(params.toxicity_diffusion)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub state: SimState,
}

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub model: Model,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// `None` if the run stopped early.
    pub final_state: Option<SimState>,
    #[serde(skip)]
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Final `(R, T)`, if the run reached `t_fin`.
    pub fn final_observable(&self) -> Option<State2> {
        self.final_state.as_ref().map(SimState::observable)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Integrate from `ic` to `config.t_fin`. For [`Model::Fast`] the initial
/// roots are split quasi-steadily between the healthy and exposed classes.
pub fn run(config: &SimConfig, params: &ModelParams, model: Model, ic: &State2) -> Result<Trajectory> {
    let (params, state) = match model {
        Model::Limit => (*params, SimState::Limit(ic.clone())),
        Model::Fast { epsilon } => {
            let p = params.with_epsilon(epsilon)?;
            let s = quasi_steady_split(ic, &p);
            (p, SimState::Fast(s))
        }
    };
    run_state(config, &params, state)
}

/// Integrate an explicit state of either system. A fast state uses the
/// `switch_timescale` of `params`.
pub fn run_state(config: &SimConfig, params: &ModelParams, state: SimState) -> Result<Trajectory> {
    let model = match state {
        SimState::Limit(_) => Model::Limit,
        SimState::Fast(_) => Model::Fast { epsilon: params.switch_timescale },
    };
    config.validate(params, model)?;
    if state.len() != config.grid.len() {
        return Err(Error::Usage(format!(
            "initial state has {} cells, grid has {}",
            state.len(),
            config.grid.len()
        )));
    }
    let (steps, dt) = config.steps();
    // true when step k is the first to reach a new multiple of `every`
    let due = |k: u64, every: f64| {
        let slot = |j: u64| (j as f64 * dt / every + 1e-9).floor();
        k == steps || slot(k) > slot(k - 1)
    };
    let t0 = state.time();
    let grid = config.grid;
    let opts = config.options;

    let mut traj = Trajectory {
        model,
        dt,
        snapshots: vec![Snapshot { time: t0, state: state.clone() }],
        diagnostics: vec![field_stats(&state.observable(), &grid)],
        final_state: None,
        failure: None,
    };

    let mut state = state;
    let mut limit_stepper = LimitStepper::new(grid);
    let mut fast_stepper = FastStepper::new(grid);
    for k in 1..=steps {
        let stepped = match &mut state {
            SimState::Limit(s) => limit_stepper.step(s, params, dt, &opts),
            SimState::Fast(s) => fast_stepper.step(s, params, dt, &opts),
        };
        if let Err(e) = stepped {
            log::error!("run stopped: {e}");
            traj.failure = Some(e);
            return Ok(traj);
        }
        // reset accumulated round-off in the clock
        let time = t0 + k as f64 * dt;
        match &mut state {
            SimState::Limit(s) => s.time = time,
            SimState::Fast(s) => s.time = time,
        }
        if due(k, config.output_every) {
            traj.diagnostics.push(field_stats(&state.observable(), &grid));
        }
        if due(k, config.snapshot_every) {
            traj.snapshots.push(Snapshot { time, state: state.clone() });
        }
    }
    traj.final_state = Some(state);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::coexistence_equilibrium;
    use crate::solver::init::initial_condition_1d;

    #[test]
    fn validation_reports_bounds() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 400).unwrap();
        let cfg = SimConfig::new(grid, &p, 1.0).with_dt(1e-3);
        let err = cfg.validate(&p, Model::Limit).unwrap_err().to_string();
        assert!(err.contains("stability bound"), "{err}");
        let cfg = SimConfig::new(grid, &p, 1.0).with_dt(1e-5).with_options(StepOptions {
            scheme: Scheme::ExplicitEuler,
            ..StepOptions::default()
        });
        assert!(cfg.validate(&p, Model::Fast { epsilon: 1e-5 }).is_err());
        assert!(cfg.validate(&p, Model::Fast { epsilon: 1e-3 }).is_ok());
        assert!(SimConfig::new(grid, &p, -1.0).validate(&p, Model::Limit).is_err());
    }

    #[test]
    fn step_count_covers_final_time() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 400).unwrap();
        let cfg = SimConfig::new(grid, &p, 0.5).with_dt(1e-5);
        let (n, dt) = cfg.steps();
        assert_eq!(n, 50_000);
        assert!((dt - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn homogeneous_equilibrium_is_a_fixed_point_of_run() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let e = coexistence_equilibrium(&p).unwrap();
        let grid = Grid::one_d(8.0, 50).unwrap();
        let ic = State2 { r: vec![e.r_star; 50], t: vec![e.t_star; 50], time: 0.0 };
        let cfg = SimConfig::new(grid, &p, 1.0);
        let dt = cfg.t_fin / 1e4;
        let cfg = cfg.with_dt(dt);
        let traj = run(&cfg, &p, Model::Limit, &ic).unwrap();
        assert_eq!(cfg.steps().0, 10_000);
        let fin = traj.final_observable().unwrap();
        let l1: f64 = fin.r.iter().map(|r| (r - e.r_star).abs()).sum::<f64>() * grid.dx;
        assert!(l1 < 1e-10, "{l1}");
        assert!(fin.t.iter().all(|t| (t - e.t_star).abs() < 1e-10));
    }

    #[test]
    fn records_diagnostics_and_snapshots_on_cadence() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 40).unwrap();
        let ic = initial_condition_1d(&grid).unwrap();
        let cfg = SimConfig::new(grid, &p, 2.0).with_cadence(0.5, 1.0);
        let traj = run(&cfg, &p, Model::Limit, &ic).unwrap();
        assert_eq!(traj.diagnostics.len(), 5);
        assert_eq!(traj.snapshots.len(), 3);
        assert!((traj.diagnostics.last().unwrap().t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_keeps_partial_trajectory() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 20).unwrap();
        let mut ic = initial_condition_1d(&grid).unwrap();
        ic.r[3] = 1e300;
        let cfg = SimConfig::new(grid, &p, 1.0);
        let traj = run(&cfg, &p, Model::Limit, &ic).unwrap();
        assert!(matches!(traj.failure, Some(Error::BlowUp { .. })));
        assert!(traj.final_state.is_none());
        assert_eq!(traj.snapshots.len(), 1);
        assert!(traj.into_result().is_err());
    }
}
