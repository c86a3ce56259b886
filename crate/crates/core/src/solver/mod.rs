//! Finite-difference simulation of the limit and fast-reaction systems on
//! cell-centred grids with zero-flux boundaries.

mod convergence;
mod diagnostics;
mod grid;
mod init;
mod run;
mod step;

use serde::{Deserialize, Serialize};

pub use convergence::{convergence_study, ConvergenceRow};
pub use diagnostics::{
    field_stats, pattern_diagnostics, spot_diagnostics, DiagnosticsRow, Extremum,
    PatternDiagnostics, Spot, SpotDiagnostics,
};
pub(crate) use diagnostics::l1_norm as diagnostics_l1;
pub use grid::Grid;
pub use init::{
    initial_condition_1d, initial_condition_2d, quasi_steady_split, random_patches, Patch,
    PATCH_COUNT, PATCH_SIDE,
};
pub use run::{run, run_state, Model, SimConfig, Snapshot, Trajectory};
pub use step::{step_fast, step_limit, FastStepper, LimitStepper, Scheme, StepOptions};

/// Fields `(R, T)` of the limit system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State2 {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub time: f64,
}

/// Fields `(R_h, R_e, T)` of the fast-reaction system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State3 {
    pub rh: Vec<f64>,
    pub re: Vec<f64>,
    pub t: Vec<f64>,
    pub time: f64,
}

impl State3 {
    /// Total root biomass `R_h + R_e`.
    pub fn total_roots(&self) -> Vec<f64> {
        self.rh.iter().zip(&self.re).map(|(h, e)| h + e).collect()
    }

    /// The comparison observable `(R_h + R_e, T)`.
    pub fn to_limit(&self) -> State2 {
        State2 { r: self.total_roots(), t: self.t.clone(), time: self.time }
    }
}

/// State of either system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SimState {
    Limit(State2),
    Fast(State3),
}

impl SimState {
    pub fn time(&self) -> f64 {
        match self {
            SimState::Limit(s) => s.time,
            SimState::Fast(s) => s.time,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SimState::Limit(s) => s.r.len(),
            SimState::Fast(s) => s.t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(R, T)` view; for the fast system `R = R_h + R_e`.
    pub fn observable(&self) -> State2 {
        match self {
            SimState::Limit(s) => s.clone(),
            SimState::Fast(s) => s.to_limit(),
        }
    }
}
