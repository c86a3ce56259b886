//! Initial data used in the reference experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Grid, State2, State3};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::turing::SpatialDim;

/// Side of the square patches seeded in 2D, in cells.
pub const PATCH_SIDE: usize = 4;
pub const PATCH_COUNT: usize = 4;

/// Centred Gaussian bump `R = 10 exp(-25 (L - 2x)² / (4L))`, `T = 0`.
pub fn initial_condition_1d(grid: &Grid) -> Result<State2> {
    if grid.dim != SpatialDim::One {
        return Err(Error::Usage("initial_condition_1d needs a 1D grid".into()));
    }
    let l = grid.length;
    let r = (0..grid.n)
        .map(|i| {
            let x = grid.center(i);
            10.0 * (-25.0 * (l - 2.0 * x).powi(2) / (4.0 * l)).exp()
        })
        .collect();
    Ok(State2 { r, t: vec![0.0; grid.n], time: 0.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Patch {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Four `4 x 4` patches with uniformly random top-left corners and biomass
/// drawn from `[1, 2]`. Later patches overwrite earlier ones where they
/// overlap.
pub fn random_patches(grid: &Grid, seed: u64) -> Result<Vec<Patch>> {
    if grid.dim != SpatialDim::Two {
        return Err(Error::Usage("random patches need a 2D grid".into()));
    }
    if grid.n < 2 * PATCH_SIDE {
        return Err(Error::Usage(format!(
            "2D grid needs at least {} cells per side, got {}",
            2 * PATCH_SIDE,
            grid.n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = grid.n - PATCH_SIDE;
    Ok((0..PATCH_COUNT)
        .map(|_| Patch {
            row: rng.random_range(0..=span),
            col: rng.random_range(0..=span),
            value: rng.random_range(1.0..=2.0),
        })
        .collect())
}

pub fn initial_condition_2d(grid: &Grid, seed: u64) -> Result<State2> {
    let patches = random_patches(grid, seed)?;
    let n = grid.n;
    let mut r = vec![0.0; grid.len()];
    for p in &patches {
        for i in p.row..p.row + PATCH_SIDE {
            r[i * n + p.col..i * n + p.col + PATCH_SIDE].fill(p.value);
        }
    }
    Ok(State2 { r, t: vec![0.0; grid.len()], time: 0.0 })
}

/// Split total biomass into the quasi-steady healthy/exposed fractions
/// `(1 - θ(T)) R` and `θ(T) R`.
pub fn quasi_steady_split(state: &State2, params: &ModelParams) -> State3 {
    let (rh, re) = state
        .r
        .iter()
        .zip(&state.t)
        .map(|(&r, &t)| {
            let th = params.theta(t);
            ((1.0 - th) * r, th * r)
        })
        .unzip();
    State3 { rh, re, t: state.t.clone(), time: state.time }
}
