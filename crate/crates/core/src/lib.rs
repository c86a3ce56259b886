//! Vegetation-autotoxicity pattern formation.
//!
//! Root biomass `R` and soil toxicity `T` interact through growth inhibition,
//! extra mortality and a propagation reduction of roots exposed to toxicity.
//! The exposure switch is fast, so the three-species healthy/exposed/toxicity
//! system relaxes to a two-species system with the cross-diffusion term
//! `Δ((d_R - σθ(T)) R)`. This crate provides
//!
//! - [`model`]: parameters, the switching fraction `θ`, reaction terms;
//! - [`equilibria`]: homogeneous steady states and their stability;
//! - [`turing`]: dispersion relation and cross-diffusion instability thresholds;
//! - [`solver`]: explicit finite-difference simulation in 1D and 2D;
//! - [`continuation`]: steady-state branches by pseudo-arclength continuation;
//! - [`config`], [`commands`], [`io`]: experiment configuration and export.

pub mod commands;
pub mod config;
pub mod continuation;
pub mod equilibria;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod turing;

pub use error::{Error, Result};
pub use model::{HomogeneousState, ModelParams, ParamSet};
