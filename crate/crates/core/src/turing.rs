//! Linear stability of the coexistence state against heterogeneous
//! perturbations.
//!
//! A Neumann Laplacian eigenmode with eigenvalue `lambda` (so `-Δφ = λφ`)
//! grows with the eigenvalues of `M(λ) = J - λ J_Δ`, where `J` is the
//! reaction Jacobian and `J_Δ` the linearised cross-diffusion matrix at `E*`.
//! `tr M(λ) < 0` always, so instability needs `det M(λ) < 0`, a quadratic in
//! `λ` with positive leading coefficient.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{coexistence_equilibrium, jacobian_homogeneous, Equilibrium};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{ModelParams, ParamSet};

/// Linearised diffusion matrix `J_Δ` at a homogeneous state.
pub type DiffusionJacobian = Mat2;

pub fn diffusion_jacobian(equilibrium: &Equilibrium, params: &ModelParams) -> DiffusionJacobian {
    let (r, t) = (equilibrium.r_star, equilibrium.t_star);
    Mat2::new(
        params.motility(t),
        -params.propagation_reduction * r * params.theta_prime(t),
        0.0,
        params.toxicity_diffusion,
    )
}

/// `M(λ) = J(E*) - λ J_Δ(E*)`.
pub fn characteristic_matrix(lambda: f64, equilibrium: &Equilibrium, params: &ModelParams) -> Mat2 {
    debug_assert!(lambda >= 0.0);
    let j = jacobian_homogeneous(equilibrium.state(), params);
    j.sub_scaled(&diffusion_jacobian(equilibrium, params), lambda)
}

/// Coefficients `(a, b, c)` with `det M(λ) = a λ² - b λ + c`.
pub fn determinant_coefficients(equilibrium: &Equilibrium, params: &ModelParams) -> (f64, f64, f64) {
    let j = jacobian_homogeneous(equilibrium.state(), params);
    let jd = diffusion_jacobian(equilibrium, params);
    let dt = params.toxicity_diffusion;
    (
        dt * jd.a11,
        dt * j.a11 + jd.a11 * j.a22 - jd.a12 * j.a21,
        j.det(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpatialDim {
    One,
    Two,
}

impl SpatialDim {
    pub fn from_usize(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(SpatialDim::One),
            2 => Ok(SpatialDim::Two),
            _ => Err(Error::Usage(format!("dimension must be 1 or 2, got {dim}"))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            SpatialDim::One => 1,
            SpatialDim::Two => 2,
        }
    }
}

/// An eigenvalue of the Neumann Laplacian, with how many index pairs share it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaplacianEigenvalue {
    /// `κ` in 1D; `κ₁² + κ₂²` in 2D.
    pub index: usize,
    pub value: f64,
    pub multiplicity: usize,
}

/// Neumann Laplacian spectrum on `[0, L]` or `[0, L]²`. 1D: `(κπ/L)²` for
/// `κ < n_modes`. 2D: distinct values of `(κ₁² + κ₂²)(π/L)²` over
/// `κ₁, κ₂ < n_modes`, ascending, with multiplicities.
pub fn neumann_laplacian_eigenvalues(
    length: f64,
    n_modes: usize,
    dim: SpatialDim,
) -> Vec<LaplacianEigenvalue> {
    let unit = (PI / length).powi(2);
    match dim {
        SpatialDim::One => (0..n_modes)
            .map(|k| LaplacianEigenvalue { index: k, value: (k * k) as f64 * unit, multiplicity: 1 })
            .collect(),
        SpatialDim::Two => {
            let mut keys: Vec<usize> = (0..n_modes)
                .flat_map(|a| (0..n_modes).map(move |b| a * a + b * b))
                .collect();
            keys.sort_unstable();
            let mut out: Vec<LaplacianEigenvalue> = Vec::new();
            for key in keys {
                match out.last_mut() {
                    Some(last) if last.index == key => last.multiplicity += 1,
                    _ => out.push(LaplacianEigenvalue {
                        index: key,
                        value: key as f64 * unit,
                        multiplicity: 1,
                    }),
                }
            }
            out
        }
    }
}

/// Spectrum of the discrete cell-centred Neumann Laplacian on `n` cells of
/// width `dx`: `(4/dx²) sin²(κπ / 2n)`, eigenvector `cos(κπ(i + ½)/n)`.
pub fn grid_laplacian_eigenvalues(n: usize, dx: f64) -> Vec<LaplacianEigenvalue> {
    (0..n)
        .map(|k| {
            let s = (k as f64 * PI / (2.0 * n as f64)).sin();
            LaplacianEigenvalue { index: k, value: 4.0 * s * s / (dx * dx), multiplicity: 1 }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeGrowth {
    pub index: usize,
    pub lambda: f64,
    pub multiplicity: usize,
    #[serde(skip)]
    pub growth_rates: [Complex64; 2],
}

impl ModeGrowth {
    pub fn max_real(&self) -> f64 {
        self.growth_rates[0].re.max(self.growth_rates[1].re)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersionResult {
    pub modes: Vec<ModeGrowth>,
    /// Largest real growth rate over all modes and the mode index achieving it.
    pub max_growth: (f64, usize),
    /// Largest growth over nonzero modes only.
    pub max_heterogeneous_growth: Option<(f64, usize)>,
    /// `false` when the top mode considered still lies inside the unstable
    /// window, i.e. the mode count was too small to bracket it.
    pub window_resolved: bool,
}

impl DispersionResult {
    pub fn unstable_modes(&self) -> impl Iterator<Item = &ModeGrowth> {
        self.modes.iter().filter(|m| m.index > 0 && m.max_real() > 0.0)
    }
}

/// Dispersion relation over an explicit list of Laplacian eigenvalues.
pub fn dispersion_for_spectrum(
    params: &ModelParams,
    spectrum: &[LaplacianEigenvalue],
) -> Result<DispersionResult> {
    let eq = coexistence_equilibrium(params)?;
    let modes: Vec<ModeGrowth> = spectrum
        .iter()
        .map(|ev| ModeGrowth {
            index: ev.index,
            lambda: ev.value,
            multiplicity: ev.multiplicity,
            growth_rates: characteristic_matrix(ev.value, &eq, params).eigenvalues(),
        })
        .collect();
    let best = |it: &mut dyn Iterator<Item = &ModeGrowth>| {
        it.fold(None, |acc: Option<(f64, usize)>, m| {
            let g = m.max_real();
            match acc {
                Some((bg, _)) if bg >= g => acc,
                _ => Some((g, m.index)),
            }
        })
    };
    let max_growth = best(&mut modes.iter())
        .ok_or_else(|| Error::Usage("empty Laplacian spectrum".into()))?;
    let max_heterogeneous_growth = best(&mut modes.iter().filter(|m| m.index > 0));
    let (a, b, c) = determinant_coefficients(&eq, params);
    let top = modes.last().map(|m| m.lambda).unwrap_or(0.0);
    let window_resolved = if a > 0.0 {
        let disc = b * b - 4.0 * a * c;
        disc < 0.0 || top >= (b + disc.sqrt()) / (2.0 * a)
    } else {
        true
    };
    if !window_resolved {
        log::warn!("unstable window extends past the largest mode considered (lambda = {top})");
    }
    Ok(DispersionResult { modes, max_growth, max_heterogeneous_growth, window_resolved })
}

pub fn dispersion_relation(
    params: &ModelParams,
    length: f64,
    n_modes: usize,
    dim: SpatialDim,
) -> Result<DispersionResult> {
    if !(length > 0.0) || n_modes == 0 {
        return Err(Error::Usage(format!(
            "need L > 0 and n_modes >= 1, got L = {length}, n_modes = {n_modes}"
        )));
    }
    dispersion_for_spectrum(params, &neumann_laplacian_eigenvalues(length, n_modes, dim))
}

/// Threshold on `σ` above which the linear coefficient of `det M(λ)` turns
/// favourable, a necessary condition for heterogeneous instability.
pub fn sigma_l(params: &ModelParams) -> Result<f64> {
    let eq = coexistence_equilibrium(params)?;
    let (r, t) = (eq.r_star, eq.t_star);
    let (c, d, s, k) = (params.conversion, params.mortality, params.extra_mortality, params.decay);
    let (r_hat, t_hat) = (params.reference_biomass, params.critical_toxicity);
    assert!(r < r_hat, "R* must lie below R_hat");
    let denom = c * d * r + k * t;
    Ok((k * t_hat - c * s * r) / denom * params.root_diffusion
        + r / r_hat * ((d * t_hat + s * t) / ((1.0 - r / r_hat) * denom)) * params.toxicity_diffusion)
}

/// Threshold [`sigma_l`] when growth inhibition and extra mortality vanish.
pub fn sigma_l0(params: &ModelParams) -> f64 {
    let (g, d) = (params.growth_rate, params.mortality);
    0.5 * g * (params.root_diffusion / (g - d) + params.toxicity_diffusion / params.decay)
}

/// `min_{λ >= 0} det M(λ)` on the continuous spectrum.
pub fn min_determinant(params: &ModelParams) -> Result<f64> {
    let eq = coexistence_equilibrium(params)?;
    let (a, b, c) = determinant_coefficients(&eq, params);
    Ok(if a > 0.0 && b > 0.0 { c - b * b / (4.0 * a) } else { c })
}

/// Smallest `σ < d_R` at which some continuous mode becomes unstable
/// (`min det M = 0`), or `None` if there is none. Always `>= sigma_l`.
pub fn sigma_onset(params: &ModelParams) -> Result<Option<f64>> {
    let at = |sigma: f64| -> Result<f64> { min_determinant(&params.with_sigma(sigma)?) };
    let hi_sigma = params.root_diffusion * (1.0 - 1e-12);
    if at(hi_sigma)? > 0.0 {
        return Ok(None);
    }
    if at(0.0)? <= 0.0 {
        return Ok(Some(0.0));
    }
    // min det is nonincreasing in sigma on the admissible range
    let (mut lo, mut hi) = (0.0, hi_sigma);
    while hi - lo > 1e-13 * params.root_diffusion {
        let mid = 0.5 * (lo + hi);
        if at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TuringVerdict {
    pub unstable: bool,
    /// Fastest-growing nonzero mode and its growth rate.
    pub critical_mode: Option<usize>,
    pub growth_rate: f64,
}

pub fn is_turing_unstable(
    params: &ModelParams,
    length: f64,
    n_modes: usize,
    dim: SpatialDim,
) -> Result<TuringVerdict> {
    let disp = dispersion_relation(params, length, n_modes, dim)?;
    Ok(verdict(&disp))
}

pub fn verdict(disp: &DispersionResult) -> TuringVerdict {
    match disp.max_heterogeneous_growth {
        Some((g, k)) => TuringVerdict { unstable: g > 0.0, critical_mode: Some(k), growth_rate: g },
        None => TuringVerdict { unstable: false, critical_mode: None, growth_rate: f64::NEG_INFINITY },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanCell {
    pub gamma: f64,
    pub s: f64,
    /// `None` for infeasible parameter combinations.
    pub sigma_l: Option<f64>,
}

/// `σ_L` over a rectangular `(γ, s)` grid, `γ` varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuringScan {
    pub gammas: Vec<f64>,
    pub ss: Vec<f64>,
    pub cells: Vec<ScanCell>,
    /// Upper bound `d_R` of the admissible σ interval.
    pub ceiling: f64,
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect()
}

/// Scan `σ_L` over `γ ∈ gamma_range`, `s ∈ s_range` with `resolution` points
/// per axis. `T_hat` is re-derived per cell unless `base` fixes it.
pub fn turing_region_scan(
    base: &ParamSet,
    gamma_range: (f64, f64),
    s_range: (f64, f64),
    resolution: (usize, usize),
) -> TuringScan {
    let gammas = linspace(gamma_range, resolution.0);
    let ss = linspace(s_range, resolution.1);
    let pairs: Vec<(f64, f64)> =
        gammas.iter().flat_map(|&g| ss.iter().map(move |&s| (g, s))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(gamma, s)| {
            let set = ParamSet {
                growth_inhibition: gamma,
                extra_mortality: s,
                propagation_reduction: 0.0,
                ..*base
            };
            let sigma_l = ModelParams::new(set).ok().and_then(|p| sigma_l(&p).ok());
            ScanCell { gamma, s, sigma_l }
        })
        .collect();
    TuringScan { gammas, ss, cells, ceiling: base.root_diffusion }
}

impl TuringScan {
    pub fn get(&self, gi: usize, si: usize) -> &ScanCell {
        &self.cells[gi * self.ss.len() + si]
    }

    /// Largest `|Δσ_L|` between feasible grid neighbours.
    pub fn max_neighbour_jump(&self) -> f64 {
        let (ng, ns) = (self.gammas.len(), self.ss.len());
        let mut worst: f64 = 0.0;
        for gi in 0..ng {
            for si in 0..ns {
                let Some(v) = self.get(gi, si).sigma_l else { continue };
                if gi + 1 < ng {
                    if let Some(w) = self.get(gi + 1, si).sigma_l {
                        worst = worst.max((v - w).abs());
                    }
                }
                if si + 1 < ns {
                    if let Some(w) = self.get(gi, si + 1).sigma_l {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// Area of the admissible region `σ_L < σ < d_R` in the `(γ, σ)` plane for
    /// each fixed `s` (trapezoid rule over the γ grid, infeasible cells
    /// contribute nothing).
    pub fn area_along_s(&self) -> Vec<f64> {
        (0..self.ss.len())
            .map(|si| {
                let height = |gi: usize| {
                    self.get(gi, si).sigma_l.map_or(0.0, |v| (self.ceiling - v).max(0.0))
                };
                self.gammas
                    .windows(2)
                    .enumerate()
                    .map(|(gi, w)| 0.5 * (w[1] - w[0]) * (height(gi) + height(gi + 1)))
                    .sum()
            })
            .collect()
    }

    /// `σ_L` along `s` at the γ grid index `gi`.
    pub fn slice_at_gamma(&self, gi: usize) -> Vec<Option<f64>> {
        (0..self.ss.len()).map(|si| self.get(gi, si).sigma_l).collect()
    }
}

/// Midpoints `x` where the forward difference of `values` changes sign.
pub fn slope_sign_changes(xs: &[f64], values: &[f64]) -> Vec<f64> {
    let slopes: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    slopes
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] * w[1] < 0.0)
        .map(|(i, _)| xs[i + 1])
        .collect()
}
