//! Model parameters, the toxicity-dependent switching fraction, and the
//! reaction terms of the three-species fast-reaction system and its
//! two-species cross-diffusion limit.
//!
//! Toxicity switches roots between a healthy and an exposed state with rates
//! `p(T)` and `q(T) = 1 - p(T)`, where `p = theta` is the piecewise-linear
//! ramp `T / T_hat` saturating at 1. In the limit of instantaneous switching
//! the exposed fraction of the total root biomass is `theta(T)`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw, unvalidated parameter values. Defaults are the reference set used
/// throughout the numerical experiments (`gamma = s = sigma = 0`).
///
/// `critical_toxicity` may be left out, in which case it is derived as
/// `c (d + s) R_hat / k`, the smallest value keeping `[0, R_hat] x [0, T_hat]`
/// positively invariant for the homogeneous dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// `g`, maximal root growth rate (1/year).
    pub growth_rate: f64,
    /// `gamma`, growth-rate reduction of exposed roots (1/year).
    pub growth_inhibition: f64,
    /// `d`, natural mortality (1/year).
    pub mortality: f64,
    /// `s`, extra mortality of exposed roots (1/year).
    pub extra_mortality: f64,
    /// `c`, conversion of dead biomass into toxicity (g/kg).
    pub conversion: f64,
    /// `k`, toxicity decay rate (1/year).
    pub decay: f64,
    /// `d_R`, root propagation coefficient (m^2/year).
    pub root_diffusion: f64,
    /// `sigma`, propagation reduction of exposed roots (m^2/year).
    pub propagation_reduction: f64,
    /// `d_T`, toxicity diffusion (m^2/year).
    pub toxicity_diffusion: f64,
    /// `R_hat`, reference biomass (kg/m^2).
    pub reference_biomass: f64,
    /// `T_hat`, critical toxicity (g/m^2).
    pub critical_toxicity: Option<f64>,
    /// `epsilon`, healthy/exposed switching time scale (year).
    pub switch_timescale: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self {
            growth_rate: 10.0,
            growth_inhibition: 0.0,
            mortality: 1.0,
            extra_mortality: 0.0,
            conversion: 0.5,
            decay: 1.0,
            root_diffusion: 3.33,
            propagation_reduction: 0.0,
            toxicity_diffusion: 0.05,
            reference_biomass: 6.0,
            critical_toxicity: None,
            switch_timescale: 1e-2,
        }
    }
}

impl ParamSet {
    /// Reference values with the given growth inhibition, extra mortality and
    /// propagation reduction.
    pub fn reference(gamma: f64, s: f64, sigma: f64) -> Self {
        Self {
            growth_inhibition: gamma,
            extra_mortality: s,
            propagation_reduction: sigma,
            ..Self::default()
        }
    }
}

/// Validated parameter values. Every field of [`Coefficients`] is readable
/// through `Deref`; changes go through the `with_*` constructors, which
/// re-validate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    coef: Coefficients,
    t_hat_derived: bool,
}

/// Concrete parameter values of a validated [`ModelParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficients {
    pub growth_rate: f64,
    pub growth_inhibition: f64,
    pub mortality: f64,
    pub extra_mortality: f64,
    pub conversion: f64,
    pub decay: f64,
    pub root_diffusion: f64,
    pub propagation_reduction: f64,
    pub toxicity_diffusion: f64,
    pub reference_biomass: f64,
    pub critical_toxicity: f64,
    pub switch_timescale: f64,
}

impl Deref for ModelParams {
    type Target = Coefficients;

    fn deref(&self) -> &Coefficients {
        &self.coef
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// `T_hat = c (d + s) R_hat / k`, requiring `c (d + s) / k < 1`.
pub fn derive_t_hat(set: &ParamSet) -> Result<f64> {
    let ratio = feasibility_ratio(set)?;
    if ratio >= 1.0 {
        return Err(Error::Parameter(format!(
            "c (d + s) / k = {ratio} must be < 1"
        )));
    }
    Ok(ratio * set.reference_biomass)
}

fn feasibility_ratio(set: &ParamSet) -> Result<f64> {
    for (name, v) in [
        ("c", set.conversion),
        ("d", set.mortality),
        ("s", set.extra_mortality),
        ("R_hat", set.reference_biomass),
    ] {
        check_nonneg(name, v)?;
    }
    if !(set.decay.is_finite() && set.decay > 0.0) {
        return Err(Error::Parameter(format!("k must be > 0, got {}", set.decay)));
    }
    Ok(set.conversion * (set.mortality + set.extra_mortality) / set.decay)
}

/// Effective carrying capacity `R_tilde = (g - d) / g * R_hat`.
pub fn carrying_capacity(set: &ParamSet) -> Result<f64> {
    let (g, d) = (set.growth_rate, set.mortality);
    check_nonneg("g", g)?;
    check_nonneg("d", d)?;
    check_nonneg("R_hat", set.reference_biomass)?;
    if g <= d {
        return Err(Error::Parameter(format!("need g > d, got g = {g}, d = {d}")));
    }
    Ok((g - d) / g * set.reference_biomass)
}

impl ModelParams {
    pub fn new(set: ParamSet) -> Result<Self> {
        for (name, v) in [
            ("g", set.growth_rate),
            ("gamma", set.growth_inhibition),
            ("d", set.mortality),
            ("s", set.extra_mortality),
            ("c", set.conversion),
            ("k", set.decay),
            ("d_R", set.root_diffusion),
            ("sigma", set.propagation_reduction),
            ("d_T", set.toxicity_diffusion),
            ("R_hat", set.reference_biomass),
            ("epsilon", set.switch_timescale),
        ] {
            check_nonneg(name, v)?;
        }
        let g = set.growth_rate;
        if g <= set.mortality {
            return Err(Error::Parameter(format!(
                "need g > d, got g = {g}, d = {}",
                set.mortality
            )));
        }
        if set.growth_inhibition > g {
            return Err(Error::Parameter(format!(
                "need gamma <= g, got gamma = {}",
                set.growth_inhibition
            )));
        }
        if set.propagation_reduction >= set.root_diffusion {
            return Err(Error::Parameter(format!(
                "need sigma < d_R, got sigma = {}, d_R = {}",
                set.propagation_reduction, set.root_diffusion
            )));
        }
        if set.reference_biomass <= 0.0 {
            return Err(Error::Parameter("R_hat must be > 0".into()));
        }
        let minimal = derive_t_hat(&set)?;
        let (t_hat, derived) = match set.critical_toxicity {
            None => (minimal, true),
            Some(t) => {
                if !t.is_finite() || t < minimal * (1.0 - 1e-12) {
                    return Err(Error::Parameter(format!(
                        "T_hat = {t} is below c (d + s) R_hat / k = {minimal}"
                    )));
                }
                if t > minimal * (1.0 + 1e-12) {
                    log::warn!(
                        "T_hat = {t} exceeds the invariant-region infimum {minimal}"
                    );
                }
                (t, false)
            }
        };
        Ok(Self {
            coef: Coefficients {
                growth_rate: g,
                growth_inhibition: set.growth_inhibition,
                mortality: set.mortality,
                extra_mortality: set.extra_mortality,
                conversion: set.conversion,
                decay: set.decay,
                root_diffusion: set.root_diffusion,
                propagation_reduction: set.propagation_reduction,
                toxicity_diffusion: set.toxicity_diffusion,
                reference_biomass: set.reference_biomass,
                critical_toxicity: t_hat,
                switch_timescale: set.switch_timescale,
            },
            t_hat_derived: derived,
        })
    }

    /// Reference parameter set with the given `(gamma, s, sigma)`.
    pub fn reference(gamma: f64, s: f64, sigma: f64) -> Result<Self> {
        Self::new(ParamSet::reference(gamma, s, sigma))
    }

    /// Whether `T_hat` was derived rather than supplied.
    pub fn t_hat_derived(&self) -> bool {
        self.t_hat_derived
    }

    /// Back to a raw set; `T_hat` is dropped if it was derived so that it is
    /// recomputed after edits.
    pub fn to_set(&self) -> ParamSet {
        let c = &self.coef;
        ParamSet {
            growth_rate: c.growth_rate,
            growth_inhibition: c.growth_inhibition,
            mortality: c.mortality,
            extra_mortality: c.extra_mortality,
            conversion: c.conversion,
            decay: c.decay,
            root_diffusion: c.root_diffusion,
            propagation_reduction: c.propagation_reduction,
            toxicity_diffusion: c.toxicity_diffusion,
            reference_biomass: c.reference_biomass,
            critical_toxicity: (!self.t_hat_derived).then_some(c.critical_toxicity),
            switch_timescale: c.switch_timescale,
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(ParamSet { propagation_reduction: sigma, ..self.to_set() })
    }

    /// New extra mortality; a derived `T_hat` follows `s`.
    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(ParamSet { extra_mortality: s, ..self.to_set() })
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(ParamSet { growth_inhibition: gamma, ..self.to_set() })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(ParamSet { switch_timescale: epsilon, ..self.to_set() })
    }

    pub fn carrying_capacity(&self) -> f64 {
        let c = &self.coef;
        (c.growth_rate - c.mortality) / c.growth_rate * c.reference_biomass
    }

    #[inline]
    pub(crate) fn theta(&self, t: f64) -> f64 {
        theta_unchecked(t, self.coef.critical_toxicity)
    }

    #[inline]
    pub(crate) fn theta_prime(&self, t: f64) -> f64 {
        theta_prime_unchecked(t, self.coef.critical_toxicity)
    }

    /// Effective root motility `d_R - sigma theta(T)`.
    #[inline]
    pub(crate) fn motility(&self, t: f64) -> f64 {
        self.coef.root_diffusion - self.coef.propagation_reduction * self.theta(t)
    }

    /// Limit-system reaction rates without input validation.
    #[inline]
    pub(crate) fn limit_rates(&self, r: f64, t: f64) -> (f64, f64) {
        let c = &self.coef;
        let th = self.theta(t);
        let mort = c.mortality + c.extra_mortality * th;
        let dr = (c.growth_rate - c.growth_inhibition * th) * r * (1.0 - r / c.reference_biomass)
            - mort * r;
        let dt = c.conversion * mort * r - c.decay * t;
        (dr, dt)
    }

    /// Slow (non-exchange) reaction rates of the three-species system, and the
    /// exchange flux `p(T) R_h - q(T) R_e` (without the `1/epsilon`).
    #[inline]
    pub(crate) fn fast_parts(&self, rh: f64, re: f64, t: f64) -> ([f64; 3], f64) {
        let c = &self.coef;
        let logistic = 1.0 - (rh + re) / c.reference_biomass;
        let p = self.theta(t);
        let q = 1.0 - p;
        let slow = [
            c.growth_rate * rh * logistic - c.mortality * rh,
            (c.growth_rate - c.growth_inhibition) * re * logistic
                - (c.mortality + c.extra_mortality) * re,
            c.conversion * (c.mortality * rh + c.mortality * re + c.extra_mortality * re)
                - c.decay * t,
        ];
        (slow, p * rh - q * re)
    }
}

/// Spatially homogeneous limit-system state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousState {
    /// Root biomass (kg/m^2).
    pub r: f64,
    /// Toxicity (g/m^2).
    pub t: f64,
}

impl HomogeneousState {
    pub fn new(r: f64, t: f64) -> Self {
        Self { r, t }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("R", self.r), ("T", self.t)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_theta_args(t: f64, t_hat: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("toxicity must be finite and >= 0, got {t}")));
    }
    if !t_hat.is_finite() || t_hat <= 0.0 {
        return Err(Error::Domain(format!("T_hat must be finite and > 0, got {t_hat}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn theta_unchecked(t: f64, t_hat: f64) -> f64 {
    (t / t_hat).clamp(0.0, 1.0)
}

#[inline]
pub(crate) fn theta_prime_unchecked(t: f64, t_hat: f64) -> f64 {
    // left derivative at the kink
    if t <= t_hat {
        1.0 / t_hat
    } else {
        0.0
    }
}

/// Exposed root fraction `theta(T) = min(T / T_hat, 1)`.
pub fn theta(t: f64, t_hat: f64) -> Result<f64> {
    check_theta_args(t, t_hat)?;
    Ok(theta_unchecked(t, t_hat))
}

/// Derivative of [`theta`]; at `T = T_hat` the left value `1 / T_hat`.
pub fn theta_prime(t: f64, t_hat: f64) -> Result<f64> {
    check_theta_args(t, t_hat)?;
    Ok(theta_prime_unchecked(t, t_hat))
}

/// Reaction part `(dR/dt, dT/dt)` of the cross-diffusion limit system.
pub fn reaction_limit(state: HomogeneousState, params: &ModelParams) -> Result<(f64, f64)> {
    state.validate()?;
    Ok(params.limit_rates(state.r, state.t))
}

/// Reaction part `(dR_h/dt, dR_e/dt, dT/dt)` of the fast-reaction system,
/// including the `±(p R_h - q R_e) / epsilon` exchange.
pub fn reaction_fast(state: [f64; 3], params: &ModelParams) -> Result<[f64; 3]> {
    if let Some(v) = state.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Domain(format!("state must be finite and >= 0, got {v}")));
    }
    let eps = params.switch_timescale;
    if eps <= 0.0 {
        return Err(Error::Parameter(format!("epsilon must be > 0, got {eps}")));
    }
    let (slow, exchange) = params.fast_parts(state[0], state[1], state[2]);
    Ok([slow[0] - exchange / eps, slow[1] + exchange / eps, slow[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario_ii() -> ModelParams {
        ModelParams::reference(0.1, 0.5, 3.0).unwrap()
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(theta(1.5, 3.0).unwrap(), 0.5);
        assert_eq!(theta(10.0, 3.0).unwrap(), 1.0);
        assert!(theta(-1.0, 3.0).is_err());
        assert!(theta(f64::NAN, 3.0).is_err());
        assert!(theta(1.0, 0.0).is_err());
    }

    #[test]
    fn theta_prime_values() {
        assert_relative_eq!(theta_prime(1.5, 3.0).unwrap(), 1.0 / 3.0);
        assert_eq!(theta_prime(10.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(theta_prime(3.0, 3.0).unwrap(), 1.0 / 3.0);
        assert!(theta_prime(f64::INFINITY, 3.0).is_err());
    }

    #[test]
    fn t_hat_derivation() {
        let mut set = ParamSet::reference(0.0, 0.5, 0.0);
        assert_relative_eq!(derive_t_hat(&set).unwrap(), 4.5);
        set.extra_mortality = 0.0;
        assert_relative_eq!(derive_t_hat(&set).unwrap(), 3.0);
        set.extra_mortality = 1.1;
        assert!(matches!(derive_t_hat(&set), Err(Error::Parameter(_))));
    }

    #[test]
    fn carrying_capacity_values() {
        let mut set = ParamSet::default();
        assert_relative_eq!(carrying_capacity(&set).unwrap(), 5.4, epsilon = 1e-14);
        set.growth_rate = 2.0;
        assert_relative_eq!(carrying_capacity(&set).unwrap(), 3.0);
        set.growth_rate = 10.0;
        set.mortality = 10.0;
        assert!(carrying_capacity(&set).is_err());
    }

    #[test]
    fn validation_rejects_bad_sets() {
        let bad = [
            ParamSet { propagation_reduction: 5.0, ..ParamSet::default() },
            ParamSet { growth_inhibition: 11.0, ..ParamSet::default() },
            ParamSet { mortality: 12.0, ..ParamSet::default() },
            ParamSet { extra_mortality: 1.0, ..ParamSet::default() },
            ParamSet { critical_toxicity: Some(2.0), ..ParamSet::default() },
            ParamSet { toxicity_diffusion: -1.0, ..ParamSet::default() },
        ];
        for set in bad {
            assert!(ModelParams::new(set).is_err(), "{set:?}");
        }
        let p = ModelParams::new(ParamSet { critical_toxicity: Some(3.5), ..ParamSet::default() })
            .unwrap();
        assert!(!p.t_hat_derived());
        assert_eq!(p.critical_toxicity, 3.5);
    }

    #[test]
    fn derived_t_hat_tracks_s() {
        let p = ModelParams::reference(0.0, 0.0, 3.0).unwrap();
        assert_relative_eq!(p.critical_toxicity, 3.0);
        let q = p.with_s(0.5).unwrap();
        assert_relative_eq!(q.critical_toxicity, 4.5);
    }

    #[test]
    fn limit_reaction_examples() {
        let p = scenario_ii();
        assert_eq!(reaction_limit(HomogeneousState::new(0.0, 0.0), &p).unwrap(), (0.0, 0.0));
        let (dr, dt) = reaction_limit(HomogeneousState::new(6.0, 0.0), &p).unwrap();
        assert_relative_eq!(dr, -6.0, epsilon = 1e-14);
        assert_relative_eq!(dt, 3.0, epsilon = 1e-14);
        assert!(reaction_limit(HomogeneousState::new(-1.0, 0.0), &p).is_err());
    }

    #[test]
    fn t_axis_decays() {
        let p = scenario_ii();
        for t in [0.5, 2.0, 4.0, 7.0] {
            let (dr, dt) = reaction_limit(HomogeneousState::new(0.0, t), &p).unwrap();
            assert_eq!(dr, 0.0);
            assert_relative_eq!(dt, -p.decay * t);
        }
    }

    #[test]
    fn fast_reaction_examples() {
        let p = scenario_ii();
        assert_eq!(reaction_fast([0.0; 3], &p).unwrap(), [0.0; 3]);
        let rates = reaction_fast([1.0, 0.0, 0.0], &p).unwrap();
        // p(0) = 0, so nothing is exchanged
        assert_relative_eq!(rates[0], p.growth_rate * (1.0 - 1.0 / 6.0) - p.mortality);
        assert_eq!(rates[1], 0.0);
        assert_relative_eq!(rates[2], p.conversion * p.mortality);
        let zero_eps = p.with_epsilon(0.0).unwrap();
        assert!(matches!(reaction_fast([1.0, 1.0, 1.0], &zero_eps), Err(Error::Parameter(_))));
    }

    #[test]
    fn motility_stays_positive() {
        let p = ModelParams::reference(0.0, 0.0, 3.3).unwrap();
        for i in 0..100 {
            assert!(p.motility(i as f64 * 0.1) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn theta_is_monotone_and_clamped(a in 0.0f64..20.0, b in 0.0f64..20.0, t_hat in 0.1f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (tl, th) = (theta(lo, t_hat).unwrap(), theta(hi, t_hat).unwrap());
            prop_assert!(tl <= th);
            prop_assert!((0.0..=1.0).contains(&tl) && (0.0..=1.0).contains(&th));
        }

        #[test]
        fn fast_sum_reduces_to_limit(
            gamma in 0.0f64..10.0, s in 0.0f64..0.99, r in 0.0f64..6.0, t in 0.0f64..6.0,
        ) {
            let p = ModelParams::reference(gamma, s, 1.0).unwrap();
            let th = p.theta(t);
            let split = [(1.0 - th) * r, th * r, t];
            let fast = reaction_fast(split, &p).unwrap();
            let (dr, dt) = reaction_limit(HomogeneousState::new(r, t), &p).unwrap();
            let scale = 1.0 + dr.abs() + p.growth_rate * r;
            prop_assert!((fast[0] + fast[1] - dr).abs() <= 1e-12 * scale);
            prop_assert!((fast[2] - dt).abs() <= 1e-12 * (1.0 + dt.abs() + r));
        }
    }
}
