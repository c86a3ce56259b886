//! Homogeneous steady states of the limit system and their stability.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{HomogeneousState, ModelParams};

/// Jacobian of the homogeneous reaction terms.
pub type Jacobian2 = Mat2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    Trivial,
    Coexistence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equilibrium {
    pub r_star: f64,
    pub t_star: f64,
    pub kind: EquilibriumKind,
    /// Growth rates of homogeneous perturbations, largest real part first.
    #[serde(skip)]
    pub eigenvalues: [Complex64; 2],
    pub stable: bool,
}

impl Equilibrium {
    pub fn state(&self) -> HomogeneousState {
        HomogeneousState::new(self.r_star, self.t_star)
    }

    fn with_stability(kind: EquilibriumKind, state: HomogeneousState, params: &ModelParams) -> Self {
        let eigenvalues = jacobian_homogeneous(state, params).eigenvalues();
        Self {
            r_star: state.r,
            t_star: state.t,
            kind,
            eigenvalues,
            stable: eigenvalues.iter().all(|l| l.re < 0.0),
        }
    }
}

/// Coefficients `(a, b, c)` of `a x^2 - b x + c = 0` for `x = R*/R_hat`.
fn quadratic(params: &ModelParams) -> (f64, f64, f64) {
    let (g, gam, d, s) = (
        params.growth_rate,
        params.growth_inhibition,
        params.mortality,
        params.extra_mortality,
    );
    (g * s + gam * d, 2.0 * g * s + gam * d + g * d, (g - d) * (d + s))
}

fn toxicity_at(r: f64, params: &ModelParams) -> f64 {
    let (c, d, s, k, t_hat) = (
        params.conversion,
        params.mortality,
        params.extra_mortality,
        params.decay,
        params.critical_toxicity,
    );
    let denom = k * t_hat - c * s * r;
    assert!(denom > 0.0, "k T_hat - c s R* must be positive, got {denom}");
    c * d * r * t_hat / denom
}

/// Both roots of the equilibrium quadratic, `(minus, plus)`, each paired with
/// its toxicity. The plus root is `None` when the quadratic degenerates.
pub fn quadratic_roots(params: &ModelParams) -> (HomogeneousState, Option<(f64, f64)>) {
    let (a, b, c) = quadratic(params);
    let r_hat = params.reference_biomass;
    if a == 0.0 {
        let r = c / b * r_hat;
        return (HomogeneousState::new(r, toxicity_at(r, params)), None);
    }
    let disc = b * b - 4.0 * a * c;
    assert!(disc >= 0.0, "equilibrium discriminant must be nonnegative, got {disc}");
    let root = disc.sqrt();
    // rationalized minus root avoids cancellation when sqrt(disc) ~ b
    let minus = 2.0 * c / (b + root) * r_hat;
    let plus = (b + root) / (2.0 * a) * r_hat;
    let (cc, d, s, k) = (params.conversion, params.mortality, params.extra_mortality, params.decay);
    let t_hat = params.critical_toxicity;
    let denom = k * t_hat - cc * s * plus;
    let t_plus = if denom != 0.0 { cc * d * plus * t_hat / denom } else { f64::INFINITY };
    (HomogeneousState::new(minus, toxicity_at(minus, params)), Some((plus, t_plus)))
}

/// Coexistence equilibrium `E* = (R*, T*)` on the unsaturated branch `T <= T_hat`.
pub fn coexistence_equilibrium(params: &ModelParams) -> Result<Equilibrium> {
    let (state, _) = quadratic_roots(params);
    let (r_hat, t_hat) = (params.reference_biomass, params.critical_toxicity);
    if !(state.r > 0.0 && state.r < r_hat && state.t > 0.0 && state.t < t_hat) {
        return Err(Error::Parameter(format!(
            "coexistence equilibrium ({}, {}) outside (0, {r_hat}) x (0, {t_hat})",
            state.r, state.t
        )));
    }
    Ok(Equilibrium::with_stability(EquilibriumKind::Coexistence, state, params))
}

/// Candidate equilibrium on the saturated branch `theta = 1`. Returns it only
/// if it is admissible (`T > T_hat`, positive biomass), which never happens
/// for valid parameters.
pub fn saturated_branch_equilibrium(params: &ModelParams) -> Option<HomogeneousState> {
    let g_exp = params.growth_rate - params.growth_inhibition;
    let mort = params.mortality + params.extra_mortality;
    if g_exp <= 0.0 {
        return None;
    }
    let r = params.reference_biomass * (1.0 - mort / g_exp);
    let t = params.conversion * mort * r / params.decay;
    (r > 0.0 && t > params.critical_toxicity).then(|| HomogeneousState::new(r, t))
}

/// Jacobian of the homogeneous limit-system reactions at `state`.
pub fn jacobian_homogeneous(state: HomogeneousState, params: &ModelParams) -> Jacobian2 {
    let (r, t) = (state.r, state.t);
    let (g, gam, d, s, c, k) = (
        params.growth_rate,
        params.growth_inhibition,
        params.mortality,
        params.extra_mortality,
        params.conversion,
        params.decay,
    );
    let r_hat = params.reference_biomass;
    let th = params.theta(t);
    let thp = params.theta_prime(t);
    Mat2::new(
        (g - gam * th) * (1.0 - 2.0 * r / r_hat) - (d + s * th),
        -gam * r * thp * (1.0 - r / r_hat) - s * r * thp,
        c * (d + s * th),
        c * s * r * thp - k,
    )
}

/// `[E0, E*]` with eigenvalues and stability of each.
pub fn classify_equilibria(params: &ModelParams) -> Result<Vec<Equilibrium>> {
    let trivial = Equilibrium::with_stability(
        EquilibriumKind::Trivial,
        HomogeneousState::new(0.0, 0.0),
        params,
    );
    if let Some(bad) = saturated_branch_equilibrium(params) {
        log::warn!("saturated branch produced an admissible root {bad:?}");
    }
    Ok(vec![trivial, coexistence_equilibrium(params)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reaction_limit;
    use approx::assert_relative_eq;

    fn residual(state: HomogeneousState, p: &ModelParams) -> f64 {
        let (a, b) = reaction_limit(state, p).unwrap();
        a.abs().max(b.abs())
    }

    /// Independent oracle: bisection on the biomass equation with the
    /// toxicity eliminated.
    fn bisect_equilibrium(p: &ModelParams) -> f64 {
        let f = |r: f64| {
            let t = p.conversion * p.mortality * r * p.critical_toxicity
                / (p.decay * p.critical_toxicity - p.conversion * p.extra_mortality * r);
            let th = t / p.critical_toxicity;
            (p.growth_rate - p.growth_inhibition * th) * (1.0 - r / p.reference_biomass)
                - (p.mortality + p.extra_mortality * th)
        };
        let (mut lo, mut hi) = (1e-9, p.reference_biomass * (1.0 - 1e-12));
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn degenerate_linear_case() {
        let p = ModelParams::reference(0.0, 0.0, 0.0).unwrap();
        let e = coexistence_equilibrium(&p).unwrap();
        assert_relative_eq!(e.r_star, 5.4, epsilon = 1e-14);
        assert_relative_eq!(e.t_star, 2.7, epsilon = 1e-14);
        assert!(residual(e.state(), &p) < 1e-12);
        assert!(quadratic_roots(&p).1.is_none());
    }

    #[test]
    fn quadratic_case_matches_bisection() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let e = coexistence_equilibrium(&p).unwrap();
        assert!(e.r_star < 5.4);
        assert!(residual(e.state(), &p) < 1e-12 * e.r_star);
        assert_relative_eq!(e.r_star, bisect_equilibrium(&p), max_relative = 1e-12);
        assert!(e.t_star < e.r_star);
    }

    #[test]
    fn plus_root_is_inadmissible() {
        let p = ModelParams::reference(0.1, 0.5, 0.0).unwrap();
        let (_, plus) = quadratic_roots(&p);
        let (r_plus, t_plus) = plus.unwrap();
        assert!(r_plus > p.reference_biomass || t_plus > p.critical_toxicity || t_plus < 0.0);
    }

    #[test]
    fn jacobian_at_origin() {
        let p = ModelParams::reference(0.1, 0.5, 0.0).unwrap();
        let ev = jacobian_homogeneous(HomogeneousState::new(0.0, 0.0), &p).eigenvalues();
        assert_relative_eq!(ev[0].re, 9.0);
        assert_relative_eq!(ev[1].re, -1.0);
    }

    #[test]
    fn jacobian_sign_structure_and_stability() {
        let p = ModelParams::reference(0.1, 0.5, 0.0).unwrap();
        let e = coexistence_equilibrium(&p).unwrap();
        let j = jacobian_homogeneous(e.state(), &p);
        assert!(j.a11 < 0.0 && j.a12 < 0.0 && j.a22 < 0.0 && j.a21 > 0.0);
        assert!(j.trace() < 0.0 && j.det() > 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let e = coexistence_equilibrium(&p).unwrap();
        for state in [e.state(), HomogeneousState::new(2.0, 1.0), HomogeneousState::new(5.5, 4.0)] {
            let j = jacobian_homogeneous(state, &p);
            let h = 1e-6;
            let f = |r: f64, t: f64| reaction_limit(HomogeneousState::new(r, t), &p).unwrap();
            let (fr_p, ft_p) = f(state.r + h, state.t);
            let (fr_m, ft_m) = f(state.r - h, state.t);
            let (fr_pt, ft_pt) = f(state.r, state.t + h);
            let (fr_mt, ft_mt) = f(state.r, state.t - h);
            let fd = [
                (fr_p - fr_m) / (2.0 * h),
                (fr_pt - fr_mt) / (2.0 * h),
                (ft_p - ft_m) / (2.0 * h),
                (ft_pt - ft_mt) / (2.0 * h),
            ];
            for (a, b) in [j.a11, j.a12, j.a21, j.a22].iter().zip(fd) {
                assert_relative_eq!(*a, b, max_relative = 1e-5, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn classification() {
        let p = ModelParams::reference(0.1, 0.5, 0.0).unwrap();
        let eqs = classify_equilibria(&p).unwrap();
        assert_eq!(eqs[0].kind, EquilibriumKind::Trivial);
        assert!(!eqs[0].stable);
        assert_relative_eq!(eqs[0].eigenvalues[0].re, 9.0);
        assert!(eqs[1].stable);
    }

    #[test]
    fn grid_sweep_properties() {
        let mut prev_by_s: Vec<f64> = vec![f64::INFINITY; 20];
        for i in 0..20 {
            let gamma = 10.0 * i as f64 / 19.0;
            let mut prev = f64::INFINITY;
            for (j, prev_s) in prev_by_s.iter_mut().enumerate() {
                let s = 0.99 * j as f64 / 19.0;
                let p = ModelParams::reference(gamma, s, 0.0).unwrap();
                let (a, b, c) = quadratic(&p);
                assert!(b * b - 4.0 * a * c >= 0.0);
                let e = coexistence_equilibrium(&p).unwrap();
                assert!(e.stable, "gamma={gamma} s={s}");
                assert!(e.eigenvalues.iter().all(|l| l.re < 0.0));
                assert!(e.t_star < e.r_star);
                assert!(saturated_branch_equilibrium(&p).is_none());
                // nonincreasing in s and in gamma
                assert!(e.r_star <= prev * (1.0 + 1e-14));
                assert!(e.r_star <= *prev_s * (1.0 + 1e-14));
                prev = e.r_star;
                *prev_s = e.r_star;
            }
        }
    }
}
