use proptest::prelude::*;

use vegtox::config::{parse_config, Scenario};
use vegtox::continuation::{steady_residual, ActiveParameter, SteadyProblem};
use vegtox::model::reaction_limit;
use vegtox::solver::{Grid, LimitStepper, State2, StepOptions};
use vegtox::turing::{dispersion_relation, sigma_l, SpatialDim};
use vegtox::{Error, HomogeneousState, ModelParams};

fn scenario() -> impl Strategy<Value = Scenario> {
    prop::sample::select(Scenario::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Without diffusion every cell is an independent copy of the reaction
    /// ODE, which must not leave `[0, R_hat] x [0, T_hat]`.
    #[test]
    fn reaction_ode_keeps_the_invariant_box(sc in scenario(), r0 in 0.0f64..=1.0, t0 in 0.0f64..=1.0) {
        let p = sc.params().unwrap();
        let grid = Grid::one_d(1.0, 3).unwrap();
        let mut state = State2 {
            r: vec![r0 * p.reference_biomass; 3],
            t: vec![t0 * p.critical_toxicity; 3],
            time: 0.0,
        };
        let opts = StepOptions { diffusion: false, ..StepOptions::default() };
        let mut stepper = LimitStepper::new(grid);
        for _ in 0..4000 {
            stepper.step(&mut state, &p, 5e-3, &opts).unwrap();
            let (r, t) = (state.r[0], state.t[0]);
            prop_assert!((-1e-12..=p.reference_biomass + 1e-12).contains(&r), "R = {r}");
            prop_assert!((-1e-12..=p.critical_toxicity + 1e-12).contains(&t), "T = {t}");
        }
    }

    /// The zero mode of the dispersion relation is the homogeneous
    /// linearisation, so it never grows at a stable coexistence state.
    #[test]
    fn zero_mode_is_stable(gamma in 0.0f64..1.0, s in 0.0f64..0.95, sigma in 0.0f64..3.3) {
        let p = ModelParams::reference(gamma, s, sigma).unwrap();
        let d = dispersion_relation(&p, 8.0, 16, SpatialDim::One).unwrap();
        prop_assert!(d.modes[0].max_real() < 0.0);
    }

    /// Below `sigma_L` no mode grows.
    #[test]
    fn no_growth_below_threshold(gamma in 0.0f64..1.0, s in 0.0f64..0.95, frac in 0.0f64..1.0) {
        let base = ModelParams::reference(gamma, s, 0.0).unwrap();
        let cap = sigma_l(&base).unwrap().min(base.root_diffusion);
        let p = base.with_sigma(frac * cap * (1.0 - 1e-9)).unwrap();
        let d = dispersion_relation(&p, 8.0, 64, SpatialDim::One).unwrap();
        prop_assert!(d.max_heterogeneous_growth.unwrap().0 <= 0.0);
    }

    /// The homogeneous coexistence state is a root of the discrete steady
    /// residual for every grid size.
    #[test]
    fn coexistence_state_is_a_discrete_steady_state(n in 3usize..60, sigma in 0.0f64..3.3) {
        let p = ModelParams::reference(0.1, 0.5, sigma).unwrap();
        let pr = SteadyProblem::new(Grid::one_d(8.0, n).unwrap(), p, ActiveParameter::Sigma).unwrap();
        let u = pr.homogeneous(sigma).unwrap();
        prop_assert!(steady_residual(&u, sigma, &pr).unwrap().amax() < 1e-12);
        let (fr, ft) = reaction_limit(HomogeneousState::new(u[0], u[n]), &p).unwrap();
        prop_assert!(fr.abs().max(ft.abs()) < 1e-12);
    }

    /// Any admissible `sigma` given in a file survives parsing unchanged,
    /// and `sigma >= d_R` is rejected at its line.
    #[test]
    fn sigma_round_trips_through_config(sigma in 0.0f64..6.0) {
        let text = format!("[model]\nsigma = {sigma:?}\n");
        match parse_config(&text) {
            Ok(cfg) => {
                prop_assert!(sigma < 3.33);
                prop_assert_eq!(cfg.model.propagation_reduction, sigma);
            }
            Err(Error::Config { line, msg }) => {
                prop_assert!(sigma >= 3.33, "{}", msg);
                prop_assert_eq!(line, Some(2));
            }
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }
}
