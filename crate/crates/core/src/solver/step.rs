//! Single explicit time steps for the limit and fast-reaction systems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Grid, State2, State3};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Everything explicit; the exchange needs `dt <= epsilon / 4`.
    ExplicitEuler,
    /// Exchange term implicit per cell, everything else explicit.
    ExchangeImplicitEuler,
}

/// Switches shared by both steppers. `reactions` toggles the slow reaction
/// terms (the fast exchange always acts) and `diffusion` the transport terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub scheme: Scheme,
    pub clamp_negative: bool,
    pub parallel: bool,
    pub reactions: bool,
    pub diffusion: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::ExchangeImplicitEuler,
            clamp_negative: false,
            parallel: false,
            reactions: true,
            diffusion: true,
        }
    }
}

fn check_finite(values: &[f64], t: f64, field: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(cell) => Err(Error::BlowUp { t, cell, field }),
        None => Ok(()),
    }
}

/// Reusable buffers for [`LimitStepper`].
#[derive(Clone, Debug)]
pub struct LimitStepper {
    grid: Grid,
    w: Vec<f64>,
    lap_w: Vec<f64>,
    lap_t: Vec<f64>,
}

impl LimitStepper {
    pub fn new(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, w: vec![0.0; n], lap_w: vec![0.0; n], lap_t: vec![0.0; n] }
    }

    /// Advance `state` by one forward-Euler step in place.
    ///
    /// The cross-diffusion term is the Laplacian of `w = (d_R - σθ(T)) R`;
    /// zero-flux conditions on `R` and `T` give zero flux of `w`, so `w` is
    /// ghosted by reflection like the fields themselves.
    pub fn step(
        &mut self,
        state: &mut State2,
        params: &ModelParams,
        dt: f64,
        opts: &StepOptions,
    ) -> Result<()> {
        let grid = self.grid;
        if opts.diffusion {
            for ((w, &r), &t) in self.w.iter_mut().zip(&state.r).zip(&state.t) {
                *w = params.motility(t) * r;
            }
            grid.laplacian_into(&self.w, &mut self.lap_w, opts.parallel);
            grid.laplacian_into(&state.t, &mut self.lap_t, opts.parallel);
        } else {
            self.lap_w.fill(0.0);
            self.lap_t.fill(0.0);
        }
        let d_t = params.toxicity_diffusion;
        let update = |(((r, t), &lw), &lt): (((&mut f64, &mut f64), &f64), &f64)| {
            let (mut dr, mut dtox) = (lw, d_t * lt);
            if opts.reactions {
                let (fr, ft) = params.limit_rates(*r, *t);
                dr += fr;
                dtox += ft;
            }
            *r += dt * dr;
            *t += dt * dtox;
            if opts.clamp_negative {
                *r = r.max(0.0);
                *t = t.max(0.0);
            }
        };
        if opts.parallel {
            state
                .r
                .par_iter_mut()
                .zip(state.t.par_iter_mut())
                .zip(self.lap_w.par_iter())
                .zip(self.lap_t.par_iter())
                .for_each(update);
        } else {
            state
                .r
                .iter_mut()
                .zip(state.t.iter_mut())
                .zip(self.lap_w.iter())
                .zip(self.lap_t.iter())
                .for_each(update);
        }
        state.time += dt;
        check_finite(&state.r, state.time, "R")?;
        check_finite(&state.t, state.time, "T")
    }
}

/// Reusable buffers for [`FastStepper`].
#[derive(Clone, Debug)]
pub struct FastStepper {
    grid: Grid,
    lap_h: Vec<f64>,
    lap_e: Vec<f64>,
    lap_t: Vec<f64>,
}

impl FastStepper {
    pub fn new(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, lap_h: vec![0.0; n], lap_e: vec![0.0; n], lap_t: vec![0.0; n] }
    }

    /// One step of the three-species system. Diffusion and the slow
    /// reactions are explicit; with [`Scheme::ExchangeImplicitEuler`] the
    /// exchange `(p R_h - q R_e)/ε` is backward Euler in `(R_h, R_e)` with
    /// `T` frozen, solved in closed form per cell.
    pub fn step(
        &mut self,
        state: &mut State3,
        params: &ModelParams,
        dt: f64,
        opts: &StepOptions,
    ) -> Result<()> {
        let eps = params.switch_timescale;
        if eps <= 0.0 {
            return Err(Error::Parameter(format!("epsilon must be > 0, got {eps}")));
        }
        let grid = self.grid;
        if opts.diffusion {
            grid.laplacian_into(&state.rh, &mut self.lap_h, opts.parallel);
            grid.laplacian_into(&state.re, &mut self.lap_e, opts.parallel);
            grid.laplacian_into(&state.t, &mut self.lap_t, opts.parallel);
        } else {
            self.lap_h.fill(0.0);
            self.lap_e.fill(0.0);
            self.lap_t.fill(0.0);
        }
        let d_h = params.root_diffusion;
        let d_e = params.root_diffusion - params.propagation_reduction;
        let d_t = params.toxicity_diffusion;
        let a = dt / eps;
        let scheme = opts.scheme;
        let update = |((((rh, re), t), (&lh, &le)), &lt): (
            (((&mut f64, &mut f64), &mut f64), (&f64, &f64)),
            &f64,
        )| {
            let (mut slow, exchange) = params.fast_parts(*rh, *re, *t);
            if !opts.reactions {
                slow = [0.0; 3];
            }
            let h_star = *rh + dt * (d_h * lh + slow[0]);
            let e_star = *re + dt * (d_e * le + slow[1]);
            let (h_new, e_new) = match scheme {
                Scheme::ExplicitEuler => (h_star - a * exchange, e_star + a * exchange),
                Scheme::ExchangeImplicitEuler => {
                    let p = params.theta(*t);
                    let q = 1.0 - p;
                    let total = h_star + e_star;
                    let h = (h_star + a * q * total) / (1.0 + a * (p + q));
                    (h, total - h)
                }
            };
            *rh = h_new;
            *re = e_new;
            *t += dt * (d_t * lt + slow[2]);
            if opts.clamp_negative {
                *rh = rh.max(0.0);
                *re = re.max(0.0);
                *t = t.max(0.0);
            }
        };
        if opts.parallel {
            state
                .rh
                .par_iter_mut()
                .zip(state.re.par_iter_mut())
                .zip(state.t.par_iter_mut())
                .zip(self.lap_h.par_iter().zip(self.lap_e.par_iter()))
                .zip(self.lap_t.par_iter())
                .for_each(update);
        } else {
            state
                .rh
                .iter_mut()
                .zip(state.re.iter_mut())
                .zip(state.t.iter_mut())
                .zip(self.lap_h.iter().zip(self.lap_e.iter()))
                .zip(self.lap_t.iter())
                .for_each(update);
        }
        state.time += dt;
        check_finite(&state.rh, state.time, "R_h")?;
        check_finite(&state.re, state.time, "R_e")?;
        check_finite(&state.t, state.time, "T")
    }
}

/// One forward-Euler step of the limit system.
pub fn step_limit(state: &State2, params: &ModelParams, grid: &Grid, dt: f64) -> Result<State2> {
    let mut next = state.clone();
    LimitStepper::new(*grid).step(&mut next, params, dt, &StepOptions::default())?;
    Ok(next)
}

/// One step of the fast-reaction system with the implicit exchange.
pub fn step_fast(state: &State3, params: &ModelParams, grid: &Grid, dt: f64) -> Result<State3> {
    let mut next = state.clone();
    FastStepper::new(*grid).step(&mut next, params, dt, &StepOptions::default())?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::coexistence_equilibrium;
    use crate::solver::init::quasi_steady_split;

    fn homogeneous(grid: &Grid, r: f64, t: f64) -> State2 {
        State2 { r: vec![r; grid.len()], t: vec![t; grid.len()], time: 0.0 }
    }

    #[test]
    fn fixed_point_is_preserved() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let e = coexistence_equilibrium(&p).unwrap();
        for grid in [Grid::one_d(8.0, 40).unwrap(), Grid::two_d(8.0, 12).unwrap()] {
            let s0 = homogeneous(&grid, e.r_star, e.t_star);
            let s1 = step_limit(&s0, &p, &grid, 1e-4).unwrap();
            for (a, b) in s1.r.iter().zip(&s0.r).chain(s1.t.iter().zip(&s0.t)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn diffusion_only_conserves_mass() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        for grid in [Grid::one_d(8.0, 50).unwrap(), Grid::two_d(8.0, 16).unwrap()] {
            let n = grid.len();
            let mut s = State2 {
                r: (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin()).collect(),
                t: (0..n).map(|i| 3.0 + (i as f64 * 0.11).cos()).collect(),
                time: 0.0,
            };
            let opts = StepOptions { reactions: false, ..StepOptions::default() };
            let dt = grid.max_stable_dt(p.root_diffusion);
            let mass = |s: &State2| (s.r.iter().sum::<f64>(), s.t.iter().sum::<f64>());
            let m0 = mass(&s);
            let mut stepper = LimitStepper::new(grid);
            let steps = 200;
            for _ in 0..steps {
                stepper.step(&mut s, &p, dt, &opts).unwrap();
            }
            let m1 = mass(&s);
            let elapsed = steps as f64 * dt;
            let vol = grid.cell_volume();
            assert!(((m1.0 - m0.0) * vol).abs() < 1e-10 * elapsed.max(1.0));
            assert!(((m1.1 - m0.1) * vol).abs() < 1e-10 * elapsed.max(1.0));
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 20).unwrap();
        let mut s = homogeneous(&grid, 1.0, 1.0);
        s.r[7] = f64::NAN;
        match step_limit(&s, &p, &grid, 1e-4) {
            Err(Error::BlowUp { cell, .. }) => assert_eq!(cell, 6),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::two_d(8.0, 24).unwrap();
        let s0 = crate::solver::init::initial_condition_2d(&grid, 5).unwrap();
        let (mut a, mut b) = (s0.clone(), s0);
        let dt = grid.max_stable_dt(p.root_diffusion);
        let mut sa = LimitStepper::new(grid);
        let mut sb = LimitStepper::new(grid);
        let par = StepOptions { parallel: true, ..StepOptions::default() };
        for _ in 0..50 {
            sa.step(&mut a, &p, dt, &StepOptions::default()).unwrap();
            sb.step(&mut b, &p, dt, &par).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn exchange_balance_point_is_stationary() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap();
        let grid = Grid::one_d(8.0, 10).unwrap();
        let t = 1.2;
        let th = p.theta(t);
        let mut s = State3 {
            rh: vec![(1.0 - th) * 4.0; 10],
            re: vec![th * 4.0; 10],
            t: vec![t; 10],
            time: 0.0,
        };
        let s0 = s.clone();
        let mut stepper = FastStepper::new(grid);
        for scheme in [Scheme::ExplicitEuler, Scheme::ExchangeImplicitEuler] {
            let opts =
                StepOptions { scheme, diffusion: false, reactions: false, ..StepOptions::default() };
            let q = p.with_epsilon(1e-3).unwrap();
            stepper.step(&mut s, &q, 1e-4, &opts).unwrap();
            for (a, b) in s.rh.iter().zip(&s0.rh).chain(s.re.iter().zip(&s0.re)) {
                assert!((a - b).abs() < 1e-9, "{scheme:?}: {a} vs {b}");
            }
            s = s0.clone();
        }
    }

    #[test]
    fn stiff_limit_relaxes_to_quasi_steady_split() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap().with_epsilon(1e-14).unwrap();
        let grid = Grid::one_d(8.0, 10).unwrap();
        let t = 2.0;
        let mut s = State3 { rh: vec![3.0; 10], re: vec![0.5; 10], t: vec![t; 10], time: 0.0 };
        let opts = StepOptions { diffusion: false, ..StepOptions::default() };
        FastStepper::new(grid).step(&mut s, &p, 1e-4, &opts).unwrap();
        let th = p.theta(t);
        let total = s.rh[0] + s.re[0];
        assert!((s.rh[0] - (1.0 - th) * total).abs() < 1e-8);
        assert!((s.re[0] - th * total).abs() < 1e-8);
    }

    #[test]
    fn total_roots_agree_between_schemes() {
        let p = ModelParams::reference(0.1, 0.5, 3.0).unwrap().with_epsilon(0.5).unwrap();
        let grid = Grid::one_d(8.0, 40).unwrap();
        let base = crate::solver::init::initial_condition_1d(&grid).unwrap();
        let mut base3 = quasi_steady_split(&base, &p);
        base3.t = base3.t.iter().enumerate().map(|(i, _)| 0.5 + 0.01 * i as f64).collect();
        let diffs: Vec<f64> = [1e-4, 5e-5]
            .iter()
            .map(|&dt| {
                let mut a = base3.clone();
                let mut b = base3.clone();
                let mut st = FastStepper::new(grid);
                let ex = StepOptions { scheme: Scheme::ExplicitEuler, ..StepOptions::default() };
                st.step(&mut a, &p, dt, &ex).unwrap();
                st.step(&mut b, &p, dt, &StepOptions::default()).unwrap();
                a.rh.iter()
                    .zip(&a.re)
                    .zip(b.rh.iter().zip(&b.re))
                    .map(|((h1, e1), (h2, e2))| ((h1 + e1) - (h2 + e2)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        // the exchange cancels in the sum; only round-off remains
        assert!(diffs.iter().all(|d| *d < 1e-12), "{diffs:?}");
    }
}
