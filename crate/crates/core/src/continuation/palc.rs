use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{
    newton_solve, parameter_derivative, steady_jacobian, steady_residual, ActiveParameter,
    NewtonOptions, SteadyProblem,
};
use crate::error::{Error, Result};

/// Step control for pseudo-arclength continuation. Arclength is measured in
/// the norm `‖(u, p)‖² = |u|² / (2n) + p²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepConfig {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Number of rightmost eigenvalues stored per point.
    pub n_eigs: usize,
    pub max_corrector: usize,
    pub newton: NewtonOptions,
    /// Bisection stops once the bracketing arclength interval is this short.
    pub refine_tol: f64,
}

impl StepConfig {
    pub fn new(range: (f64, f64)) -> Self {
        Self {
            ds: 0.02,
            ds_min: 1e-4,
            ds_max: 0.1,
            max_steps: 2000,
            p_min: range.0,
            p_max: range.1,
            n_eigs: 6,
            max_corrector: 12,
            newton: NewtonOptions::default(),
            refine_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub param: f64,
    #[serde(skip)]
    pub u: DVector<f64>,
    pub l1_r: f64,
    /// Eigenvalues of the linearisation with positive real part.
    pub n_unstable: usize,
    /// Rightmost eigenvalues, as `(re, im)`.
    pub leading: Vec<(f64, f64)>,
    pub residual: f64,
}

impl BranchPoint {
    pub fn is_stable(&self) -> bool {
        self.n_unstable == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpecialKind {
    Fold,
    BranchPoint,
}

impl SpecialKind {
    pub fn label(self) -> &'static str {
        match self {
            SpecialKind::Fold => "fold",
            SpecialKind::BranchPoint => "branch_point",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecialPoint {
    pub kind: SpecialKind,
    pub param: f64,
    #[serde(skip)]
    pub u: DVector<f64>,
    pub l1_r: f64,
    /// Index of the regular point preceding this one.
    pub after: usize,
    /// Fold and determinant criteria fired together.
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Termination {
    LeftRange,
    MaxSteps,
    StepUnderflow { ds: f64 },
    Reconnected,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub parameter: ActiveParameter,
    pub points: Vec<BranchPoint>,
    pub special_points: Vec<SpecialPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn folds(&self) -> impl Iterator<Item = &SpecialPoint> {
        self.special_points.iter().filter(|s| s.kind == SpecialKind::Fold)
    }

    pub fn branch_points(&self) -> impl Iterator<Item = &SpecialPoint> {
        self.special_points.iter().filter(|s| s.kind == SpecialKind::BranchPoint)
    }

    pub fn has_stable_segment(&self) -> bool {
        self.points.iter().any(BranchPoint::is_stable)
    }

    /// Linear interpolation of `l1_r` at parameter `p` over stable segments.
    pub fn stable_l1_at(&self, p: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let inside = (a.param - p) * (b.param - p) <= 0.0 && a.param != b.param;
            (inside && a.is_stable() && b.is_stable())
                .then(|| a.l1_r + (p - a.param) / (b.param - a.param) * (b.l1_r - a.l1_r))
        })
    }
}

impl Branch {
    /// Solutions at exactly `p` on every stable segment that crosses it,
    /// corrected by Newton from the interpolated neighbours.
    pub fn stable_solutions_at(&self, p: f64, problem: &SteadyProblem) -> Result<Vec<BranchPoint>> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if (a.param - p) * (b.param - p) > 0.0 || a.param == b.param || !(a.is_stable() && b.is_stable()) {
                continue;
            }
            let f = (p - a.param) / (b.param - a.param);
            let guess = &a.u + (&b.u - &a.u) * f;
            let sol = newton_solve(&guess, p, problem)?;
            out.push(make_point(problem, sol.u, p, a.leading.len())?);
        }
        Ok(out)
    }
}

/// Extended unknown `x = (u, p)` helpers.
struct Extended {
    n: usize,
}

impl Extended {
    fn dot(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = self.n;
        a.rows(0, n).dot(&b.rows(0, n)) / n as f64 + a[n] * b[n]
    }

    fn normalize(&self, v: DVector<f64>) -> DVector<f64> {
        let norm = self.dot(&v, &v).sqrt();
        v / norm
    }

    fn join(&self, u: &DVector<f64>, p: f64) -> DVector<f64> {
        let mut x = DVector::zeros(self.n + 1);
        x.rows_mut(0, self.n).copy_from(u);
        x[self.n] = p;
        x
    }

    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        (x.rows(0, self.n).into_owned(), x[self.n])
    }
}

fn bordered(
    prob: &SteadyProblem,
    ext: &Extended,
    x: &DVector<f64>,
    tau: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = ext.n;
    let (u, p) = ext.split(x);
    let jac = steady_jacobian(&u, p, prob)?;
    let fp = parameter_derivative(&u, p, prob)?;
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b.view_mut((0, 0), (n, n)).copy_from(&jac);
    b.view_mut((0, n), (n, 1)).copy_from(&fp);
    for j in 0..n {
        b[(n, j)] = tau[j] / n as f64;
    }
    b[(n, n)] = tau[n];
    Ok(b)
}

/// Sign of `det(m)` from the LU factors, without forming the product.
fn det_sign(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let mut sign: f64 = lu.p().determinant();
    for i in 0..u.nrows() {
        sign *= u[(i, i)].signum();
    }
    sign
}

/// Newton on `F(u, p) = 0`, `⟨τ, x - x_pred⟩ = 0`.
fn correct(
    prob: &SteadyProblem,
    ext: &Extended,
    x_pred: &DVector<f64>,
    tau: &DVector<f64>,
    cfg: &StepConfig,
) -> Result<(DVector<f64>, usize)> {
    let n = ext.n;
    let mut x = x_pred.clone();
    let mut last = f64::INFINITY;
    for it in 0..=cfg.max_corrector {
        let (u, p) = ext.split(&x);
        if !(cfg.p_min..=cfg.p_max).contains(&p) {
            break;
        }
        let f = steady_residual(&u, p, prob)?;
        let g = ext.dot(tau, &(&x - x_pred));
        let norm = f.amax();
        if norm < cfg.newton.tol && g.abs() < cfg.newton.tol {
            return Ok((x, it));
        }
        if !norm.is_finite() || (it > 2 && norm > 10.0 * last) || it == cfg.max_corrector {
            break;
        }
        last = norm;
        let b = bordered(prob, ext, &x, tau)?;
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-f));
        rhs[n] = -g;
        let delta = b.lu().solve(&rhs).ok_or(Error::NonConvergence { iterations: it, residual: norm })?;
        x += delta;
    }
    let (u, p) = ext.split(&x);
    let residual = steady_residual(&u, p, prob).map(|f| f.amax()).unwrap_or(f64::NAN);
    Err(Error::NonConvergence { iterations: cfg.max_corrector, residual })
}

/// Unit tangent at `x` oriented along `tau_prev`, and the sign of the
/// bordered determinant.
fn tangent(
    prob: &SteadyProblem,
    ext: &Extended,
    x: &DVector<f64>,
    tau_prev: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    let n = ext.n;
    let lu = bordered(prob, ext, x, tau_prev)?.lu();
    let mut e = DVector::zeros(n + 1);
    e[n] = 1.0;
    let z = lu
        .solve(&e)
        .ok_or_else(|| Error::Switching("singular bordered system while computing a tangent".into()))?;
    Ok((ext.normalize(z), det_sign(&lu)))
}

/// Eigenvalues of a dense Jacobian with a bounded QR iteration count.
fn spectrum(jac: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let budget = 100 * jac.nrows().max(10);
    for eps in [1e-14, 1e-12, 1e-10] {
        if let Some(schur) = nalgebra::Schur::try_new(jac.clone(), eps, budget) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::NonConvergence { iterations: budget, residual: f64::NAN })
}

fn make_point(prob: &SteadyProblem, u: DVector<f64>, p: f64, n_eigs: usize) -> Result<BranchPoint> {
    let jac = steady_jacobian(&u, p, prob)?;
    let mut eigs = spectrum(jac)?;
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re));
    let n_unstable = eigs.iter().filter(|z| z.re > 1e-10).count();
    Ok(BranchPoint {
        param: p,
        l1_r: prob.l1_norm(&u),
        residual: steady_residual(&u, p, prob)?.amax(),
        n_unstable,
        leading: eigs.iter().take(n_eigs).map(|z| (z.re, z.im)).collect(),
        u,
    })
}

/// Continue from a solved state `(u0, p0)` in the direction of increasing
/// (`direction > 0`) or decreasing parameter.
pub fn continue_branch(
    u0: &DVector<f64>,
    p0: f64,
    problem: &SteadyProblem,
    cfg: &StepConfig,
    direction: f64,
) -> Result<Branch> {
    let ext = Extended { n: problem.dim() };
    let mut tau0 = DVector::zeros(ext.n + 1);
    tau0[ext.n] = direction.signum();
    continue_from(u0, p0, &tau0, problem, cfg)
}

/// Continue from `(u0, p0)` with an initial direction `tau0` in the
/// extended space `(u, p)`; the actual tangent is oriented along `tau0`.
pub fn continue_from(
    u0: &DVector<f64>,
    p0: f64,
    tau0: &DVector<f64>,
    problem: &SteadyProblem,
    cfg: &StepConfig,
) -> Result<Branch> {
    let ext = Extended { n: problem.dim() };
    let start = newton_solve(u0, p0, problem)?;
    let mut x = ext.join(&start.u, p0);
    let (mut tau, mut sign) = tangent(problem, &ext, &x, tau0)?;
    let mut branch = Branch {
        parameter: problem.active,
        points: vec![make_point(problem, start.u, p0, cfg.n_eigs)?],
        special_points: Vec::new(),
        termination: Termination::MaxSteps,
    };
    let mut prev: Option<DVector<f64>> = None;
    let mut ds = cfg.ds;
    let mut easy = 0;
    let start_het = problem.heterogeneity(&branch.points[0].u).max(1e-6);
    let mut max_het = start_het;

    for _ in 0..cfg.max_steps {
        let dir = match &prev {
            Some(px) => ext.normalize(&x - px),
            None => tau.clone(),
        };
        let x_pred = &x + &dir * ds;
        let p_pred = x_pred[ext.n];
        if p_pred < cfg.p_min || p_pred > cfg.p_max {
            let bound = p_pred.clamp(cfg.p_min, cfg.p_max);
            let frac = (bound - x[ext.n]) / (p_pred - x[ext.n]);
            let guess = ext.split(&(&x + (&x_pred - &x) * frac)).0;
            match newton_solve(&guess, bound, problem) {
                Ok(rep) => branch.points.push(make_point(problem, rep.u, bound, cfg.n_eigs)?),
                Err(e) => log::warn!("could not land on the range boundary {bound}: {e}"),
            }
            branch.termination = Termination::LeftRange;
            break;
        }
        let corrected = correct(problem, &ext, &x_pred, &dir, cfg)
            .and_then(|(xn, it)| {
                let jump = ext.dot(&(&xn - &x), &(&xn - &x)).sqrt();
                if jump > 2.0 * ds {
                    Err(Error::NonConvergence { iterations: it, residual: jump })
                } else {
                    Ok((xn, it))
                }
            })
            .and_then(|(xn, it)| tangent(problem, &ext, &xn, &tau).map(|t| (xn, it, t)));
        let (xn, iterations, (tau_n, sign_n)) = match corrected {
            Ok(v) => v,
            Err(e) => {
                ds *= 0.5;
                easy = 0;
                log::debug!("corrector failed ({e}); ds -> {ds:.3e}");
                if ds < cfg.ds_min {
                    branch.termination = Termination::StepUnderflow { ds };
                    break;
                }
                continue;
            }
        };

        let (u, p) = ext.split(&xn);
        let point = make_point(problem, u, p, cfg.n_eigs)?;
        let last_unstable = branch.points.last().unwrap().n_unstable;
        if point.n_unstable.abs_diff(last_unstable) > 1 && ds > 2.0 * cfg.ds_min {
            // several eigenvalues crossed at once; shorten the step to separate them
            ds *= 0.5;
            easy = 0;
            continue;
        }

        let fold = tau[ext.n] * tau_n[ext.n] < 0.0;
        let bp = sign * sign_n < 0.0;
        if fold || bp {
            let after = branch.points.len() - 1;
            let found = refine(problem, &ext, &x, &tau, sign, &xn, fold, bp, cfg)?;
            for (kind, xs, ambiguous) in found {
                let (u, p) = ext.split(&xs);
                if ambiguous {
                    log::warn!("fold and branch point coincide near {} = {p}", problem.active.name());
                }
                branch.special_points.push(SpecialPoint {
                    kind,
                    param: p,
                    l1_r: problem.l1_norm(&u),
                    u,
                    after,
                    ambiguous,
                });
            }
        }

        log::debug!(
            "{} = {:.6}, L1(R) = {:.5}, unstable = {}, ds = {ds:.3e}, corrector = {iterations}",
            problem.active.name(),
            point.param,
            point.l1_r,
            point.n_unstable
        );
        branch.points.push(point);
        prev = Some(std::mem::replace(&mut x, xn));
        tau = tau_n;
        sign = sign_n;

        if iterations <= 3 {
            easy += 1;
            if easy >= 3 {
                ds = (ds * 1.3).min(cfg.ds_max);
                easy = 0;
            }
        } else {
            easy = 0;
        }

        let het = problem.heterogeneity(&branch.points.last().unwrap().u);
        max_het = max_het.max(het);
        let x0 = ext.join(&branch.points[0].u, branch.points[0].param);
        let back_home = branch.points.len() > 10 && ext.dot(&(&x - &x0), &(&x - &x0)).sqrt() < ds;
        if back_home || (max_het > 1e-4 && het < 0.1 * max_het.min(start_het)) {
            branch.termination = Termination::Reconnected;
            break;
        }
    }
    Ok(branch)
}

/// Bisect between `xa` and `xb` for the fold and/or determinant sign change.
#[allow(clippy::too_many_arguments)]
fn refine(
    prob: &SteadyProblem,
    ext: &Extended,
    xa: &DVector<f64>,
    tau_a: &DVector<f64>,
    sign_a: f64,
    xb: &DVector<f64>,
    fold: bool,
    bp: bool,
    cfg: &StepConfig,
) -> Result<Vec<(SpecialKind, DVector<f64>, bool)>> {
    let s_b = ext.dot(tau_a, &(xb - xa));
    let locate = |is_fold: bool| -> Result<(f64, DVector<f64>)> {
        let (mut lo, mut hi) = (0.0, s_b);
        let mut best = xb.clone();
        while (hi - lo).abs() > cfg.refine_tol {
            let mid = 0.5 * (lo + hi);
            let pred = xa + tau_a * mid;
            let Ok((xm, _)) = correct(prob, ext, &pred, tau_a, cfg) else { break };
            let Ok((tau_m, sign_m)) = tangent(prob, ext, &xm, tau_a) else { break };
            let flipped =
                if is_fold { tau_a[ext.n] * tau_m[ext.n] < 0.0 } else { sign_a * sign_m < 0.0 };
            if flipped {
                hi = mid;
                best = xm;
            } else {
                lo = mid;
            }
        }
        Ok((hi, best))
    };
    let mut out = Vec::new();
    match (fold, bp) {
        (true, true) => {
            let (sf, xf) = locate(true)?;
            let (sb, xbp) = locate(false)?;
            if (sf - sb).abs() < 1e-4 {
                out.push((SpecialKind::BranchPoint, xbp, true));
            } else {
                out.push((SpecialKind::Fold, xf, false));
                out.push((SpecialKind::BranchPoint, xbp, false));
                if sb < sf {
                    out.reverse();
                }
            }
        }
        (true, false) => out.push((SpecialKind::Fold, locate(true)?.1, false)),
        (false, true) => out.push((SpecialKind::BranchPoint, locate(false)?.1, false)),
        (false, false) => {}
    }
    Ok(out)
}
