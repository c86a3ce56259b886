//! The five driver commands. Each takes a resolved [`ExperimentConfig`],
//! writes its tables into `config.out` together with a
//! `<command>.manifest.json`, and returns a printable summary.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::config::{ExperimentConfig, SystemKind};
use crate::continuation::{bifurcation_diagram, bistability_intervals, StepConfig, SteadyProblem};
use crate::equilibria::classify_equilibria;
use crate::error::Result;
use crate::io::{self, OutputDir, RunManifest};
use crate::model::reaction_limit;
use crate::solver::{
    convergence_study, initial_condition_1d, initial_condition_2d, pattern_diagnostics, run,
    spot_diagnostics, Grid, SimConfig, State2, StepOptions,
};
use crate::turing::{dispersion_relation, sigma_l0, slope_sign_changes, turing_region_scan, verdict, SpatialDim};

/// Outcome of a command: its summary text and the manifest it wrote.
#[derive(Clone, Debug)]
pub struct Report {
    pub summary: String,
    pub manifest: RunManifest,
}

fn finish(
    command: &str,
    cfg: &ExperimentConfig,
    started: Instant,
    mut out: OutputDir,
    summary: String,
) -> Result<Report> {
    let manifest = RunManifest::new(command, cfg, cfg.simulation.seed, &cfg.defaulted, started, &out)?;
    out.write_json(&format!("{command}.manifest.json"), &manifest)?;
    Ok(Report { summary, manifest })
}

fn stem(cfg: &ExperimentConfig) -> String {
    cfg.scenario.map_or_else(|| "custom".to_string(), |s| s.label().to_string())
}

pub fn cmd_equilibria(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out)?;
    let eqs = classify_equilibria(&cfg.model)?;
    out.write("equilibria.csv", io::equilibria_csv(&eqs))?;

    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>12} {:>12} {:>26} {:>9} {:>10}", "state", "R", "T", "leading eigenvalue", "stable", "residual");
    for e in &eqs {
        let (fr, ft) = reaction_limit(e.state(), &cfg.model)?;
        let z = e.eigenvalues[0];
        let _ = writeln!(
            s,
            "{:<12} {:>12.8} {:>12.8} {:>12.6} {:+12.6}i {:>9} {:>10.2e}",
            format!("{:?}", e.kind),
            e.r_star,
            e.t_star,
            z.re,
            z.im,
            e.stable,
            fr.abs().max(ft.abs())
        );
    }
    finish("equilibria", cfg, started, out, s)
}

pub fn cmd_dispersion(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out)?;
    let a = &cfg.analysis;
    let disp = dispersion_relation(&cfg.model, a.length, a.n_modes, cfg.simulation.dim)?;
    out.write(&format!("dispersion_{}.csv", stem(cfg)), io::dispersion_csv(&disp))?;

    let v = verdict(&disp);
    let unstable: Vec<String> = disp.unstable_modes().map(|m| m.index.to_string()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "modes: {} on L = {}", disp.modes.len(), a.length);
    let _ = writeln!(s, "turing unstable: {}", v.unstable);
    if let Some(k) = v.critical_mode {
        let _ = writeln!(s, "fastest heterogeneous mode: {k} (growth {:.6e})", v.growth_rate);
    }
    let _ = writeln!(s, "unstable modes: [{}]", unstable.join(", "));
    if !disp.window_resolved {
        let _ = writeln!(s, "warning: the highest mode considered is still unstable");
    }
    finish("dispersion", cfg, started, out, s)
}

pub fn cmd_turing_scan(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out)?;
    let a = &cfg.analysis;
    let scan = turing_region_scan(&cfg.params, a.gamma_range, a.s_range, a.resolution);
    out.write("turing_scan.csv", io::scan_csv(&scan))?;
    let (values, w, h) = io::scan_heatmap_values(&scan);
    let meta = io::write_heatmap(&mut out, "turing_scan", &values, w, h)?;

    let area = scan.area_along_s();
    let feasible = scan.cells.iter().filter(|c| c.sigma_l.is_some()).count();
    let mut s = String::new();
    let _ = writeln!(s, "scan: {} x {} cells, {feasible} feasible", scan.gammas.len(), scan.ss.len());
    if let Some(v) = scan.cells[0].sigma_l {
        let _ = writeln!(
            s,
            "sigma_L at (gamma, s) = ({}, {}): {v:.10} (sigma_L0 = {:.10})",
            scan.cells[0].gamma,
            scan.cells[0].s,
            sigma_l0(&cfg.model)
        );
    }
    let _ = writeln!(s, "sigma_L range: [{:.6}, {:.6}], ceiling d_R = {}", meta.min, meta.max, scan.ceiling);
    let _ = writeln!(s, "largest neighbour jump: {:.3e}", scan.max_neighbour_jump());
    let turns: Vec<String> = slope_sign_changes(&scan.ss, &area).iter().map(|x| format!("{x:.3}")).collect();
    let _ = writeln!(s, "admissible-area slope changes sign at s = [{}]", turns.join(", "));
    finish("turing-scan", cfg, started, out, s)
}

#[derive(Serialize)]
struct PatternSummary {
    interior_t_peaks: usize,
    interior_r_peaks: usize,
    double_peaked: bool,
    wavelength: Option<f64>,
    phase_metric: Option<f64>,
    amplitude_r: f64,
    amplitude_t: f64,
}

#[derive(Serialize)]
struct SpotSummary {
    spots: usize,
    qualifying: usize,
}

fn initial_state(cfg: &ExperimentConfig, grid: &Grid) -> Result<State2> {
    match grid.dim {
        SpatialDim::One => initial_condition_1d(grid),
        SpatialDim::Two => initial_condition_2d(grid, cfg.simulation.seed),
    }
}

fn sim_config(cfg: &ExperimentConfig, grid: Grid, t_fin: f64) -> SimConfig {
    let sim = &cfg.simulation;
    let options = StepOptions {
        scheme: sim.scheme,
        clamp_negative: sim.clamp_negative,
        parallel: sim.parallel,
        ..StepOptions::default()
    };
    let mut c = SimConfig::new(grid, &cfg.model, t_fin)
        .with_cadence(sim.output_every, sim.snapshot_every)
        .with_options(options);
    if let Some(dt) = sim.dt {
        c = c.with_dt(dt);
    }
    c
}

/// Integrate the configured system, or run the fast-reaction convergence
/// study when `simulation.convergence` is set.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out)?;
    let sim = &cfg.simulation;
    let grid = Grid::new(sim.dim, sim.length, sim.cells)?;
    let ic = initial_state(cfg, &grid)?;
    let name = format!("simulate_{}", stem(cfg));
    let mut s = String::new();

    if sim.convergence {
        let config = sim_config(cfg, grid, sim.t_check);
        let rows = convergence_study(&cfg.model, &sim.epsilons, sim.t_check, &config, &ic)?;
        out.write(&format!("{name}_convergence.csv"), io::convergence_csv(&rows))?;
        let _ = writeln!(s, "{:>10} {:>14} {:>14}", "epsilon", "sup error", "L1 error");
        for r in &rows {
            let _ = writeln!(s, "{:>10.1e} {:>14.6e} {:>14.6e}", r.epsilon, r.sup_error, r.l1_error);
        }
        return finish("simulate", cfg, started, out, s);
    }

    let config = sim_config(cfg, grid, sim.t_fin);
    let model = sim.model(&cfg.model);
    config.validate(&cfg.model, model)?;
    let traj = run(&config, &cfg.model, model, &ic)?;
    out.write(&format!("{name}_diagnostics.csv"), io::diagnostics_csv(&traj.diagnostics))?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let file = format!("{name}_snapshots/{i:05}.csv");
        out.write(&file, io::snapshot_csv(&snap.state.observable(), &grid))?;
    }
    let _ = writeln!(
        s,
        "{} system, {} cells, dt = {:.4e}, {} snapshots",
        match sim.system {
            SystemKind::Limit => "limit",
            SystemKind::Fast => "fast-reaction",
        },
        grid.len(),
        traj.dt,
        traj.snapshots.len()
    );

    if let Some(last) = traj.final_observable() {
        out.write(&format!("{name}_final.csv"), io::snapshot_csv(&last, &grid))?;
        let d = traj.diagnostics.last().expect("a finished run has diagnostics");
        let _ = writeln!(
            s,
            "t = {:.3}: L1(R) = {:.6}, R in [{:.6}, {:.6}], std(R) = {:.3e}, T in [{:.6}, {:.6}]",
            d.t, d.l1_r, d.min_r, d.max_r, d.std_r, d.min_t, d.max_t
        );
        match grid.dim {
            SpatialDim::One => {
                let p = pattern_diagnostics(&last, &grid);
                let summary = PatternSummary {
                    interior_t_peaks: p.interior_t_peaks(),
                    interior_r_peaks: p.interior_r_peaks(),
                    double_peaked: p.is_double_peaked(),
                    wavelength: p.wavelength,
                    phase_metric: p.phase_metric,
                    amplitude_r: p.amplitude_r,
                    amplitude_t: p.amplitude_t,
                };
                let _ = writeln!(
                    s,
                    "pattern: {} T peaks, {} R peaks, double-peaked = {}",
                    summary.interior_t_peaks, summary.interior_r_peaks, summary.double_peaked
                );
                out.write_json(&format!("{name}_pattern.json"), &summary)?;
            }
            SpatialDim::Two => {
                let n = grid.n;
                let r: Vec<Option<f64>> = last.r.iter().map(|&v| Some(v)).collect();
                let t: Vec<Option<f64>> = last.t.iter().map(|&v| Some(v)).collect();
                io::write_heatmap(&mut out, &format!("{name}_final_R"), &r, n, n)?;
                io::write_heatmap(&mut out, &format!("{name}_final_T"), &t, n, n)?;
                let spots = spot_diagnostics(&last, &grid);
                let summary = SpotSummary { spots: spots.spots.len(), qualifying: spots.qualifying() };
                let _ = writeln!(s, "spots: {} ({} with a central depression and toxicity peak)", summary.spots, summary.qualifying);
                out.write_json(&format!("{name}_spots.json"), &summary)?;
            }
        }
    }
    let failure = traj.failure;
    let report = finish("simulate", cfg, started, out, s)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[derive(Serialize)]
struct SpecialRow {
    branch: usize,
    kind: &'static str,
    param: f64,
    l1_r: f64,
}

#[derive(Serialize)]
struct DiagramSummary {
    parameter: &'static str,
    bistability: Vec<(f64, f64)>,
    special_points: Vec<SpecialRow>,
    failures: Vec<String>,
}

pub fn cmd_continue(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out)?;
    let c = &cfg.continuation;
    let problem = SteadyProblem::new(Grid::one_d(c.length, c.cells)?, cfg.model, c.parameter)?;
    let step = StepConfig {
        ds: c.ds,
        ds_min: c.ds_min,
        ds_max: c.ds_max,
        max_steps: c.max_steps,
        ..StepConfig::new(c.range)
    };
    let diagram = bifurcation_diagram(&problem, c.range, c.max_branches, &step)?;
    let name = c.parameter.name();
    let dir = format!("continue_{name}");
    io::write_diagram(&mut out, &dir, &diagram)?;

    let bistability = bistability_intervals(&diagram);
    let summary = DiagramSummary {
        parameter: name,
        bistability: bistability.clone(),
        special_points: diagram
            .branches
            .iter()
            .enumerate()
            .flat_map(|(i, b)| {
                b.special_points.iter().map(move |sp| SpecialRow {
                    branch: i,
                    kind: sp.kind.label(),
                    param: sp.param,
                    l1_r: sp.l1_r,
                })
            })
            .collect(),
        failures: diagram.failures.clone(),
    };
    out.write_json(&format!("{dir}/diagram.json"), &summary)?;

    let mut s = String::new();
    let home = diagram.homogeneous();
    let first = home.branch_points().next().map(|bp| bp.param);
    let _ = writeln!(s, "homogeneous branch: {} points, first branch point at {name} = {first:?}", home.points.len());
    for (i, b) in diagram.patterned().iter().enumerate() {
        let stable = b.points.iter().filter(|p| p.is_stable()).count();
        let _ = writeln!(
            s,
            "branch {}: {} points ({stable} stable), {} folds, {:?}",
            i + 1,
            b.points.len(),
            b.folds().count(),
            b.termination
        );
    }
    for (lo, hi) in &bistability {
        let _ = writeln!(s, "bistable for {name} in [{lo:.6}, {hi:.6}]");
    }
    for f in &diagram.failures {
        let _ = writeln!(s, "failed: {f}");
    }
    finish("continue", cfg, started, out, s)
}
