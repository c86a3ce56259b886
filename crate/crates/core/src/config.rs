//! Experiment configuration files.
//!
//! Configurations are TOML documents with an optional top-level `scenario`
//! and `out`, and the tables `[model]`, `[simulation]`, `[analysis]` and
//! `[continuation]`. Every key is optional; missing keys take the reference
//! values and are listed in [`ExperimentConfig::defaulted`]. Unknown keys
//! and type mismatches are rejected with the offending line.
//!
//! ```toml
//! scenario = "ii"
//! out = "runs/ii"
//!
//! [model]
//! d_t = 0.05
//!
//! [simulation]
//! dim = 1
//! t_fin = 200
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuation::ActiveParameter;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ParamSet};
use crate::solver::{Model, Scheme};
use crate::turing::SpatialDim;

/// The four reference parameter combinations `(γ, s, σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// No propagation reduction.
    #[serde(rename = "i")]
    I,
    /// All three toxicity effects.
    #[serde(rename = "ii")]
    II,
    /// No growth inhibition.
    #[serde(rename = "iii")]
    III,
    /// No extra mortality.
    #[serde(rename = "iv")]
    IV,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::I, Scenario::II, Scenario::III, Scenario::IV];

    /// `(γ, s, σ)`.
    pub fn triple(self) -> (f64, f64, f64) {
        match self {
            Scenario::I => (0.1, 0.5, 0.0),
            Scenario::II => (0.1, 0.5, 3.0),
            Scenario::III => (0.0, 0.5, 3.0),
            Scenario::IV => (0.1, 0.0, 3.0),
        }
    }

    pub fn params(self) -> Result<ModelParams> {
        let (gamma, s, sigma) = self.triple();
        ModelParams::reference(gamma, s, sigma)
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::I => "i",
            Scenario::II => "ii",
            Scenario::III => "iii",
            Scenario::IV => "iv",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Scenario::I),
            "ii" | "2" => Ok(Scenario::II),
            "iii" | "3" => Ok(Scenario::III),
            "iv" | "4" => Ok(Scenario::IV),
            other => Err(Error::Config {
                line: None,
                msg: format!("unknown scenario {other:?}; expected i, ii, iii or iv"),
            }),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    out: Option<PathBuf>,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    simulation: RawSimulation,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    continuation: RawContinuation,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    g: Option<f64>,
    gamma: Option<f64>,
    d: Option<f64>,
    s: Option<f64>,
    c: Option<f64>,
    k: Option<f64>,
    d_r: Option<f64>,
    sigma: Option<f64>,
    d_t: Option<f64>,
    r_hat: Option<f64>,
    t_hat: Option<f64>,
    epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    dim: Option<usize>,
    length: Option<f64>,
    cells: Option<usize>,
    dt: Option<f64>,
    t_fin: Option<f64>,
    output_every: Option<f64>,
    snapshot_every: Option<f64>,
    system: Option<SystemKind>,
    scheme: Option<SchemeName>,
    clamp_negative: Option<bool>,
    parallel: Option<bool>,
    seed: Option<u64>,
    convergence: Option<bool>,
    epsilons: Option<Vec<f64>>,
    t_check: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    length: Option<f64>,
    n_modes: Option<usize>,
    gamma_range: Option<[f64; 2]>,
    s_range: Option<[f64; 2]>,
    resolution: Option<[usize; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContinuation {
    parameter: Option<ActiveParameter>,
    range: Option<[f64; 2]>,
    cells: Option<usize>,
    length: Option<f64>,
    ds: Option<f64>,
    ds_min: Option<f64>,
    ds_max: Option<f64>,
    max_steps: Option<usize>,
    max_branches: Option<usize>,
}

/// Which system `simulate` integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Limit,
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeName {
    Explicit,
    ExchangeImplicit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub dim: SpatialDim,
    pub length: f64,
    pub cells: usize,
    /// `None` selects the largest stable step.
    pub dt: Option<f64>,
    pub t_fin: f64,
    pub output_every: f64,
    pub snapshot_every: f64,
    pub system: SystemKind,
    pub scheme: Scheme,
    pub clamp_negative: bool,
    pub parallel: bool,
    pub seed: u64,
    pub convergence: bool,
    pub epsilons: Vec<f64>,
    pub t_check: f64,
}

impl SimulationSettings {
    pub fn model(&self, params: &ModelParams) -> Model {
        match self.system {
            SystemKind::Limit => Model::Limit,
            SystemKind::Fast => Model::Fast { epsilon: params.switch_timescale },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisSettings {
    pub length: f64,
    /// Modes per direction.
    pub n_modes: usize,
    pub gamma_range: (f64, f64),
    pub s_range: (f64, f64),
    pub resolution: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationSettings {
    pub parameter: ActiveParameter,
    pub range: (f64, f64),
    pub cells: usize,
    pub length: f64,
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    pub max_branches: usize,
}

/// A fully resolved and validated experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,
    pub params: ParamSet,
    #[serde(skip)]
    pub model: ModelParams,
    pub simulation: SimulationSettings,
    pub analysis: AnalysisSettings,
    pub continuation: ContinuationSettings,
    pub out: PathBuf,
    /// Dotted keys that took their default value.
    pub defaulted: Vec<String>,
}

/// Command-line replacements applied on top of a file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub sigma: Option<f64>,
    pub s: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub t_fin: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) {
        if let Some(sc) = self.scenario {
            raw.scenario = Some(sc.label().into());
        }
        raw.model.sigma = self.sigma.or(raw.model.sigma);
        raw.model.s = self.s.or(raw.model.s);
        raw.model.gamma = self.gamma.or(raw.model.gamma);
        raw.simulation.seed = self.seed.or(raw.simulation.seed);
        raw.simulation.dim = self.dim.or(raw.simulation.dim);
        raw.simulation.t_fin = self.t_fin.or(raw.simulation.t_fin);
        if let Some(out) = &self.out {
            raw.out = Some(out.clone());
        }
    }
}

/// Parse and resolve a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|span| line_of_offset(text, span.start)),
        msg: e.message().to_string(),
    })?;
    overrides.apply(&mut raw);
    resolve(raw, text)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level for `""`).
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Config key named first in a parameter validation message.
fn offending_key(e: &Error) -> Option<String> {
    let Error::Parameter(msg) = e else { return None };
    let msg = msg.strip_prefix("need ").unwrap_or(msg);
    let word: String = msg.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
    (!word.is_empty()).then(|| word.to_ascii_lowercase())
}

struct Resolver<'a> {
    text: &'a str,
    defaulted: Vec<String>,
}

impl Resolver<'_> {
    fn take<T>(&mut self, section: &str, key: &str, value: Option<T>, default: T) -> T {
        value.unwrap_or_else(|| {
            self.defaulted.push(if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            });
            default
        })
    }

    fn error(&self, section: &str, key: &str, msg: impl Into<String>) -> Error {
        Error::Config { line: key_line(self.text, section, key), msg: msg.into() }
    }
}

fn resolve(raw: RawConfig, text: &str) -> Result<ExperimentConfig> {
    let mut r = Resolver { text, defaulted: Vec::new() };
    let scenario = raw
        .scenario
        .as_deref()
        .map(|s| s.parse::<Scenario>())
        .transpose()
        .map_err(|e| r.error("", "scenario", e.to_string()))?;

    let m = &raw.model;
    let triple = match scenario {
        Some(sc) => {
            for (key, v) in [("gamma", m.gamma), ("s", m.s), ("sigma", m.sigma)] {
                if v.is_some() {
                    return Err(r.error(
                        "model",
                        key,
                        format!("model.{key} conflicts with scenario = \"{sc}\""),
                    ));
                }
            }
            sc.triple()
        }
        None => (
            r.take("model", "gamma", m.gamma, 0.0),
            r.take("model", "s", m.s, 0.0),
            r.take("model", "sigma", m.sigma, 0.0),
        ),
    };
    let base = ParamSet::default();
    let params = ParamSet {
        growth_rate: r.take("model", "g", m.g, base.growth_rate),
        growth_inhibition: triple.0,
        mortality: r.take("model", "d", m.d, base.mortality),
        extra_mortality: triple.1,
        conversion: r.take("model", "c", m.c, base.conversion),
        decay: r.take("model", "k", m.k, base.decay),
        root_diffusion: r.take("model", "d_r", m.d_r, base.root_diffusion),
        propagation_reduction: triple.2,
        toxicity_diffusion: r.take("model", "d_t", m.d_t, base.toxicity_diffusion),
        reference_biomass: r.take("model", "r_hat", m.r_hat, base.reference_biomass),
        critical_toxicity: m.t_hat,
        switch_timescale: r.take("model", "epsilon", m.epsilon, base.switch_timescale),
    };
    if m.t_hat.is_none() {
        r.defaulted.push("model.t_hat".into());
    }
    let model = ModelParams::new(params).map_err(|e| Error::Config {
        line: offending_key(&e).and_then(|k| key_line(text, "model", &k)),
        msg: e.to_string(),
    })?;

    let s = &raw.simulation;
    let dim_raw = r.take("simulation", "dim", s.dim, 1);
    let dim = SpatialDim::from_usize(dim_raw)
        .map_err(|_| r.error("simulation", "dim", format!("dim must be 1 or 2, got {dim_raw}")))?;
    let default_cells = match dim {
        SpatialDim::One => 400,
        SpatialDim::Two => 80,
    };
    let simulation = SimulationSettings {
        dim,
        length: r.take("simulation", "length", s.length, 8.0),
        cells: r.take("simulation", "cells", s.cells, default_cells),
        dt: s.dt,
        t_fin: r.take("simulation", "t_fin", s.t_fin, 1000.0),
        output_every: r.take("simulation", "output_every", s.output_every, 1.0),
        snapshot_every: r.take("simulation", "snapshot_every", s.snapshot_every, 50.0),
        system: r.take("simulation", "system", s.system, SystemKind::Limit),
        scheme: match r.take("simulation", "scheme", s.scheme, SchemeName::ExchangeImplicit) {
            SchemeName::Explicit => Scheme::ExplicitEuler,
            SchemeName::ExchangeImplicit => Scheme::ExchangeImplicitEuler,
        },
        clamp_negative: r.take("simulation", "clamp_negative", s.clamp_negative, false),
        parallel: r.take("simulation", "parallel", s.parallel, false),
        seed: r.take("simulation", "seed", s.seed, 1),
        convergence: r.take("simulation", "convergence", s.convergence, false),
        epsilons: r.take("simulation", "epsilons", s.epsilons.clone(), vec![1e-1, 1e-2, 1e-3]),
        t_check: r.take("simulation", "t_check", s.t_check, 1.0),
    };
    if s.dt.is_none() {
        r.defaulted.push("simulation.dt".into());
    }
    for (key, v) in [
        ("length", simulation.length),
        ("t_fin", simulation.t_fin),
        ("output_every", simulation.output_every),
        ("snapshot_every", simulation.snapshot_every),
        ("t_check", simulation.t_check),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(r.error("simulation", key, format!("simulation.{key} must be > 0, got {v}")));
        }
    }
    if let Some(dt) = simulation.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(r.error("simulation", "dt", format!("simulation.dt must be > 0, got {dt}")));
        }
    }

    let a = &raw.analysis;
    let analysis = AnalysisSettings {
        length: r.take("analysis", "length", a.length, 8.0),
        n_modes: r.take(
            "analysis",
            "n_modes",
            a.n_modes,
            match dim {
                SpatialDim::One => 64,
                SpatialDim::Two => 32,
            },
        ),
        gamma_range: r.take("analysis", "gamma_range", a.gamma_range, [0.0, 10.0]).into(),
        s_range: r.take("analysis", "s_range", a.s_range, [0.0, 1.0]).into(),
        resolution: r.take("analysis", "resolution", a.resolution, [101, 101]).into(),
    };
    if analysis.n_modes == 0 {
        return Err(r.error("analysis", "n_modes", "analysis.n_modes must be >= 1"));
    }
    if analysis.resolution.0 < 2 || analysis.resolution.1 < 2 {
        return Err(r.error("analysis", "resolution", "analysis.resolution needs >= 2 points per axis"));
    }

    let c = &raw.continuation;
    let parameter = r.take("continuation", "parameter", c.parameter, ActiveParameter::Sigma);
    let default_range = match parameter {
        ActiveParameter::Sigma => [0.5 * params.root_diffusion, params.root_diffusion * 0.999],
        ActiveParameter::S => [0.0, 0.99],
    };
    let continuation = ContinuationSettings {
        parameter,
        range: r.take("continuation", "range", c.range, default_range).into(),
        cells: r.take("continuation", "cells", c.cells, 100),
        length: r.take("continuation", "length", c.length, 8.0),
        ds: r.take("continuation", "ds", c.ds, 0.02),
        ds_min: r.take("continuation", "ds_min", c.ds_min, 1e-4),
        ds_max: r.take("continuation", "ds_max", c.ds_max, 0.1),
        max_steps: r.take("continuation", "max_steps", c.max_steps, 2000),
        max_branches: r.take("continuation", "max_branches", c.max_branches, 4),
    };
    if !(continuation.ds_min > 0.0
        && continuation.ds_min <= continuation.ds
        && continuation.ds <= continuation.ds_max)
    {
        return Err(r.error("continuation", "ds", "continuation needs 0 < ds_min <= ds <= ds_max"));
    }
    if continuation.range.0 >= continuation.range.1 {
        return Err(r.error("continuation", "range", "continuation.range must be increasing"));
    }

    let out = r.take("", "out", raw.out, PathBuf::from("out"));
    Ok(ExperimentConfig {
        scenario,
        params: model.to_set(),
        model,
        simulation,
        analysis,
        continuation,
        out,
        defaulted: r.defaulted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_reference_values() {
        let cfg = parse_config("").unwrap();
        let p = &cfg.model;
        assert_eq!(p.growth_rate, 10.0);
        assert_eq!(p.conversion, 0.5);
        assert_eq!(p.reference_biomass, 6.0);
        assert_eq!(p.mortality, 1.0);
        assert_eq!(p.decay, 1.0);
        assert_eq!(p.root_diffusion, 3.33);
        assert_eq!(p.toxicity_diffusion, 0.05);
        assert!(cfg.defaulted.contains(&"model.g".to_string()));
        assert!(cfg.defaulted.contains(&"model.t_hat".to_string()));
        assert_eq!(cfg.simulation.cells, 400);
        assert_eq!(cfg.analysis.resolution, (101, 101));
    }

    #[test]
    fn scenario_expands() {
        let cfg = parse_config("scenario = \"ii\"\n").unwrap();
        assert_eq!(cfg.scenario, Some(Scenario::II));
        assert_eq!(
            (cfg.model.growth_inhibition, cfg.model.extra_mortality, cfg.model.propagation_reduction),
            (0.1, 0.5, 3.0)
        );
        assert!((cfg.model.critical_toxicity - 4.5).abs() < 1e-12);
        assert!(!cfg.defaulted.contains(&"model.sigma".to_string()));
    }

    #[test]
    fn scenario_conflict_is_rejected_with_line() {
        let text = "scenario = \"ii\"\n\n[model]\nsigma = 2.0\n";
        match parse_config(text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, Some(4));
                assert!(msg.contains("conflicts"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_violation_names_the_line() {
        let text = "[model]\ng = 10\nsigma = 5\n";
        match parse_config(text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, Some(3), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_type_mismatch() {
        match parse_config("[model]\nq = 1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("{other:?}"),
        }
        match parse_config("[simulation]\n\ncells = \"many\"\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
        assert!(parse_config("scenario = \"v\"").is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let text = "[model]\ns = 0.2\n[simulation]\ndim = 1\n";
        let o = Overrides { s: Some(0.5), dim: Some(2), seed: Some(7), ..Overrides::default() };
        let cfg = parse_config_with(text, &o).unwrap();
        assert_eq!(cfg.model.extra_mortality, 0.5);
        assert!((cfg.model.critical_toxicity - 4.5).abs() < 1e-12);
        assert_eq!(cfg.simulation.dim, SpatialDim::Two);
        assert_eq!(cfg.simulation.cells, 80);
        assert_eq!(cfg.simulation.seed, 7);
        let o = Overrides { scenario: Some(Scenario::II), ..Overrides::default() };
        assert!(parse_config_with(text, &o).is_err());
    }

    #[test]
    fn scenario_names_parse() {
        for sc in Scenario::ALL {
            assert_eq!(sc.label().parse::<Scenario>().unwrap(), sc);
            assert!(sc.params().is_ok());
        }
        assert_eq!("IV".parse::<Scenario>().unwrap(), Scenario::IV);
    }
}
