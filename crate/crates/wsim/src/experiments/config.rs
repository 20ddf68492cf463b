//! Strict JSON configuration for scenarios and sweeps.
//!
//! A document either names a scenario (with optional overrides) or carries
//! an explicit `sweep` block. Unknown keys are rejected, every rate is a
//! ratio to f, and rate keys accept either a number (fixed value) or a
//! `{min, max, points}` object (sweep axis override).

use std::path::Path;

use serde::Deserialize;

use crate::dynamics::{Frame, ModelKind};
use crate::{Error, Result};

pub const SCENARIO_NAMES: [&str; 10] = [
    "fig2a",
    "fig2b",
    "fig3",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig5a",
    "fig5b",
    "feasibility",
    "custom",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig5a,
    Fig5b,
    Feasibility,
    Custom,
}

impl ScenarioName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig2a" => Ok(Self::Fig2a),
            "fig2b" => Ok(Self::Fig2b),
            "fig3" => Ok(Self::Fig3),
            "fig4a" => Ok(Self::Fig4a),
            "fig4b" => Ok(Self::Fig4b),
            "fig4c" => Ok(Self::Fig4c),
            "fig5a" => Ok(Self::Fig5a),
            "fig5b" => Ok(Self::Fig5b),
            "feasibility" => Ok(Self::Feasibility),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!(
                "unknown scenario \"{other}\"; valid scenarios: {}",
                SCENARIO_NAMES.join(", ")
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig3 => "fig3",
            Self::Fig4a => "fig4a",
            Self::Fig4b => "fig4b",
            Self::Fig4c => "fig4c",
            Self::Fig5a => "fig5a",
            Self::Fig5b => "fig5b",
            Self::Feasibility => "feasibility",
            Self::Custom => "custom",
        }
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind> {
    match s {
        "full" => Ok(ModelKind::Full),
        "effective" => Ok(ModelKind::Effective),
        "lindblad" => Ok(ModelKind::Lindblad),
        other => Err(Error::Config(format!(
            "unknown model \"{other}\"; valid models: full, effective, lindblad"
        ))),
    }
}

pub fn parse_frame(s: &str) -> Result<Frame> {
    match s {
        "static" => Ok(Frame::Static),
        "interaction" => Ok(Frame::Interaction),
        other => Err(Error::Config(format!(
            "unknown frame \"{other}\"; valid frames: static, interaction"
        ))),
    }
}

/// Sweepable parameters. `delta_over_nu` resolves ν from the current Δ, so
/// it must come after any `delta_over_f` axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisParam {
    DeltaOverF,
    NuOverF,
    DeltaOverNu,
    GammaAtomOverF,
    GammaCavityOverF,
    KappaOverF,
}

impl AxisParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "delta_over_f" => Ok(Self::DeltaOverF),
            "nu_over_f" => Ok(Self::NuOverF),
            "delta_over_nu" => Ok(Self::DeltaOverNu),
            "Gamma_over_f" => Ok(Self::GammaAtomOverF),
            "gamma_over_f" => Ok(Self::GammaCavityOverF),
            "kappa_over_f" => Ok(Self::KappaOverF),
            other => Err(Error::Config(format!(
                "unknown axis \"{other}\"; valid axes: delta_over_f, nu_over_f, \
                 delta_over_nu, Gamma_over_f, gamma_over_f, kappa_over_f"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DeltaOverF => "delta_over_f",
            Self::NuOverF => "nu_over_f",
            Self::DeltaOverNu => "delta_over_nu",
            Self::GammaAtomOverF => "Gamma_over_f",
            Self::GammaCavityOverF => "gamma_over_f",
            Self::KappaOverF => "kappa_over_f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub param: AxisParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn validate(&self) -> Result<()> {
        let key = self.param.name();
        if self.points < 2 {
            return Err(Error::Config(format!(
                "{key}: axis needs at least 2 points, got {}",
                self.points
            )));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::Config(format!(
                "{key}: invalid axis range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * (i as f64 / (self.points - 1) as f64)
    }
}

/// Fixed ratios (to f) shared by every point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseRatios {
    pub delta_over_f: f64,
    pub nu_over_f: f64,
    pub gamma_atom_over_f: f64,
    pub gamma_cavity_over_f: f64,
    pub kappa_over_f: f64,
    pub f_absolute_mhz: Option<f64>,
}

impl Default for BaseRatios {
    fn default() -> Self {
        BaseRatios {
            delta_over_f: 10.0,
            nu_over_f: 10.0,
            gamma_atom_over_f: 0.0,
            gamma_cavity_over_f: 0.0,
            kappa_over_f: 0.0,
            f_absolute_mhz: None,
        }
    }
}

pub const DEFAULT_GRID_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub n_atoms: usize,
    pub model: ModelKind,
    pub axes: Vec<AxisSpec>,
    pub base: BaseRatios,
    /// Which generation time (2k+1)π/(Nη) the fidelity is read at.
    pub k: usize,
    pub dt: Option<f64>,
    pub workers: Option<usize>,
    pub grid_cap: usize,
}

impl SweepSpec {
    pub fn new(n_atoms: usize, model: ModelKind) -> Self {
        SweepSpec {
            n_atoms,
            model,
            axes: Vec::new(),
            base: BaseRatios::default(),
            k: 0,
            dt: None,
            workers: None,
            grid_cap: DEFAULT_GRID_CAP,
        }
    }

    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 3 {
            return Err(Error::Config(format!(
                "n_atoms: must be >= 3, got {}",
                self.n_atoms
            )));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        let size = self.grid_size();
        if size > self.grid_cap {
            return Err(Error::Config(format!(
                "grid has {size} points, exceeding the cap of {}",
                self.grid_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    pub n_atoms: Vec<usize>,
    pub base: BaseRatios,
    /// Axis overrides keyed by parameter, replacing scenario defaults.
    pub axis_overrides: Vec<AxisSpec>,
    pub model: Option<ModelKind>,
    pub frame: Frame,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub k: usize,
    pub out: Option<String>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "unknown format \"{other}\"; valid formats: csv, json"
            ))),
        }
    }
}

impl ScenarioConfig {
    pub fn named(scenario: ScenarioName) -> Self {
        ScenarioConfig {
            scenario,
            n_atoms: default_n_list(scenario),
            base: scenario_base(scenario),
            axis_overrides: Vec::new(),
            model: None,
            frame: Frame::Static,
            t_end: None,
            dt: None,
            k: 0,
            out: None,
            format: OutputFormat::Csv,
            workers: None,
        }
    }
}

fn default_n_list(scenario: ScenarioName) -> Vec<usize> {
    match scenario {
        ScenarioName::Fig2a | ScenarioName::Fig2b => vec![3, 4, 5, 6],
        _ => vec![4],
    }
}

/// Candidate hardware rates for the feasibility check: a 750 MHz atom-cavity
/// coupling with measured atomic, cavity, and fiber linewidths (MHz; the
/// fiber value is a plain linewidth, hence the 2π).
pub const FEASIBILITY_F_MHZ: f64 = 750.0;
pub const FEASIBILITY_GAMMA_ATOM_MHZ: f64 = 2.62;
pub const FEASIBILITY_GAMMA_CAVITY_MHZ: f64 = 3.5;
pub const FEASIBILITY_KAPPA_MHZ: f64 = 0.152;

/// Scenario-specific fixed ratios; user overrides land on top of these.
fn scenario_base(scenario: ScenarioName) -> BaseRatios {
    let mut base = BaseRatios::default();
    match scenario {
        ScenarioName::Fig4a => base.gamma_atom_over_f = 0.01,
        ScenarioName::Fig4b => base.gamma_cavity_over_f = 0.3,
        ScenarioName::Fig4c => base.kappa_over_f = 0.3,
        ScenarioName::Feasibility => {
            base.gamma_atom_over_f = FEASIBILITY_GAMMA_ATOM_MHZ / FEASIBILITY_F_MHZ;
            base.gamma_cavity_over_f = FEASIBILITY_GAMMA_CAVITY_MHZ / FEASIBILITY_F_MHZ;
            base.kappa_over_f =
                FEASIBILITY_KAPPA_MHZ / (2.0 * std::f64::consts::PI * FEASIBILITY_F_MHZ);
            base.f_absolute_mhz = Some(FEASIBILITY_F_MHZ);
        }
        _ => {}
    }
    base
}

#[derive(Debug)]
pub enum ParsedConfig {
    Scenario(ScenarioConfig),
    Sweep(SweepSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrAxis {
    Number(f64),
    Axis { min: f64, max: f64, points: usize },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    name: String,
    min: f64,
    max: f64,
    points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    n_atoms: Option<usize>,
    model: Option<String>,
    axes: Vec<RawAxis>,
    delta_over_f: Option<f64>,
    nu_over_f: Option<f64>,
    #[serde(rename = "Gamma_over_f")]
    gamma_atom_over_f: Option<f64>,
    gamma_over_f: Option<f64>,
    kappa_over_f: Option<f64>,
    f_absolute_mhz: Option<f64>,
    k: Option<usize>,
    dt: Option<f64>,
    workers: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    sweep: Option<RawSweep>,
    n_atoms: Option<OneOrMany>,
    delta_over_f: Option<NumOrAxis>,
    nu_over_f: Option<NumOrAxis>,
    delta_over_nu: Option<NumOrAxis>,
    #[serde(rename = "Gamma_over_f")]
    gamma_atom_over_f: Option<NumOrAxis>,
    gamma_over_f: Option<NumOrAxis>,
    kappa_over_f: Option<NumOrAxis>,
    f_absolute_mhz: Option<f64>,
    model: Option<String>,
    frame: Option<String>,
    t_end: Option<f64>,
    dt: Option<f64>,
    k: Option<usize>,
    out: Option<String>,
    format: Option<String>,
    workers: Option<usize>,
}

fn check_rate(key: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Config(format!(
            "{key}: must be a finite non-negative number, got {v}"
        )));
    }
    Ok(v)
}

fn check_positive(key: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Config(format!(
            "{key}: must be a finite positive number, got {v}"
        )));
    }
    Ok(v)
}

/// Apply a `NumOrAxis` override: numbers update the base value through
/// `set`, axis objects land in the override list.
fn apply_num_or_axis(
    key: AxisParam,
    value: Option<NumOrAxis>,
    base: &mut BaseRatios,
    overrides: &mut Vec<AxisSpec>,
) -> Result<()> {
    let Some(value) = value else { return Ok(()) };
    match value {
        NumOrAxis::Number(v) => {
            let v = check_rate(key.name(), v)?;
            apply_fixed(key, v, base)?;
        }
        NumOrAxis::Axis { min, max, points } => {
            let axis = AxisSpec {
                param: key,
                min,
                max,
                points,
            };
            axis.validate()?;
            overrides.push(axis);
        }
    }
    Ok(())
}

/// Resolve a fixed parameter value into the base ratios. `delta_over_nu`
/// sets ν = Δ/value using the Δ already in place.
pub fn apply_fixed(key: AxisParam, v: f64, base: &mut BaseRatios) -> Result<()> {
    match key {
        AxisParam::DeltaOverF => base.delta_over_f = v,
        AxisParam::NuOverF => base.nu_over_f = v,
        AxisParam::DeltaOverNu => {
            let v = check_positive(key.name(), v)?;
            base.nu_over_f = base.delta_over_f / v;
        }
        AxisParam::GammaAtomOverF => base.gamma_atom_over_f = v,
        AxisParam::GammaCavityOverF => base.gamma_cavity_over_f = v,
        AxisParam::KappaOverF => base.kappa_over_f = v,
    }
    Ok(())
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ParsedConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
    match (raw.scenario.is_some(), raw.sweep.is_some()) {
        (true, true) => Err(Error::Config(
            "config must set either \"scenario\" or \"sweep\", not both".into(),
        )),
        (false, false) => Err(Error::Config(
            "config must set \"scenario\" or \"sweep\"".into(),
        )),
        (true, false) => {
            let name = raw.scenario.clone().unwrap();
            Ok(ParsedConfig::Scenario(resolve_scenario(&name, raw)?))
        }
        (false, true) => Ok(ParsedConfig::Sweep(resolve_sweep(raw.sweep.unwrap())?)),
    }
}

fn resolve_scenario(name: &str, raw: RawConfig) -> Result<ScenarioConfig> {
    let scenario = ScenarioName::parse(name)?;
    let mut cfg = ScenarioConfig::named(scenario);

    if let Some(n) = raw.n_atoms {
        let list = match n {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        };
        if list.is_empty() || list.iter().any(|&n| n < 3) {
            return Err(Error::Config(format!(
                "n_atoms: every entry must be >= 3, got {list:?}"
            )));
        }
        cfg.n_atoms = list;
    }
    apply_num_or_axis(
        AxisParam::DeltaOverF,
        raw.delta_over_f,
        &mut cfg.base,
        &mut cfg.axis_overrides,
    )?;
    apply_num_or_axis(
        AxisParam::NuOverF,
        raw.nu_over_f,
        &mut cfg.base,
        &mut cfg.axis_overrides,
    )?;
    apply_num_or_axis(
        AxisParam::DeltaOverNu,
        raw.delta_over_nu,
        &mut cfg.base,
        &mut cfg.axis_overrides,
    )?;
    apply_num_or_axis(
        AxisParam::GammaAtomOverF,
        raw.gamma_atom_over_f,
        &mut cfg.base,
        &mut cfg.axis_overrides,
    )?;
    apply_num_or_axis(
        AxisParam::GammaCavityOverF,
        raw.gamma_over_f,
        &mut cfg.base,
        &mut cfg.axis_overrides,
    )?;
    apply_num_or_axis(
        AxisParam::KappaOverF,
        raw.kappa_over_f,
        &mut cfg.base,
        &mut cfg.axis_overrides,
    )?;
    if let Some(f_mhz) = raw.f_absolute_mhz {
        cfg.base.f_absolute_mhz = Some(check_positive("f_absolute_mhz", f_mhz)?);
    }
    if let Some(m) = raw.model.as_deref() {
        cfg.model = Some(parse_model(m)?);
    }
    if let Some(fr) = raw.frame.as_deref() {
        cfg.frame = parse_frame(fr)?;
    }
    if let Some(t) = raw.t_end {
        cfg.t_end = Some(check_positive("t_end", t)?);
    }
    if let Some(dt) = raw.dt {
        cfg.dt = Some(check_positive("dt", dt)?);
    }
    if let Some(k) = raw.k {
        cfg.k = k;
    }
    cfg.out = raw.out;
    if let Some(f) = raw.format.as_deref() {
        cfg.format = OutputFormat::parse(f)?;
    }
    cfg.workers = raw.workers;
    Ok(cfg)
}

fn resolve_sweep(raw: RawSweep) -> Result<SweepSpec> {
    let model = match raw.model.as_deref() {
        Some(m) => parse_model(m)?,
        None => ModelKind::Full,
    };
    let mut spec = SweepSpec::new(raw.n_atoms.unwrap_or(4), model);
    if let Some(v) = raw.delta_over_f {
        spec.base.delta_over_f = check_rate("delta_over_f", v)?;
    }
    if let Some(v) = raw.nu_over_f {
        spec.base.nu_over_f = check_rate("nu_over_f", v)?;
    }
    if let Some(v) = raw.gamma_atom_over_f {
        spec.base.gamma_atom_over_f = check_rate("Gamma_over_f", v)?;
    }
    if let Some(v) = raw.gamma_over_f {
        spec.base.gamma_cavity_over_f = check_rate("gamma_over_f", v)?;
    }
    if let Some(v) = raw.kappa_over_f {
        spec.base.kappa_over_f = check_rate("kappa_over_f", v)?;
    }
    if let Some(v) = raw.f_absolute_mhz {
        spec.base.f_absolute_mhz = Some(check_positive("f_absolute_mhz", v)?);
    }
    for axis in raw.axes {
        spec.axes.push(AxisSpec {
            param: AxisParam::parse(&axis.name)?,
            min: axis.min,
            max: axis.max,
            points: axis.points,
        });
    }
    spec.k = raw.k.unwrap_or(0);
    if let Some(dt) = raw.dt {
        spec.dt = Some(check_positive("dt", dt)?);
    }
    spec.workers = raw.workers;
    spec.validate()?;
    Ok(spec)
}
