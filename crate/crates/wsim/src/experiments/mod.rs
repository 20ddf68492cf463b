//! Reproduction harness: configuration files, parameter-grid sweeps, and
//! named scenarios that regenerate whole curves and surfaces in one call.

pub mod config;
pub mod scenarios;
pub mod sweep;

pub use config::{
    parse_config, parse_config_str, parse_frame, parse_model, AxisParam, AxisSpec, BaseRatios,
    OutputFormat, ParsedConfig, ScenarioConfig, ScenarioName, SweepSpec, DEFAULT_GRID_CAP,
    SCENARIO_NAMES,
};
pub use scenarios::{run_scenario, scenario_sweep_spec, ScenarioOutcome};
pub use sweep::{
    evolve_generation, point_fidelity, point_params, protocol_config, run_sweep, PointStatus,
    SweepResult, SweepRow,
};
