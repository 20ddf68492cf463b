//! Parameter-grid sweeps: fidelity at the first (or k-th) generation time,
//! evaluated at every point of a cartesian grid over rate ratios.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::json;

use crate::analytic::generation_times;
use crate::dynamics::{
    evolve_effective, evolve_lindblad, evolve_schrodinger, fmt_sig, Frame, IntegratorConfig,
    ModelKind,
};
use crate::model::{basis_state, pure_density, BasisLabel, SystemParams};
use crate::{Error, Result, C64};

use super::config::{apply_fixed, BaseRatios, SweepSpec};

/// Why a grid point did or did not produce a fidelity value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    /// Dispersive couplings undefined (Δ = 0 or Δ² = N ν²).
    Singular,
    /// η ≤ 0, so no generation time exists at these ratios.
    NoGenerationTime,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Singular => "singular",
            PointStatus::NoGenerationTime => "no_generation_time",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    /// Generation time in 1/f units; NaN when the point has no such time.
    pub t_gen: f64,
    /// Fidelity of the reduced atomic state against the target; NaN when
    /// the point is flagged.
    pub fidelity: f64,
    pub status: PointStatus,
}

#[derive(Debug)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub wall_time_ms: u64,
}

/// Resolve the physical parameters at one grid point: base ratios first,
/// then the axis values in listed order.
pub fn point_params(spec: &SweepSpec, flat_index: usize) -> Result<SystemParams> {
    let mut ratios: BaseRatios = spec.base;
    let mut rem = flat_index;
    // Row-major: the last axis varies fastest.
    let mut indices = vec![0usize; spec.axes.len()];
    for (slot, axis) in spec.axes.iter().enumerate().rev() {
        indices[slot] = rem % axis.points;
        rem /= axis.points;
    }
    for (axis, &i) in spec.axes.iter().zip(&indices) {
        apply_fixed(axis.param, axis.value(i), &mut ratios)?;
    }
    let mut p = SystemParams::from_ratios(
        spec.n_atoms,
        ratios.delta_over_f,
        ratios.nu_over_f,
        ratios.gamma_atom_over_f,
        ratios.gamma_cavity_over_f,
        ratios.kappa_over_f,
    )?;
    if let Some(f_mhz) = ratios.f_absolute_mhz {
        p = p.with_absolute_scale(f_mhz);
    }
    Ok(p)
}

fn axis_values(spec: &SweepSpec, flat_index: usize) -> Vec<f64> {
    let mut rem = flat_index;
    let mut indices = vec![0usize; spec.axes.len()];
    for (slot, axis) in spec.axes.iter().enumerate().rev() {
        indices[slot] = rem % axis.points;
        rem /= axis.points;
    }
    spec.axes
        .iter()
        .zip(&indices)
        .map(|(axis, &i)| axis.value(i))
        .collect()
}

/// Default step config for the protocol run, with an optional dt override.
pub fn protocol_config(
    p: &SystemParams,
    model: ModelKind,
    t_end: f64,
    dt: Option<f64>,
) -> IntegratorConfig {
    let cfg = match model {
        ModelKind::Lindblad => IntegratorConfig::lindblad_default(p, t_end),
        _ => IntegratorConfig::schrodinger_default(p, t_end),
    };
    match dt {
        Some(dt) => cfg.with_dt(dt),
        None => cfg,
    }
}

/// Run the generation protocol (atom 1 initially excited) under the chosen
/// model and frame.
pub fn evolve_generation(
    p: &SystemParams,
    model: ModelKind,
    frame: Frame,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<crate::dynamics::RunResult> {
    match model {
        ModelKind::Full => {
            let psi0 = basis_state(BasisLabel::AtomExcited(1), p.n_atoms)?;
            evolve_schrodinger(p, frame, &psi0, t_end, cfg)
        }
        ModelKind::Effective => {
            let mut c0 = DVector::from_element(p.n_atoms, C64::new(0.0, 0.0));
            c0[0] = C64::new(1.0, 0.0);
            evolve_effective(p, &c0, t_end, cfg)
        }
        ModelKind::Lindblad => {
            let psi0 = basis_state(BasisLabel::AtomExcited(1), p.n_atoms)?;
            evolve_lindblad(p, &pure_density(&psi0), t_end, cfg)
        }
    }
}

/// Fidelity at the k-th generation time under the chosen model, starting
/// from a single excited atom.
pub fn point_fidelity(spec: &SweepSpec, p: &SystemParams, t_gen: f64) -> Result<f64> {
    let cfg = protocol_config(p, spec.model, t_gen, spec.dt).final_only();
    let run = evolve_generation(p, spec.model, Frame::Static, t_gen, &cfg)?;
    Ok(run.final_sample().fidelity)
}

fn evaluate_point(spec: &SweepSpec, flat_index: usize) -> Result<SweepRow> {
    let axis_values = axis_values(spec, flat_index);
    let p = point_params(spec, flat_index)?;
    let t_gen = match generation_times(&p, spec.k) {
        Ok(times) => times[spec.k],
        Err(Error::Singular(_)) => {
            return Ok(SweepRow {
                axis_values,
                t_gen: f64::NAN,
                fidelity: f64::NAN,
                status: PointStatus::Singular,
            })
        }
        Err(Error::InvalidParams(_)) => {
            return Ok(SweepRow {
                axis_values,
                t_gen: f64::NAN,
                fidelity: f64::NAN,
                status: PointStatus::NoGenerationTime,
            })
        }
        Err(e) => return Err(e),
    };
    let fidelity = point_fidelity(spec, &p, t_gen)?;
    Ok(SweepRow {
        axis_values,
        t_gen,
        fidelity,
        status: PointStatus::Ok,
    })
}

/// Evaluate every grid point. Points are independent, so they run on a
/// rayon pool; row order is the row-major grid order regardless of the
/// worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let started = Instant::now();
    let n_points = spec.grid_size();
    let eval = || -> Result<Vec<SweepRow>> {
        (0..n_points)
            .into_par_iter()
            .map(|i| evaluate_point(spec, i))
            .collect()
    };
    let rows = match spec.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("workers: {e}")))?
            .install(eval)?,
        None => eval()?,
    };
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

impl SweepResult {
    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = self
            .spec
            .axes
            .iter()
            .map(|a| a.param.name().to_string())
            .collect();
        cols.push("t_gen".into());
        cols.push("fidelity".into());
        cols.push("status".into());
        cols.join(",")
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for row in &self.rows {
            let mut cells: Vec<String> = row.axis_values.iter().map(|v| fmt_sig(*v)).collect();
            cells.push(fmt_sig(row.t_gen));
            cells.push(fmt_sig(row.fidelity));
            cells.push(row.status.as_str().to_string());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Best fidelity over the valid rows, with the axis values it occurred at.
    pub fn peak(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.status == PointStatus::Ok)
            .max_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
    }

    pub fn flagged_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status != PointStatus::Ok)
            .count()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let axes: Vec<serde_json::Value> = self
            .spec
            .axes
            .iter()
            .map(|a| {
                json!({
                    "name": a.param.name(),
                    "min": a.min,
                    "max": a.max,
                    "points": a.points,
                })
            })
            .collect();
        let peak = self.peak().map(|row| {
            json!({
                "axis_values": row.axis_values,
                "fidelity": row.fidelity,
                "t_gen": row.t_gen,
            })
        });
        json!({
            "model": self.spec.model,
            "n_atoms": self.spec.n_atoms,
            "axes": axes,
            "base": {
                "delta_over_f": self.spec.base.delta_over_f,
                "nu_over_f": self.spec.base.nu_over_f,
                "Gamma_over_f": self.spec.base.gamma_atom_over_f,
                "gamma_over_f": self.spec.base.gamma_cavity_over_f,
                "kappa_over_f": self.spec.base.kappa_over_f,
                "f_absolute_mhz": self.spec.base.f_absolute_mhz,
            },
            "k": self.spec.k,
            "n_points": self.rows.len(),
            "flagged_points": self.flagged_count(),
            "peak": peak,
            "wall_time_ms": self.wall_time_ms,
        })
    }
}
