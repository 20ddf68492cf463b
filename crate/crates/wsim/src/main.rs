//! Command-line front end: closed-form series, single evolutions, grid
//! sweeps, and named scenario reproduction.
//!
//! Exit codes: 0 on success, 2 on validation or configuration errors,
//! 3 when the integrator aborts mid-run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wsim::analytic::{coefficients_from_couplings, effective_couplings, generation_times};
use wsim::dynamics::{evolve_fock, fmt_sig, Frame, ModelKind};
use wsim::experiments::{
    evolve_generation, parse_config, parse_frame, parse_model, protocol_config, run_scenario,
    run_sweep, OutputFormat, ParsedConfig, ScenarioConfig, ScenarioName,
};
use wsim::model::{basis_state, BasisLabel};
use wsim::normal_modes::build_transform;
use wsim::{Error, Result, SystemParams};

#[derive(Parser)]
#[command(
    name = "wsim",
    version,
    about = "Symmetric W-state generation in fiber-coupled cavities: \
             closed forms, Schrödinger/Lindblad integration, parameter sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Physical rates, all in units of the atom-cavity coupling f.
#[derive(Args)]
struct ParamArgs {
    /// Number of atom-cavity nodes
    #[arg(long = "n", default_value_t = 4)]
    n: usize,
    /// Atom-photon detuning Δ/f
    #[arg(long, default_value_t = 10.0)]
    delta: f64,
    /// Cavity-fiber coupling ν/f
    #[arg(long, default_value_t = 10.0)]
    nu: f64,
    /// Atomic spontaneous-emission rate Γ/f
    #[arg(long = "Gamma", default_value_t = 0.0)]
    gamma_atom: f64,
    /// Cavity photon decay rate γ/f
    #[arg(long = "gamma", default_value_t = 0.0)]
    gamma_cavity: f64,
    /// Fiber photon decay rate κ/f
    #[arg(long = "kappa", default_value_t = 0.0)]
    kappa: f64,
}

impl ParamArgs {
    fn build(&self) -> Result<SystemParams> {
        SystemParams::from_ratios(
            self.n,
            self.delta,
            self.nu,
            self.gamma_atom,
            self.gamma_cavity,
            self.kappa,
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form amplitudes, populations and fidelity vs time
    Analytic {
        #[command(flatten)]
        params: ParamArgs,
        /// End of the time window in 1/f units [default: 4π/(N|η|)]
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Sample spacing in 1/f units [default: t_end/1000]
        #[arg(long)]
        dt: Option<f64>,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: csv or json
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Integrate one trajectory from a single excited atom
    Evolve {
        #[command(flatten)]
        params: ParamArgs,
        /// Dynamical model: full, effective, or lindblad
        #[arg(long, default_value = "full")]
        model: String,
        /// Frame for the full model: static or interaction
        #[arg(long, default_value = "static")]
        frame: String,
        /// End time in 1/f units [default: first generation time]
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Integrator step in 1/f units [default: accuracy-based]
        #[arg(long)]
        dt: Option<f64>,
        /// Validate against the untruncated space with this photon cutoff
        #[arg(long)]
        nmax: Option<usize>,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: csv or json
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Run a parameter-grid sweep described by a JSON document
    Sweep {
        /// Sweep document (top-level "sweep" block)
        #[arg(long)]
        config: PathBuf,
        /// Output directory [default: .]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rayon worker threads [default: one per core]
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Reproduce a named scenario (fig2a..fig5b, feasibility, custom)
    Figure {
        /// Scenario name
        name: String,
        /// Scenario document with parameter overrides
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory [default: .]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rayon worker threads [default: one per core]
        #[arg(long)]
        workers: Option<usize>,
        /// Trajectory output format: csv or json
        #[arg(long)]
        format: Option<String>,
    },
    /// Dissipative run at candidate hardware rates (750 MHz coupling)
    Feasibility {
        /// Output directory [default: .]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trajectory output format: csv or json
        #[arg(long)]
        format: Option<String>,
    },
    /// Print the orthogonal photon normal-mode transform
    Transform {
        /// Number of atom-cavity nodes
        #[arg(long = "n", default_value_t = 4)]
        n: usize,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn cmd_analytic(
    params: &ParamArgs,
    t_end: Option<f64>,
    dt: Option<f64>,
    out: &Option<PathBuf>,
    format: &str,
) -> Result<()> {
    let format = OutputFormat::parse(format)?;
    let p = params.build()?;
    let cp = effective_couplings(&p)?;
    if cp.eta == 0.0 && t_end.is_none() {
        return Err(Error::InvalidParams(
            "η = 0 gives no oscillation period; pass --t-end explicitly".into(),
        ));
    }
    let n = p.n_atoms as f64;
    let t_end = match t_end {
        Some(t) => t,
        None => 4.0 * std::f64::consts::PI / (n * cp.eta.abs()),
    };
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let n_intervals = match dt {
        Some(dt) if dt > 0.0 => (t_end / dt).ceil().max(1.0) as usize,
        Some(dt) => {
            return Err(Error::InvalidParams(format!(
                "dt must be positive, got {dt}"
            )))
        }
        None => 1000,
    };
    let samples: Vec<(f64, f64, f64, f64, f64)> = (0..=n_intervals)
        .map(|i| {
            let t = t_end * i as f64 / n_intervals as f64;
            let c = coefficients_from_couplings(p.n_atoms, &cp, t);
            let pops = c.populations();
            (t, n * cp.eta * t, c.fidelity_to_target(), pops[0], pops[1])
        })
        .collect();
    let mut w = open_out(out)?;
    match format {
        OutputFormat::Csv => {
            writeln!(w, "t_f,tau,fidelity,pop_first,pop_other")?;
            for (t, tau, fid, p1, pn) in &samples {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_sig(*t),
                    fmt_sig(*tau),
                    fmt_sig(*fid),
                    fmt_sig(*p1),
                    fmt_sig(*pn)
                )?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = samples
                .iter()
                .map(|(t, tau, fid, p1, pn)| {
                    json!({"t": t, "tau": tau, "fidelity": fid,
                           "pop_first": p1, "pop_other": pn})
                })
                .collect();
            let doc = json!({
                "params": p,
                "xi": cp.xi,
                "eta": cp.eta,
                "generation_times": generation_times(&p, 1).ok(),
                "samples": rows,
            });
            serde_json::to_writer_pretty(&mut w, &doc)
                .map_err(|e| Error::Config(e.to_string()))?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    params: &ParamArgs,
    model: &str,
    frame: &str,
    t_end: Option<f64>,
    dt: Option<f64>,
    nmax: Option<usize>,
    out: &Option<PathBuf>,
    format: &str,
) -> Result<()> {
    let format = OutputFormat::parse(format)?;
    let model = parse_model(model)?;
    let frame = parse_frame(frame)?;
    let p = params.build()?;
    let t_end = match t_end {
        Some(t) => t,
        None => generation_times(&p, 0)?[0],
    };
    let cfg = protocol_config(&p, model, t_end, dt);
    let run = match nmax {
        None => evolve_generation(&p, model, frame, t_end, &cfg)?,
        Some(nmax) => {
            if model != ModelKind::Full {
                return Err(Error::InvalidParams(
                    "--nmax validates the full model; drop --model or set it to full".into(),
                ));
            }
            if frame != Frame::Static {
                return Err(Error::InvalidParams(
                    "--nmax runs use the static frame".into(),
                ));
            }
            let psi0 = basis_state(BasisLabel::AtomExcited(1), p.n_atoms)?;
            evolve_fock(&p, nmax, &psi0, t_end, &cfg)?
        }
    };
    let mut w = open_out(out)?;
    match format {
        OutputFormat::Csv => run.write_csv(&mut w)?,
        OutputFormat::Json => run.write_json(&mut w)?,
    }
    Ok(())
}

fn cmd_sweep(config: &Path, out: &Option<PathBuf>, workers: Option<usize>) -> Result<()> {
    let mut spec = match parse_config(config)? {
        ParsedConfig::Sweep(spec) => spec,
        ParsedConfig::Scenario(_) => {
            return Err(Error::Config(
                "sweep takes a document with a top-level \"sweep\" block; \
                 use `wsim figure <name>` for scenario documents"
                    .into(),
            ))
        }
    };
    if workers.is_some() {
        spec.workers = workers;
    }
    let result = run_sweep(&spec)?;
    let out_dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let grid_path = out_dir.join("sweep_grid.csv");
    result.write_csv(BufWriter::new(File::create(&grid_path)?))?;
    let mut summary = result.summary_json();
    summary["outputs"] = json!([grid_path.to_string_lossy()]);
    let summary_path = out_dir.join("sweep_summary.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&summary_path)?), &summary)
        .map_err(|e| Error::Config(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(())
}

fn cmd_figure(
    name: &str,
    config: &Option<PathBuf>,
    out: &Option<PathBuf>,
    workers: Option<usize>,
    format: &Option<String>,
) -> Result<()> {
    let scenario = ScenarioName::parse(name)?;
    let mut cfg = match config {
        Some(path) => match parse_config(path)? {
            ParsedConfig::Scenario(cfg) => {
                if cfg.scenario != scenario {
                    return Err(Error::Config(format!(
                        "config names scenario \"{}\" but the command asked for \"{}\"",
                        cfg.scenario.as_str(),
                        scenario.as_str()
                    )));
                }
                cfg
            }
            ParsedConfig::Sweep(_) => {
                return Err(Error::Config(
                    "figure takes a scenario document; use `wsim sweep` for sweep blocks".into(),
                ))
            }
        },
        None => ScenarioConfig::named(scenario),
    };
    if let Some(out) = out {
        cfg.out = Some(out.to_string_lossy().into_owned());
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    if let Some(format) = format {
        cfg.format = OutputFormat::parse(format)?;
    }
    let outcome = run_scenario(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap());
    Ok(())
}

fn cmd_transform(n: usize, out: &Option<PathBuf>) -> Result<()> {
    let transform = build_transform(n)?;
    let mut w = open_out(out)?;
    transform.write_csv(&mut w)?;
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Analytic {
            params,
            t_end,
            dt,
            out,
            format,
        } => cmd_analytic(params, *t_end, *dt, out, format),
        Command::Evolve {
            params,
            model,
            frame,
            t_end,
            dt,
            nmax,
            out,
            format,
        } => cmd_evolve(params, model, frame, *t_end, *dt, *nmax, out, format),
        Command::Sweep {
            config,
            out,
            workers,
        } => cmd_sweep(config, out, *workers),
        Command::Figure {
            name,
            config,
            out,
            workers,
            format,
        } => cmd_figure(name, config, out, *workers, format),
        Command::Feasibility { out, format } => {
            cmd_figure("feasibility", &None, out, None, format)
        }
        Command::Transform { n, out } => cmd_transform(*n, out),
    }
}

fn main() {
    if let Err(e) = real_main() {
        // A closed pipe (e.g. piping into `head`) is not a failure.
        if let Error::Io(io) = &e {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("error: {e}");
        let code = match e {
            Error::IntegratorAbort(_) => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}
