//! `nswp`: construct nonspreading wave packets and verify them.
//!
//! Every subcommand takes its parameters from an optional flat JSON file
//! (`--config`) and from flags; flags win. The merged configuration is written
//! back as `config.json` next to the outputs, so any run can be repeated with
//! `--config <dir>/config.json`.
//!
//! Exit codes: 0 ok, 1 a verification check failed, 2 bad configuration,
//! 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use nswp_core::cases::{
    airy_solution, reproduce, run_corrupted_phase_selftest, run_scenario, run_sho_timedep_freq,
    sho_solution, thin_snapshots, FrequencyDemoSpec, ScenarioKind, ScenarioSpec,
};
use nswp_core::construct::{GaugeFunction, NswpSolution, Shape};
use nswp_core::eigen::{lowest_eigenpairs, StaticPotential};
use nswp_core::io::{write_columns, write_json};
use nswp_core::propagate::{propagate, Boundary, PropagationConfig};
use nswp_core::trajectory::{trajectory_from_force, ForceSpec, Trajectory};
use nswp_core::verify::CheckSummary;
use nswp_core::{Error, Grid1D, PhysicalConstants};

/// Smallest ratio by which a corrupted phase must inflate the TDSE residual.
const CORRUPTION_RATIO: f64 = 100.0;

#[derive(Parser)]
#[command(
    name = "nswp",
    version,
    about = "Nonspreading wave packets: construction and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenpairs of a static potential
    Eigen(Opts),
    /// Build a packet and write its potential, phase table and snapshots
    Construct(Opts),
    /// Build a packet and propagate it with Crank-Nicolson
    Propagate(Opts),
    /// Run a scenario and its checks; exit 1 if any check fails
    Verify(Opts),
    /// Run the three family scenarios and write a combined report
    Reproduce(Opts),
}

#[derive(Args)]
struct Opts {
    /// flat JSON file of parameters; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: RunConfig,
}

/// Every parameter any subcommand understands. Keys are the field names in
/// JSON and the kebab-case flags on the command line.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    /// sho | airy-free | airy-forced | sho-timedep-freq | corrupted-phase | custom
    #[arg(long)]
    scenario: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// harmonic | linear | quartic | sampled
    #[arg(long)]
    potential: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// slope A of the linear potential V = A x
    #[arg(long, allow_negative_numbers = true)]
    force: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// CSV with columns x,v for a sampled potential
    #[arg(long)]
    potential_file: Option<PathBuf>,
    /// Airy parameter B (A = B³/2m)
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// energy of the Airy shape
    #[arg(long, allow_negative_numbers = true)]
    energy: Option<f64>,

    /// mode index of the packet shape
    #[arg(long)]
    n: Option<usize>,
    /// number of eigenpairs
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phase: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    hbar: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mass: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    /// grid points
    #[arg(long)]
    points: Option<usize>,

    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// record metrics every this many steps
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// number of Ψ snapshots written as CSV
    #[arg(long)]
    snapshot_files: Option<usize>,
    /// dirichlet | mask
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    mask_width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mask_strength: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    window_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    window_max: Option<f64>,

    /// rest | sinusoid | polynomial | uniform-acceleration | spline | forced
    #[arg(long)]
    trajectory: Option<String>,
    /// polynomial coefficients c1,c2,... of d(t) = c1 t + c2 t² + ...
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    coeffs: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    accel: Option<f64>,
    /// CSV with columns t,d
    #[arg(long)]
    trajectory_file: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    v_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v_end: Option<f64>,
    /// zero | constant | sine
    #[arg(long)]
    force_kind: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    force_amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    force_omega: Option<f64>,
    /// default | zero | linear | harmonic
    #[arg(long)]
    gauge: Option<String>,
    /// output times for construct
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    times: Option<Vec<f64>>,
    /// frequency modulation depth for sho-timedep-freq
    #[arg(long, allow_negative_numbers = true)]
    modulation: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    tol_tdse: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_htilde: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_shape: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_centroid: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_momentum: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_force: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_energy: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_periodicity: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_peak: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_phi0: Option<f64>,
}

/// Why a command stopped.
enum Failure {
    Config(String),
    Numerical(String),
    Checks(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts) = match cli.command {
        Command::Eigen(o) => ("eigen", o),
        Command::Construct(o) => ("construct", o),
        Command::Propagate(o) => ("propagate", o),
        Command::Verify(o) => ("verify", o),
        Command::Reproduce(o) => ("reproduce", o),
    };
    let result = load_config(&opts).and_then(|cfg| match name {
        "eigen" => cmd_eigen(&cfg),
        "construct" => cmd_construct(&cfg),
        "propagate" => cmd_propagate(&cfg),
        "verify" => cmd_verify(&cfg),
        _ => cmd_reproduce(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(failed)) => {
            for f in failed {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(name) {
                eprintln!("{}", sub.render_usage());
            }
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Merges the JSON file and the flags (flags win) and rejects unknown keys.
fn load_config(opts: &Opts) -> Result<RunConfig, Failure> {
    let mut merged = Map::new();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => merged = map,
            Ok(_) => {
                return Err(Failure::Config(format!(
                    "{} is not a JSON object",
                    path.display()
                )))
            }
            Err(e) => return Err(Failure::Config(format!("{}: {e}", path.display()))),
        }
    }
    let Value::Object(flags) = serde_json::to_value(&opts.params).expect("config serializes")
    else {
        unreachable!("RunConfig is a struct");
    };
    for (key, value) in flags {
        if !value.is_null() {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| Failure::Config(format!("config: {e}")))
}

fn required<T: Clone>(v: &Option<T>, key: &str) -> Result<T, Failure> {
    v.clone()
        .ok_or_else(|| Failure::Config(format!("missing required parameter `{key}`")))
}

fn out_dir(cfg: &RunConfig, default: &str) -> Result<PathBuf, Failure> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_config(dir: &Path, cfg: &RunConfig) -> CmdResult {
    write_json(dir.join("config.json"), cfg)?;
    Ok(())
}

fn constants(cfg: &RunConfig) -> Result<PhysicalConstants, Failure> {
    Ok(PhysicalConstants::new(
        cfg.hbar.unwrap_or(1.0),
        cfg.mass.unwrap_or(1.0),
    )?)
}

fn grid(cfg: &RunConfig, default: Grid1D) -> Result<Grid1D, Failure> {
    Ok(Grid1D::new(
        cfg.x_min.unwrap_or(default.x_min()),
        cfg.x_max.unwrap_or(default.x_max()),
        cfg.points.unwrap_or(default.len()),
    )?)
}

fn default_grid() -> Grid1D {
    Grid1D::new(-12.0, 12.0, 2048).expect("static grid")
}

fn static_potential(cfg: &RunConfig) -> Result<StaticPotential, Failure> {
    let kind = required(&cfg.potential, "potential")?;
    Ok(match kind.as_str() {
        "harmonic" => StaticPotential::harmonic(cfg.omega.unwrap_or(1.0))?,
        "linear" => StaticPotential::linear(required(&cfg.force, "force")?)?,
        "quartic" => StaticPotential::quartic(cfg.lambda.unwrap_or(1.0))?,
        "sampled" => {
            let path = required(&cfg.potential_file, "potential_file")?;
            let (xs, vs) = read_two_columns(&path, "x", "v")?;
            StaticPotential::sampled(path.display().to_string(), xs, vs)?
        }
        other => return Err(Failure::Config(format!("unknown potential `{other}`"))),
    })
}

fn read_two_columns(path: &Path, a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let bad = |msg: String| Failure::Config(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (ia, ib) = (col(a)?, col(b)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for line in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64, Failure> {
            cells
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(format!("bad row `{line}`")))
        };
        xs.push(num(ia)?);
        ys.push(num(ib)?);
    }
    Ok((xs, ys))
}

fn force_spec(cfg: &RunConfig, default: ForceSpec) -> Result<ForceSpec, Failure> {
    let spec = match cfg.force_kind.as_deref() {
        None => default,
        Some("zero") => ForceSpec::Zero,
        Some("constant") => ForceSpec::Constant {
            value: required(&cfg.force_amplitude, "force_amplitude")?,
        },
        Some("sine") => ForceSpec::Sine {
            amplitude: cfg.force_amplitude.unwrap_or(0.3),
            omega: cfg.force_omega.unwrap_or(2.0),
        },
        Some(other) => return Err(Failure::Config(format!("unknown force_kind `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// The preset named by `scenario`, with every override applied.
fn scenario_spec(cfg: &RunConfig) -> Result<ScenarioSpec, Failure> {
    let scenario = required(&cfg.scenario, "scenario")?;
    let mut spec = match scenario.as_str() {
        "sho" => ScenarioSpec::sho(
            cfg.n.unwrap_or(0),
            cfg.amplitude.unwrap_or(2.0),
            cfg.omega.unwrap_or(1.0),
        ),
        "airy-free" => ScenarioSpec::airy_free(),
        "airy-forced" => ScenarioSpec::airy_forced(force_spec(
            cfg,
            ForceSpec::Sine {
                amplitude: 0.3,
                omega: 2.0,
            },
        )?),
        other => return Err(Failure::Config(format!("unknown scenario `{other}`"))),
    };
    if let Some(b) = cfg.b {
        match &mut spec.kind {
            ScenarioKind::AiryFree { b: v } | ScenarioKind::AiryForced { b: v, .. } => *v = b,
            ScenarioKind::ShoShifted { .. } => {
                return Err(Failure::Config("`b` applies to Airy scenarios".into()))
            }
        }
    }
    spec.constants = constants(cfg)?;
    apply_propagation(cfg, &mut spec.propagation)?;
    if let Some(v) = cfg.snapshot_files {
        spec.snapshot_files = v;
    }
    let t = &mut spec.tolerances;
    let overrides = [
        (cfg.tol_tdse, &mut t.tdse_residual),
        (cfg.tol_htilde, &mut t.htilde_residual),
        (cfg.tol_shape, &mut t.shape_deviation),
        (cfg.tol_centroid, &mut t.centroid),
        (cfg.tol_momentum, &mut t.momentum),
        (cfg.tol_force, &mut t.force),
        (cfg.tol_energy, &mut t.energy),
        (cfg.tol_periodicity, &mut t.periodicity),
        (cfg.tol_peak, &mut t.peak_relative),
        (cfg.tol_phi0, &mut t.phi0_cross),
    ];
    for (value, slot) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn apply_propagation(cfg: &RunConfig, p: &mut PropagationConfig) -> CmdResult {
    p.grid = grid(cfg, p.grid)?;
    if let Some(v) = cfg.dt {
        p.dt = v;
    }
    if let Some(v) = cfg.t_end {
        p.t_end = v;
    }
    if let Some(v) = cfg.snapshot_stride {
        p.snapshot_stride = v;
    }
    match cfg.boundary.as_deref() {
        None => {}
        Some("dirichlet") => p.boundary = Boundary::Dirichlet,
        Some("mask") => {
            let (w, s) = match p.boundary {
                Boundary::AbsorbingMask { width, strength } => (width, strength),
                Boundary::Dirichlet => (6.0, 40.0),
            };
            p.boundary = Boundary::AbsorbingMask {
                width: cfg.mask_width.unwrap_or(w),
                strength: cfg.mask_strength.unwrap_or(s),
            };
        }
        Some(other) => return Err(Failure::Config(format!("unknown boundary `{other}`"))),
    }
    if let (Boundary::AbsorbingMask { width, strength }, None) =
        (&mut p.boundary, cfg.boundary.as_deref())
    {
        if let Some(v) = cfg.mask_width {
            *width = v;
        }
        if let Some(v) = cfg.mask_strength {
            *strength = v;
        }
    }
    if cfg.window_min.is_some() || cfg.window_max.is_some() {
        let (lo, hi) = p.window();
        p.comparison_window = Some((cfg.window_min.unwrap_or(lo), cfg.window_max.unwrap_or(hi)));
    }
    p.validate()?;
    Ok(())
}

/// A packet from a preset scenario or from explicit potential, trajectory and
/// gauge, together with the propagation settings that go with it.
fn build_solution(cfg: &RunConfig) -> Result<(NswpSolution, PropagationConfig), Failure> {
    match cfg.scenario.as_deref() {
        Some("sho") | Some("airy-free") | Some("airy-forced") => {
            let spec = scenario_spec(cfg)?;
            let p = spec.propagation.clone();
            let horizon = p.t_end + 0.01;
            let sol = match spec.kind {
                ScenarioKind::ShoShifted {
                    n,
                    amplitude,
                    omega,
                } => sho_solution(n, amplitude, omega, &p.grid, &spec.constants, horizon)?,
                ref kind => airy_solution(kind, &spec.constants, horizon)?,
            };
            Ok((sol, p))
        }
        None | Some("custom") => custom_solution(cfg),
        Some(other) => Err(Failure::Config(format!(
            "scenario `{other}` has no single packet to construct"
        ))),
    }
}

fn custom_solution(cfg: &RunConfig) -> Result<(NswpSolution, PropagationConfig), Failure> {
    let consts = constants(cfg)?;
    let v = static_potential(cfg)?;
    let g = grid(cfg, default_grid())?;
    let mut p = PropagationConfig::new(g, 1e-3, 1.0);
    apply_propagation(cfg, &mut p)?;
    let horizon = p.t_end + 0.01;

    let traj = match cfg.trajectory.as_deref().unwrap_or("rest") {
        "rest" => Trajectory::Rest,
        "sinusoid" => Trajectory::sinusoid(
            required(&cfg.amplitude, "amplitude")?,
            cfg.omega.unwrap_or(1.0),
            cfg.phase.unwrap_or(0.0),
        )?,
        "polynomial" => Trajectory::polynomial(
            std::iter::once(0.0)
                .chain(required(&cfg.coeffs, "coeffs")?)
                .collect(),
        )?,
        "uniform-acceleration" => Trajectory::uniform_acceleration(required(&cfg.accel, "accel")?)?,
        "spline" => Trajectory::spline_from_csv(
            required(&cfg.trajectory_file, "trajectory_file")?,
            cfg.v_start.unwrap_or(0.0),
            cfg.v_end.unwrap_or(0.0),
        )?,
        "forced" => {
            let f = force_spec(cfg, ForceSpec::Zero)?;
            trajectory_from_force(
                cfg.force.unwrap_or(0.0),
                f.to_fn(),
                f.label(),
                &consts,
                horizon,
                1e-12,
            )?
        }
        other => return Err(Failure::Config(format!("unknown trajectory `{other}`"))),
    };
    let gauge = match cfg.gauge.as_deref().unwrap_or("default") {
        "default" => GaugeFunction::default_for(&v),
        "zero" => GaugeFunction::Zero,
        "linear" => GaugeFunction::LinearCompensation {
            force: required(&cfg.force, "force")?,
        },
        "harmonic" => GaugeFunction::HarmonicCompensation {
            omega: cfg.omega.unwrap_or(1.0),
        },
        other => return Err(Failure::Config(format!("unknown gauge `{other}`"))),
    };
    let shape = match &v {
        StaticPotential::Linear { force } => Shape::Airy {
            force: *force,
            energy: cfg.energy.unwrap_or(0.0),
        },
        _ => {
            let n = cfg.n.unwrap_or(0);
            Shape::Sampled(
                lowest_eigenpairs(&v, &g, &consts, n + 1)?
                    .pop()
                    .expect("n + 1 pairs were requested"),
            )
        }
    };
    Ok((
        NswpSolution::new(shape, v, traj, gauge, consts, horizon)?,
        p,
    ))
}

fn cmd_eigen(cfg: &RunConfig) -> CmdResult {
    let consts = constants(cfg)?;
    let v = static_potential(cfg)?;
    let g = grid(cfg, default_grid())?;
    let k = cfg.k.unwrap_or(3);
    let dir = out_dir(cfg, "out/eigen")?;
    let pairs = lowest_eigenpairs(&v, &g, &consts, k)?;
    write_columns(
        dir.join("energies.csv"),
        &["index", "energy", "residual"],
        pairs
            .iter()
            .map(|p| vec![p.index as f64, p.energy, p.residual]),
    )?;
    for p in &pairs {
        p.export(
            dir.join(format!("mode_{}.csv", p.index)),
            dir.join(format!("mode_{}.json", p.index)),
        )?;
    }
    write_config(&dir, cfg)?;
    for p in &pairs {
        println!("E{} = {}", p.index, nswp_core::io::fmt_g17(p.energy));
    }
    Ok(())
}

fn cmd_construct(cfg: &RunConfig) -> CmdResult {
    // the phase tables must cover every requested time
    let mut cfg = cfg.clone();
    if let Some(t_max) = cfg
        .times
        .as_ref()
        .and_then(|ts| ts.iter().copied().reduce(f64::max))
    {
        if cfg.t_end.is_none_or(|t| t < t_max) {
            cfg.t_end = Some(t_max);
        }
    }
    let cfg = &cfg;
    let (sol, p) = build_solution(cfg)?;
    let dir = out_dir(cfg, "out/construct")?;
    let times = cfg
        .times
        .clone()
        .unwrap_or_else(|| (0..=4).map(|i| p.t_end * i as f64 / 4.0).collect());
    if times
        .iter()
        .any(|t| !(t.is_finite() && *t >= 0.0 && *t <= sol.horizon()))
    {
        return Err(Failure::Config(format!(
            "times must lie in [0, {}]",
            sol.horizon()
        )));
    }
    sol.write_manifest(dir.join("manifest.json"))?;
    sol.write_phase_table(dir.join("phase_table.csv"), &times)?;
    for (i, &t) in times.iter().enumerate() {
        let v = sol.v_nswp_samples(&p.grid, t)?;
        write_columns(
            dir.join(format!("v_nswp_{i:03}.csv")),
            &["x", "v"],
            p.grid.points().zip(v).map(|(x, v)| vec![x, v]),
        )?;
        sol.analytic_psi(&p.grid, t)?
            .write_csv(dir.join(format!("psi_{i:03}.csv")))?;
    }
    write_config(&dir, cfg)?;
    Ok(())
}

fn cmd_propagate(cfg: &RunConfig) -> CmdResult {
    let (sol, mut p) = build_solution(cfg)?;
    let dir = out_dir(cfg, "out/propagate")?;
    let files = cfg.snapshot_files.unwrap_or(4);
    p.keep_snapshots = files > 0;
    sol.write_manifest(dir.join("manifest.json"))?;
    write_config(&dir, cfg)?;
    let initial = sol.analytic_psi(&p.grid, 0.0)?;
    let potential = |g: &Grid1D, t: f64| sol.v_nswp_samples(g, t);
    let mut report = match propagate(&initial, &potential, &sol, &p) {
        Ok(r) => r,
        Err(Error::Boundary {
            norm_loss,
            time,
            report,
        }) => {
            report.write_json(dir.join("report.json"))?;
            return Err(Failure::Numerical(format!(
                "packet reached the boundary at t = {time} (edge fraction {norm_loss:e}); partial report written"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    report.write_json(dir.join("report.json"))?;
    thin_snapshots(&mut report, files);
    report.write_snapshots(dir.join("snapshots"))?;
    println!(
        "{} records, max shape deviation {:e}",
        report.len(),
        report.max_shape_deviation()
    );
    Ok(())
}

fn check_result(summary: &CheckSummary) -> CmdResult {
    for c in &summary.checks {
        println!(
            "{:<28} {:>12.4e}  {} {:.1e}  {}",
            c.name,
            c.max_deviation,
            c.relation,
            c.tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    if summary.pass {
        Ok(())
    } else {
        Err(Failure::Checks(
            summary
                .failures()
                .map(|c| {
                    format!(
                        "{} = {:e} (tolerance {:e})",
                        c.name, c.max_deviation, c.tolerance
                    )
                })
                .collect(),
        ))
    }
}

#[derive(Serialize)]
struct PresetManifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    parameters: T,
}

fn cmd_verify(cfg: &RunConfig) -> CmdResult {
    let scenario = required(&cfg.scenario, "scenario")?;
    let dir = out_dir(cfg, &format!("out/verify-{scenario}"))?;
    let manifest = |parameters| PresetManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: &scenario,
        parameters,
    };
    let summary = match scenario.as_str() {
        "sho-timedep-freq" => {
            let mut spec = FrequencyDemoSpec::default();
            if let Some(v) = cfg.modulation {
                spec.modulation = v;
            }
            if let Some(v) = cfg.t_end {
                spec.t_end = v;
            }
            if cfg.amplitude.is_some() || cfg.omega.is_some() {
                spec.amplitude = cfg.amplitude.unwrap_or(spec.amplitude);
                spec.omega0 = cfg.omega.unwrap_or(spec.omega0);
                spec.propagation = ScenarioSpec::sho(0, spec.amplitude, spec.omega0).propagation;
                spec.propagation.snapshot_stride = 50;
            }
            let mut p = spec.propagation.clone();
            apply_propagation(
                &RunConfig {
                    t_end: None,
                    ..cfg.clone()
                },
                &mut p,
            )?;
            spec.propagation = p;
            write_json(
                dir.join("manifest.json"),
                &manifest(serde_json::to_value(&spec).expect("serializable")),
            )?;
            let outcome = run_sho_timedep_freq(&spec)?;
            write_json(dir.join("report.json"), &outcome)?;
            outcome.checks
        }
        "corrupted-phase" => {
            write_json(
                dir.join("manifest.json"),
                &manifest(serde_json::json!({ "min_ratio": CORRUPTION_RATIO })),
            )?;
            let summary = run_corrupted_phase_selftest(CORRUPTION_RATIO)?;
            write_json(dir.join("report.json"), &summary)?;
            summary
        }
        _ => {
            let spec = scenario_spec(cfg)?;
            let outcome = run_scenario(&spec)?;
            outcome.write_run_dir(&dir)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            outcome.checks
        }
    };
    write_config(&dir, cfg)?;
    check_result(&summary)
}

fn cmd_reproduce(cfg: &RunConfig) -> CmdResult {
    let dir = out_dir(cfg, "out/reproduce")?;
    let summary = reproduce(&dir)?;
    write_config(&dir, cfg)?;
    for s in &summary.scenarios {
        println!("{}: {}", s.name, if s.pass { "pass" } else { "FAIL" });
    }
    let failed: Vec<String> = summary
        .scenarios
        .iter()
        .flat_map(|s| {
            s.checks.iter().filter(|c| !c.pass).map(move |c| {
                format!(
                    "{}/{} = {:e} (tolerance {:e})",
                    s.name, c.name, c.max_deviation, c.tolerance
                )
            })
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(failed))
    }
}
