//! Command-line front end. [`run`] is the whole program minus process exit.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 solver error,
//! 3 verification failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{self, AnalysisError, NodeOptions, RingOptions};
use crate::config::{RunConfig, Task};
use crate::dhw::{solve_point, H9Reading, SolverOptions};
use crate::field::{FieldConfig, Momentum3};
use crate::io::{self as gridio, IoError};
use crate::ode::Method;
use crate::qve::{compare_pairs, qve_solve_point};
use crate::semianalytic::{self, Spin};
use crate::sweep::{self, CheckpointOptions, Executor, GridSpec, Plane, SweepError, SweepOutcome};

/// Environment variable capping the number of worker threads.
pub const MAX_WORKERS_ENV: &str = "PAIRSPEC_MAX_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "pairspec", version, about = "Momentum spectra of pairs created by oscillating electric fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Final occupation at one momentum.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Momentum as qx,qy,qz (units of m).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Option<Vec<f64>>,
    },
    /// Occupation on a momentum-plane grid; writes CSV, optional raw grid and a JSON sidecar.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Exit with status 2 if any grid point was flagged.
        #[arg(long)]
        strict: bool,
        /// Persist progress to <dir>/<stem>.ckpt and resume from it.
        #[arg(long)]
        checkpoint: bool,
    },
    /// Occupation at fixed momentum as a function of the carrier frequency.
    ScanFreq {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Option<Vec<f64>>,
        /// Frequency range as min,max (units of m).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        omega_range: Option<Vec<f64>>,
        #[arg(long)]
        n_omega: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ring radii and node positions from the effective-mass model.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n_min: Option<u32>,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long, value_enum)]
        spin: Option<SpinArg>,
    },
    /// Rings, nodes and recovered frequency from a sweep output.
    Analyze {
        /// Grid CSV or its JSON sidecar.
        grid: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-checks the DHW solver against the quantum Vlasov equation on a grid.
    CompareOracle {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SpinArg {
    Fermion,
    Boson,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Dop853,
    Dopri5,
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ReadingArg {
    Pe,
    Ep,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Peak field strength in units of the critical field.
    #[arg(long)]
    e0: Option<f64>,
    /// Carrier frequency in units of m.
    #[arg(long)]
    omega: Option<f64>,
    /// Pulse duration in units of 1/m.
    #[arg(long)]
    tau: Option<f64>,
    /// Carrier phase in radians.
    #[arg(long)]
    phi: Option<f64>,
    /// Polarization, 0 linear to 1 circular.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    h9_reading: Option<ReadingArg>,
    /// Worker threads (capped by PAIRSPEC_MAX_WORKERS).
    #[arg(short, long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, value_enum)]
    plane: Option<PlaneArg>,
    /// Square grid: n points per axis over [-half_width, half_width].
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    /// Value of the momentum component normal to the plane.
    #[arg(long)]
    fixed: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum PlaneArg {
    Xy,
    Xz,
    Yz,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    stem: Option<String>,
    /// Also write the raw little-endian float64 grid.
    #[arg(long)]
    raw: bool,
}

/// Error with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

fn input(msg: impl ToString) -> Failure {
    Failure { code: 1, msg: msg.to_string() }
}

fn solver(msg: impl ToString) -> Failure {
    Failure { code: 2, msg: msg.to_string() }
}

fn from_sweep(e: SweepError) -> Failure {
    match e {
        SweepError::Solve(s) => match s {
            crate::dhw::SolveError::Field(_) | crate::dhw::SolveError::Options(_) | crate::dhw::SolveError::BadMomentum => input(s),
            other => solver(other),
        },
        SweepError::Pool(_) => solver(e),
        other => input(other),
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        input(e)
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve { common, q } => cmd_solve(&common, q, out),
        Command::Sweep {
            common,
            grid,
            output,
            strict,
            checkpoint,
        } => cmd_sweep(&common, &grid, &output, strict, checkpoint, out),
        Command::ScanFreq {
            common,
            q,
            omega_range,
            n_omega,
            output,
        } => cmd_scan_freq(&common, q, omega_range, n_omega, &output, out),
        Command::Predict { common, n_min, n_max, spin } => cmd_predict(&common, n_min, n_max, spin, out),
        Command::Analyze { grid, out: path } => cmd_analyze(&grid, path.as_deref(), out),
        Command::CompareOracle { common, grid } => cmd_compare_oracle(&common, &grid, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

/// Loads the config file (if any) and applies flag overrides.
fn load(common: &CommonArgs) -> Result<RunConfig, Failure> {
    load_with(common, None)
}

/// As `load`, with a stand-in carrier frequency for commands that set it themselves.
fn load_with(common: &CommonArgs, omega_default: Option<f64>) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(|e| input(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::empty(),
    };
    let any_field = common.e0.is_some() || common.omega.is_some() || common.tau.is_some() || common.phi.is_some() || common.delta.is_some();
    if any_field {
        let mut f = match cfg.field {
            Some(f) => f,
            None => {
                let (Some(e0), Some(omega)) = (common.e0, common.omega.or(omega_default)) else {
                    return Err(input("without a [field] section both --e0 and --omega are required"));
                };
                crate::config::FieldSection {
                    e0_over_ecr: e0,
                    omega_over_m: omega,
                    tau_times_m: 100.0,
                    phi_rad: 0.0,
                    delta: 0.0,
                }
            }
        };
        if let Some(v) = common.e0 {
            f.e0_over_ecr = v;
        }
        if let Some(v) = common.omega {
            f.omega_over_m = v;
        }
        if let Some(v) = common.tau {
            f.tau_times_m = v;
        }
        if let Some(v) = common.phi {
            f.phi_rad = v;
        }
        if let Some(v) = common.delta {
            f.delta = v;
        }
        cfg.field = Some(f);
    }
    if let Some(v) = common.rel_tol {
        cfg.solver.rel_tol = v;
    }
    if let Some(v) = common.abs_tol {
        cfg.solver.abs_tol = v;
    }
    if let Some(m) = common.method {
        cfg.solver.method = match m {
            MethodArg::Dop853 => Method::Dop853,
            MethodArg::Dopri5 => Method::Dopri5,
            MethodArg::Rk4Fixed => Method::Rk4Fixed,
        };
    }
    if let Some(r) = common.h9_reading {
        cfg.solver.h9_reading = match r {
            ReadingArg::Pe => H9Reading::PE,
            ReadingArg::Ep => H9Reading::EP,
        };
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    Ok(cfg)
}

fn essentials(cfg: &RunConfig) -> Result<(FieldConfig, SolverOptions), Failure> {
    let field = cfg.field_config().map_err(input)?;
    let opts = cfg.solver_options().map_err(input)?;
    Ok((field, opts))
}

fn executor(cfg: &RunConfig) -> Result<Executor, Failure> {
    let requested = cfg.workers.unwrap_or_else(|| Executor::default().workers);
    let cap = match std::env::var(MAX_WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| input(format!("{MAX_WORKERS_ENV} must be a positive integer, got {v:?}")))?,
        ),
        Err(_) => None,
    };
    if requested == 0 || cap == Some(0) {
        return Err(input("worker count must be positive"));
    }
    Ok(Executor::new(cap.map_or(requested, |c| requested.min(c))))
}

fn momentum(v: &[f64]) -> Result<Momentum3, Failure> {
    match v {
        [x, y, z] => Ok(Momentum3::new(*x, *y, *z)),
        _ => Err(input(format!("momentum needs three components qx,qy,qz, got {}", v.len()))),
    }
}

fn config_json(cfg: &RunConfig) -> Option<serde_json::Value> {
    serde_json::to_value(cfg).ok()
}

fn cmd_solve(common: &CommonArgs, q: Option<Vec<f64>>, out: &mut dyn Write) -> Outcome {
    let cfg = load(common)?;
    let (field, opts) = essentials(&cfg)?;
    let q = match (q, cfg.point) {
        (Some(v), _) => momentum(&v)?,
        (None, Some(p)) => momentum(&p.q_over_m)?,
        (None, None) => return Err(input("no momentum given (--q or a [point] section)")),
    };
    let r = solve_point(q, &field, &opts).map_err(|e| match e {
        crate::dhw::SolveError::Field(_) | crate::dhw::SolveError::Options(_) | crate::dhw::SolveError::BadMomentum => input(e),
        other => solver(other),
    })?;
    let _ = writeln!(out, "q = ({}, {}, {})", q.qx, q.qy, q.qz);
    let _ = writeln!(out, "f_final = {}", gridio::fmt_f64(r.f_final));
    let _ = writeln!(out, "f_raw = {}", gridio::fmt_f64(r.f_raw));
    let _ = writeln!(out, "constancy_residual = {}", gridio::fmt_f64(r.constancy_residual));
    let _ = writeln!(out, "steps = {}", r.n_steps);
    let _ = writeln!(out, "clipped = {}", r.clip_flag);
    Ok(())
}

fn grid_spec(cfg: &RunConfig, args: &GridArgs) -> Result<GridSpec, Failure> {
    let base = match cfg.task() {
        Ok(Task::Grid(g)) => Some(g),
        _ => cfg.grid.map(GridSpec::from),
    };
    let mut spec = match (base, args.n, args.half_width) {
        (Some(g), _, _) => g,
        (None, Some(n), Some(h)) => GridSpec::square(Plane::Xy, h, n),
        (None, _, _) => return Err(input("no grid given (a [grid] section or --n with --half-width)")),
    };
    if let (Some(n), Some(h)) = (args.n, args.half_width) {
        spec = GridSpec {
            plane: spec.plane,
            fixed_value: spec.fixed_value,
            ..GridSpec::square(spec.plane, h, n)
        };
    } else if args.n.is_some() || args.half_width.is_some() {
        return Err(input("--n and --half-width must be given together"));
    }
    if let Some(p) = args.plane {
        spec.plane = match p {
            PlaneArg::Xy => Plane::Xy,
            PlaneArg::Xz => Plane::Xz,
            PlaneArg::Yz => Plane::Yz,
        };
    }
    if let Some(v) = args.fixed {
        spec.fixed_value = v;
    }
    spec.validate().map_err(input)?;
    Ok(spec)
}

fn output_target(cfg: &RunConfig, args: &OutputArgs) -> (PathBuf, String, bool) {
    let dir = args.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let stem = args.stem.clone().unwrap_or_else(|| cfg.output.stem.clone());
    (dir, stem, args.raw || cfg.output.raw)
}

fn cmd_sweep(common: &CommonArgs, gargs: &GridArgs, oargs: &OutputArgs, strict: bool, checkpoint: bool, out: &mut dyn Write) -> Outcome {
    let cfg = load(common)?;
    let (field, opts) = essentials(&cfg)?;
    let spec = grid_spec(&cfg, gargs)?;
    let exec = executor(&cfg)?;
    let (dir, stem, raw) = output_target(&cfg, oargs);
    let grid = if checkpoint || cfg.output.checkpoint {
        fs::create_dir_all(&dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
        let ck = CheckpointOptions::new(dir.join(format!("{stem}.ckpt")));
        match sweep::sweep_grid_checkpointed(&field, &spec, &opts, &exec, &ck).map_err(from_sweep)? {
            SweepOutcome::Complete(g) => g,
            SweepOutcome::Partial { done, total } => return Err(solver(format!("sweep stopped after {done} of {total} points"))),
        }
    } else {
        sweep::sweep_grid(&field, &spec, &opts, &exec).map_err(from_sweep)?
    };
    let mut run_cfg = cfg.clone();
    run_cfg.grid = Some(crate::config::GridTask {
        plane: spec.plane,
        fixed_over_m: spec.fixed_value,
        axis1_over_m: [spec.min1, spec.max1],
        n1: spec.n1,
        axis2_over_m: [spec.min2, spec.max2],
        n2: spec.n2,
    });
    run_cfg.workers = None;
    run_cfg.output = crate::config::OutputSection {
        dir: dir.clone(),
        stem: stem.clone(),
        raw,
        checkpoint: checkpoint || cfg.output.checkpoint,
    };
    let files = gridio::write_grid(&grid, &dir, &stem, raw, config_json(&run_cfg))?;
    let flagged = grid.flagged();
    let _ = writeln!(out, "wrote {}", files.csv.display());
    if let Some(p) = &files.raw {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    let _ = writeln!(out, "wrote {}", files.sidecar.display());
    let _ = writeln!(out, "points = {}, flagged = {}", grid.values.len(), flagged);
    if strict && flagged > 0 {
        return Err(solver(format!("{flagged} grid points were flagged")));
    }
    Ok(())
}

#[derive(Serialize)]
struct PeaksReport<'a> {
    q_over_m: [f64; 3],
    delta: f64,
    peaks: &'a [analysis::ResonancePeak],
}

fn cmd_scan_freq(
    common: &CommonArgs,
    q: Option<Vec<f64>>,
    range: Option<Vec<f64>>,
    n_omega: Option<usize>,
    oargs: &OutputArgs,
    out: &mut dyn Write,
) -> Outcome {
    let lo = range.as_ref().and_then(|r| r.first().copied()).filter(|w| w.is_finite() && *w > 0.0);
    let cfg = load_with(common, lo)?;
    let (field, opts) = essentials(&cfg)?;
    let mut scan = cfg.scan.unwrap_or(crate::config::ScanTask {
        q_over_m: [0.0; 3],
        omega_over_m: [f64::NAN; 2],
        n_omega: 0,
        peak_prominence: 1e-2,
    });
    if let Some(v) = q {
        let m = momentum(&v)?;
        scan.q_over_m = [m.qx, m.qy, m.qz];
    }
    if let Some(r) = range {
        let [lo, hi] = r[..] else {
            return Err(input("--omega-range needs two values min,max"));
        };
        scan.omega_over_m = [lo, hi];
    }
    if let Some(n) = n_omega {
        scan.n_omega = n;
    }
    let spec = RunConfig::scan_spec(&scan, field);
    spec.validate().map_err(input)?;
    let exec = executor(&cfg)?;
    let curve = sweep::sweep_frequency(&spec, &opts, &exec).map_err(from_sweep)?;
    let (dir, stem, _) = output_target(&cfg, oargs);
    fs::create_dir_all(&dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, gridio::curve_csv(&curve)).map_err(|e| input(format!("{}: {e}", csv.display())))?;
    let peaks = analysis::resonance_peaks(&curve, scan.peak_prominence).unwrap_or_default();
    let report = PeaksReport {
        q_over_m: scan.q_over_m,
        delta: field.delta,
        peaks: &peaks,
    };
    let path = dir.join(format!("{stem}.peaks.json"));
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let _ = writeln!(out, "wrote {}", csv.display());
    let _ = writeln!(out, "wrote {}", path.display());
    let _ = writeln!(out, "{:>14} {:>4} {:>24}", "omega", "n", "f");
    for p in &peaks {
        let _ = writeln!(out, "{:>14.6} {:>4} {:>24}", p.omega, p.n_assigned, gridio::fmt_f64(p.height));
    }
    Ok(())
}

fn cmd_predict(common: &CommonArgs, n_min: Option<u32>, n_max: Option<u32>, spin: Option<SpinArg>, out: &mut dyn Write) -> Outcome {
    let cfg = load(common)?;
    let field = cfg.field_config().map_err(input)?;
    let n0 = semianalytic::min_photon_number(&field);
    let lo = n_min.or(cfg.predict.and_then(|p| p.n_min)).unwrap_or(n0);
    let hi = n_max.or(cfg.predict.and_then(|p| p.n_max)).unwrap_or(lo + 2);
    if hi < lo {
        return Err(input(format!("empty photon-number range {lo}..={hi}")));
    }
    let spin = match spin {
        Some(SpinArg::Fermion) => Spin::Fermion,
        Some(SpinArg::Boson) => Spin::Boson,
        None => cfg.predict.map(|p| p.spin).unwrap_or_default(),
    };
    let _ = writeln!(out, "min_photon_number = {n0}");
    let _ = writeln!(out, "{:>4} {:>8} {:>10} {:>6}  node_qx", "n", "present", "radius", "nodes");
    for n in lo..=hi {
        let ring = semianalytic::ring_radius(n, &field);
        match ring.radius {
            Some(r) => {
                let nodes = semianalytic::node_positions(n, &field, spin).map_err(input)?;
                let qx = semianalytic::node_qx(&nodes);
                let list: Vec<String> = qx.iter().map(|x| format!("{x:.5}")).collect();
                let _ = writeln!(out, "{:>4} {:>8} {:>10.5} {:>6}  [{}]", n, true, r, nodes.len(), list.join(", "));
            }
            None => {
                let _ = writeln!(out, "{:>4} {:>8} {:>10} {:>6}  []", n, false, "-", 0);
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalysisReport {
    grid: String,
    omega_sidecar: f64,
    rings: Vec<analysis::RingFeature>,
    node_sets: Vec<analysis::NodeSet>,
    omega_recovered: Option<f64>,
    omega_deviation: Option<f64>,
    grid_spacing: f64,
    threshold: Option<ThresholdEntry>,
}

#[derive(Serialize)]
struct ThresholdEntry {
    delta: f64,
    smallest_radius: f64,
    min_photon_number: u32,
}

fn cmd_analyze(path: &Path, report_path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let grid = gridio::read_grid(path)?;
    let rings = analysis::grid_rings(&grid, &RingOptions::default()).map_err(|e| match e {
        AnalysisError::NoRingsFound => input(format!("{}: no rings found", path.display())),
        e => solver(format!("ring extraction: {e}")),
    })?;
    let mut node_sets = Vec::new();
    for ring in &rings {
        if let Ok(set) = analysis::detect_nodes(&grid, ring, &NodeOptions::default()) {
            node_sets.push(set);
        }
    }
    // node spacing recovers w; take the ring with the most nodes
    let omega_recovered = node_sets
        .iter()
        .max_by_key(|s| s.node_qx.len())
        .and_then(|s| analysis::recover_frequency(&s.node_qx).ok());
    let omega = grid.field.omega;
    let threshold = rings.iter().map(|r| r.radius).reduce(f64::min).map(|r| ThresholdEntry {
        delta: grid.field.delta,
        smallest_radius: r,
        min_photon_number: semianalytic::min_photon_number(&grid.field),
    });
    let report = AnalysisReport {
        grid: path.display().to_string(),
        omega_sidecar: omega,
        rings,
        node_sets,
        omega_recovered,
        omega_deviation: omega_recovered.map(|w| w - omega),
        grid_spacing: grid.spec.step1().min(grid.spec.step2()),
        threshold,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    if let Some(p) = report_path {
        fs::write(p, &text).map_err(|e| input(format!("{}: {e}", p.display())))?;
    }
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

fn cmd_compare_oracle(common: &CommonArgs, gargs: &GridArgs, out: &mut dyn Write) -> Outcome {
    let cfg = load(common)?;
    let (field, opts) = essentials(&cfg)?;
    if field.delta != 0.0 {
        return Err(input(format!(
            "the Vlasov comparison needs a linearly polarized field (delta = 0), got delta = {}",
            field.delta
        )));
    }
    let spec = grid_spec(&cfg, gargs)?;
    let exec = executor(&cfg)?;
    let points: Vec<Momentum3> = (0..spec.n1)
        .flat_map(|i| (0..spec.n2).map(move |j| (i, j)))
        .map(|(i, j)| spec.momentum(i, j))
        .collect();
    let dhw = exec.solve_points(&points, &field, &opts).map_err(from_sweep)?;
    let dhw: Vec<f64> = dhw.into_iter().map(|r| r.map(|p| p.f_final)).collect::<Result<_, _>>().map_err(solver)?;
    let qve: Vec<f64> = points
        .iter()
        .map(|q| qve_solve_point(*q, &field, &opts).map(|p| p.f_final))
        .collect::<Result<_, _>>()
        .map_err(solver)?;
    let rep = compare_pairs(&points, &dhw, &qve);
    let _ = writeln!(out, "points = {}", rep.n_points);
    let _ = writeln!(out, "max_rel = {}", gridio::fmt_f64(rep.max_rel));
    let _ = writeln!(out, "max_abs_small = {}", gridio::fmt_f64(rep.max_abs_small));
    let _ = writeln!(out, "max_abs = {}", gridio::fmt_f64(rep.max_abs));
    let w = rep.worst_point;
    let _ = writeln!(out, "worst = ({}, {}, {})", w.qx, w.qy, w.qz);
    let _ = writeln!(out, "result = {}", if rep.pass { "pass" } else { "FAIL" });
    if rep.pass {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            msg: "DHW and Vlasov results disagree beyond tolerance".into(),
        })
    }
}
