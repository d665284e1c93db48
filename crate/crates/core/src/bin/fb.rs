//! Command-line front end: simulate orbits, classify parameter points,
//! sweep branch diagrams and assemble the bifurcation set.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use filippov_boost::bifurcation::{
    bifurcation_set, diagram_record, homoclinic_k_auto, region_label, sweep_gains,
    write_diagram_csv,
    DiagramRecord,
};
use filippov_boost::cli::{parallel_map, parse_config, RunManifest};
use filippov_boost::error::Error;
use filippov_boost::integrator::{simulate, write_trajectory_csv, SimConfig};
use filippov_boost::model::{Params, State};
use filippov_boost::singularities::{
    pseudo_equilibrium, stability_quantities, two_fold_point, SigmaRegion,
};

#[derive(Parser)]
#[command(
    name = "fb",
    version,
    about = "Sliding-mode boost converter analysis: simulation, classification and bifurcation sets"
)]
struct Cli {
    /// Optional key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bound on concurrent sample evaluations in sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one orbit of the switched system and write it as CSV.
    Simulate(SimulateArgs),
    /// Print the classification of a parameter point as JSON.
    Classify(ClassifyArgs),
    /// Assemble the (a, k) bifurcation set and write it as JSON.
    Bifset(BifsetArgs),
    /// Sweep the gain at fixed load and write the branch diagram as CSV.
    Diagram(DiagramArgs),
}

#[derive(Args)]
struct ParamFlags {
    /// Dimensionless load a.
    #[arg(long)]
    a: Option<f64>,
    /// Dimensionless control gain k.
    #[arg(long)]
    k: Option<f64>,
    /// Washout cutoff omega (reference configuration: 1).
    #[arg(long)]
    omega: Option<f64>,
    /// Voltage boost ratio y_r (reference configuration: 4).
    #[arg(long)]
    yr: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamFlags,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    y0: Option<f64>,
    #[arg(long)]
    z0: Option<f64>,
    /// Integration horizon in dimensionless time.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    event_tol: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    /// Trajectory CSV path; a manifest is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    params: ParamFlags,
}

#[derive(Args)]
struct BifsetArgs {
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    yr: Option<f64>,
    #[arg(long)]
    a_min: Option<f64>,
    #[arg(long)]
    a_max: Option<f64>,
    /// Continuation samples along the load axis.
    #[arg(long)]
    res: Option<usize>,
    /// Bifurcation-set JSON path; a manifest is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagramArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    yr: Option<f64>,
    #[arg(long)]
    k_min: Option<f64>,
    #[arg(long)]
    k_max: Option<f64>,
    /// Gain samples across the range.
    #[arg(long)]
    res: Option<usize>,
    /// Diagram CSV path; a manifest is written beside it.
    #[arg(long)]
    out: PathBuf,
}

/// Flag value, else config-file value, else the built-in default.
struct Resolver {
    cfg: BTreeMap<String, String>,
}

impl Resolver {
    fn f64(&self, flag: Option<f64>, key: &str) -> Result<f64, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.cfg.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| format!("config value for {key} is not a number: {raw:?}")),
            None => Err(format!("missing required parameter --{key}")),
        }
    }

    fn f64_or(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, String> {
        match (flag, self.cfg.get(key)) {
            (Some(v), _) => Ok(v),
            (None, Some(raw)) => raw
                .parse()
                .map_err(|_| format!("config value for {key} is not a number: {raw:?}")),
            (None, None) => Ok(default),
        }
    }

    fn usize_or(&self, flag: Option<usize>, key: &str, default: usize) -> Result<usize, String> {
        match (flag, self.cfg.get(key)) {
            (Some(v), _) => Ok(v),
            (None, Some(raw)) => raw
                .parse()
                .map_err(|_| format!("config value for {key} is not an integer: {raw:?}")),
            (None, None) => Ok(default),
        }
    }
}

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("FB_LOG_LEVEL", "warn"),
    )
    .init();
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match parse_config(path) {
            Ok(map) => map,
            Err(e) => return usage_error(&e.to_string()),
        },
        None => BTreeMap::new(),
    };
    let resolver = Resolver { cfg };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&resolver, args),
        Command::Classify(args) => cmd_classify(&resolver, args),
        Command::Bifset(args) => cmd_bifset(&resolver, args, cli.jobs),
        Command::Diagram(args) => cmd_diagram(&resolver, args, cli.jobs),
    };
    match result {
        Ok(code) => code,
        Err(CmdError::Usage(msg)) => usage_error(&msg),
        Err(CmdError::Numeric(msg)) => {
            eprintln!("fb: numeric failure: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("fb: {msg}");
    ExitCode::from(EXIT_USAGE)
}

enum CmdError {
    Usage(String),
    Numeric(String),
}

impl From<String> for CmdError {
    fn from(msg: String) -> Self {
        CmdError::Usage(msg)
    }
}

/// Library errors split into exit-code classes: parameter and configuration
/// problems are usage errors, everything else is a numeric failure.
fn lib_error(e: Error) -> CmdError {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidConfig(_) => CmdError::Usage(e.to_string()),
        other => CmdError::Numeric(other.to_string()),
    }
}

fn resolve_params(r: &Resolver, flags: &ParamFlags) -> Result<Params, CmdError> {
    let a = r.f64(flags.a, "a")?;
    let k = r.f64(flags.k, "k")?;
    let omega = r.f64_or(flags.omega, "omega", 1.0)?;
    let y_r = r.f64_or(flags.yr, "yr", 4.0)?;
    Params::new(a, k, omega, y_r).map_err(lib_error)
}

fn cmd_simulate(r: &Resolver, args: SimulateArgs) -> Result<ExitCode, CmdError> {
    let p = resolve_params(r, &args.params)?;
    let x0 = r.f64(args.x0, "x0")?;
    let y0 = r.f64(args.y0, "y0")?;
    let z0 = r.f64(args.z0, "z0")?;
    let defaults = SimConfig::default();
    let cfg = SimConfig {
        t_max: r.f64_or(args.tmax, "tmax", defaults.t_max)?,
        rel_tol: r.f64_or(args.rel_tol, "rel-tol", defaults.rel_tol)?,
        abs_tol: r.f64_or(args.abs_tol, "abs-tol", defaults.abs_tol)?,
        event_tol: r.f64_or(args.event_tol, "event-tol", defaults.event_tol)?,
        max_step: r.f64_or(args.max_step, "max-step", defaults.max_step)?,
    };
    cfg.validate().map_err(lib_error)?;
    let segments = simulate(&State::new(x0, y0, z0), &p, &cfg).map_err(lib_error)?;
    let file = File::create(&args.out).map_err(|e| CmdError::Numeric(e.to_string()))?;
    write_trajectory_csv(&segments, BufWriter::new(file)).map_err(lib_error)?;
    RunManifest::new("simulate")
        .with_param("a", p.a())
        .with_param("k", p.k())
        .with_param("omega", p.omega())
        .with_param("yr", p.y_r())
        .with_param("x0", x0)
        .with_param("y0", y0)
        .with_param("z0", z0)
        .with_param("tmax", cfg.t_max)
        .with_tolerance("rel_tol", cfg.rel_tol)
        .with_tolerance("abs_tol", cfg.abs_tol)
        .with_tolerance("event_tol", cfg.event_tol)
        .with_tolerance("max_step", cfg.max_step)
        .with_output(&args.out)
        .write_beside(&args.out)
        .map_err(lib_error)?;
    log::info!(
        "simulate: {} segments written to {}",
        segments.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_classify(r: &Resolver, args: ClassifyArgs) -> Result<ExitCode, CmdError> {
    let p = resolve_params(r, &args.params)?;
    let q = pseudo_equilibrium(&p);
    let sq = stability_quantities(&p);
    let two_fold = two_fold_point(&p).ok();

    // The homoclinic gain matters only where a stable focus can carry the
    // unstable cycle: between the BT loads and above the Hopf gain.
    let inside_bt = match (sq.a_minus, sq.a_plus) {
        (Some(lo), Some(hi)) => p.a() > lo && p.a() < hi,
        _ => false,
    };
    let k_hc = if inside_bt && p.k() > p.a() * p.y_r() {
        homoclinic_k_auto(p.a(), p.omega(), p.y_r(), 1e-4).ok()
    } else {
        None
    };
    let region = region_label(&p, k_hc);

    let json = serde_json::json!({
        "a": p.a(),
        "k": p.k(),
        "omega": p.omega(),
        "yr": p.y_r(),
        "q_location": [q.location.x, q.location.y, q.location.z],
        "q_region": match q.region {
            SigmaRegion::Sliding => "sliding",
            SigmaRegion::Escaping => "escaping",
            SigmaRegion::OnTangency => "on-tangency",
        },
        "q_kind": q.kind.to_string(),
        "two_fold": two_fold.map(|t| t.kind.to_string()),
        "two_fold_location": two_fold.map(|t| [t.x, t.y]),
        "two_fold_physical": two_fold.map(|t| t.physical),
        "k_h": sq.k_h,
        "k_minus": sq.k_minus,
        "k_plus": sq.k_plus,
        "a_minus": sq.a_minus,
        "a_plus": sq.a_plus,
        "k_hc": k_hc,
        "region": region,
    });
    println!("{}", serde_json::to_string_pretty(&json).unwrap());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bifset(r: &Resolver, args: BifsetArgs, _jobs: usize) -> Result<ExitCode, CmdError> {
    let omega = r.f64_or(args.omega, "omega", 1.0)?;
    let y_r = r.f64_or(args.yr, "yr", 4.0)?;
    let res = r.usize_or(args.res, "res", 200)?;
    let a_min = match args.a_min {
        Some(v) => Some(v),
        None => r.cfg.get("a-min").map(|s| s.parse().unwrap_or(f64::NAN)),
    };
    let a_max = match args.a_max {
        Some(v) => Some(v),
        None => r.cfg.get("a-max").map(|s| s.parse().unwrap_or(f64::NAN)),
    };
    let a_range = match (a_min, a_max) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(CmdError::Usage(
                "--a-min and --a-max must be given together".to_string(),
            ))
        }
    };
    let set = bifurcation_set(omega, y_r, a_range, res).map_err(lib_error)?;
    let text = serde_json::to_string_pretty(&set)
        .map_err(|e| CmdError::Numeric(format!("serialization: {e}")))?;
    std::fs::write(&args.out, text + "\n").map_err(|e| CmdError::Numeric(e.to_string()))?;
    let mut manifest = RunManifest::new("bifset")
        .with_param("omega", omega)
        .with_param("yr", y_r)
        .with_param("res", res as f64)
        .with_tolerance("homoclinic_tol", 1e-4)
        .with_output(&args.out);
    manifest.parameters.insert("a_min".into(), set.regions_grid.a_min);
    manifest.parameters.insert("a_max".into(), set.regions_grid.a_max);
    manifest.write_beside(&args.out).map_err(lib_error)?;
    if set.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &set.failures {
            log::warn!("continuation sample a = {} failed: {}", f.a, f.reason);
        }
        eprintln!(
            "fb: bifset finished with {} failed continuation sample(s); partial output written to {}",
            set.failures.len(),
            args.out.display()
        );
        Ok(ExitCode::from(EXIT_NUMERIC))
    }
}

fn cmd_diagram(r: &Resolver, args: DiagramArgs, jobs: usize) -> Result<ExitCode, CmdError> {
    let a = r.f64(args.a, "a")?;
    let omega = r.f64_or(args.omega, "omega", 1.0)?;
    let y_r = r.f64_or(args.yr, "yr", 4.0)?;
    let k_min = r.f64(args.k_min, "k-min")?;
    let k_max = r.f64(args.k_max, "k-max")?;
    let res = r.usize_or(args.res, "res", 101)?;
    if !(k_max > k_min) || res < 2 {
        return Err(CmdError::Usage("need k-max > k-min and res >= 2".to_string()));
    }
    let gains = sweep_gains((k_min, k_max), res);
    let records: Vec<Option<DiagramRecord>> =
        parallel_map(jobs, gains, |k| diagram_record(a, omega, y_r, *k));
    let records: Vec<DiagramRecord> = records.into_iter().flatten().collect();
    let file = File::create(&args.out).map_err(|e| CmdError::Numeric(e.to_string()))?;
    write_diagram_csv(&records, BufWriter::new(file)).map_err(lib_error)?;
    RunManifest::new("diagram")
        .with_param("a", a)
        .with_param("omega", omega)
        .with_param("yr", y_r)
        .with_param("k_min", k_min)
        .with_param("k_max", k_max)
        .with_param("res", res as f64)
        .with_output(&args.out)
        .write_beside(&args.out)
        .map_err(lib_error)?;
    Ok(ExitCode::SUCCESS)
}
