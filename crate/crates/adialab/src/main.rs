//! Command-line front end: sweeps, single evolutions, figure data and the
//! acceptance suite. Flags may also come from a key-value config file;
//! explicit flags win.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adialab::dynamics::{evolve_reduced, EvolutionConfig};
use adialab::lab::figures::{reproduce_figure, FigureId};
use adialab::lab::{acceptance, grid_with, log_grid, run_sweep, SweepModel, SweepSpec};
use adialab::schedule::{PathKind, SchedulePath};
use adialab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "adialab",
    version,
    about = "adiabatic-search schedule laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the computational error over total evolution times.
    Sweep(SweepArgs),
    /// Integrate a single evolution and export the trajectory.
    Evolve(EvolveArgs),
    /// Reproduce the data behind one figure.
    Figure(FigureArgs),
    /// Run the acceptance suite; exit code 0 only if every check passes.
    Check,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated path names (linear,sin,square,sin2,sin3,cubic,poly:...).
    #[arg(long)]
    paths: Option<String>,
    /// Number of items N.
    #[arg(long)]
    n: Option<usize>,
    /// Number of marked items M.
    #[arg(long)]
    m: Option<usize>,
    /// Smallest total time.
    #[arg(long)]
    tmin: Option<f64>,
    /// Largest total time.
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of grid points (logarithmic spacing).
    #[arg(long)]
    points: Option<usize>,
    /// Integrator time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Smoothing window (odd number of grid points).
    #[arg(long)]
    smooth: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evolve the full N-dimensional model instead of the reduced one.
    #[arg(long)]
    full: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Key-value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    /// Path name.
    #[arg(long)]
    path: Option<String>,
    /// Number of items N.
    #[arg(long)]
    n: Option<usize>,
    /// Number of marked items M.
    #[arg(long)]
    m: Option<usize>,
    /// Total evolution time.
    #[arg(long = "T")]
    total_time: Option<f64>,
    /// Record every k-th integration step.
    #[arg(long)]
    record: Option<usize>,
    /// Integrator time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure id: fig2..fig9.
    #[arg(long)]
    id: String,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Figure(args) => cmd_figure(args),
        Command::Check => cmd_check(),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let paths = parse_paths(
        &file
            .string("paths", args.paths)
            .unwrap_or_else(default_paths),
    )?;
    let n = file.value("n", args.n)?.unwrap_or(100);
    let m = file.value("m", args.m)?.unwrap_or(1);
    let tmin = file.value("tmin", args.tmin)?.unwrap_or(10.0);
    let tmax = file.value("tmax", args.tmax)?.unwrap_or(1e4);
    let points = file.value("points", args.points)?.unwrap_or(200);
    let dt = file.value("dt", args.dt)?.unwrap_or(0.01);
    let smooth = file.value("smooth", args.smooth)?.unwrap_or(9);
    let out = file
        .string("out", args.out.map(display_path))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"));
    let full = args.full || file.flag("full");

    if let Some(workers) = file.value("workers", args.workers)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }

    if points < 2 {
        return Err(Error::Config("need at least 2 grid points".into()));
    }
    if tmin <= 0.0 || tmax <= tmin {
        return Err(Error::Config("need 0 < tmin < tmax".into()));
    }
    let model_obj = adialab::model::FullSearchModel::with_first_marked(n, m)?;
    let model = if full {
        SweepModel::Full(model_obj)
    } else {
        SweepModel::Reduced {
            ratio: model_obj.ratio(),
        }
    };
    let spec = SweepSpec {
        model,
        paths,
        t_grid: grid_with(log_grid(tmin, tmax, points), &[]),
        evolution: EvolutionConfig::default().with_steps_per_unit_time(1.0 / dt)?,
        smoothing_window: smooth,
        coarse_step_above: Some((1e3, dt.max(0.05))),
    };
    let result = run_sweep(&spec)?;
    let files = result.write_dir(&out, "sweep")?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evolve(args: EvolveArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let path_name = file
        .string("path", args.path)
        .unwrap_or_else(|| "linear".into());
    let n = file.value("n", args.n)?.unwrap_or(10);
    let m = file.value("m", args.m)?.unwrap_or(1);
    let total_time = file.value("T", args.total_time)?.unwrap_or(1000.0);
    let record = file.value("record", args.record)?.unwrap_or(10);
    let dt = file.value("dt", args.dt)?.unwrap_or(0.01);
    let out = file
        .string("out", args.out.map(display_path))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"));

    let model = adialab::model::FullSearchModel::with_first_marked(n, m)?;
    let path = SchedulePath::parse(&path_name, total_time)?;
    let config = EvolutionConfig::new(1.0 / dt, record, true)?;
    let traj = evolve_reduced(model.ratio(), &path, &config)?;

    fs::create_dir_all(&out)?;
    let file_name = format!(
        "trajectory_{}_T{}.csv",
        path.kind().cli_name().replace([':', ','], "_"),
        total_time
    );
    let target = out.join(file_name);
    fs::write(&target, traj.to_reduced_csv()?)?;
    println!("wrote {}", target.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_figure(args: FigureArgs) -> Result<ExitCode> {
    let id: FigureId = args.id.parse()?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("out"));
    let report = reproduce_figure(id, &out)?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    for check in &report.checks {
        println!(
            "{id} check [{}]: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.description
        );
    }
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_check() -> Result<ExitCode> {
    let outcomes = acceptance::run_all();
    let mut all_passed = true;
    for outcome in &outcomes {
        println!("{outcome}");
        all_passed &= outcome.passed;
    }
    if all_passed {
        println!("acceptance: all {} criteria passed", outcomes.len());
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<String> = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.id.to_string())
            .collect();
        println!("acceptance: criteria {{{}}} failed", failed.join(", "));
        Ok(ExitCode::FAILURE)
    }
}

fn default_paths() -> String {
    "linear,sin,square,sin2,sin3,cubic".into()
}

fn parse_paths(list: &str) -> Result<Vec<PathKind>> {
    // `poly:` specs contain commas: after a poly token, keep consuming
    // tokens as long as they read as numbers
    let tokens: Vec<&str> = list.split(',').map(str::trim).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let token = tokens[i];
        if token.starts_with("poly:") {
            let mut spec = token.to_string();
            i += 1;
            while i < tokens.len() && tokens[i].parse::<f64>().is_ok() {
                spec.push(',');
                spec.push_str(tokens[i]);
                i += 1;
            }
            out.push(spec.parse::<PathKind>()?);
        } else {
            out.push(token.parse::<PathKind>()?);
            i += 1;
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no paths given".into()));
    }
    Ok(out)
}

fn display_path(p: PathBuf) -> String {
    p.display().to_string()
}

/// Key-value config file: `key = value` lines, `#` comments.
struct FileConfig {
    entries: HashMap<String, String>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut entries = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "config line {} is not `key = value`: `{line}`",
                        lineno + 1
                    ))
                })?;
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig { entries })
    }

    /// Typed lookup: the explicit flag wins over the file entry.
    fn value<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("config entry `{key} = {raw}` failed to parse"))
            }),
        }
    }

    fn string(&self, key: &str, flag: Option<String>) -> Option<String> {
        flag.or_else(|| self.entries.get(key).cloned())
    }

    fn flag(&self, key: &str) -> bool {
        matches!(
            self.entries.get(key).map(String::as_str),
            Some("true") | Some("1")
        )
    }
}
