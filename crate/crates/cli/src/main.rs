use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aggsolve_core::aas::{self, BuildOptions, Method};
use aggsolve_core::config::Config;
use aggsolve_core::game::{FiniteGame, Mode, NonatomicGameSpec};
use aggsolve_core::metrics;
use aggsolve_core::oracle::suite;
use aggsolve_core::solver::SolverConfig;
use aggsolve_core::sweep::{to_csv, SweepContext, SweepRow};
use aggsolve_core::verify::verify;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_ORACLE: u8 = 3;

/// Finite-player approximation of nonatomic aggregative games.
#[derive(Parser)]
#[command(name = "aggsolve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize a game at one nu and write the finite game as JSON.
    Build {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        nu: usize,
        #[arg(long)]
        method: Option<Method>,
        /// Split along theta as well (meshgrid only).
        #[arg(long)]
        theta_axis: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, solve and measure against the oracle for each nu; writes CSV.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Comma-separated list; an empty string gives a header-only CSV.
        #[arg(long)]
        nus: Option<String>,
        /// Evaluate a game written by `build` instead of building.
        #[arg(long, conflicts_with = "nus")]
        game: Option<PathBuf>,
        #[arg(long)]
        method: Option<Method>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monotonicity, uniqueness, oracle and constants checks as JSON.
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the benchmark instances as TOML configs.
    ExportSuite {
        #[arg(long, default_value = "suite")]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    /// A packaged instance: LQ1, LQ1-capped, LQ-hetero, LQ-2D, LQ-breakpoint, adversarial.
    #[arg(long)]
    benchmark: Option<String>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_SOLVER,
            message: message.into(),
        }
    }

    fn oracle(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ORACLE,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load(source: &Source) -> Result<Config, Failure> {
    if let Some(path) = &source.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        return Config::from_toml_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())));
    }
    let name = source.benchmark.as_deref().unwrap_or_default();
    match suite::benchmark(name) {
        Some(Ok(spec)) => Ok(Config::from_spec(&spec)),
        Some(Err(e)) => Err(Failure::usage(e.to_string())),
        None => Err(Failure::usage(format!("unknown benchmark `{name}`"))),
    }
}

fn spec_of(cfg: &Config) -> Result<NonatomicGameSpec, Failure> {
    cfg.to_spec().map_err(|e| Failure::usage(e.to_string()))
}

fn solver_config(cfg: &Config, flags: &SolverFlags) -> Result<SolverConfig, Failure> {
    let mut s = cfg.solver_config().map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(m) = flags.mode {
        s.mode = m;
    }
    if let Some(t) = flags.tol {
        if !(t > 0.0) {
            return Err(Failure::usage("--tol must be > 0"));
        }
        s.tol = t;
    }
    if let Some(n) = flags.max_iters {
        s.max_iters = n;
    }
    if let Some(seed) = flags.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(e.to_string())),
    }
}

fn parse_nus(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Failure::usage(format!("--nus: `{s}` is not a positive integer")))
        })
        .collect()
}

fn cmd_build(source: &Source, nu: usize, method: Option<Method>, theta_axis: bool, out: Option<&Path>) -> CmdResult {
    let cfg = load(source)?;
    let spec = spec_of(&cfg)?;
    let method = method.unwrap_or(cfg.sweep.method);
    let opts = BuildOptions {
        theta_axis: theta_axis || cfg.sweep.theta_axis,
    };
    let game = aas::build(&spec, nu, method, opts).map_err(|e| Failure::solver(e.to_string()))?;
    let json = serde_json::to_string_pretty(&game).map_err(|e| Failure::solver(e.to_string()))?;
    let m = metrics::compute_metrics(&spec, &game).map_err(|e| Failure::solver(e.to_string()))?;
    let summary = format!(
        "I={} mu_max={} delta={:.6e} d_sub={:.6e} lambda={:.6e} D_cap={:.6e}",
        game.players(),
        game.max_weight(),
        m.delta,
        m.d_sub,
        m.lambda,
        m.d_cap
    );
    match out {
        Some(_) => {
            emit(out, &json)?;
            println!("{summary}");
        }
        None => {
            emit(None, &json)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("AGGSOLVE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::usage(format!("AGGSOLVE_THREADS=`{v}` is not a number")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_sweep(
    source: &Source,
    nus: Option<&str>,
    game_path: Option<&Path>,
    method: Option<Method>,
    flags: &SolverFlags,
    out: Option<&Path>,
) -> CmdResult {
    let cfg = load(source)?;
    let spec = spec_of(&cfg)?;
    let solver = solver_config(&cfg, flags)?;
    let game: Option<FiniteGame> = match game_path {
        None => None,
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?)
        }
    };
    let nus = match (&game, nus) {
        (Some(_), _) => Vec::new(),
        (None, Some(s)) => parse_nus(s)?,
        (None, None) => cfg.sweep.nus.clone(),
    };
    if game.is_none() && nus.is_empty() {
        return emit(out, &to_csv(&[], true));
    }
    let ctx = SweepContext::new(spec).map_err(|e| Failure::oracle(format!("oracle: {e}")))?;
    let method = method.unwrap_or(cfg.sweep.method);
    let opts = BuildOptions {
        theta_axis: cfg.sweep.theta_axis,
    };
    let rows: Vec<SweepRow> = match &game {
        Some(g) => {
            let nu = g.provenance().map_or(0, |p| p.nu);
            vec![ctx.evaluate_game(nu, g, &solver)]
        }
        None => thread_pool()?.install(|| {
            nus.par_iter()
                .map(|&nu| ctx.run_row(nu, method, opts, &solver))
                .collect()
        }),
    };
    for r in rows.iter().filter(|r| r.status.is_failure()) {
        log::warn!(
            "nu={}: {} {}",
            r.nu,
            r.status.as_str(),
            r.message.as_deref().unwrap_or("")
        );
    }
    emit(out, &to_csv(&rows, true))?;
    if rows.iter().all(|r| r.status.is_failure()) {
        return Err(Failure::solver("every row failed"));
    }
    Ok(())
}

fn cmd_verify(source: &Source, flags: &SolverFlags, out: Option<&Path>) -> CmdResult {
    let cfg = load(source)?;
    let spec = spec_of(&cfg)?;
    let solver = solver_config(&cfg, flags)?;
    let report = verify(&spec, &solver);
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))?;
    json.push('\n');
    emit(out, &json)?;
    if report.oracle_failed() {
        Err(Failure::oracle(format!("{}: oracle checks failed", report.name)))
    } else if report.property_failed() {
        Err(Failure::solver(format!("{}: property checks failed", report.name)))
    } else {
        Ok(())
    }
}

fn cmd_export_suite(out: &Path) -> CmdResult {
    fs::create_dir_all(out).map_err(|e| Failure::usage(format!("{}: {e}", out.display())))?;
    for name in suite::NAMES.iter().chain(&["adversarial"]) {
        let spec = suite::benchmark(name)
            .expect("packaged name")
            .map_err(|e| Failure::usage(e.to_string()))?;
        let text = Config::from_spec(&spec)
            .to_toml_string()
            .map_err(|e| Failure::usage(e.to_string()))?;
        let path = out.join(format!("{name}.toml"));
        fs::write(&path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Build {
            source,
            nu,
            method,
            theta_axis,
            out,
        } => cmd_build(source, *nu, *method, *theta_axis, out.as_deref()),
        Command::Sweep {
            source,
            nus,
            game,
            method,
            solver,
            out,
        } => cmd_sweep(source, nus.as_deref(), game.as_deref(), *method, solver, out.as_deref()),
        Command::Verify { source, solver, out } => cmd_verify(source, solver, out.as_deref()),
        Command::ExportSuite { out } => cmd_export_suite(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
