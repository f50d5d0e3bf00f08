//! `ruin`: ruin probabilities and Gerber–Shiu functions from the command line.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 invalid input (nothing is
//! written), 3 a requested route failed (the report is still written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ruin_core::greens::Fault;
use ruin_core::model::{ModelSpec, RiskModel};
use ruin_core::selftest::{self, Level, SelftestOptions};

use ruin_cli::report::{self, Command, Settings, ROUTES};

#[derive(Parser)]
#[command(name = "ruin", version, about = "Ruin probabilities and Gerber-Shiu functions with surplus-dependent premiums")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ruin probability ψ(u): δ is forced to 0 and the penalty to w ≡ 1.
    Ruin(RunArgs),
    /// Discounted penalty Φ(u) with δ and w from the model file.
    Penalty {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides the discount rate of the model file.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Runs the built-in check matrix and prints a JSON manifest.
    Selftest {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        /// Corrupts the Wronskian tables to show that the probes fire.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Grid `start:stop:count`, both ends included.
    #[arg(long, default_value = "0:5:11")]
    u: String,
    /// Comma-separated subset of closed_form,greens,asymptotic,monte_carlo.
    #[arg(long, default_value = "closed_form,greens")]
    routes: String,
    /// Monte Carlo paths per grid point.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Directory for one `<route>.csv` per route.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Relative agreement tolerance between deterministic routes.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    WronskianSign,
    Perturb,
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("--u expects start:stop:count, got `{s}`");
    };
    let a: f64 = a.trim().parse().with_context(|| format!("bad grid start `{a}`"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("bad grid stop `{b}`"))?;
    let n: usize = n.trim().parse().with_context(|| format!("bad grid count `{n}`"))?;
    if n == 0 || !a.is_finite() || !b.is_finite() || a > b || a < 0.0 {
        bail!("--u needs 0 ≤ start ≤ stop and count ≥ 1, got `{s}`");
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn parse_routes(s: &str) -> anyhow::Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for r in s.split(',').map(str::trim).filter(|r| !r.is_empty()) {
        if !ROUTES.contains(&r) {
            bail!("unknown route `{r}`; expected one of {}", ROUTES.join(","));
        }
        if !out.iter().any(|o| o == r) {
            out.push(r.to_string());
        }
    }
    if out.is_empty() {
        bail!("--routes is empty");
    }
    Ok(out)
}

fn load_model(path: &Path) -> anyhow::Result<RiskModel<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let spec = ModelSpec::from_json(&text).with_context(|| format!("{} is not a valid model file", path.display()))?;
    spec.to_model().with_context(|| format!("model in {} is invalid", path.display()))
}

/// Everything that can fail before a route runs; failures here exit 2.
fn prepare(command: Command, args: &RunArgs, delta: Option<f64>) -> anyhow::Result<(RiskModel<f64>, Settings)> {
    let model = report::command_model(command, load_model(&args.model)?, delta);
    model.validate().context("model is invalid")?;
    let u_grid = parse_grid(&args.u)?;
    let (lo, hi) = (model.domain_start(), model.u_max);
    if u_grid[0] < lo || u_grid[u_grid.len() - 1] > hi {
        bail!("grid must lie in [{lo}, {hi}]");
    }
    if !(args.tol > 0.0) || args.paths == 0 {
        bail!("--tol must be positive and --paths at least 1");
    }
    let settings = Settings {
        u_grid,
        routes: parse_routes(&args.routes)?,
        paths: args.paths,
        seed: args.seed,
        tol: args.tol,
        z_max: 3.0,
    };
    Ok((model, settings))
}

fn run_command(command: Command, args: &RunArgs, delta: Option<f64>) -> ExitCode {
    let (model, settings) = match prepare(command, args, delta) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = report::run(command, &model, settings);
    if let Some(dir) = &args.csv {
        if let Err(e) = write_csv(dir, &report) {
            eprintln!("error: {e:#}");
            return ExitCode::from(3);
        }
    }
    println!("{}", report.to_json());
    let failed = report.failed_routes();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for name in failed {
            let why = report.routes[name].refusal.as_deref().unwrap_or("");
            eprintln!("route {name} failed: {why}");
        }
        ExitCode::from(3)
    }
}

fn write_csv(dir: &Path, report: &report::RunReport) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, r) in &report.routes {
        if let Some(text) = report::csv(&report.settings.u_grid, r) {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}

fn run_selftest(level: LevelArg, fault: Option<FaultArg>, paths: Option<usize>, seed: u64) -> ExitCode {
    let mut opts = SelftestOptions::new(match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    });
    opts.fault = fault.map(|f| match f {
        FaultArg::WronskianSign => Fault::WronskianSign,
        FaultArg::Perturb => Fault::Perturb { amplitude: 0.01 },
    });
    opts.paths = paths;
    opts.seed = seed;
    let manifest = selftest::run(&opts);
    for c in &manifest.checks {
        let tag = match (c.passed, c.expected_failure) {
            (true, _) => "PASS",
            (false, true) => "XFAIL",
            (false, false) => "FAIL",
        };
        eprintln!("{tag:5} {:32} value {:.3e}  tol {:.1e}  ({:.1}s)", c.name, c.value, c.tolerance, c.seconds);
    }
    println!("{}", manifest.to_json());
    if manifest.ok() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed: {}", manifest.failures.join(", "));
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Ruin(args) => run_command(Command::Ruin, &args, None),
        Cmd::Penalty { run, delta } => run_command(Command::Penalty, &run, delta),
        Cmd::Selftest {
            level,
            inject_fault,
            paths,
            seed,
        } => run_selftest(level, inject_fault, paths, seed),
    }
}
