use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use igr_cli::gradcheck::{run_all, GRAD_TOL};
use igr_cli::report::emit;
use igr_cli::sweep::emit_sweep;
use igr_cli::{fit, sweep, CliError, Overrides, Result, RunConfig, TargetSpec};

/// Fit invertible Gaussian relaxations and Gumbel-Softmax to discrete targets.
#[derive(Parser)]
#[command(name = "igr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model at one temperature.
    Fit(RunArgs),
    /// Fit at every temperature of the grid and keep the lowest recovered TV.
    Sweep(RunArgs),
    /// Print a target pmf as CSV.
    Target {
        #[arg(long)]
        target: TargetSpec,
    },
    /// Check every analytic pullback against finite differences.
    CheckGrad {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with any of the run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        self.overrides.clone().over(base).resolve()
    }
}

fn save_trajectory(err: &CliError, out: &Path) {
    if let CliError::Diverged { trajectory, .. } = err {
        let path = out.join("trajectory.json");
        let body = serde_json::to_string(trajectory).expect("losses serialize");
        if std::fs::create_dir_all(out).and_then(|_| std::fs::write(&path, body)).is_ok() {
            eprintln!("losses up to the failure written to {}", path.display());
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => {
            let config = args.resolve()?;
            let report = fit(&config, args.timing).inspect_err(|e| save_trajectory(e, &args.out))?;
            emit(&report, &args.out)?;
            let m = &report.metrics;
            println!("tv={:.6} kl={:.6} l2={:.6} final_loss={:.6}", m.tv, m.kl, m.l2, m.final_loss);
            println!("relaxed mean: tv={:.6}", report.relaxed_mean.tv);
        }
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let outcome = sweep(&config, args.timing)?;
            for (row, report) in outcome.table.rows.iter().zip(&outcome.reports) {
                match (report, &row.error) {
                    (Some(r), _) => {
                        println!("tau={:<6} tv={:.6} relaxed_tv={:.6}", row.tau, r.metrics.tv, r.relaxed_mean.tv)
                    }
                    (None, Some(e)) => println!("tau={:<6} failed: {e}", row.tau),
                    (None, None) => {}
                }
            }
            emit_sweep(&outcome, &args.out)?;
            if let Some(best) = outcome.best() {
                println!("selected tau={} tv={:.6}", best.config.tau, best.metrics.tv);
            }
        }
        Command::Target { target } => {
            let pmf = target.build()?;
            println!("category,prob");
            for (k, p) in pmf.probs.iter().enumerate() {
                println!("{k},{p}");
            }
        }
        Command::CheckGrad { seed } => {
            let results = run_all(seed);
            for r in &results {
                println!("{:<26} {:.3e} {}", r.name, r.max_rel_error, if r.passed { "ok" } else { "FAIL" });
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(CliError::Runtime(format!("{failed} pullback(s) exceed relative error {GRAD_TOL}")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage mistakes are configuration errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
