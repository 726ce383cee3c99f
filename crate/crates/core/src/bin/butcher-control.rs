use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use butcher_control::app::{self, ProblemFile, EXIT_OK, EXIT_OTHER, EXIT_VERIFICATION};
use butcher_control::{Error, Result, Trajectory};

/// Butcher series and tree-indexed open-loop control for weakly nonlinear ODEs.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Worker threads for per-level synthesis (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List planar trees with N(b) <= n-max.
    Trees {
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        /// Also print every tree's coproduct terms.
        #[arg(long)]
        coproduct: bool,
    },
    /// Sum the truncated series for x' = Ax + f + λF(x).
    Solve {
        #[command(flatten)]
        common: Common,
        /// CSV source table `t,f_1..f_n` on the problem grid, or `zero`.
        #[arg(long, default_value = "zero")]
        source: String,
    },
    /// Synthesize the control steering x0 to 0 and verify it.
    Control {
        #[command(flatten)]
        common: Common,
    },
    /// Print certificate quantities without synthesis or verification.
    Certify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Directory for report.json and trajectory tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the file's n_max.
    #[arg(long)]
    n_max: Option<usize>,
    /// Overrides the file's grid_points.
    #[arg(long)]
    grid: Option<usize>,
}

impl Common {
    fn problem(&self) -> Result<ProblemFile> {
        let mut p = ProblemFile::load(&self.input)?;
        if let Some(n) = self.n_max {
            p.n_max = n;
        }
        if let Some(m) = self.grid {
            p.grid_points = m;
        }
        p.validate()?;
        Ok(p)
    }
}

fn emit<T: Serialize>(out: Option<&Path>, report: &T, tables: &[(&str, &Trajectory, &str)]) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    println!("{json}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        for (name, traj, prefix) in tables {
            app::write_trajectory_csv(dir.join(name), traj, prefix)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::problem("threads", e.to_string()))?;
    }
    match cli.command {
        Command::Trees { n_max, coproduct } => {
            emit(None, &app::cmd_trees(n_max, coproduct)?, &[])?;
            Ok(EXIT_OK)
        }
        Command::Solve { common, source } => {
            let problem = common.problem()?;
            let f = match source.as_str() {
                "zero" => None,
                path => Some(app::read_trajectory_csv(path)?),
            };
            let out = app::cmd_solve(&problem, f.as_ref())?;
            for w in &out.report.warnings {
                eprintln!("warning: {w}");
            }
            emit(common.out.as_deref(), &out.report, &[("state.csv", &out.state, "x")])?;
            Ok(EXIT_OK)
        }
        Command::Control { common } => {
            let problem = common.problem()?;
            let out = app::cmd_control(&problem)?;
            emit(
                common.out.as_deref(),
                &out.report,
                &[("control.csv", &out.control, "v"), ("state.csv", &out.state, "x")],
            )?;
            if out.report.verified {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "error: |x(T)| = {:.3e} exceeds the verification tolerance {:.1e}",
                    out.report.terminal_norm, out.report.verification_tolerance
                );
                Ok(EXIT_VERIFICATION)
            }
        }
        Command::Certify { common } => {
            let problem = common.problem()?;
            emit(common.out.as_deref(), &app::cmd_certify(&problem)?, &[])?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            app::exit_code(&e)
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_OTHER as u8))
}
