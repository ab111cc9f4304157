use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use orbitope_mpc::cli::{
    error_exit_code, format_projection, parse_matrix, run_plan, run_project, run_rhc, RunOptions, RunReport,
    EXIT_INVALID_INPUT, EXIT_OK, EXIT_OTHER,
};
use orbitope_mpc::export::verify_export;
use orbitope_mpc::Error;

/// Trajectory planning with rotation states relaxed to conv(SO(n)).
#[derive(Parser)]
#[command(name = "orbitope-mpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario once over its whole horizon.
    Plan {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write the trajectory projected onto SO(n).
        #[arg(long)]
        round: bool,
        /// Write the conic program in text form to this file.
        #[arg(long)]
        dump_program: Option<PathBuf>,
    },
    /// Run the receding-horizon loop of a scenario's [rhc] section.
    Rhc {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lookahead: Option<usize>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Print the nearest rotation to a matrix such as "1,0;0,1".
    Project {
        #[arg(required_unless_present = "file", conflicts_with = "file")]
        matrix: Option<String>,
        /// Read the matrix from a file, one row per line.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Re-read an export directory and check dynamics and hull membership.
    Verify {
        dir: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        dynamics_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        hull_tol: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory (default: the scenario's [output] dir, else out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Recorded in the summary only; every solver here is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Zero the timing fields so repeated runs give identical files.
    #[arg(long)]
    no_timings: bool,
}

impl Common {
    fn options(self) -> RunOptions {
        RunOptions {
            out: self.out,
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
            timings: !self.no_timings,
            ..RunOptions::new()
        }
    }
}

fn report(r: RunReport) -> i32 {
    let s = &r.summary;
    println!("status {}", s.status);
    if let Some(obj) = s.objective {
        println!("objective {obj}");
    }
    if let Some(stop) = &s.stop {
        println!("stop {stop}");
    }
    if let (Some(lo), Some(hi)) = (s.min_det, s.max_det) {
        println!("det range [{lo}, {hi}]");
    }
    println!("rows {}", s.rows);
    println!("wall time {:.3} s", s.wall_time);
    println!("wrote {}", r.out_dir.display());
    r.exit_code
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Plan {
            scenario,
            common,
            round,
            dump_program,
        } => {
            let opts = RunOptions {
                round,
                dump_program,
                ..common.options()
            };
            Ok(report(run_plan(&scenario, &opts)?))
        }
        Command::Rhc {
            scenario,
            common,
            lookahead,
            max_steps,
        } => {
            let opts = RunOptions {
                lookahead,
                max_steps,
                ..common.options()
            };
            Ok(report(run_rhc(&scenario, &opts)?))
        }
        Command::Project { matrix, file } => {
            let text = match (matrix, file) {
                (Some(m), _) => m,
                (None, Some(path)) => std::fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let p = run_project(&parse_matrix(&text)?)?;
            print!("{}", format_projection(&p));
            Ok(EXIT_OK)
        }
        Command::Verify {
            dir,
            dynamics_tol,
            hull_tol,
        } => {
            let v = verify_export(&dir)?;
            println!("rows {}", v.rows);
            println!("dynamics residual {}", v.check.dynamics_residual);
            println!("hull violation {}", v.check.hull_violation);
            println!("det column mismatch {}", v.det_mismatch);
            let ok = v.passes(dynamics_tol, hull_tol);
            println!("{}", if ok { "ok" } else { "FAILED" });
            Ok(if ok { EXIT_OK } else { EXIT_OTHER })
        }
    }
}

fn main() -> ExitCode {
    // usage errors share the invalid-input code instead of clap's 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
