use clap::{Parser, Subcommand};
use fanolab::cli::{emit_report, exit_code_for, parse_config_with_overrides, run_experiment};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fanolab", version, about = "Kähler-Einstein desk laboratory")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured experiment into its run directory.
    Run {
        /// JSON config (line comments allowed).
        config: PathBuf,
        /// Dotted-key overrides, e.g. --set run.dt=0.005
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Merge run directories into a comparison report (no recomputation).
    Report {
        /// Run directories to compare.
        dirs: Vec<PathBuf>,
        /// Output stem; writes <out>.json and <out>.csv.
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
    },
    /// Check a config against the schema without running it.
    ValidateConfig { config: PathBuf },
}

fn main() {
    let args = Args::parse();
    let code = match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}

fn run(args: Args) -> fanolab::Result<i32> {
    match args.command {
        Command::Run { config, set } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = parse_config_with_overrides(&text, &set)?;
            let outcome = run_experiment(&cfg)?;
            if let Some(f) = outcome.failure {
                eprintln!("numerical failure: {f} (partial outputs in {})", outcome.run_dir.display());
                return Ok(3);
            }
            println!("{}", outcome.run_dir.display());
            Ok(0)
        }
        Command::Report { dirs, out } => {
            let cmp = emit_report(&dirs, &out)?;
            for (i, j, s) in &cmp.sup_discrepancies {
                println!("{} vs {}: sup discrepancy {s:e}", cmp.runs[*i], cmp.runs[*j]);
            }
            Ok(0)
        }
        Command::ValidateConfig { config } => {
            let text = std::fs::read_to_string(&config)?;
            parse_config_with_overrides(&text, &[])?;
            println!("ok");
            Ok(0)
        }
    }
}
