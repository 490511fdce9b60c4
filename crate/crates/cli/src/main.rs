use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mirroropt_cli::config::VerifyConfig;
use mirroropt_cli::run::{cmd_run, RunOverrides};
use mirroropt_cli::sigma::cmd_sigma;
use mirroropt_cli::suite::{cmd_verify, Suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "mirroropt", version, about = "Stochastic mirror descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Run a verification suite: properties, theorems, figures or all.
    Verify {
        suite: Suite,
        /// File with a `[verify]` table of overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for figure CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print σ², σ²_X, E‖∇f_i(x_*)‖² and the interpolation report.
    Sigma {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            replicates,
        } => {
            let report = cmd_run(&config, &RunOverrides { out, seed, replicates })?;
            if !cli.quiet {
                for r in &report.manifest.rules {
                    let flag = if r.flagged { " (diverged)" } else { "" };
                    println!("{} -> {}{flag}", r.label, report.out_dir.join(&r.file).display());
                }
                println!("manifest: {}", report.out_dir.join(mirroropt_cli::run::MANIFEST).display());
            }
            Ok(true)
        }
        Command::Verify {
            suite,
            config,
            out,
            seed,
        } => {
            let overrides = match config {
                Some(path) => VerifyConfig::load(&path)?,
                None => VerifyConfig::default(),
            };
            let opts = VerifyOptions { overrides, out, seed };
            let results = cmd_verify(suite, &opts, cli.quiet)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            if !cli.quiet {
                println!("{} of {} criteria passed", results.len() - failed, results.len());
            }
            Ok(failed == 0)
        }
        Command::Sigma { config } => {
            let report = cmd_sigma(&config)?;
            if !cli.quiet {
                print!("{}", report.render());
            }
            Ok(true)
        }
    }
}
