use std::io::Write;
use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};
use nlwave::presets::{manufactured_case, preset_document};
use nlwave::runner::{self, apply_overrides, prepare_config, ExitCode, RunFlags, RunnerError};
use nlwave::RunConfig;

#[derive(Parser)]
#[command(
    name = "nlwave",
    version,
    about = "Fourier-spectral simulator for nonlocal wave equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run even if the admissibility audit fails.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized audits (overrides the config seed).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run { config: PathBuf },
    /// Run a built-in preset, or print its configuration.
    Preset {
        name: String,
        #[arg(long)]
        emit_config: bool,
    },
    /// Admissibility and Lipschitz audit only.
    Audit { config: PathBuf },
    /// Print the per-mode symbol table as CSV.
    DumpSymbols { config: PathBuf },
}

fn run_config(config: &RunConfig, force: bool) -> Result<ExitCode, RunnerError> {
    let report = runner::run_experiment(config, RunFlags { force })?;
    print!("{}", report.manifest());
    println!("output_dir={}", report.out_dir.display());
    Ok(report.exit_code())
}

fn dispatch(cli: Cli) -> Result<ExitCode, RunnerError> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run { config } => {
            let config = prepare_config(&config, out, cli.seed)?;
            run_config(&config, cli.force)
        }
        Command::Preset { name, emit_config } => {
            if emit_config {
                print!("{}", preset_document(&name)?);
                return Ok(ExitCode::Completed);
            }
            let mut config = manufactured_case(&name)?.config;
            if out.is_none() {
                config.output.dir = PathBuf::from("out").join(&name);
            }
            apply_overrides(&mut config, out, cli.seed);
            run_config(&config, cli.force)
        }
        Command::Audit { config } => {
            let config = prepare_config(&config, out, cli.seed)?;
            let outcome = runner::audit(&config)?;
            print!("{}", runner::audit_text(&outcome));
            Ok(if outcome.report.overall {
                ExitCode::Completed
            } else {
                ExitCode::RejectedAdmissibility
            })
        }
        Command::DumpSymbols { config } => {
            let config = prepare_config(&config, out, cli.seed)?;
            let table = runner::dump_symbols(&config)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join("symbols.csv");
                    std::fs::write(&path, table)?;
                    println!("{}", path.display());
                }
                None => std::io::stdout().write_all(table.as_bytes())?,
            }
            Ok(ExitCode::Completed)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::Usage.code()
            } else {
                0
            };
            let _ = e.print();
            process::exit(code.into());
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nlwave: {e}");
            e.exit_code()
        }
    };
    process::exit(code.code().into());
}
