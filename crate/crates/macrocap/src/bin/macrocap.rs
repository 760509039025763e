use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use macrocap::channel::TableScenario;
use macrocap::cli::{run, threads_from_env, validate, write_outputs, RunConfig};

#[derive(Parser)]
#[command(name = "macrocap", version, about = "Ergodic sum capacity of macrodiversity MIMO multiple-access channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write CSV plus a manifest next to it
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in scenarios or print a preset config
    Preset {
        #[arg(long)]
        list: bool,
        /// print a ready-to-run config for this preset
        #[arg(long)]
        show: Option<String>,
    },
}

const CONFIG_ERROR: u8 = 1;

/// Stdout write that tolerates a closed pipe (`macrocap preset --list | head`).
fn out(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
const ENGINE_ERROR: u8 = 2;

fn load(path: &PathBuf) -> Result<(RunConfig, Vec<u8>), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg = RunConfig::from_json(text).map_err(|e| e.to_string())?;
    Ok((cfg, bytes))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(CONFIG_ERROR)
            }
            Ok((cfg, _)) => {
                let errs = validate(&cfg);
                if errs.is_empty() {
                    println!("ok");
                    ExitCode::SUCCESS
                } else {
                    for e in errs {
                        eprintln!("error: {e}");
                    }
                    ExitCode::from(CONFIG_ERROR)
                }
            }
        },
        Command::Run { config, out } => {
            let (cfg, bytes) = match load(&config) {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            let errs = validate(&cfg);
            if !errs.is_empty() {
                for e in errs {
                    eprintln!("error: {e}");
                }
                return ExitCode::from(CONFIG_ERROR);
            }
            let Some(path) = out.or_else(|| cfg.output.clone()) else {
                eprintln!("error: no output path (use --out or set \"output\" in the config)");
                return ExitCode::from(CONFIG_ERROR);
            };
            let result = match run(&cfg, &bytes, threads_from_env()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(ENGINE_ERROR);
                }
            };
            if let Err(e) = write_outputs(&result, &path) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(ENGINE_ERROR);
            }
            let mut failed = false;
            for row in &result.rows {
                for e in &row.errors {
                    eprintln!("engine error: {e}");
                    failed = true;
                }
            }
            if failed {
                ExitCode::from(ENGINE_ERROR)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Preset { list, show } => {
            if let Some(name) = show {
                match TableScenario::parse(&name) {
                    Ok(id) => {
                        out(&format!("{}\n", serde_json::to_string_pretty(&RunConfig::preset(id)).unwrap()));
                        ExitCode::SUCCESS
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(CONFIG_ERROR)
                    }
                }
            } else {
                let _ = list;
                let mut table = String::from("name  alpha_1  alpha_2  Tr(P1)/Tr(P2)\n");
                for id in TableScenario::ALL {
                    let (a1, a2, vs) = id.parameters();
                    table.push_str(&format!("{:<5} {:<8} {:<8} {}\n", id.name(), a1, a2, vs));
                }
                out(&table);
                ExitCode::SUCCESS
            }
        }
    }
}
