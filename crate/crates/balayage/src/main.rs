//! Batch front-end: `balayage <config.toml> [--out <dir>]`.
//!
//! Exit codes: 0 on success, 2 on configuration/validation errors, 3 on
//! solver non-convergence or numerical breakdown.

use std::path::PathBuf;
use std::process::ExitCode;

use balayage::config::ExperimentConfig;
use balayage::runner;

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from(".");
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--out" => match args.next() {
                Some(d) => out_dir = PathBuf::from(d),
                None => {
                    eprintln!("error: --out needs a directory argument");
                    return ExitCode::from(2);
                }
            },
            "--help" | "-h" => {
                println!("usage: balayage <config.toml> [--out <dir>]");
                return ExitCode::SUCCESS;
            }
            other if config_path.is_none() => config_path = Some(PathBuf::from(other)),
            other => {
                eprintln!("error: unexpected argument `{other}`");
                return ExitCode::from(2);
            }
        }
    }
    let Some(config_path) = config_path else {
        eprintln!("usage: balayage <config.toml> [--out <dir>]");
        return ExitCode::from(2);
    };

    match ExperimentConfig::load(&config_path).and_then(|cfg| runner::run(&cfg, &out_dir)) {
        Ok(outcome) => {
            for f in outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code_for(&e) as u8)
        }
    }
}
