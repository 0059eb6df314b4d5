use std::process::ExitCode;

use clap::Parser;

use fractal_spectra_cli::config::{Cli, RunConfig};
use fractal_spectra_cli::run::run;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::from_cli(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fracspec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
