use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use phcqed_cli::{run, Cli, CliError};

fn emit(cli: &Cli, data: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, data)?,
        None => std::io::stdout().lock().write_all(data.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run(&cli).and_then(|report| {
        emit(&cli, &report.data)?;
        eprintln!("{}", report.summary);
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let CliError::FitFailed { report, .. } = &err {
                let _ = emit(&cli, report);
            }
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
