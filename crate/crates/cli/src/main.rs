use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use censreg::mc::{fit_model, run_grid};
use censreg_cli::dataset_io::read_dataset_csv;
use censreg_cli::output::{emit_fit, emit_rows};
use censreg_cli::{parse_args, CliError, Command, RunConfig};

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Returns whether every requested cell produced complete rows.
fn run(cfg: &RunConfig) -> Result<bool, CliError> {
    match &cfg.command {
        Command::Simulate(grid) => {
            let rows = run_grid(grid)?;
            let mut ok = !rows.is_empty();
            for row in &rows {
                if !row.is_complete() {
                    ok = false;
                    eprintln!(
                        "warning: {} {} {} {}: fewer than two converged fits",
                        row.design, row.censor_frac, row.model, row.parameter
                    );
                } else if !row.convergence_ok() {
                    eprintln!(
                        "warning: {} {} {}: {}/{} fits converged",
                        row.design, row.censor_frac, row.model, row.n_converged, row.n_total
                    );
                }
            }
            emit_rows(&rows, cfg.format, sink(cfg)?)?;
            Ok(ok)
        }
        Command::Fit { input, model } => {
            let ds = read_dataset_csv(input)?;
            let fit = fit_model(*model, &ds)?;
            if !fit.converged {
                eprintln!("warning: {model} fit did not converge");
            }
            emit_fit(&fit, cfg.format, sink(cfg)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(CliError::Help(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("censreg: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("censreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
