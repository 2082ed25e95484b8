//! `workbench` command-line front end: configuration, experiments and output.

pub mod config;
pub mod experiments;
pub mod output;

use std::io::Write;

pub use config::{load_config, parse_config, CliError, Experiment, ExperimentConfig, OutputFormat, Parsed, Tolerances};
pub use experiments::run_experiment;
pub use output::{emit_csv, emit_json, parse_csv, parse_json, Cell, Check, ResultDoc, ResultTable};

/// Renders a result document in the configured format.
pub fn render(doc: &ResultDoc) -> String {
    match doc.config.format {
        OutputFormat::Csv => emit_csv(&doc.table),
        OutputFormat::Json => emit_json(doc),
    }
}

/// Runs one configured experiment, writes its output file and prints one
/// summary line per check. Returns 0 when every check passes, 1 otherwise.
pub fn execute(cfg: &ExperimentConfig, stdout: &mut impl Write) -> Result<i32, CliError> {
    let doc = run_experiment(cfg).map_err(|e| CliError::Validation(e.to_string()))?;
    std::fs::write(&cfg.out_path, render(&doc)).map_err(|e| CliError::Io(format!("writing {}: {e}", cfg.out_path)))?;
    let io = |e: std::io::Error| CliError::Io(format!("writing summary: {e}"));
    for check in &doc.checks {
        writeln!(stdout, "{}", check.summary_line()).map_err(io)?;
    }
    writeln!(stdout, "wrote {} rows to {}", doc.table.rows.len(), cfg.out_path).map_err(io)?;
    Ok(if doc.all_pass() { 0 } else { 1 })
}

/// Entry point shared by the binary: parse, run, report. Returns the exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    let outcome = load_config(args).and_then(|parsed| match parsed {
        Parsed::Info(text) => {
            print!("{text}");
            Ok(0)
        }
        Parsed::Run(cfg) => execute(&cfg, &mut std::io::stdout().lock()),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
