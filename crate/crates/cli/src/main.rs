use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use oddlift_cli::{run_path, CliError, Format};

/// Runs one oddlift scenario file and writes its report.
///
/// Exit status is 0 when every asserted tolerance holds, 1 when a tolerance
/// fails or a computation does not converge, and 2 on invalid input.
///
/// CSV columns by command:
///   symbol             tau, psi_n, psi_lifted, residual, pass
///   lift-check         r, lifted, reference, relative_error, pass
///   verify-identity    the scalar result fields, or one line per row for
///                      bochner (xi, lhs, rhs, spectral) and odd (point, lhs, lifted, residual)
///   harnack            sup, inf, ratio, lifted_sup, lifted_inf, residual_max, ..., pass
///   weak-harnack       norm_As, inf_quotient, ratio, M, rho, s, pass
///   local-boundedness  sup_quotient, norm_As, ratio, M, rho, s, pass
///   mollifier          eps, norm, pass
#[derive(Debug, Parser)]
#[command(name = "oddlift", version, verbatim_doc_comment)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Report path; overrides the scenario's output.path. Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format; overrides the scenario's output.format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Multiplies every asserted tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Worker threads for the parallel loops.
    #[arg(long)]
    threads: Option<usize>,
    /// Writes the (x, u(x)/x1) samples of a harnack run as CSV.
    #[arg(long)]
    dump_samples: Option<PathBuf>,
}

fn run(args: &Args) -> Result<i32, CliError> {
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Input("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(format!("threads: {e}")))?;
    }
    let outcome = run_path(&args.scenario, args.tolerance_scale)?;
    let format = args.format.or(outcome.output.format).unwrap_or(Format::Json);
    let text = outcome.render(format)?;
    let write = |path: &PathBuf, text: &str| std::fs::write(path, text).map_err(|e| CliError::Input(format!("output: {}: {e}", path.display())));
    match args.output.as_ref().or(outcome.output.path.as_ref()) {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.dump_samples {
        match outcome.samples_csv() {
            Some(csv) => write(path, &csv)?,
            None => return Err(CliError::Input("dump-samples: only harnack scenarios produce samples".into())),
        }
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("oddlift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
