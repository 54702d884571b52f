use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use weakline_cli::goldens;
use weakline_cli::observable::parse_list;
use weakline_cli::output::write_csv;
use weakline_cli::request::{Command, Format, RunRequest, SweepSpec};
use weakline_cli::run::{run, CliError, EXIT_VALIDATION};
use weakline_cli::JsonReport;
use weakline_core::model::Scenario;

/// Weak values of pre- and postselected ensembles from exact, semiclassical,
/// generating-functional and pointer engines.
#[derive(Parser, Debug)]
#[command(name = "weakline", version, args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    sub: Option<Sub>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Regenerate the reference examples and diff them against the committed files.
    Goldens {
        /// Directory holding the reference CSV files.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Overwrite the reference files instead of comparing.
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long, required = true)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, required = true)]
    command: Option<Command>,
    /// q, p, a polynomial such as "q^2 + 0.5*q*p", identity, or sigma_x|y|z.
    #[arg(long)]
    observable: Option<String>,
    /// Comma-separated evaluation times (default: window midpoint).
    #[arg(long)]
    times: Option<String>,
    /// PARAM=v1,v2,... with PARAM one of hbar, t_end, alpha, g. Values may use pi.
    #[arg(long)]
    sweep: Option<SweepSpec>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for pointer readout sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pointer position spread.
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    /// Simulated pointer readouts per point (needs --sweep g=...).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Source strength for the generating-functional derivative.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Source bin width (default: window length / 64).
    #[arg(long)]
    bin_width: Option<f64>,
    /// Fill wallclock_ms with measured times (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("ERROR {} {}", err.code, err.message.replace('\n', " "));
    ExitCode::from(err.code as u8)
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, CliError> {
    let Ok(raw) = std::env::var("WEAKLINE_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::validation(format!("WEAKLINE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| CliError::validation(format!("thread pool: {e}")))
}

fn execute(req: &RunRequest) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&req.scenario_path)
        .map_err(|e| CliError::validation(format!("reading {}: {e}", req.scenario_path.display())))?;
    let scenario = Scenario::from_json_str(&text)?;
    let outcome = match thread_pool()? {
        Some(pool) => pool.install(|| run(req, &scenario))?,
        None => run(req, &scenario)?,
    };
    let mut bytes = vec![];
    match req.format {
        Format::Csv => write_csv(&mut bytes, &outcome.records).map_err(|e| CliError::validation(e.to_string()))?,
        Format::Json => {
            let report = JsonReport { request: req.clone(), records: outcome.records.clone() };
            serde_json::to_writer_pretty(&mut bytes, &report).map_err(|e| CliError::validation(e.to_string()))?;
            bytes.push(b'\n');
        }
    }
    let written = match &req.output_path {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().write_all(&bytes),
    };
    written.map_err(|e| CliError::validation(format!("writing output: {e}")))?;
    for line in &outcome.diagnostics {
        eprintln!("{line}");
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap's message spans several lines; keep the substance on one
            let msg = e.to_string();
            let parts: Vec<&str> = msg
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("ERROR {EXIT_VALIDATION} {}", parts.join(" ").trim_start_matches("error: "));
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    if let Some(Sub::Goldens { dir, bless }) = cli.sub {
        let dir = dir.unwrap_or_else(goldens::default_dir);
        return match goldens::check(&dir, bless) {
            Ok((lines, ok)) => {
                for l in lines {
                    println!("{l}");
                }
                if ok {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("ERROR 1 golden outputs differ from {}", dir.display());
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e),
        };
    }
    let a = cli.run;
    let mut req = RunRequest::new(a.command.expect("required"), a.scenario.expect("required"));
    req.observable = a.observable;
    req.times = match a.times.as_deref().map(parse_list) {
        Some(Err(e)) => return fail(&CliError::validation(format!("--times: {e}"))),
        other => other.map(Result::unwrap),
    };
    req.sweep = a.sweep;
    req.output_path = a.out;
    req.format = a.format;
    req.seed = a.seed;
    req.sigma = a.sigma;
    req.samples = a.samples;
    req.epsilon = a.epsilon;
    req.bin_width = a.bin_width;
    req.timing = a.timing;
    match execute(&req) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e),
    }
}
