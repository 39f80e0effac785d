use std::path::PathBuf;
use std::process::ExitCode;

use bilinear_ident_harness::output::read_config;
use bilinear_ident_harness::{
    check_bands, run_experiment_with_threads, to_csv, write_results, ExperimentConfig, HarnessError, Mode,
};
use clap::{Args, Parser, Subcommand};

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_BANDS: u8 = 3;

/// Identifiability sweeps for bilinear measurement maps.
#[derive(Debug, Parser)]
#[command(name = "bilinear-ident", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Jacobian rank of the difference map against the expected dimension.
    DimCheck(RunArgs),
    /// Stability-constant search over sparse rank-one differences.
    Certify(RunArgs),
    /// Blind recovery of one signal per trial.
    Phase(RunArgs),
    /// Recovery rate over many signals per map.
    Recover(RunArgs),
    /// Local identifiability around a fixed signal.
    Weak(RunArgs),
    /// Direct against FFT circular convolution.
    ConvSelftest(RunArgs),
    /// Print the preset configuration of a mode as JSON.
    PrintConfig {
        #[arg(value_parser = parse_mode)]
        mode: Mode,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON configuration; the mode's preset when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving `<mode>.csv` and `<mode>.json`; CSV goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Exit with status 3 when the sweep violates its acceptance bands.
    #[arg(long = "assert")]
    assert_bands: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode {s:?}"))
}

fn run(mode: Mode, args: &RunArgs) -> Result<ExitCode, (u8, String)> {
    let mut cfg = match &args.config {
        Some(path) => read_config(path).map_err(classify)?,
        None => ExperimentConfig::preset(mode),
    };
    if cfg.mode != mode {
        return Err((EXIT_INVALID, format!("configuration is for mode {}, not {mode}", cfg.mode)));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if args.threads == 0 {
        return Err((EXIT_INVALID, "--threads must be at least 1".into()));
    }
    let rec = run_experiment_with_threads(&cfg, args.threads).map_err(classify)?;
    match &args.out {
        Some(dir) => {
            let path = dir.join(format!("{mode}.csv"));
            write_results(&rec, &path).map_err(classify)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", to_csv(&rec)),
    }
    if args.assert_bands {
        let failures = check_bands(&rec);
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("band violated: {f}");
            }
            return Ok(ExitCode::from(EXIT_BANDS));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn classify(e: HarnessError) -> (u8, String) {
    let code = match e {
        HarnessError::Validation(_) | HarnessError::Json { .. } => EXIT_INVALID,
        HarnessError::Io { .. } | HarnessError::Core(_) | HarnessError::ThreadPool(_) => EXIT_IO,
    };
    (code, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::DimCheck(a) => (Mode::DimCheck, a),
        Command::Certify(a) => (Mode::Certify, a),
        Command::Phase(a) => (Mode::Phase, a),
        Command::Recover(a) => (Mode::Recover, a),
        Command::Weak(a) => (Mode::Weak, a),
        Command::ConvSelftest(a) => (Mode::ConvSelftest, a),
        Command::PrintConfig { mode } => {
            let cfg = ExperimentConfig::preset(*mode);
            println!("{}", serde_json::to_string_pretty(&cfg).expect("configuration serializes"));
            return ExitCode::SUCCESS;
        }
    };
    match run(mode, args) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
