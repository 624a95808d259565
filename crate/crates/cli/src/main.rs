use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plmtest::harness::realdata::{real_data_run, RealDataRequest};
use plmtest::harness::report::{csv_string, emit_report};
use plmtest::harness::{run_grid, run_selftest, ExperimentConfig, Preset};
use plmtest::nuisance::NuisanceMethod;
use plmtest::penhance::ThresholdKind;
use plmtest::qtest::TestSettings;
use plmtest::Error;

#[derive(Parser)]
#[command(name = "plmtest", version, about = "Tests for the linear part of high-dimensional partially linear models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo grid and write results.csv, report.txt and config.json.
    Simulate {
        /// JSON experiment configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Test a real dataset: H0 on the X block, then on the Z block.
    Test {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        /// File listing the X columns (1-based predictor positions or names).
        #[arg(long = "x-index")]
        x_index: PathBuf,
        #[arg(long, default_value = "lasso")]
        method: String,
        #[arg(long, default_value_t = 30)]
        splits: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check fast statistics against literal sums and other invariants.
    Selftest,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownMethod(_) | Error::RhoOutOfRange(_) | Error::SparsityExceedsDimension { .. } => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn simulate(
    config: Option<PathBuf>,
    preset: Option<Preset>,
    out: PathBuf,
    workers: Option<usize>,
    seed: Option<u64>,
    replicates: Option<usize>,
) -> Result<(), Error> {
    let mut cfg = match &config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = preset.or(cfg.preset) {
        cfg.apply_preset(p);
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let write = |name: &str, text: &str| {
        let path = out.join(name);
        fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    };
    write("config.json", &cfg.to_json())?;

    let result = run_grid(&cfg)?;
    let rows = result.rows();
    write("results.csv", &csv_string(&rows)?)?;
    let report = emit_report(&rows)?;
    write("report.txt", &report)?;
    print!("{report}");
    if result.dominance_violations() > 0 {
        log::error!("{} dominance violations", result.dominance_violations());
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn test(
    data: PathBuf,
    response: String,
    x_index: PathBuf,
    method: &str,
    splits: usize,
    alpha: f64,
    seed: u64,
) -> Result<(), Error> {
    let method = NuisanceMethod::from_name(method)?;
    let settings = TestSettings { alpha, enhance: vec![ThresholdKind::Hard, ThresholdKind::Soft], ..Default::default() };
    settings.validate()?;
    let req = RealDataRequest { data, response, x_index, method, settings, m_splits: splits, seed };
    let report = real_data_run(&req)?;
    print!("{}", report.table());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, preset, out, workers, seed, replicates } => {
            simulate(config, preset, out, workers, seed, replicates)
        }
        Command::Test { data, response, x_index, method, splits, alpha, seed } => {
            test(data, response, x_index, &method, splits, alpha, seed)
        }
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{} {:<48} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Error::Domain("self-test failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
