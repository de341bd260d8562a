use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use switchmet::experiment::{self, ExperimentConfig, Mode};
use switchmet::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_THRESHOLD: u8 = 2;
const EXIT_IO: u8 = 3;

/// Run one experiment mode and write `<out>/<mode>.csv` plus a JSON manifest.
#[derive(Debug, Parser)]
#[command(name = "switchmet", version)]
struct Cli {
    /// fig3, fig4, fig5a, fig5b, baseline, loss-sweep or oracle-check
    mode: String,
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nu: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fmt(v: f64) -> String {
    format!("{v:.6e}")
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("switchmet: {msg}");
    ExitCode::from(code)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mode: Mode = cli.mode.parse()?;
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    config.mode = Some(mode);
    if let Some(v) = cli.seed {
        config.seed = v;
    }
    if let Some(v) = cli.nu {
        config.nu = v;
    }
    if let Some(v) = cli.trials {
        config.trials = v;
    }
    if let Some(v) = cli.n_max {
        config.n_max = Some(v);
        if let Some(values) = &mut config.n_values {
            values.retain(|&n| n <= v);
        }
    }
    if let Some(v) = cli.eta {
        config.eta = Some(v);
    }
    if let Some(v) = cli.phi0 {
        config.phi0 = v;
    }
    if let Some(v) = &cli.out {
        config.out = v.clone();
    }
    config.validate()?;
    Ok(config)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SWITCHMET_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("SWITCHMET_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Err(msg) = configure_threads() {
        return fail(EXIT_VALIDATION, msg);
    }
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(exit_code(&e), e),
    };

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let report = match experiment::run(&config) {
        Ok(r) => r,
        Err(e) => return fail(exit_code(&e), e),
    };
    let elapsed = clock.elapsed().as_secs_f64();
    let paths = match experiment::write_report(&report, &config, &config.out, started, elapsed) {
        Ok(p) => p,
        Err(e) => return fail(exit_code(&e), e),
    };

    println!(
        "{}: {} rows -> {}",
        report.mode,
        report.table.rows.len(),
        paths.csv.display()
    );
    for (name, fit) in &report.fits {
        let params: Vec<String> = fit
            .parameters
            .iter()
            .map(|p| format!("{}={}", p.name, fmt(p.value)))
            .collect();
        println!("  fit {name}: {}", params.join(" "));
    }
    for (name, v) in &report.summary {
        println!("  {name}: {}", fmt(*v));
    }
    if !report.passed {
        return fail(
            EXIT_THRESHOLD,
            format!("{} missed its threshold", report.mode),
        );
    }
    ExitCode::SUCCESS
}
