use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use floquet_dgtd_cli::{oracle_mode, parse_config, simulate, stability, verify, Invocation, RunError};

#[derive(Parser)]
#[command(name = "floquet-dgtd", version, about = "Periodic DGTD solver for oblique planewave incidence")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
    /// Run configuration (TOML with dotted keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Use c0 = eps0 = mu0 = 1.
    #[arg(long, global = true)]
    natural_units: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Mode {
    /// Time-domain run producing R(f), T(f) and probe time series.
    Simulate,
    /// Smallest stable CFL scale per incidence angle.
    Stability,
    /// Transfer-matrix reference spectra for the layered stack.
    Oracle,
    /// Quick invariant checks.
    Verify,
}

fn error_record(e: &RunError) {
    eprintln!("error.kind = {:?}", e.kind);
    eprintln!("error.message = {:?}", e.message);
}

fn run(cli: &Cli) -> Result<(), RunError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| RunError { kind: "config", message: e.to_string() })?;
    }
    if let Mode::Verify = cli.mode {
        let checks = verify::run_checks();
        let mut failed = 0;
        for c in &checks {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            failed += usize::from(!c.pass);
        }
        return if failed == 0 {
            Ok(())
        } else {
            Err(RunError { kind: "verify", message: format!("{failed} checks failed") })
        };
    }
    let path = cli.config.as_ref().ok_or(RunError {
        kind: "config",
        message: "--config is required for this mode".into(),
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError { kind: "io", message: format!("{}: {e}", path.display()) })?;
    let cfg = parse_config(&text)?;
    let inv = Invocation {
        out: cli.out.clone(),
        natural_units: cli.natural_units,
    };
    match cli.mode {
        Mode::Simulate => {
            let s = simulate(&cfg, &inv)?;
            println!(
                "{} steps of {:.4e}; band-averaged R = {:.6}, T = {:.6}; results in {}",
                s.steps,
                s.dt,
                s.r_band_mean,
                s.t_band_mean,
                s.out_dir.display()
            );
        }
        Mode::Stability => {
            for (theta, v) in stability(&cfg, &inv)? {
                println!("{theta}, {v:.4}");
            }
        }
        Mode::Oracle => println!("{}", oracle_mode(&cfg, &inv)?.display()),
        Mode::Verify => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error_record(&e);
            ExitCode::from(if e.kind == "config" { 2 } else { 1 })
        }
    }
}
