use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdc_tmbs::runner::{self, RunOptions};
use pdc_tmbs::{Error, Scenario};

/// Two-mode squeezing and entanglement of broadband PDC in lossy waveguides.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML). Defaults to the bundled scenario of the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep points (0: all cores).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed of the randomized MSq optimality search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also re-run the first sweep point on a refined grid and report the
    /// relative changes.
    #[arg(long, global = true)]
    grid_check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Loss sweep of a scenario (requires --config).
    Scenario,
    /// Low-gain joint spectral intensity.
    Jsi,
    /// Photon number, squeezing and entanglement versus gain.
    GainSweep,
    /// Two-mode states of all bases at 5 dB of unbalanced loss.
    Benchmark,
}

fn load(cli: &Cli, stem: Option<&str>) -> Result<Scenario, Error> {
    match (&cli.config, stem) {
        (Some(path), _) => Scenario::from_path(path),
        (None, Some(stem)) => runner::bundled(stem),
        (None, None) => Err(Error::Config("--config is required for this command".into())),
    }
}

fn sweep(cli: &Cli, scenario: &Scenario, opts: &RunOptions) -> Result<(), Error> {
    let result = runner::run_sweep(scenario, opts)?;
    for path in runner::write_sweep(&result, &cli.out)? {
        println!("wrote {}", path.display());
    }
    println!("gain {} 1/m", result.gain.gain_per_m);
    for row in &result.rows {
        let r = &row.report;
        println!(
            "eta {:5.2} dB {:>3}: N_A {:7.3} N_B {:7.3} lambda_- {:.4} E {:.4} purity {:.4}",
            row.eta_bar_db, row.basis, r.n_a, r.n_b, r.lambda_minus, r.log_negativity, r.purity
        );
    }
    if cli.grid_check {
        let check = runner::grid_check(scenario, &result, opts)?;
        for (basis, metric, base, fine, rel) in &check.deltas {
            println!("grid-check {basis} {metric}: {base} -> {fine} (rel {rel:.3e})");
        }
        println!(
            "grid-check max relative change {:.3e} ({})",
            check.max_relative_change,
            if check.passes() { "ok" } else { "exceeds 1%" }
        );
        let path = cli.out.join(format!("{}.grid_check.json", scenario.name));
        std::fs::write(&path, serde_json::to_string_pretty(&check).expect("serializes") + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let opts = RunOptions {
        threads: cli.threads,
        seed: cli.seed,
        keep_states: false,
    };
    match cli.command {
        Command::Scenario => sweep(cli, &load(cli, None)?, &opts),
        Command::Benchmark => sweep(cli, &load(cli, Some("wg2_5db"))?, &opts),
        Command::Jsi => {
            let scenario = load(cli, Some("jsi"))?;
            let result = runner::run_jsi(&scenario)?;
            let path = runner::write_jsi(&scenario, &result, &cli.out)?;
            println!(
                "gain {} 1/m, total signal photons {:.3e}",
                result.gain.gain_per_m, result.total_signal_photons
            );
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::GainSweep => {
            let scenario = load(cli, Some("gain_sweep"))?;
            let result = runner::run_gain_sweep(&scenario, &opts)?;
            let path = runner::write_gain_sweep(&scenario, &result, &cli.out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
