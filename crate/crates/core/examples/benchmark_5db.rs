//! Two-mode states of the three bases for 5 dB of unbalanced loss at the
//! 40-photon gain, written to `out/benchmark_5db`.

use std::path::Path;

use pdc_tmbs::runner::{self, RunOptions};

fn main() -> Result<(), pdc_tmbs::Error> {
    let scenario = runner::bundled("wg2_5db")?;
    let result = runner::run_sweep(&scenario, &RunOptions::default())?;
    println!("gain {:.6} 1/m", result.gain.gain_per_m);
    println!("basis      N_A      N_B  lambda_-        E  sq (dB)   purity");
    for row in &result.rows {
        let r = &row.report;
        println!(
            "{:>5} {:8.3} {:8.3} {:9.4} {:8.4} {:8.3} {:8.4}",
            row.basis, r.n_a, r.n_b, r.lambda_minus, r.log_negativity, r.squeezing_db, r.purity
        );
    }
    for path in runner::write_sweep(&result, Path::new("out/benchmark_5db"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
