//! Squeezing and entanglement of the dominant mode pair versus photon number
//! for the lossless waveguide, compared with the pure two-mode squeezer.

use pdc_tmbs::runner::{self, RunOptions};

fn main() -> Result<(), pdc_tmbs::Error> {
    let mut scenario = runner::bundled("gain_sweep")?;
    scenario.gain_sweep.points = 5;
    let result = runner::run_gain_sweep(&scenario, &RunOptions::default())?;
    println!("gain (1/m)   N_photons   lambda_-   closed form        E");
    for r in &result.rows {
        println!(
            "{:10.4} {:11.4} {:10.6} {:12.6} {:8.4}",
            r.gain_per_m, r.n_photons, r.lambda_minus, r.lambda_minus_pure, r.log_negativity
        );
    }
    Ok(())
}
