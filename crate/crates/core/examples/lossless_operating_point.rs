//! Calibrates the gain of the lossless reference waveguide to 40 photons in the
//! dominant signal mode and reports the resulting two-mode state in all bases.

use std::time::Instant;

use pdc_tmbs::modes::{mercer_wolf_modes, msq_modes, williamson_euler_modes};
use pdc_tmbs::solver::{calibrate_gain, integrate, PhotonCount, SolverConfig};
use pdc_tmbs::tmbs::report;
use pdc_tmbs::waveguide::{PumpSpec, WaveguideSpec};

fn main() -> Result<(), pdc_tmbs::error::Error> {
    let pump = PumpSpec::reference();
    let wg0 = WaveguideSpec::reference(&pump);
    let config = SolverConfig::reference(&wg0, &pump, 0.0)?;

    let start = Instant::now();
    let cal = calibrate_gain(40.0, PhotonCount::FirstMode, &wg0, &pump, &config)?;
    println!(
        "gain {:.6} 1/m after {} integrations ({:.1} s)",
        cal.gain,
        cal.evaluations,
        start.elapsed().as_secs_f64()
    );

    let state = integrate(&config.with_gain(cal.gain), &wg0, &pump)?;
    println!("total signal photons {:.3}", state.total_signal_photons());
    for modes in [
        mercer_wolf_modes(&state)?,
        williamson_euler_modes(&state)?,
        msq_modes(&state)?,
    ] {
        let r = report(&state, &modes)?;
        println!(
            "{:>3}: N_A {:.3}  N_B {:.3}  lambda_- {:.6}  E {:.4}  purity {:.6}",
            modes.basis, r.n_a, r.n_b, r.lambda_minus, r.log_negativity, r.purity
        );
    }
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
