//! Low-gain joint spectral intensity of the lossless waveguide, written as a
//! CSV matrix to `out/jsi`.

use std::path::Path;

use pdc_tmbs::runner;

fn main() -> Result<(), pdc_tmbs::Error> {
    let scenario = runner::bundled("jsi")?;
    let result = runner::run_jsi(&scenario)?;
    let n = result.offsets.len();
    let (mut peak, mut at) = (0.0, (0, 0));
    for j in 0..n {
        for i in 0..n {
            if result.jsi[(i, j)] > peak {
                peak = result.jsi[(i, j)];
                at = (i, j);
            }
        }
    }
    println!(
        "gain {:.4} 1/m, {:.2e} signal photons, peak at delta_omega = ({:.3e}, {:.3e}) rad/s",
        result.gain.gain_per_m, result.total_signal_photons, result.offsets[at.0], result.offsets[at.1]
    );
    let path = runner::write_jsi(&scenario, &result, Path::new("out/jsi"))?;
    println!("wrote {}", path.display());
    Ok(())
}
