//! Detection loss after the waveguide: uniform transmission applied to the
//! lossless output, and its effect on the maximally squeezed pair.

use faer::c64;
use pdc_tmbs::gaussian;
use pdc_tmbs::modes;
use pdc_tmbs::solver::{self, SolverConfig};
use pdc_tmbs::tmbs;
use pdc_tmbs::waveguide::{PumpSpec, WaveguideSpec};

fn main() -> Result<(), pdc_tmbs::Error> {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let grid = solver::default_grid(&spec, &pump, 31)?;
    let config = SolverConfig {
        grid,
        gain: 150.0,
        steps: 1000,
        convergence_check: true,
    };
    let state = solver::integrate(&config, &spec, &pump)?;
    let n = state.modes();
    println!("transmission   N_A   lambda_-       E   purity");
    for eff in [1.0, 0.9, 0.7, 0.5] {
        let t = vec![c64::new(f64::sqrt(eff), 0.0); n];
        let lossy = gaussian::apply_external_loss(&state, &t, &t)?;
        let r = tmbs::report(&lossy, &modes::msq_modes(&lossy)?)?;
        println!(
            "{eff:12.2} {:6.3} {:9.4} {:7.4} {:8.4}",
            r.n_a, r.lambda_minus, r.log_negativity, r.purity
        );
    }
    Ok(())
}
