//! Williamson and Euler factorization of a lossy two-mode squeezed state on a
//! two-point grid, with the reconstruction residual and the extracted modes.

use faer::{c64, Mat};
use pdc_tmbs::gaussian::{self, CorrelationState};
use pdc_tmbs::grid::FrequencyGrid;
use pdc_tmbs::modes;

fn main() -> Result<(), pdc_tmbs::Error> {
    let grid = FrequencyGrid::centered(1.25e15, 1e12, 2)?;
    let r: f64 = 1.0;
    let diag = |v: [f64; 2]| Mat::from_fn(2, 2, |i, j| if i == j { c64::new(v[i], 0.0) } else { c64::new(0.0, 0.0) });
    let a = diag([r.sinh().powi(2), (0.5 * r).sinh().powi(2)]);
    let x = diag([0.5 * (2.0 * r).sinh(), 0.5 * r.sinh()]);
    let pure = CorrelationState::from_blocks(grid, a.as_ref(), a.as_ref(), x.as_ref(), 0.0)?;
    let t = [c64::new(0.9, 0.0), c64::new(0.8, 0.0)];
    let state = gaussian::apply_external_loss(&pure, &t, &t)?;

    let sigma = gaussian::cov_from_correlations(&state)?;
    let we = modes::williamson_euler(&sigma)?;
    let rec = we.reconstruct();
    let mut residual = 0.0f64;
    for j in 0..rec.ncols() {
        for i in 0..rec.nrows() {
            residual = residual.max((rec[(i, j)] - sigma.matrix()[(i, j)]).abs());
        }
    }
    println!("symplectic eigenvalues {:?}", we.symplectic_eigenvalues);
    println!("squeezing parameters   {:?}", we.squeezing);
    println!("reconstruction residual {residual:.2e}");
    let pair = modes::williamson_euler_modes(&state)?;
    println!("|u_A| = {:?}", pair.u_a.amplitudes().iter().map(|z| z.norm()).collect::<Vec<_>>());
    println!("|u_B| = {:?}", pair.u_b.amplitudes().iter().map(|z| z.norm()).collect::<Vec<_>>());
    Ok(())
}
