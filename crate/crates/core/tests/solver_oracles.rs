//! Solver checks against independent references: exact matrix exponentials,
//! a numerical Fourier transform of the pump and closed-form kinematics.

mod common;

use common::exact_single_pair;
use faer::c64;
use pdc_tmbs::gaussian::CorrelationState;
use pdc_tmbs::grid::FrequencyGrid;
use pdc_tmbs::solver::{self, PhotonCount, SolverConfig};
use pdc_tmbs::waveguide::{self, Field, LossSpec, PumpSpec, WaveguideSpec, SPEED_OF_LIGHT};

fn single_pair(spec: &WaveguideSpec, pump: &PumpSpec, gain: f64) -> (CorrelationState, f64) {
    let w0 = 0.5 * pump.center_frequency();
    let grid = FrequencyGrid::new(w0, 1e11, 1).unwrap();
    let config = SolverConfig {
        grid,
        gain,
        steps: 2000,
        convergence_check: true,
    };
    let state = solver::integrate(&config, spec, pump).unwrap();
    (state, spec.phase_mismatch(w0, w0))
}

fn rel(a: c64, b: c64) -> f64 {
    (a - b).norm() / b.norm()
}

fn check_single_pair(spec: WaveguideSpec, gain: f64) {
    let pump = PumpSpec::reference();
    let (state, dk) = single_pair(&spec, &pump, gain);
    let s = waveguide::pump_spectrum(pump.center_frequency(), &pump);
    let (a, b, x) = exact_single_pair(gain, s, dk, spec.eta_signal, spec.eta_idler, spec.length);
    let got_a = state.signal_photons()[(0, 0)];
    let got_b = state.idler_photons()[(0, 0)];
    let got_x = state.pair_amplitudes()[(0, 0)];
    for (what, got, want) in [
        ("A", got_a, c64::new(a, 0.0)),
        ("B", got_b, c64::new(b, 0.0)),
        ("X", got_x, x),
    ] {
        let r = rel(got, want);
        assert!(r < 1e-8, "{what}: {got} vs exact {want} (rel {r:.2e})");
    }
}

#[test]
fn single_pair_lossless_matches_matrix_exponential() {
    let pump = PumpSpec::reference();
    check_single_pair(WaveguideSpec::reference(&pump), 300.0);
}

#[test]
fn single_pair_lossy_matches_matrix_exponential() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump).with_losses(&LossSpec::new(5.0, 1.0 / 3.0).unwrap());
    check_single_pair(spec, 300.0);
}

#[test]
fn single_pair_detuned_matches_matrix_exponential() {
    let pump = PumpSpec::reference();
    let mut spec = WaveguideSpec::reference(&pump).with_losses(&LossSpec::new(2.0, 0.5).unwrap());
    spec.k_qpm += 250.0;
    check_single_pair(spec, 200.0);
}

#[test]
fn lossless_single_pair_is_two_mode_squeezer() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let gain = 150.0;
    let (state, _) = single_pair(&spec, &pump, gain);
    let r = gain * spec.length;
    let n = state.signal_photons()[(0, 0)].re;
    let x = state.pair_amplitudes()[(0, 0)];
    assert!((n - r.sinh().powi(2)).abs() < 1e-9 * n);
    assert!((x.norm() - 0.5 * (2.0 * r).sinh()).abs() < 1e-9 * x.norm());
}

#[test]
fn pump_intensity_fwhm_from_fourier_transform() {
    let pump = PumpSpec::reference();
    let wp = pump.center_frequency();
    let sigma = pump.spectral_sigma();
    let (points, half) = (4001, 10.0 * sigma);
    let dw = 2.0 * half / (points - 1) as f64;
    let intensity = |t: f64| {
        let field: f64 = (0..points)
            .map(|k| {
                let d = -half + k as f64 * dw;
                waveguide::pump_spectrum(wp + d, &pump) * (d * t).cos() * dw
            })
            .sum();
        field * field
    };
    let peak = intensity(0.0);
    let (mut lo, mut hi) = (0.0, 5.0 * pump.fwhm_duration);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if intensity(mid) > 0.5 * peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fwhm = 2.0 * lo;
    assert!((fwhm / pump.fwhm_duration - 1.0).abs() < 0.01, "fwhm {fwhm:e}");
}

#[test]
fn pump_spectrum_shape() {
    let pump = PumpSpec::reference();
    let wp = pump.center_frequency();
    let s = pump.spectral_sigma();
    assert_eq!(waveguide::pump_spectrum(wp, &pump), 1.0);
    for w in [wp + s, wp - s] {
        assert!((waveguide::pump_spectrum(w, &pump) - (-0.5f64).exp()).abs() < 1e-14);
    }
}

#[test]
fn refractive_index_linear_form() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let w0 = spec.signal.omega0;
    let vg = spec.signal.group_velocity;
    let n = waveguide::refractive_index(Field::Signal, 1.01 * w0, &spec).unwrap();
    assert!((n - (1.9 + 0.01 * (SPEED_OF_LIGHT / vg - 1.9))).abs() < 1e-12);
    let h = 1e-4 * w0;
    let dn = (waveguide::refractive_index(Field::Signal, w0 + h, &spec).unwrap()
        - waveguide::refractive_index(Field::Signal, w0 - h, &spec).unwrap())
        / (2.0 * h);
    let want = (SPEED_OF_LIGHT / vg - 1.9) / w0;
    assert!((dn / want - 1.0).abs() < 1e-6);
    assert!(waveguide::refractive_index(Field::Idler, -1.0, &spec).is_err());
}

#[test]
fn quasi_phase_matching_of_reference_waveguide() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let wp = pump.center_frequency();
    assert!((spec.k_qpm / (0.05 * wp / SPEED_OF_LIGHT) - 1.0).abs() < 1e-12);
    let kp = waveguide::wavevector(Field::Pump, wp, &spec).unwrap();
    assert!(spec.phase_mismatch(0.5 * wp, 0.5 * wp).abs() < 1e-6 * kp);
}

#[test]
fn loss_coefficient_conversion() {
    let (s, i) = waveguide::loss_coefficients(&LossSpec::new(3.0, 0.0).unwrap(), 0.01);
    assert!((s - 69.0776).abs() < 1e-3 && s == i);
    let (s, i) = waveguide::loss_coefficients(&LossSpec::new(5.0, 1.0 / 3.0).unwrap(), 0.01);
    assert!((s - 2.0 * i).abs() < 1e-12 * s);
    assert_eq!(waveguide::loss_coefficients(&LossSpec::lossless(), 0.01), (0.0, 0.0));
}

#[test]
fn coupling_matrix_structure() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let grid = FrequencyGrid::spanning(0.5 * pump.center_frequency(), 2e13, 9).unwrap();
    let n = grid.len();
    let m0 = solver::coupling_matrix(0.0, &grid, &spec, &pump).unwrap();
    assert!((m0[(4, n + 4)] - c64::new(1.0, 0.0)).norm() < 1e-15);
    for k in 0..10 {
        let z = spec.length * (k as f64 + 0.37) / 10.0;
        let m = solver::coupling_matrix(z, &grid, &spec, &pump).unwrap();
        for j in 0..2 * n {
            for i in 0..2 * n {
                assert_eq!(m[(i, j)], m[(j, i)]);
                if (i < n) == (j < n) {
                    assert_eq!(m[(i, j)], c64::new(0.0, 0.0));
                } else {
                    assert!((m[(i, j)].norm() - m0[(i, j)].norm()).abs() < 1e-14);
                }
            }
        }
    }
    assert!(solver::coupling_matrix(2.0 * spec.length, &grid, &spec, &pump).is_err());
}

fn small_config(spec: &WaveguideSpec, pump: &PumpSpec, gain: f64) -> SolverConfig {
    let grid = solver::default_grid(spec, pump, 15).unwrap();
    SolverConfig {
        grid,
        gain,
        steps: 400,
        convergence_check: true,
    }
}

#[test]
fn zero_gain_stays_vacuum() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump).with_losses(&LossSpec::new(4.0, 0.2).unwrap());
    let state = solver::integrate(&small_config(&spec, &pump, 0.0), &spec, &pump).unwrap();
    assert_eq!(state.total_photons(), 0.0);
    assert!(solver::jsi(&state).is_err());
}

#[test]
fn too_few_steps_rejected() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let config = small_config(&spec, &pump, 10.0).with_steps(50);
    assert!(matches!(
        solver::integrate(&config, &spec, &pump),
        Err(pdc_tmbs::Error::InvalidInput(_))
    ));
}

#[test]
fn lossless_state_is_pure_and_block_structured() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let state = solver::integrate(&small_config(&spec, &pump, 200.0), &spec, &pump).unwrap();
    let res = state.residuals().unwrap();
    assert!(res.block_leakage <= 1e-8 && res.is_valid());
    let sigma = pdc_tmbs::gaussian::cov_from_correlations(&state).unwrap();
    for nu in pdc_tmbs::gaussian::symplectic_spectrum(&sigma).unwrap() {
        assert!((nu - 1.0).abs() < 1e-5, "symplectic eigenvalue {nu}");
    }
}

#[test]
fn photon_number_decreases_with_loss() {
    let pump = PumpSpec::reference();
    let base = WaveguideSpec::reference(&pump);
    let config = small_config(&base, &pump, 200.0);
    let mut last = f64::INFINITY;
    for eta in [0.0, 1.0, 2.5, 5.0, 10.0] {
        let spec = base.with_losses(&LossSpec::new(eta, 1.0 / 3.0).unwrap());
        let n = solver::integrate(&config, &spec, &pump).unwrap().total_photons();
        assert!(n < last, "photons {n} at {eta} dB not below {last}");
        last = n;
    }
}

#[test]
fn step_doubling_changes_trace_little() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let check = solver::step_doubling_check(&small_config(&spec, &pump, 200.0), &spec, &pump).unwrap();
    assert!(check.passes(), "{check:?}");
}

#[test]
fn lab_frame_keeps_magnitudes() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let state = solver::integrate(&small_config(&spec, &pump, 100.0), &spec, &pump).unwrap();
    let lab = solver::to_lab_frame(&state, &spec);
    let (x, y) = (state.pair_amplitudes(), lab.pair_amplitudes());
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            assert!((x[(i, j)].norm() - y[(i, j)].norm()).abs() < 1e-12);
        }
    }
    assert!((lab.total_photons() - state.total_photons()).abs() < 1e-12 * state.total_photons());
}

#[test]
fn calibration_reaches_target_and_gain_is_monotone() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let config = small_config(&spec, &pump, 0.0);
    let cal = solver::calibrate_gain(5.0, PhotonCount::Total, &spec, &pump, &config).unwrap();
    let n = solver::integrate(&config.with_gain(cal.gain), &spec, &pump)
        .unwrap()
        .total_signal_photons();
    assert!((n / 5.0 - 1.0).abs() <= 1e-3, "reached {n}");
    for g in [0.3 * cal.gain, 0.55 * cal.gain, 0.9 * cal.gain] {
        let n1 = PhotonCount::Total
            .measure(&solver::integrate(&config.with_gain(g), &spec, &pump).unwrap())
            .unwrap();
        let n2 = PhotonCount::Total
            .measure(&solver::integrate(&config.with_gain(2.0 * g), &spec, &pump).unwrap())
            .unwrap();
        assert!(n2 > n1);
    }
    let lossy = spec.with_losses(&LossSpec::new(1.0, 0.0).unwrap());
    assert!(solver::calibrate_gain(5.0, PhotonCount::Total, &lossy, &pump, &config).is_err());
}

#[test]
fn low_gain_jsi_is_anticorrelated() {
    let pump = PumpSpec::reference();
    let spec = WaveguideSpec::reference(&pump);
    let grid = solver::default_grid(&spec, &pump, 41).unwrap();
    let config = SolverConfig {
        grid,
        gain: 0.5,
        steps: 400,
        convergence_check: true,
    };
    let state = solver::integrate(&config, &spec, &pump).unwrap();
    assert!(state.total_signal_photons() < 1e-2);
    let jsi = solver::jsi(&state).unwrap();
    let n = jsi.nrows();
    let (mut best, mut at) = (0.0, (0, 0));
    for j in 0..n {
        for i in 0..n {
            let v = jsi[(i, j)];
            assert!((0.0..=1.0).contains(&v));
            if v > best {
                best = v;
                at = (i, j);
            }
        }
    }
    assert_eq!(best, 1.0);
    // δω_s + δω_i ≈ 0 and close to the grid centre.
    assert!((at.0 as i64 + at.1 as i64 - (n as i64 - 1)).abs() <= 2, "peak at {at:?}");
    assert!((at.0 as i64 - (n as i64 - 1) / 2).abs() <= n as i64 / 4);
}
