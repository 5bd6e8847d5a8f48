//! Fixed-step integration of the spatial master equation for the PDC
//! correlation matrices.
//!
//! In the lab frame the equations read
//!
//! ```text
//! dD/dz = i(D K − K* D) + iΓ(C* Mᵀ − M* C)
//! dC/dz = i(C K + K C) + iΓ((M D + M)ᵀ + M D)
//! ```
//!
//! with `K = diag(k_n + iη/2)` and `M = [[0, J], [Jᵀ, 0]]`. The free
//! propagation phases `e^{i k_n z}` change by ~1e5 rad over a centimetre, so the
//! integration runs in the frame co-rotating with them. There only the phase
//! mismatch `Δk_ij` survives:
//!
//! ```text
//! dA/dz = −η_a A + iΓ(Y − Y†),            Y = X* J̃ᵀ
//! dB/dz = −η_b B + iΓ(Z − Z†),            Z = X† J̃
//! dX/dz = −(η_a + η_b)/2 X + iΓ(Aᵀ J̃ + J̃ + J̃ B)
//! J̃_ij  = S(ω_i + ω_j) e^{iΔk_ij z}
//! ```
//!
//! where `A = <a†a>`, `B = <b†b>`, `X = <ab>`. The zero blocks of `D` and `C`
//! are never populated. [`to_lab_frame`] restores the lab-frame phases.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatMut, MatRef, Par};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{self, CorrelationState};
use crate::grid::FrequencyGrid;
use crate::linalg::{self, ONE};
use crate::waveguide::{pump_spectrum, PumpSpec, WaveguideSpec};

/// Smallest accepted step count.
pub const MIN_STEPS: usize = 100;
/// Default RK4 step count.
pub const DEFAULT_STEPS: usize = 2000;
/// Default number of frequency points per partition.
pub const DEFAULT_GRID_POINTS: usize = 101;
/// Bound on the relative change of `Tr D` when the step count is doubled.
pub const CONVERGENCE_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    pub grid: FrequencyGrid,
    /// Coupling strength `Γ` (1/m).
    pub gain: f64,
    /// Number of RK4 steps over the waveguide length.
    pub steps: usize,
    /// Re-run with half the steps and fail if the estimated change of `Tr D`
    /// under step doubling exceeds [`CONVERGENCE_LIMIT`].
    pub convergence_check: bool,
}

impl SolverConfig {
    /// Default grid around `ω_p/2` for the given waveguide, default step count,
    /// convergence check on.
    pub fn reference(spec: &WaveguideSpec, pump: &PumpSpec, gain: f64) -> Result<Self> {
        let grid = default_grid(spec, pump, DEFAULT_GRID_POINTS)?;
        Ok(Self {
            grid,
            gain,
            steps: DEFAULT_STEPS,
            convergence_check: true,
        })
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        Self {
            gain,
            ..self.clone()
        }
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            steps,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::invalid(format!(
                "step count must be at least {MIN_STEPS} (got {})",
                self.steps
            )));
        }
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(Error::invalid(format!("gain must be finite and >= 0 (got {})", self.gain)));
        }
        if !self.grid.is_uniform() {
            return Err(Error::invalid("frequency grid must be uniform"));
        }
        Ok(())
    }
}

/// `count` points centred on `ω_p/2` spanning [`WaveguideSpec::default_half_span`].
pub fn default_grid(spec: &WaveguideSpec, pump: &PumpSpec, count: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::spanning(
        0.5 * pump.center_frequency(),
        spec.default_half_span(pump),
        count,
    )
}

/// Lab-frame coupling matrix `M(z) = [[0, J], [Jᵀ, 0]]` with
/// `J_ij = S(ω_i + ω_j) e^{i(k_p(ω_i + ω_j) − k_QPM) z}`.
pub fn coupling_matrix(
    z: f64,
    grid: &FrequencyGrid,
    spec: &WaveguideSpec,
    pump: &PumpSpec,
) -> Result<Mat<c64>> {
    if !(0.0..=spec.length).contains(&z) {
        return Err(Error::invalid(format!(
            "z = {z} outside the waveguide [0, {}]",
            spec.length
        )));
    }
    let w = grid.omegas();
    let n = w.len();
    let mut m = Mat::<c64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let sum = w[i] + w[j];
            let phase = (spec.pump.wavevector_at(sum) - spec.k_qpm) * z;
            let v = c64::cis(phase) * pump_spectrum(sum, pump);
            m[(i, n + j)] = v;
            m[(n + j, i)] = v;
        }
    }
    Ok(m)
}

/// Integrates from the vacuum at `z = 0` to `z = L`; the returned state is in
/// the co-rotating frame (see the module docs).
pub fn integrate(
    config: &SolverConfig,
    spec: &WaveguideSpec,
    pump: &PumpSpec,
) -> Result<CorrelationState> {
    config.validate()?;
    spec.validate()?;
    let (a, b, x) = run_rk4(config, spec, pump, config.steps)?;
    if config.convergence_check {
        let (a_half, b_half, _) = run_rk4(config, spec, pump, config.steps / 2)?;
        let tr = trace(a.as_ref()) + trace(b.as_ref());
        if tr > 0.0 {
            let tr_half = trace(a_half.as_ref()) + trace(b_half.as_ref());
            // RK4 error ratio: the M → 2M change is ~1/15 of the M/2 → M change.
            let change = (tr - tr_half).abs() / 15.0 / tr;
            if change > CONVERGENCE_LIMIT {
                return Err(Error::StepCount {
                    steps: config.steps,
                    relative_change: change,
                    limit: CONVERGENCE_LIMIT,
                });
            }
        }
    }
    CorrelationState::from_blocks(
        config.grid.clone(),
        a.as_ref(),
        b.as_ref(),
        x.as_ref(),
        spec.length,
    )
}

/// Outcome of an explicit step-doubling comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepCheck {
    pub steps: usize,
    pub trace: f64,
    pub trace_doubled: f64,
    /// `|Tr D(2M) − Tr D(M)| / Tr D(2M)`.
    pub relative_change: f64,
}

impl StepCheck {
    pub fn passes(&self) -> bool {
        self.relative_change < CONVERGENCE_LIMIT
    }
}

/// Integrates with `M` and `2M` steps and compares `Tr D`.
pub fn step_doubling_check(
    config: &SolverConfig,
    spec: &WaveguideSpec,
    pump: &PumpSpec,
) -> Result<StepCheck> {
    config.validate()?;
    spec.validate()?;
    let total = |(a, b, _): (Mat<c64>, Mat<c64>, Mat<c64>)| trace(a.as_ref()) + trace(b.as_ref());
    let t1 = total(run_rk4(config, spec, pump, config.steps)?);
    let t2 = total(run_rk4(config, spec, pump, 2 * config.steps)?);
    let relative_change = if t2 > 0.0 { (t2 - t1).abs() / t2 } else { 0.0 };
    Ok(StepCheck {
        steps: config.steps,
        trace: t1,
        trace_doubled: t2,
        relative_change,
    })
}

/// Maps a co-rotating-frame state at position `z` to the lab frame:
/// `c_n → e^{i k_n z} c_n`.
pub fn to_lab_frame(state: &CorrelationState, spec: &WaveguideSpec) -> CorrelationState {
    let z = state.z();
    let w = state.grid().omegas();
    let t: Vec<c64> = w
        .iter()
        .map(|&o| c64::cis(spec.signal.wavevector_at(o) * z))
        .chain(w.iter().map(|&o| c64::cis(spec.idler.wavevector_at(o) * z)))
        .collect();
    gaussian::rescale(state, &t)
}

/// Joint spectral intensity `|<a_i b_j>|²` normalized to peak 1 (rows: signal,
/// columns: idler).
pub fn jsi(state: &CorrelationState) -> Result<Mat<f64>> {
    let x = state.pair_amplitudes();
    let n = x.nrows();
    let mut out = Mat::from_fn(n, n, |i, j| x[(i, j)].norm_sqr());
    let peak = linalg::max_abs_real(out.as_ref());
    if !(peak > 0.0) {
        return Err(Error::invalid("pair amplitudes vanish; JSI normalization undefined"));
    }
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] /= peak;
        }
    }
    Ok(out)
}

/// Which photon number the gain is calibrated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonCount {
    /// Occupation of the dominant signal mode (largest eigenvalue of `<a†a>`).
    FirstMode,
    /// Total signal photon number `Tr <a†a>`.
    Total,
}

impl PhotonCount {
    pub fn measure(self, state: &CorrelationState) -> Result<f64> {
        match self {
            PhotonCount::Total => Ok(state.total_signal_photons()),
            PhotonCount::FirstMode => {
                let vals = linalg::eigvalsh_complex(state.signal_photons())?;
                Ok(vals.last().copied().unwrap_or(0.0))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Calibration {
    pub gain: f64,
    /// Photon number reached at `gain` with the full step count.
    pub photons: f64,
    pub target: f64,
    /// Number of integrations spent.
    pub evaluations: usize,
}

/// Relative tolerance on the photon number reached by [`calibrate_gain`].
pub const CALIBRATION_TOL: f64 = 2e-4;

/// Finds `Γ` such that the lossless waveguide produces `target` photons.
///
/// The root is bracketed from `Γ_seed = 1/L` by doubling or halving and refined
/// by regula falsi on `asinh √N(Γ)`, which is close to linear in `Γ`. The search
/// runs with a quarter of the configured steps; the final iterations use the
/// full step count.
pub fn calibrate_gain(
    target: f64,
    count: PhotonCount,
    spec: &WaveguideSpec,
    pump: &PumpSpec,
    config: &SolverConfig,
) -> Result<Calibration> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::invalid(format!("photon target must be positive (got {target})")));
    }
    if !spec.is_lossless() {
        return Err(Error::invalid("gain calibration needs a lossless waveguide"));
    }
    let seed = 1.0 / spec.length;
    let mut evaluations = 0usize;
    let fine = SolverConfig {
        convergence_check: false,
        ..config.clone()
    };
    let coarse = fine.with_steps((config.steps / 4).max(MIN_STEPS).min(config.steps));
    let mut eval = |cfg: &SolverConfig, gain: f64| -> Result<f64> {
        evaluations += 1;
        let n = count.measure(&integrate(&cfg.with_gain(gain), spec, pump)?)?;
        Ok(n.max(0.0).sqrt().asinh())
    };
    let goal = target.sqrt().asinh();

    // Bracket on the coarse grid.
    let (lo_lim, hi_lim) = (1e-4 * seed, 1e4 * seed);
    let mut g0 = seed;
    let mut f0 = eval(&coarse, g0)? - goal;
    let (mut g1, mut f1);
    loop {
        g1 = if f0 < 0.0 { 2.0 * g0 } else { 0.5 * g0 };
        if g1 < lo_lim || g1 > hi_lim {
            return Err(Error::Calibration(format!(
                "no bracket for target {target} within [{lo_lim:.3e}, {hi_lim:.3e}] 1/m"
            )));
        }
        f1 = eval(&coarse, g1)? - goal;
        if f1.signum() != f0.signum() {
            break;
        }
        g0 = g1;
        f0 = f1;
    }
    let (mut lo, mut flo, mut hi, mut fhi) = if f0 < 0.0 {
        (g0, f0, g1, f1)
    } else {
        (g1, f1, g0, f0)
    };

    let converged = |f: f64| {
        let n = (f + goal).sinh().powi(2);
        (n - target).abs() <= CALIBRATION_TOL * target
    };

    // Illinois-style regula falsi on the coarse grid.
    let mut side = 0i8;
    let mut guess = 0.5 * (lo + hi);
    for _ in 0..60 {
        guess = lo - flo * (hi - lo) / (fhi - flo);
        if !(guess > lo && guess < hi) {
            guess = 0.5 * (lo + hi);
        }
        let f = eval(&coarse, guess)? - goal;
        if converged(f) {
            break;
        }
        if f < 0.0 {
            lo = guess;
            flo = f;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = guess;
            fhi = f;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }

    // Secant polish with the full step count.
    let mut ga = guess;
    let mut fa = eval(&fine, ga)? - goal;
    if !converged(fa) {
        let slope = (fhi - flo) / (hi - lo);
        let mut gb = ga - fa / slope;
        let mut fb = eval(&fine, gb)? - goal;
        let mut iter = 0;
        while !converged(fb) {
            iter += 1;
            if iter > 20 || fb == fa {
                return Err(Error::Calibration(format!(
                    "secant refinement stalled at gain {gb:.6e}"
                )));
            }
            let next = gb - fb * (gb - ga) / (fb - fa);
            ga = gb;
            fa = fb;
            gb = next;
            fb = eval(&fine, gb)? - goal;
        }
        ga = gb;
        fa = fb;
    }
    Ok(Calibration {
        gain: ga,
        photons: (fa + goal).sinh().powi(2),
        target,
        evaluations,
    })
}

fn trace(m: MatRef<'_, c64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Column-major `n × n` block.
type Block = Vec<c64>;

fn view(b: &[c64], n: usize) -> MatRef<'_, c64> {
    MatRef::from_column_major_slice(b, n, n)
}

fn view_mut(b: &mut [c64], n: usize) -> MatMut<'_, c64> {
    MatMut::from_column_major_slice_mut(b, n, n)
}

/// Steps after which the multiplicatively advanced coupling is recomputed
/// exactly.
const PHASE_RESYNC: usize = 64;

/// Time-independent pieces of the co-rotating generator.
struct Generator {
    n: usize,
    /// Pump amplitude `S(ω_i + ω_j)`, column-major.
    amplitude: Vec<f64>,
    /// Phase mismatch `Δk_ij`, column-major.
    mismatch: Vec<f64>,
    gain: f64,
    eta_a: f64,
    eta_b: f64,
}

impl Generator {
    fn new(config: &SolverConfig, spec: &WaveguideSpec, pump: &PumpSpec) -> Self {
        let w = config.grid.omegas();
        let n = w.len();
        let mut amplitude = Vec::with_capacity(n * n);
        let mut mismatch = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                amplitude.push(pump_spectrum(w[i] + w[j], pump));
                mismatch.push(spec.phase_mismatch(w[i], w[j]));
            }
        }
        Self {
            n,
            amplitude,
            mismatch,
            gain: config.gain,
            eta_a: spec.eta_signal,
            eta_b: spec.eta_idler,
        }
    }

    /// `J̃(z)`.
    fn coupling_at(&self, z: f64, out: &mut [c64]) {
        for ((o, &dk), &s) in out.iter_mut().zip(&self.mismatch).zip(&self.amplitude) {
            *o = c64::cis(dk * z) * s;
        }
    }

    /// `e^{iΔk h}` for advancing `J̃` by `h`.
    fn phasor(&self, h: f64) -> Block {
        self.mismatch.iter().map(|&dk| c64::cis(dk * h)).collect()
    }

    /// Writes `(dA, dB, dX)` for state `s = [A, B, X]` with coupling `j`.
    fn rhs(&self, j: &[c64], s: &[Block; 3], y: &mut Block, zz: &mut Block, out: &mut [Block; 3]) {
        let n = self.n;
        let ig = c64::new(0.0, self.gain);
        let (a, b, x) = (view(&s[0], n), view(&s[1], n), view(&s[2], n));
        let jm = view(j, n);
        matmul(view_mut(y, n), Accum::Replace, x.conjugate(), jm.transpose(), ONE, Par::Seq);
        matmul(view_mut(zz, n), Accum::Replace, x.adjoint(), jm, ONE, Par::Seq);
        let [da, db, dx] = out;
        for c in 0..n {
            for r in 0..n {
                let k = c * n + r;
                let kt = r * n + c;
                da[k] = ig * (y[k] - y[kt].conj()) - self.eta_a * s[0][k];
                db[k] = ig * (zz[k] - zz[kt].conj()) - self.eta_b * s[1][k];
            }
        }
        // dX = iΓ(Aᵀ J + J + J B) − (η_a + η_b)/2 X
        matmul(view_mut(dx, n), Accum::Replace, a.transpose(), jm, ig, Par::Seq);
        matmul(view_mut(dx, n), Accum::Add, jm, b, ig, Par::Seq);
        let damp = 0.5 * (self.eta_a + self.eta_b);
        for ((d, &jv), &xv) in dx.iter_mut().zip(j).zip(&s[2]) {
            *d += ig * jv - damp * xv;
        }
    }
}

/// `dst = base + h·k` over the three blocks.
fn stage(dst: &mut [Block; 3], base: &[Block; 3], k: &[Block; 3], h: f64) {
    for ((d, b), k) in dst.iter_mut().zip(base).zip(k) {
        for ((d, &b), &k) in d.iter_mut().zip(b).zip(k) {
            *d = b + k * h;
        }
    }
}

fn run_rk4(
    config: &SolverConfig,
    spec: &WaveguideSpec,
    pump: &PumpSpec,
    steps: usize,
) -> Result<(Mat<c64>, Mat<c64>, Mat<c64>)> {
    let g = Generator::new(config, spec, pump);
    let n = g.n;
    let zeros = || vec![c64::new(0.0, 0.0); n * n];
    let mut state = [zeros(), zeros(), zeros()];
    let to_mat = |b: &Block| Mat::from_fn(n, n, |i, j| b[j * n + i]);
    if g.gain == 0.0 {
        return Ok((to_mat(&state[0]), to_mat(&state[1]), to_mat(&state[2])));
    }
    let mut tmp = [zeros(), zeros(), zeros()];
    let mut ks: [[Block; 3]; 4] = std::array::from_fn(|_| [zeros(), zeros(), zeros()]);
    let (mut y, mut zz) = (zeros(), zeros());
    let (mut j0, mut jm, mut j1) = (zeros(), zeros(), zeros());
    let h = spec.length / steps as f64;
    let half = g.phasor(0.5 * h);
    g.coupling_at(0.0, &mut j0);

    for step in 0..steps {
        let z = step as f64 * h;
        for ((m, &a), &p) in jm.iter_mut().zip(&j0).zip(&half) {
            *m = a * p;
        }
        if (step + 1) % PHASE_RESYNC == 0 {
            g.coupling_at(z + h, &mut j1);
        } else {
            for ((e, &m), &p) in j1.iter_mut().zip(&jm).zip(&half) {
                *e = m * p;
            }
        }
        let [k1, k2, k3, k4] = &mut ks;
        g.rhs(&j0, &state, &mut y, &mut zz, k1);
        stage(&mut tmp, &state, k1, 0.5 * h);
        g.rhs(&jm, &tmp, &mut y, &mut zz, k2);
        stage(&mut tmp, &state, k2, 0.5 * h);
        g.rhs(&jm, &tmp, &mut y, &mut zz, k3);
        stage(&mut tmp, &state, k3, h);
        g.rhs(&j1, &tmp, &mut y, &mut zz, k4);
        let mut magnitude = 0.0f64;
        for (blk, s) in state.iter_mut().enumerate() {
            let (a, b, c, d) = (&k1[blk], &k2[blk], &k3[blk], &k4[blk]);
            for (idx, v) in s.iter_mut().enumerate() {
                *v += (a[idx] + (b[idx] + c[idx]) * 2.0 + d[idx]) * (h / 6.0);
                magnitude += v.re.abs() + v.im.abs();
            }
        }
        if !magnitude.is_finite() {
            return Err(Error::NumericalBlowup { z: z + h });
        }
        std::mem::swap(&mut j0, &mut j1);
    }
    // Restore exact Hermiticity of the photon-number blocks.
    for s in state.iter_mut().take(2) {
        for c in 0..n {
            for r in 0..c {
                let v = 0.5 * (s[c * n + r] + s[r * n + c].conj());
                s[c * n + r] = v;
                s[r * n + c] = v.conj();
            }
            s[c * n + c] = c64::new(s[c * n + c].re, 0.0);
        }
    }
    Ok((to_mat(&state[0]), to_mat(&state[1]), to_mat(&state[2])))
}
