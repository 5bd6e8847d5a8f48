//! Two-mode bipartite states (one broadband mode per partition) and their
//! scalar figures of merit.
//!
//! For modes `A = Σ u^a_n a_n`, `B = Σ u^b_n b_n` with `<AB>` rotated real and
//! non-negative, the covariance matrix in the order `(q_A, p_A, q_B, p_B)` is
//!
//! ```text
//! σ = [[α, 0, γ, 0], [0, α, 0, −γ], [γ, 0, β, 0], [0, −γ, 0, β]]
//! α = 1 + 2<A†A>,  β = 1 + 2<B†B>,  γ = 2<AB>
//! ```

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{self, BroadbandMode, CorrelationState, CovarianceMatrix};
use crate::linalg;
use crate::modes::{self, ModePair};

/// Relative tolerance of the `λ_± = ν_±` identity checked by [`report`].
pub const IDENTITY_TOL: f64 = 1e-8;

/// `(α, β, γ)` of a two-mode bipartite state in `ħ = 2` units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TmbsCov {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl TmbsCov {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha >= 1.0 - 1e-9) || !(beta >= 1.0 - 1e-9) {
            return Err(Error::invalid(format!(
                "alpha and beta must be >= 1 (got {alpha}, {beta})"
            )));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be finite and >= 0 (got {gamma})")));
        }
        let t = Self { alpha, beta, gamma };
        if t.determinant() < 1.0 - 1e-6 {
            return Err(Error::invalid(format!(
                "unphysical two-mode state: alpha*beta - gamma^2 = {:.6e} < 1",
                t.determinant()
            )));
        }
        Ok(t)
    }

    /// Pure two-mode squeezed vacuum with `n` photons per mode:
    /// `α = β = 1 + 2n`, `γ = √(α² − 1)`.
    pub fn pure(n: f64) -> Result<Self> {
        let alpha = 1.0 + 2.0 * n;
        Self::new(alpha, alpha, (alpha * alpha - 1.0).max(0.0).sqrt())
    }

    pub fn n_a(&self) -> f64 {
        0.5 * (self.alpha - 1.0)
    }

    pub fn n_b(&self) -> f64 {
        0.5 * (self.beta - 1.0)
    }

    /// `αβ − γ²`, which equals `√det σ`.
    pub fn determinant(&self) -> f64 {
        self.alpha * self.beta - self.gamma * self.gamma
    }

    /// The full 4×4 covariance matrix.
    pub fn matrix(&self) -> CovarianceMatrix {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        let rows = [
            [a, 0.0, g, 0.0],
            [0.0, a, 0.0, -g],
            [g, 0.0, b, 0.0],
            [0.0, -g, 0.0, b],
        ];
        CovarianceMatrix::new(Mat::from_fn(4, 4, |i, j| rows[i][j]))
            .expect("symmetric by construction")
    }
}

/// Builds `(α, β, γ)` for the given modes; `γ = 2|<AB>|`, i.e. `u_A` is
/// implicitly rotated by `e^{−i arg<AB>}` (see [`phase_fixed`]).
pub fn build_tmbs(state: &CorrelationState, modes: &ModePair) -> Result<TmbsCov> {
    let n = state.modes();
    for (what, m) in [("u_A length", &modes.u_a), ("u_B length", &modes.u_b)] {
        if m.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got: m.len(),
            });
        }
    }
    let n_a = quadratic_form(state.signal_photons(), modes.u_a.amplitudes());
    let n_b = quadratic_form(state.idler_photons(), modes.u_b.amplitudes());
    let ab = modes::pair_amplitude(state, modes.u_a.amplitudes(), modes.u_b.amplitudes());
    TmbsCov::new(1.0 + 2.0 * n_a, 1.0 + 2.0 * n_b, 2.0 * ab.norm())
}

/// Rotates `u_A` so that `<AB>` becomes real and non-negative. Idempotent.
pub fn phase_fixed(state: &CorrelationState, modes: &ModePair) -> ModePair {
    let ab = modes::pair_amplitude(state, modes.u_a.amplitudes(), modes.u_b.amplitudes());
    let mut out = modes.clone();
    if ab.norm() > 0.0 && ab.arg() != 0.0 {
        out.u_a = modes.u_a.rotated(-ab.arg());
    }
    out
}

/// `u* M uᵀ` for Hermitian `M`.
fn quadratic_form(m: faer::MatRef<'_, c64>, u: &[c64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut col = c64::new(0.0, 0.0);
        for i in 0..n {
            col += u[i].conj() * m[(i, j)];
        }
        acc += (col * u[j]).re;
    }
    acc
}

/// `ν_± = ½(α + β ± √((α − β)² + 4γ²))`, the symplectic values of the
/// partially transposed state.
pub fn symplectic_values_pt(t: &TmbsCov) -> (f64, f64) {
    closed_form(t)
}

/// `λ_±`, the eigenvalues of `σ` (each doubly degenerate); same closed form as
/// [`symplectic_values_pt`].
pub fn tmbs_eigenvalues(t: &TmbsCov) -> (f64, f64) {
    closed_form(t)
}

fn closed_form(t: &TmbsCov) -> (f64, f64) {
    let s = t.alpha + t.beta;
    let d = ((t.alpha - t.beta).powi(2) + 4.0 * t.gamma * t.gamma).sqrt();
    let plus = 0.5 * (s + d);
    // ν_- ν_+ = αβ − γ²; use it when the direct difference would cancel.
    let minus = if d > 0.5 * s {
        t.determinant() / plus
    } else {
        0.5 * (s - d)
    };
    (minus, plus)
}

/// `E = max(−ln ν_-, 0)` in nats.
pub fn log_negativity(nu_minus: f64) -> Result<f64> {
    if !(nu_minus > 0.0) {
        return Err(Error::invalid(format!("nu_minus must be positive (got {nu_minus})")));
    }
    Ok((-nu_minus.ln()).max(0.0))
}

/// `10 log₁₀ λ_-`.
pub fn squeezing_db(lambda_minus: f64) -> Result<f64> {
    if !(lambda_minus > 0.0) {
        return Err(Error::invalid(format!(
            "lambda_minus must be positive (got {lambda_minus})"
        )));
    }
    Ok(10.0 * lambda_minus.log10())
}

/// `μ = 1/√det σ = 1/(αβ − γ²)`.
pub fn purity(t: &TmbsCov) -> f64 {
    1.0 / t.determinant()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TmbsReport {
    pub n_a: f64,
    pub n_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Logarithmic negativity (nats).
    pub log_negativity: f64,
    pub squeezing_db: f64,
    pub purity: f64,
}

/// All metrics of the two-mode state of `modes`. `ν_±` come from the closed
/// form, `λ_±` from a dense eigensolve of the 4×4 matrix; their agreement is
/// checked.
pub fn report(state: &CorrelationState, modes: &ModePair) -> Result<TmbsReport> {
    report_cov(&build_tmbs(state, modes)?)
}

pub fn report_cov(t: &TmbsCov) -> Result<TmbsReport> {
    let (nu_minus, nu_plus) = symplectic_values_pt(t);
    let eig = linalg::eigh_real(t.matrix().matrix())?;
    let lambda_minus = 0.5 * (eig.values[0] + eig.values[1]);
    let lambda_plus = 0.5 * (eig.values[2] + eig.values[3]);
    let dev = ((lambda_minus - nu_minus) / nu_minus)
        .abs()
        .max(((lambda_plus - nu_plus) / nu_plus).abs());
    if !(dev <= IDENTITY_TOL) {
        return Err(Error::Eigen(format!(
            "covariance eigenvalues ({lambda_minus:.12e}, {lambda_plus:.12e}) differ from \
             symplectic values ({nu_minus:.12e}, {nu_plus:.12e}) by {dev:.3e} relative"
        )));
    }
    Ok(TmbsReport {
        n_a: t.n_a(),
        n_b: t.n_b(),
        alpha: t.alpha,
        beta: t.beta,
        gamma: t.gamma,
        nu_minus,
        nu_plus,
        lambda_minus,
        lambda_plus,
        log_negativity: log_negativity(nu_minus)?,
        squeezing_db: squeezing_db(lambda_minus)?,
        purity: purity(t),
    })
}

/// Result of [`verify_msq_optimality`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OptimalityCheck {
    /// Smallest `λ_-` found by the direct search.
    pub best_found: f64,
    /// `λ_-` of the MSq mode pair.
    pub msq_value: f64,
}

impl OptimalityCheck {
    /// The search did not beat the MSq value by more than `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.best_found >= self.msq_value - tol
    }
}

/// Greedy steps per restart.
const SEARCH_STEPS: usize = 200;
const SCALE_START: f64 = 0.3;
const SCALE_END: f64 = 1e-3;

/// Direct random-restart search for the mode pair minimizing `λ_-`, compared
/// with the MSq construction. Each restart starts from random complex modes
/// and sweeps all coordinates with complex perturbations whose scale is
/// annealed geometrically from 0.3 to 1e-3, keeping only improvements.
/// Restarts run in parallel; the result does not depend on the thread count.
pub fn verify_msq_optimality(
    state: &CorrelationState,
    trials: usize,
    seed: u64,
) -> Result<OptimalityCheck> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let msq = modes::msq_modes(state)?;
    let msq_value = tmbs_eigenvalues(&build_tmbs(state, &msq)?).0;
    let best_found = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            Search::new(state, &mut rng).run(&mut rng)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(OptimalityCheck {
        best_found,
        msq_value,
    })
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<c64> {
    (0..n)
        .map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Local search state with cached quadratic forms, so that a single-coordinate
/// trial costs O(1) and an accepted move O(N).
struct Search<'a> {
    a: faer::MatRef<'a, c64>,
    b: faer::MatRef<'a, c64>,
    x: faer::MatRef<'a, c64>,
    u_a: Vec<c64>,
    u_b: Vec<c64>,
    /// `A u_a`, `B u_b`, `X u_b`, `Xᵀ u_a`.
    au: Vec<c64>,
    bu: Vec<c64>,
    xu: Vec<c64>,
    xtu: Vec<c64>,
    s_a: f64,
    s_b: f64,
    q_a: f64,
    q_b: f64,
    w: c64,
}

fn objective(s_a: f64, s_b: f64, q_a: f64, q_b: f64, w: c64) -> f64 {
    let alpha = 1.0 + 2.0 * q_a / s_a;
    let beta = 1.0 + 2.0 * q_b / s_b;
    let gamma = 2.0 * w.norm() / (s_a * s_b).sqrt();
    let s = alpha + beta;
    let d = ((alpha - beta).powi(2) + 4.0 * gamma * gamma).sqrt();
    0.5 * (s - d)
}

impl<'a> Search<'a> {
    fn new(state: &'a CorrelationState, rng: &mut ChaCha8Rng) -> Self {
        let n = state.modes();
        let mut s = Self {
            a: state.signal_photons(),
            b: state.idler_photons(),
            x: state.pair_amplitudes(),
            u_a: random_vector(n, rng),
            u_b: random_vector(n, rng),
            au: vec![],
            bu: vec![],
            xu: vec![],
            xtu: vec![],
            s_a: 0.0,
            s_b: 0.0,
            q_a: 0.0,
            q_b: 0.0,
            w: c64::new(0.0, 0.0),
        };
        s.refresh();
        s
    }

    /// Normalizes the modes and recomputes every cache from scratch.
    fn refresh(&mut self) {
        let n = self.u_a.len();
        for u in [&mut self.u_a, &mut self.u_b] {
            let norm = linalg::norm_c(u);
            u.iter_mut().for_each(|v| *v /= norm);
        }
        let matvec = |m: faer::MatRef<'_, c64>, v: &[c64], transpose: bool| -> Vec<c64> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if transpose { m[(j, i)] } else { m[(i, j)] } * v[j])
                        .sum()
                })
                .collect()
        };
        self.au = matvec(self.a, &self.u_a, false);
        self.bu = matvec(self.b, &self.u_b, false);
        self.xu = matvec(self.x, &self.u_b, false);
        self.xtu = matvec(self.x, &self.u_a, true);
        self.s_a = 1.0;
        self.s_b = 1.0;
        self.q_a = self.u_a.iter().zip(&self.au).map(|(u, v)| (u.conj() * v).re).sum();
        self.q_b = self.u_b.iter().zip(&self.bu).map(|(u, v)| (u.conj() * v).re).sum();
        self.w = self.u_a.iter().zip(&self.xu).map(|(u, v)| u * v).sum();
    }

    fn value(&self) -> f64 {
        objective(self.s_a, self.s_b, self.q_a, self.q_b, self.w)
    }

    fn run(mut self, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.u_a.len();
        let mut best = self.value();
        let ratio = (SCALE_END / SCALE_START).powf(1.0 / (SEARCH_STEPS - 1) as f64);
        let mut scale = SCALE_START;
        for _ in 0..SEARCH_STEPS {
            let amp = scale / (n as f64).sqrt();
            for side in 0..2 {
                for k in 0..n {
                    let delta = c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                        * (amp * std::f64::consts::FRAC_1_SQRT_2);
                    let trial = if side == 0 {
                        self.try_signal(k, delta)
                    } else {
                        self.try_idler(k, delta)
                    };
                    if trial < best {
                        best = trial;
                        if side == 0 {
                            self.accept_signal(k, delta);
                        } else {
                            self.accept_idler(k, delta);
                        }
                    }
                }
            }
            self.refresh();
            best = self.value();
            scale *= ratio;
        }
        best
    }

    fn try_signal(&self, k: usize, d: c64) -> f64 {
        let u = self.u_a[k];
        let s_a = self.s_a + 2.0 * (u.conj() * d).re + d.norm_sqr();
        let q_a = self.q_a + 2.0 * (d.conj() * self.au[k]).re + d.norm_sqr() * self.a[(k, k)].re;
        let w = self.w + d * self.xu[k];
        objective(s_a, self.s_b, q_a, self.q_b, w)
    }

    fn try_idler(&self, k: usize, d: c64) -> f64 {
        let u = self.u_b[k];
        let s_b = self.s_b + 2.0 * (u.conj() * d).re + d.norm_sqr();
        let q_b = self.q_b + 2.0 * (d.conj() * self.bu[k]).re + d.norm_sqr() * self.b[(k, k)].re;
        let w = self.w + d * self.xtu[k];
        objective(self.s_a, s_b, self.q_a, q_b, w)
    }

    fn accept_signal(&mut self, k: usize, d: c64) {
        let u = self.u_a[k];
        self.s_a += 2.0 * (u.conj() * d).re + d.norm_sqr();
        self.q_a += 2.0 * (d.conj() * self.au[k]).re + d.norm_sqr() * self.a[(k, k)].re;
        self.w += d * self.xu[k];
        self.u_a[k] += d;
        for i in 0..self.u_a.len() {
            self.au[i] += self.a[(i, k)] * d;
            self.xtu[i] += self.x[(k, i)] * d;
        }
    }

    fn accept_idler(&mut self, k: usize, d: c64) {
        let u = self.u_b[k];
        self.s_b += 2.0 * (u.conj() * d).re + d.norm_sqr();
        self.q_b += 2.0 * (d.conj() * self.bu[k]).re + d.norm_sqr() * self.b[(k, k)].re;
        self.w += d * self.xtu[k];
        self.u_b[k] += d;
        for i in 0..self.u_b.len() {
            self.bu[i] += self.b[(i, k)] * d;
            self.xu[i] += self.x[(i, k)] * d;
        }
    }
}

/// A pair of random unit modes (complex Gaussian amplitudes).
pub fn random_mode_pair(n: usize, rng: &mut ChaCha8Rng) -> ModePair {
    let a = BroadbandMode::normalized(random_vector(n, rng)).expect("nonzero with probability 1");
    let b = BroadbandMode::normalized(random_vector(n, rng)).expect("nonzero with probability 1");
    ModePair::custom(a, b).expect("equal lengths")
}

/// `λ_-` of the explicitly built 4×4 partially transposed matrix via the
/// general symplectic spectrum, for cross-checking the closed form.
pub fn symplectic_values_pt_dense(t: &TmbsCov) -> Result<(f64, f64)> {
    let pt = t.matrix().partial_transpose(1);
    let spec = gaussian::symplectic_spectrum(&pt)?;
    Ok((spec[1], spec[0]))
}
