//! Zero-mean multimode bipartite Gaussian states.
//!
//! A state of `N` signal modes `a_n` and `N` idler modes `b_n` is held as the
//! pair of correlation matrices
//!
//! ```text
//! D[i][j] = <c_i† c_j>,   C[i][j] = <c_i c_j>,   c = (a_0..a_{N-1}, b_0..b_{N-1})
//! ```
//!
//! or, equivalently, as the real quadrature covariance matrix `Σ` in `ħ = 2`
//! units with ordering `(q^a_1, p^a_1, …, q^a_N, p^a_N, q^b_1, p^b_1, …)`.
//! The vacuum is `D = C = 0`, i.e. `Σ = 1`.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{self, ZERO};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;
const BLOCK_TOL: f64 = 1e-8;

/// Correlation matrices `D`, `C` of a bipartite state at position `z`.
#[derive(Clone, Debug)]
pub struct CorrelationState {
    grid: FrequencyGrid,
    d: Mat<c64>,
    c: Mat<c64>,
    z: f64,
}

/// Residuals of the structural invariants of a [`CorrelationState`], each
/// already divided by `1 + max|·|` of the matrix it refers to.
#[derive(Clone, Copy, Debug)]
pub struct StateResiduals {
    pub hermiticity: f64,
    pub symmetry: f64,
    /// Smallest eigenvalue of `D` (negative values mean `D` is not PSD).
    pub min_eigenvalue: f64,
    /// Largest entry of the blocks that vanish for type-II PDC
    /// (`<a†b>`, `<aa>`, `<bb>`).
    pub block_leakage: f64,
}

impl StateResiduals {
    pub fn is_valid(&self) -> bool {
        self.hermiticity <= SYMMETRY_TOL
            && self.symmetry <= SYMMETRY_TOL
            && self.min_eigenvalue >= -PSD_TOL
            && self.block_leakage <= BLOCK_TOL
    }
}

impl CorrelationState {
    /// Wraps full `2N×2N` matrices. Checks shapes, Hermiticity of `D` and
    /// symmetry of `C`; use [`CorrelationState::residuals`] for the rest.
    pub fn new(grid: FrequencyGrid, d: Mat<c64>, c: Mat<c64>, z: f64) -> Result<Self> {
        let dim = 2 * grid.len();
        for (what, m) in [("D matrix", &d), ("C matrix", &c)] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: dim,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        let herm = linalg::anti_hermiticity(d.as_ref());
        if herm > SYMMETRY_TOL * (1.0 + linalg::max_abs_complex(d.as_ref())) {
            return Err(Error::invalid(format!("D is not Hermitian (residual {herm:.3e})")));
        }
        let sym = linalg::asymmetry_complex(c.as_ref());
        if sym > SYMMETRY_TOL * (1.0 + linalg::max_abs_complex(c.as_ref())) {
            return Err(Error::invalid(format!("C is not symmetric (residual {sym:.3e})")));
        }
        Ok(Self { grid, d, c, z })
    }

    /// Assembles the type-II block structure
    /// `D = [[<a†a>, 0], [0, <b†b>]]`, `C = [[0, <ab>], [<ab>ᵀ, 0]]`.
    pub fn from_blocks(
        grid: FrequencyGrid,
        signal: MatRef<'_, c64>,
        idler: MatRef<'_, c64>,
        pairs: MatRef<'_, c64>,
        z: f64,
    ) -> Result<Self> {
        let n = grid.len();
        for (what, m) in [("signal block", signal), ("idler block", idler), ("pair block", pairs)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        let mut d = Mat::zeros(2 * n, 2 * n);
        let mut c = Mat::zeros(2 * n, 2 * n);
        for j in 0..n {
            for i in 0..n {
                d[(i, j)] = signal[(i, j)];
                d[(n + i, n + j)] = idler[(i, j)];
                c[(i, n + j)] = pairs[(i, j)];
                c[(n + j, i)] = pairs[(i, j)];
            }
        }
        Self::new(grid, d, c, z)
    }

    pub fn vacuum(grid: FrequencyGrid) -> Self {
        let dim = 2 * grid.len();
        Self {
            grid,
            d: Mat::zeros(dim, dim),
            c: Mat::zeros(dim, dim),
            z: 0.0,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Number of modes per partition.
    pub fn modes(&self) -> usize {
        self.grid.len()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn d(&self) -> MatRef<'_, c64> {
        self.d.as_ref()
    }

    pub fn c(&self) -> MatRef<'_, c64> {
        self.c.as_ref()
    }

    /// `<a_i† a_j>`.
    pub fn signal_photons(&self) -> MatRef<'_, c64> {
        let n = self.modes();
        self.d.as_ref().submatrix(0, 0, n, n)
    }

    /// `<b_i† b_j>`.
    pub fn idler_photons(&self) -> MatRef<'_, c64> {
        let n = self.modes();
        self.d.as_ref().submatrix(n, n, n, n)
    }

    /// `<a_i b_j>`.
    pub fn pair_amplitudes(&self) -> MatRef<'_, c64> {
        let n = self.modes();
        self.c.as_ref().submatrix(0, n, n, n)
    }

    /// `Tr <a†a>`.
    pub fn total_signal_photons(&self) -> f64 {
        (0..self.modes()).map(|k| self.d[(k, k)].re).sum()
    }

    /// `Tr <b†b>`.
    pub fn total_idler_photons(&self) -> f64 {
        let n = self.modes();
        (n..2 * n).map(|k| self.d[(k, k)].re).sum()
    }

    /// `Tr D`.
    pub fn total_photons(&self) -> f64 {
        self.total_signal_photons() + self.total_idler_photons()
    }

    pub fn residuals(&self) -> Result<StateResiduals> {
        let n = self.modes();
        let dmax = linalg::max_abs_complex(self.d.as_ref());
        let cmax = linalg::max_abs_complex(self.c.as_ref());
        let hermiticity = linalg::anti_hermiticity(self.d.as_ref()) / (1.0 + dmax);
        let symmetry = linalg::asymmetry_complex(self.c.as_ref()) / (1.0 + cmax);
        let min_eigenvalue = linalg::eigvalsh_complex(self.d.as_ref())?
            .first()
            .copied()
            .unwrap_or(0.0)
            / (1.0 + dmax);
        let mut leak = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                leak = leak
                    .max(self.d[(i, n + j)].norm())
                    .max(self.d[(n + i, j)].norm())
                    .max(self.c[(i, j)].norm())
                    .max(self.c[(n + i, n + j)].norm());
            }
        }
        Ok(StateResiduals {
            hermiticity,
            symmetry,
            min_eigenvalue,
            block_leakage: leak / (1.0 + dmax.max(cmax)),
        })
    }
}

/// Real symmetric quadrature covariance matrix (`ħ = 2`, vacuum = identity).
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    sigma: Mat<f64>,
}

impl CovarianceMatrix {
    pub fn new(sigma: Mat<f64>) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() || sigma.nrows() % 2 != 0 {
            return Err(Error::invalid(format!(
                "covariance matrix must be square with even size (got {}x{})",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let asym = linalg::asymmetry_real(sigma.as_ref());
        if asym > SYMMETRY_TOL * (1.0 + linalg::max_abs_real(sigma.as_ref())) {
            return Err(Error::invalid(format!(
                "covariance matrix is not symmetric (residual {asym:.3e})"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            sigma: Mat::identity(2 * modes, 2 * modes),
        }
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.sigma.as_ref()
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.sigma
    }

    /// Number of bosonic modes (half the dimension).
    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    /// Flips the sign of every `p` quadrature of modes `first_mode..`.
    pub fn partial_transpose(&self, first_mode: usize) -> Self {
        let mut s = self.sigma.clone();
        let dim = s.nrows();
        for k in first_mode..self.modes() {
            let p = 2 * k + 1;
            for j in 0..dim {
                s[(p, j)] = -s[(p, j)];
            }
            for i in 0..dim {
                s[(i, p)] = -s[(i, p)];
            }
        }
        Self { sigma: s }
    }

    /// Smallest symplectic eigenvalue; a state is physical when this is `≥ 1`.
    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        Ok(*symplectic_spectrum(self)?.last().unwrap_or(&1.0))
    }

    /// Physical within `1e-6` (uncertainty principle in `ħ = 2` units).
    pub fn is_physical(&self) -> Result<bool> {
        Ok(self.min_symplectic_eigenvalue()? >= 1.0 - 1e-6)
    }
}

/// Unit-norm complex spectral amplitudes of one broadband mode.
#[derive(Clone, Debug, PartialEq)]
pub struct BroadbandMode(Vec<c64>);

impl BroadbandMode {
    pub fn new(amplitudes: Vec<c64>) -> Result<Self> {
        let norm = linalg::norm_c(&amplitudes);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("broadband mode has norm {norm}, expected 1")));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes `amplitudes`; fails on a (numerically) zero vector.
    pub fn normalized(mut amplitudes: Vec<c64>) -> Result<Self> {
        let norm = linalg::norm_c(&amplitudes);
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero mode"));
        }
        amplitudes.iter_mut().for_each(|x| *x /= norm);
        Ok(Self(amplitudes))
    }

    /// Mode concentrated on a single frequency bin.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = vec![ZERO; len];
        v[index] = c64::new(1.0, 0.0);
        Self(v)
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiplies by the global phase `e^{iφ}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let rot = c64::from_polar(1.0, phi);
        Self(self.0.iter().map(|x| x * rot).collect())
    }

    /// `|<self, other>|` with the conjugate-linear first slot.
    pub fn overlap(&self, other: &BroadbandMode) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum::<c64>()
            .norm()
    }
}

/// Quadrature covariance matrix of a correlation state.
///
/// With zero displacement:
/// `<q_i q_j> = δ_ij + 2 Re(D_ij + C_ij)`, `<p_i p_j> = δ_ij + 2 Re(D_ij − C_ij)`
/// and `<{p_i, q_j}>/2 = 2 Im(C_ij − D_ij)`.
pub fn cov_from_correlations(state: &CorrelationState) -> Result<CovarianceMatrix> {
    let modes = 2 * state.modes();
    let (d, c) = (state.d(), state.c());
    if d.nrows() != modes || c.nrows() != modes {
        return Err(Error::DimensionMismatch {
            what: "correlation matrices vs grid",
            expected: modes,
            got: d.nrows(),
        });
    }
    let mut sigma = Mat::zeros(2 * modes, 2 * modes);
    for j in 0..modes {
        for i in 0..modes {
            let dij = d[(i, j)];
            let cij = c[(i, j)];
            let delta = if i == j { 1.0 } else { 0.0 };
            sigma[(2 * i, 2 * j)] = delta + 2.0 * (dij.re + cij.re);
            sigma[(2 * i + 1, 2 * j + 1)] = delta + 2.0 * (dij.re - cij.re);
            sigma[(2 * i + 1, 2 * j)] = 2.0 * (cij.im - dij.im);
        }
    }
    for j in 0..modes {
        for i in 0..modes {
            sigma[(2 * i, 2 * j + 1)] = sigma[(2 * j + 1, 2 * i)];
        }
    }
    CovarianceMatrix::new(sigma)
}

/// Applies the local passive unitary `U = U_A ⊕ U_B` to a state:
/// `D' = U* D Uᵀ`, `C' = U C Uᵀ`.
pub fn apply_passive_transform(
    state: &CorrelationState,
    u_a: MatRef<'_, c64>,
    u_b: MatRef<'_, c64>,
) -> Result<CorrelationState> {
    let n = state.modes();
    for (what, u) in [("U_A", u_a), ("U_B", u_b)] {
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got: u.nrows().max(u.ncols()),
            });
        }
        let mut uu = Mat::<c64>::zeros(n, n);
        matmul(uu.as_mut(), Accum::Replace, u, u.adjoint(), linalg::ONE, Par::Seq);
        let mut dev = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((uu[(i, j)] - c64::new(want, 0.0)).norm());
            }
        }
        if dev > 1e-10 {
            return Err(Error::invalid(format!("{what} is not unitary (residual {dev:.3e})")));
        }
    }
    let mut u = Mat::<c64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            u[(i, j)] = u_a[(i, j)];
            u[(n + i, n + j)] = u_b[(i, j)];
        }
    }
    let u_conj = Mat::from_fn(2 * n, 2 * n, |i, j| u[(i, j)].conj());
    let d = linalg::cmul(linalg::cmul(u_conj.as_ref(), state.d()).as_ref(), u.transpose());
    let c = linalg::cmul(linalg::cmul(u.as_ref(), state.c()).as_ref(), u.transpose());
    // Re-impose exact (anti)symmetry lost to rounding.
    let d = Mat::from_fn(2 * n, 2 * n, |i, j| 0.5 * (d[(i, j)] + d[(j, i)].conj()));
    let c = Mat::from_fn(2 * n, 2 * n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    CorrelationState::new(state.grid.clone(), d, c, state.z)
}

/// Frequency-dependent linear loss `a_n → t^a_n a_n`, `b_n → t^b_n b_n`:
/// `D'_ij = t_i* t_j D_ij`, `C'_ij = t_i t_j C_ij`.
pub fn apply_external_loss(
    state: &CorrelationState,
    t_a: &[c64],
    t_b: &[c64],
) -> Result<CorrelationState> {
    let n = state.modes();
    if t_a.len() != n || t_b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "transmission vector",
            expected: n,
            got: if t_a.len() != n { t_a.len() } else { t_b.len() },
        });
    }
    let t: Vec<c64> = t_a.iter().chain(t_b).copied().collect();
    if let Some(bad) = t.iter().find(|x| x.norm() > 1.0 + 1e-12 || !x.norm().is_finite()) {
        return Err(Error::invalid(format!(
            "transmission |t| = {} exceeds 1 (amplification is not a loss)",
            bad.norm()
        )));
    }
    Ok(rescale(state, &t))
}

/// Elementwise rescaling shared by external loss and frame changes; `t` is not
/// checked.
pub(crate) fn rescale(state: &CorrelationState, t: &[c64]) -> CorrelationState {
    let dim = t.len();
    let d = Mat::from_fn(dim, dim, |i, j| t[i].conj() * t[j] * state.d[(i, j)]);
    let c = Mat::from_fn(dim, dim, |i, j| t[i] * t[j] * state.c[(i, j)]);
    CorrelationState {
        grid: state.grid.clone(),
        d,
        c,
        z: state.z,
    }
}

/// Symplectic eigenvalues (moduli of the eigenvalues of `iΩΣ`), one per mode,
/// sorted descending.
pub fn symplectic_spectrum(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let modes = sigma.modes();
    let om = linalg::symplectic_form(modes);
    match linalg::sqrt_spd(sigma.matrix()) {
        Ok((root, _)) => {
            // iΩΣ is similar to i Σ^{1/2} Ω Σ^{1/2}, which is Hermitian.
            let a = linalg::mul(linalg::mul(root.as_ref(), om.as_ref()).as_ref(), root.as_ref());
            let dim = a.nrows();
            let h = Mat::from_fn(dim, dim, |i, j| {
                c64::new(0.0, 0.5 * (a[(i, j)] - a[(j, i)]))
            });
            let mut vals = linalg::eigvalsh_complex(h.as_ref())?;
            vals.reverse();
            vals.truncate(modes);
            Ok(vals)
        }
        Err(_) => {
            // Indefinite input: fall back to the general eigensolver.
            let m = linalg::mul(om.as_ref(), sigma.matrix());
            let ev = m.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let mut abs: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
            abs.sort_by(|a, b| b.total_cmp(a));
            Ok(abs.chunks(2).map(|p| p.iter().sum::<f64>() / p.len() as f64).collect())
        }
    }
}

/// Smallest ordinary eigenvalue of `Σ` and a deterministic eigenvector for it.
#[derive(Clone, Debug)]
pub struct MinEigen {
    pub value: f64,
    /// Unit eigenvector in quadrature ordering; sign fixed so the
    /// largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    /// Multiplicity of the smallest eigenvalue (within `1e-10·max|λ|`).
    pub multiplicity: usize,
}

/// `λ_min(Σ)` with its eigenvector. Among degenerate eigenvectors the one with
/// the largest signal-part norm wins, ties going to the lowest index.
pub fn smallest_cov_eigenvalue(sigma: &CovarianceMatrix) -> Result<MinEigen> {
    let eig = linalg::eigh_real(sigma.matrix())?;
    let dim = eig.values.len();
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let lo = eig.values[0];
    let cluster: Vec<usize> = (0..dim)
        .take_while(|&k| eig.values[k] - lo <= 1e-10 * scale)
        .collect();
    let half = dim / 2;
    let signal_norm = |k: usize| -> f64 {
        (0..half).map(|i| eig.vectors[(i, k)].powi(2)).sum::<f64>()
    };
    let mut best = cluster[0];
    for &k in &cluster[1..] {
        if signal_norm(k) > signal_norm(best) + 1e-12 {
            best = k;
        }
    }
    let mut vector: Vec<f64> = (0..dim).map(|i| eig.vectors[(i, best)]).collect();
    linalg::fix_sign(&mut vector);
    Ok(MinEigen {
        value: lo,
        vector,
        multiplicity: cluster.len(),
    })
}
