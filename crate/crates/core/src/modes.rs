//! Broadband mode pairs `(u_A, u_B)`: Mercer-Wolf, Williamson-Euler and
//! maximally squeezed constructions.
//!
//! A real quadrature vector `v = (x^a_1, y^a_1, …, x^a_N, y^a_N, x^b_1, y^b_1, …)`
//! is mapped to complex amplitudes `v^a_n = y^a_n + i x^a_n` (same for `b`),
//! each part normalized separately. With this map the quadrature `v·r` equals
//! `t·p_A + r·p_B` for the broadband modes `A = Σ u^a_n a_n`, `B = Σ u^b_n b_n`.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, BroadbandMode, CorrelationState, CovarianceMatrix};
use crate::linalg;

/// Below this part norm a quadrature vector is considered to live in one
/// partition only.
const PART_NORM_TOL: f64 = 1e-9;
/// Relative gap below which the dominant photon-number eigenvalue is degenerate.
const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    #[serde(rename = "MW")]
    MercerWolf,
    #[serde(rename = "WE")]
    WilliamsonEuler,
    #[serde(rename = "MSq")]
    MaxSqueezed,
    #[serde(rename = "custom")]
    Custom,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::MercerWolf, Basis::WilliamsonEuler, Basis::MaxSqueezed];

    pub fn label(self) -> &'static str {
        match self {
            Basis::MercerWolf => "MW",
            Basis::WilliamsonEuler => "WE",
            Basis::MaxSqueezed => "MSq",
            Basis::Custom => "custom",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mw" => Ok(Basis::MercerWolf),
            "we" => Ok(Basis::WilliamsonEuler),
            "msq" => Ok(Basis::MaxSqueezed),
            "custom" => Ok(Basis::Custom),
            other => Err(Error::invalid(format!("unknown basis `{other}` (MW, WE, MSq)"))),
        }
    }
}

/// One broadband mode per partition.
#[derive(Clone, Debug)]
pub struct ModePair {
    pub u_a: BroadbandMode,
    pub u_b: BroadbandMode,
    pub basis: Basis,
    /// The construction had to break a degeneracy (tied eigenvalues).
    pub degenerate: bool,
    /// The state shows no squeezing (`λ_min(Σ) ≥ 1`); the modes carry no
    /// physical meaning.
    pub unsqueezed: bool,
}

impl ModePair {
    pub fn custom(u_a: BroadbandMode, u_b: BroadbandMode) -> Result<Self> {
        if u_a.len() != u_b.len() {
            return Err(Error::DimensionMismatch {
                what: "idler mode length",
                expected: u_a.len(),
                got: u_b.len(),
            });
        }
        Ok(Self {
            u_a,
            u_b,
            basis: Basis::Custom,
            degenerate: false,
            unsqueezed: false,
        })
    }

    pub fn len(&self) -> usize {
        self.u_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_a.is_empty()
    }
}

/// Dominant eigenvectors of `<a†a>` and `<b†b>` (first-order coherence modes),
/// with a common phase chosen so that `<AB>` is real and non-negative.
pub fn mercer_wolf_modes(state: &CorrelationState) -> Result<ModePair> {
    let (v_a, deg_a) = dominant_mode(state.signal_photons())?;
    let (v_b, deg_b) = dominant_mode(state.idler_photons())?;
    let pair = pair_amplitude(state, &v_a, &v_b);
    let rot = if pair.norm() > 0.0 {
        c64::cis(-0.5 * pair.arg())
    } else {
        c64::new(1.0, 0.0)
    };
    let rotate = |v: Vec<c64>| BroadbandMode::normalized(v.into_iter().map(|x| x * rot).collect());
    Ok(ModePair {
        u_a: rotate(v_a)?,
        u_b: rotate(v_b)?,
        basis: Basis::MercerWolf,
        degenerate: deg_a || deg_b,
        unsqueezed: false,
    })
}

fn dominant_mode(block: faer::MatRef<'_, c64>) -> Result<(Vec<c64>, bool)> {
    let n = block.nrows();
    let eig = linalg::eigh_complex(block)?;
    let top = eig.values[n - 1];
    if !(top > 0.0) {
        return Ok((BroadbandMode::unit(n, 0).amplitudes().to_vec(), true));
    }
    let degenerate = n > 1 && top - eig.values[n - 2] < DEGENERACY_GAP * top;
    let mut v: Vec<c64> = (0..n).map(|i| eig.vectors[(i, n - 1)]).collect();
    linalg::fix_phase(&mut v);
    Ok((v, degenerate))
}

/// `<AB> = u_A <ab> u_Bᵀ` for unnormalized amplitude vectors.
pub(crate) fn pair_amplitude(state: &CorrelationState, u_a: &[c64], u_b: &[c64]) -> c64 {
    let x = state.pair_amplitudes();
    let n = x.nrows();
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..n {
        let mut col = c64::new(0.0, 0.0);
        for i in 0..n {
            col += u_a[i] * x[(i, j)];
        }
        acc += col * u_b[j];
    }
    acc
}

/// `Σ = O_l Λ O_r D_w O_rᵀ Λ O_lᵀ`.
#[derive(Clone, Debug)]
pub struct WilliamsonEulerResult {
    /// Orthogonal symplectic; column pair `(2k, 2k+1)` spans mode `k`.
    pub o_left: Mat<f64>,
    /// Orthogonal symplectic.
    pub o_right: Mat<f64>,
    /// Symplectic eigenvalue `ν_k` of each mode of the Williamson frame.
    pub symplectic_eigenvalues: Vec<f64>,
    /// Squeezing parameters `r_k ≥ 0`, descending; `Λ = ⊕ diag(e^{r_k}, e^{−r_k})`.
    pub squeezing: Vec<f64>,
}

impl WilliamsonEulerResult {
    /// Diagonal of `Λ`.
    pub fn lambda_diagonal(&self) -> Vec<f64> {
        self.squeezing
            .iter()
            .flat_map(|&r| [r.exp(), (-r).exp()])
            .collect()
    }

    /// Diagonal of `D_w`.
    pub fn williamson_diagonal(&self) -> Vec<f64> {
        self.symplectic_eigenvalues
            .iter()
            .flat_map(|&v| [v, v])
            .collect()
    }

    /// The symplectic matrix `S = O_l Λ O_r`.
    pub fn symplectic(&self) -> Mat<f64> {
        let lam = self.lambda_diagonal();
        let dim = lam.len();
        let scaled = Mat::from_fn(dim, dim, |i, j| self.o_left[(i, j)] * lam[j]);
        linalg::mul(scaled.as_ref(), self.o_right.as_ref())
    }

    /// `O_l Λ O_r D_w O_rᵀ Λ O_lᵀ`.
    pub fn reconstruct(&self) -> Mat<f64> {
        let s = self.symplectic();
        let d = self.williamson_diagonal();
        let dim = d.len();
        let sd = Mat::from_fn(dim, dim, |i, j| s[(i, j)] * d[j]);
        linalg::mul(sd.as_ref(), s.transpose())
    }

    /// First column of `O_l` (the most squeezed direction's partner).
    pub fn first_vector(&self) -> Vec<f64> {
        (0..self.o_left.nrows()).map(|i| self.o_left[(i, 0)]).collect()
    }
}

/// Williamson normal form followed by the Euler (Bloch-Messiah) factorization.
pub fn williamson_euler(sigma: &CovarianceMatrix) -> Result<WilliamsonEulerResult> {
    let modes = sigma.modes();
    let dim = 2 * modes;
    let (root, _) = linalg::sqrt_spd(sigma.matrix())
        .map_err(|e| Error::invalid(format!("covariance matrix is unphysical: {e}")))?;
    let om = linalg::symplectic_form(modes);
    let a = linalg::mul(linalg::mul(root.as_ref(), om.as_ref()).as_ref(), root.as_ref());
    let h = Mat::from_fn(dim, dim, |i, j| c64::new(0.0, 0.5 * (a[(i, j)] - a[(j, i)])));
    let eig = linalg::eigh_complex(h.as_ref())?;

    // Positive half of the spectrum, largest ν first. For an eigenvector
    // v = x + iy of i·RΩR with eigenvalue ν, the columns (√2 y, √2 x) give the
    // block ν·[[0, 1], [−1, 0]] in the real frame.
    let mut nus = Vec::with_capacity(modes);
    let mut frame = Mat::<f64>::zeros(dim, dim);
    for k in 0..modes {
        let col = dim - 1 - k;
        let nu = eig.values[col];
        if !(nu >= 1.0 - 1e-6) {
            return Err(Error::invalid(format!(
                "covariance matrix is unphysical: symplectic eigenvalue {nu:.6e} < 1"
            )));
        }
        nus.push(nu);
        for i in 0..dim {
            let v = eig.vectors[(i, col)];
            frame[(i, 2 * k)] = std::f64::consts::SQRT_2 * v.im;
            frame[(i, 2 * k + 1)] = std::f64::consts::SQRT_2 * v.re;
        }
    }
    let scale: Vec<f64> = nus.iter().flat_map(|&v| [v, v]).map(|v| v.powf(-0.5)).collect();
    let rf = linalg::mul(root.as_ref(), frame.as_ref());
    let s = Mat::from_fn(dim, dim, |i, j| rf[(i, j)] * scale[j]);

    // Euler step: S Sᵀ = O_l Λ² O_lᵀ.
    let p = linalg::mul(s.as_ref(), s.transpose());
    let p = Mat::from_fn(dim, dim, |i, j| 0.5 * (p[(i, j)] + p[(j, i)]));
    let peig = linalg::eigh_real(p.as_ref())?;
    let candidates = (0..dim)
        .rev()
        .map(|k| (0..dim).map(|i| peig.vectors[(i, k)]).collect::<Vec<f64>>())
        .chain((0..dim).map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        }));
    let o_left = symplectic_gram_schmidt(candidates, modes);
    let mut squeezing = Vec::with_capacity(modes);
    for k in 0..modes {
        let w: Vec<f64> = (0..dim).map(|i| o_left[(i, 2 * k)]).collect();
        let mut rayleigh = 0.0;
        for j in 0..dim {
            for i in 0..dim {
                rayleigh += w[i] * p[(i, j)] * w[j];
            }
        }
        squeezing.push(0.5 * rayleigh.max(f64::MIN_POSITIVE).ln().max(0.0));
    }
    let lam_inv: Vec<f64> = squeezing
        .iter()
        .flat_map(|&r| [(-r).exp(), r.exp()])
        .collect();
    let ols = linalg::mul(o_left.transpose(), s.as_ref());
    let o_right = Mat::from_fn(dim, dim, |i, j| lam_inv[i] * ols[(i, j)]);
    Ok(WilliamsonEulerResult {
        o_left,
        o_right,
        symplectic_eigenvalues: nus,
        squeezing,
    })
}

/// Builds an orthogonal symplectic matrix whose column pairs are
/// `(w_k, −Ω w_k)`, taking candidates in order and skipping those already
/// (numerically) in the span of previous pairs.
fn symplectic_gram_schmidt(candidates: impl Iterator<Item = Vec<f64>>, modes: usize) -> Mat<f64> {
    let dim = 2 * modes;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for mut w in candidates {
        if cols.len() == dim {
            break;
        }
        // Two passes of classical Gram-Schmidt.
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = c.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        // −Ω w: (q, p) → (−p, q) per mode.
        let mut partner = vec![0.0; dim];
        for k in 0..modes {
            partner[2 * k] = -w[2 * k + 1];
            partner[2 * k + 1] = w[2 * k];
        }
        cols.push(w);
        cols.push(partner);
    }
    Mat::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Modes from the first column of `O_l` in the Williamson-Euler factorization.
pub fn williamson_euler_modes(state: &CorrelationState) -> Result<ModePair> {
    let sigma = gaussian::cov_from_correlations(state)?;
    let we = williamson_euler(&sigma)?;
    let mut v = we.first_vector();
    linalg::fix_sign(&mut v);
    let (u_a, u_b) = unpack(&v)?;
    let unsqueezed = we.squeezing.first().map_or(true, |&r| r < 1e-12);
    Ok(ModePair {
        u_a,
        u_b,
        basis: Basis::WilliamsonEuler,
        degenerate: false,
        unsqueezed,
    })
}

/// Modes from the eigenvector of the smallest eigenvalue of `Σ`; the resulting
/// two-mode state reaches `λ_-(σ) = λ_min(Σ)`.
pub fn msq_modes(state: &CorrelationState) -> Result<ModePair> {
    let sigma = gaussian::cov_from_correlations(state)?;
    let min = gaussian::smallest_cov_eigenvalue(&sigma)?;
    let unsqueezed = min.value >= 1.0 - 1e-12;
    let (u_a, u_b) = if unsqueezed {
        let n = state.modes();
        let (a, b) = split(&min.vector);
        let part = |v: Vec<c64>| {
            BroadbandMode::normalized(v).unwrap_or_else(|_| BroadbandMode::unit(n, 0))
        };
        (part(a), part(b))
    } else {
        unpack(&min.vector)?
    };
    Ok(ModePair {
        u_a,
        u_b,
        basis: Basis::MaxSqueezed,
        degenerate: false,
        unsqueezed,
    })
}

/// Splits a quadrature vector into unnormalized signal and idler amplitudes.
fn split(v: &[f64]) -> (Vec<c64>, Vec<c64>) {
    let n = v.len() / 4;
    let part = |off: usize| {
        (0..n)
            .map(|k| c64::new(v[off + 2 * k + 1], v[off + 2 * k]))
            .collect::<Vec<_>>()
    };
    (part(0), part(2 * n))
}

/// Quadrature vector → normalized `(u_A, u_B)`.
pub fn unpack(v: &[f64]) -> Result<(BroadbandMode, BroadbandMode)> {
    if v.len() % 4 != 0 || v.is_empty() {
        return Err(Error::invalid(format!(
            "quadrature vector length {} is not a positive multiple of 4",
            v.len()
        )));
    }
    let (a, b) = split(v);
    for (partition, part) in [("signal", &a), ("idler", &b)] {
        let norm = linalg::norm_c(part);
        if norm < PART_NORM_TOL {
            return Err(Error::PartitionDegenerate { partition, norm });
        }
    }
    Ok((BroadbandMode::normalized(a)?, BroadbandMode::normalized(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::linalg::ZERO;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::centered(1.0e15, 1.0e12, n).unwrap()
    }

    fn diag(v: &[f64]) -> Mat<c64> {
        Mat::from_fn(v.len(), v.len(), |i, j| {
            if i == j {
                c64::new(v[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Pure two-mode squeezed vacuum on frequency pair `(k, k)` of an `n`-point grid.
    fn tmsv(n: usize, k: usize, r: f64) -> CorrelationState {
        let mut occ = vec![0.0; n];
        occ[k] = r.sinh().powi(2);
        let x = Mat::from_fn(n, n, |i, j| {
            if i == k && j == k {
                c64::new(0.5 * (2.0 * r).sinh(), 0.0)
            } else {
                ZERO
            }
        });
        CorrelationState::from_blocks(grid(n), diag(&occ).as_ref(), diag(&occ).as_ref(), x.as_ref(), 0.0)
            .unwrap()
    }

    fn orth_residual(o: &Mat<f64>) -> f64 {
        let g = linalg::mul(o.transpose(), o.as_ref());
        let n = g.nrows();
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                r = r.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        r
    }

    fn sympl_residual(o: &Mat<f64>) -> f64 {
        let om = linalg::symplectic_form(o.nrows() / 2);
        let g = linalg::mul(linalg::mul(o.transpose(), om.as_ref()).as_ref(), o.as_ref());
        let n = g.nrows();
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                r = r.max((g[(i, j)] - om[(i, j)]).abs());
            }
        }
        r
    }

    #[test]
    fn mw_diagonal_blocks() {
        let st = CorrelationState::from_blocks(
            grid(2),
            diag(&[3.0, 1.0]).as_ref(),
            diag(&[2.0, 1.0]).as_ref(),
            diag(&[1.0, 0.5]).as_ref(),
            0.0,
        )
        .unwrap();
        let mw = mercer_wolf_modes(&st).unwrap();
        let ua = mw.u_a.amplitudes();
        let ub = mw.u_b.amplitudes();
        assert!((ua[0] - c64::new(1.0, 0.0)).norm() < 1e-12 && ua[1].norm() < 1e-12);
        assert!((ub[0] - c64::new(1.0, 0.0)).norm() < 1e-12 && ub[1].norm() < 1e-12);
        assert!(!mw.degenerate);
    }

    #[test]
    fn mw_pair_amplitude_real_positive() {
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(2.0, 0.0),
            (1, 1) => c64::new(1.0, 0.0),
            (0, 1) => c64::new(0.3, 0.4),
            _ => c64::new(0.3, -0.4),
        });
        let x = Mat::from_fn(2, 2, |i, j| c64::cis(0.7 + i as f64 - 0.3 * j as f64) * 0.4);
        let st = CorrelationState::from_blocks(grid(2), a.as_ref(), a.as_ref(), x.as_ref(), 0.0)
            .unwrap();
        let mw = mercer_wolf_modes(&st).unwrap();
        let ab = pair_amplitude(&st, mw.u_a.amplitudes(), mw.u_b.amplitudes());
        assert!(ab.re >= 0.0 && ab.im.abs() < 1e-12 * (1.0 + ab.re));
    }

    #[test]
    fn mw_vacuum_is_degenerate() {
        let mw = mercer_wolf_modes(&CorrelationState::vacuum(grid(3))).unwrap();
        assert!(mw.degenerate);
        assert_eq!(mw.u_a.amplitudes()[0], c64::new(1.0, 0.0));
    }

    #[test]
    fn we_identity() {
        let we = williamson_euler(&CovarianceMatrix::identity(3)).unwrap();
        assert!(we.symplectic_eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(we.squeezing.iter().all(|&r| r.abs() < 1e-8));
        let back = we.reconstruct();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((back[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn we_thermal() {
        let two = Mat::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.0 });
        let we = williamson_euler(&CovarianceMatrix::new(two).unwrap()).unwrap();
        assert!(we.symplectic_eigenvalues.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!(we.squeezing.iter().all(|&r| r.abs() < 1e-8));
    }

    #[test]
    fn we_tmsv_recovers_squeezing() {
        let st = tmsv(3, 1, 1.0);
        let sigma = gaussian::cov_from_correlations(&st).unwrap();
        let we = williamson_euler(&sigma).unwrap();
        assert!(we.symplectic_eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-8));
        assert!((we.squeezing[0] - 1.0).abs() < 1e-8);
        assert!((we.squeezing[1] - 1.0).abs() < 1e-8);
        assert!(we.squeezing[2..].iter().all(|&r| r.abs() < 1e-8));
        for o in [&we.o_left, &we.o_right] {
            assert!(orth_residual(o) < 1e-8);
            assert!(sympl_residual(o) < 1e-8);
        }
        let back = we.reconstruct();
        for i in 0..12 {
            for j in 0..12 {
                assert!((back[(i, j)] - sigma.matrix()[(i, j)]).abs() < 1e-8);
            }
        }
        let modes = williamson_euler_modes(&st).unwrap();
        assert!((modes.u_a.amplitudes()[1].norm() - 1.0).abs() < 1e-8);
        assert!((modes.u_b.amplitudes()[1].norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn we_rejects_unphysical() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 0.5 } else { 0.0 });
        assert!(williamson_euler(&CovarianceMatrix::new(m).unwrap()).is_err());
    }

    #[test]
    fn msq_tmsv_single_pair() {
        let st = tmsv(4, 2, 0.8);
        let m = msq_modes(&st).unwrap();
        assert!(!m.unsqueezed);
        assert!((m.u_a.amplitudes()[2].norm() - 1.0).abs() < 1e-10);
        assert!((m.u_b.amplitudes()[2].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn msq_vacuum_flagged() {
        let m = msq_modes(&CorrelationState::vacuum(grid(3))).unwrap();
        assert!(m.unsqueezed);
        assert_eq!(m.u_a.len(), 3);
    }

    #[test]
    fn unpack_rejects_one_sided() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        assert!(matches!(unpack(&v), Err(Error::PartitionDegenerate { partition: "idler", .. })));
        v[5] = 1.0;
        let (a, b) = unpack(&v).unwrap();
        assert_eq!(a.amplitudes()[0], c64::new(0.0, 1.0));
        assert_eq!(b.amplitudes()[0], c64::new(1.0, 0.0));
    }

    #[test]
    fn basis_labels_round_trip() {
        for b in Basis::ALL {
            assert_eq!(b.label().parse::<Basis>().unwrap(), b);
        }
    }
}
