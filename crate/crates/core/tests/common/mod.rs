//! Random type-II states for property tests: independent two-mode squeezers,
//! optional loss, then random passive transforms on each partition.

#![allow(dead_code)]

use faer::{c64, Mat};
use pdc_tmbs::gaussian::{self, CorrelationState};
use pdc_tmbs::grid::FrequencyGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(n: usize) -> FrequencyGrid {
    FrequencyGrid::centered(1.25e15, 5e11, n).unwrap()
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> c64 {
    c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Haar-ish random unitary by Gram-Schmidt on random complex columns.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let mut u = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        let mut v: Vec<c64> = (0..n).map(|_| random_complex(rng)).collect();
        for _ in 0..2 {
            for k in 0..j {
                let dot: c64 = (0..n).map(|i| u[(i, k)].conj() * v[i]).sum();
                for i in 0..n {
                    v[i] -= dot * u[(i, k)];
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            u[(i, j)] = v[i] / norm;
        }
    }
    u
}

/// Pure state (`lossy = false`) or state after random loss; `max_r` bounds the
/// squeezing parameters.
pub fn random_state(n: usize, max_r: f64, lossy: bool, seed: u64) -> CorrelationState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..max_r)).collect();
    let a = Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(r[i].sinh().powi(2), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let x = Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(0.5 * (2.0 * r[i]).sinh(), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let mut state = CorrelationState::from_blocks(grid(n), a.as_ref(), a.as_ref(), x.as_ref(), 0.0).unwrap();
    if lossy {
        let t = |rng: &mut ChaCha8Rng| -> Vec<c64> {
            (0..n)
                .map(|_| c64::cis(rng.random_range(0.0..6.3)) * rng.random_range(0.2..1.0))
                .collect()
        };
        let (ta, tb) = (t(&mut rng), t(&mut rng));
        state = gaussian::apply_external_loss(&state, &ta, &tb).unwrap();
    }
    let ua = random_unitary(n, &mut rng);
    let ub = random_unitary(n, &mut rng);
    gaussian::apply_passive_transform(&state, ua.as_ref(), ub.as_ref()).unwrap()
}

pub fn max_abs(m: faer::MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

type M5 = [[f64; 5]; 5];

fn mat_mul(a: &M5, b: &M5) -> M5 {
    let mut out = [[0.0; 5]; 5];
    for i in 0..5 {
        for k in 0..5 {
            for j in 0..5 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// `exp(m)` by scaling and squaring with a 30-term Taylor series.
fn expm(m: &M5) -> M5 {
    let norm = m
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = (norm / 0.25).log2().ceil().max(0.0) as u32;
    let scale = 0.5f64.powi(squarings as i32);
    let a: M5 = m.map(|r| r.map(|x| x * scale));
    let mut term = [[0.0; 5]; 5];
    let mut sum = [[0.0; 5]; 5];
    for i in 0..5 {
        term[i][i] = 1.0;
        sum[i][i] = 1.0;
    }
    for k in 1..30 {
        term = mat_mul(&term, &a).map(|r| r.map(|x| x / k as f64));
        for i in 0..5 {
            for j in 0..5 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mat_mul(&sum, &sum);
    }
    sum
}

/// Exact single-pair state. With `X' = X e^{−iΔk z} = x + iy` the equations
/// are linear with constant coefficients in `(A, B, x, y, 1)`.
pub fn exact_single_pair(gain: f64, s: f64, dk: f64, eta_a: f64, eta_b: f64, len: f64) -> (f64, f64, c64) {
    let g = gain * s;
    let eb = 0.5 * (eta_a + eta_b);
    let m: M5 = [
        [-eta_a, 0.0, 0.0, 2.0 * g, 0.0],
        [0.0, -eta_b, 0.0, 2.0 * g, 0.0],
        [0.0, 0.0, -eb, dk, 0.0],
        [g, g, -dk, -eb, g],
        [0.0; 5],
    ];
    let e = expm(&m.map(|r| r.map(|x| x * len)));
    let col = |i: usize| e[i][4];
    let x = c64::new(col(2), col(3)) * c64::cis(dk * len);
    (col(0), col(1), x)
}
