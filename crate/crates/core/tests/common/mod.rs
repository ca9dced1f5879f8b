//! Independent reference computations shared by the integration tests.
//!
//! Nothing here goes through the sector operators or the saddle-point
//! solver: the spin Hamiltonian is built on the full `2^N` product basis
//! from Pauli operators acting on bit strings, and the mean-field energy is
//! minimized by brute-force sampling.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Parameters of `H(s, lambda)` on `n` spins.
#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub n: usize,
    pub p: u32,
    pub s: f64,
    pub lambda: f64,
}

impl Model {
    fn magnetization(&self, state: usize) -> f64 {
        let up = state.count_ones() as f64;
        (2.0 * up - self.n as f64) / self.n as f64
    }

    /// `y = H x` on the full product basis. Bit `i` set means spin `i` up.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let Model { n, p, s, lambda } = *self;
        let dim = 1usize << n;
        assert_eq!(x.len(), dim);
        let nf = n as f64;
        let mut y = vec![0.0; dim];
        for state in 0..dim {
            let v = x[state];
            if v == 0.0 {
                continue;
            }
            // s lambda H0 with H0 = -N m^p.
            y[state] += s * lambda * (-nf * self.magnetization(state).powi(p as i32)) * v;
            // (1 - s) V_TF with V_TF = -sum_i sigma^x_i.
            for i in 0..n {
                y[state ^ (1 << i)] -= (1.0 - s) * v;
            }
            // s (1 - lambda) V_AFF with V_AFF = (sum_i sigma^x_i)^2 / N
            // = 1 + (1/N) sum_{i != j} sigma^x_i sigma^x_j.
            let w = s * (1.0 - lambda);
            y[state] += w * v;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        y[state ^ (1 << i) ^ (1 << j)] += w / nf * v;
                    }
                }
            }
        }
        y
    }

    /// Dense `2^N x 2^N` matrix.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for col in 0..dim {
            e[col] = 1.0;
            let y = self.apply(&e);
            for (row, v) in y.into_iter().enumerate() {
                m[(row, col)] = v;
            }
            e[col] = 0.0;
        }
        m
    }

    /// Normalized Dicke state with `k` spins up.
    pub fn dicke(&self, k: usize) -> Vec<f64> {
        let dim = 1usize << self.n;
        let members: Vec<usize> = (0..dim).filter(|s| s.count_ones() as usize == k).collect();
        let amp = 1.0 / (members.len() as f64).sqrt();
        let mut v = vec![0.0; dim];
        for s in members {
            v[s] = amp;
        }
        v
    }

    /// `H` restricted to the span of the Dicke states, ordered by the number
    /// of up spins.
    pub fn projected(&self) -> DMatrix<f64> {
        let basis: Vec<Vec<f64>> = (0..=self.n).map(|k| self.dicke(k)).collect();
        let images: Vec<Vec<f64>> = basis.iter().map(|b| self.apply(b)).collect();
        DMatrix::from_fn(self.n + 1, self.n + 1, |i, j| {
            basis[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum()
        })
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Zero-temperature mean-field energy per spin of the product state
/// pointing along `(sin phi, cos phi)` in the `(z, x)` plane.
pub fn coherent_energy(p: u32, s: f64, lambda: f64, phi: f64) -> f64 {
    let (mz, mx) = phi.sin_cos();
    -s * lambda * mz.powi(p as i32) + s * (1.0 - lambda) * mx * mx - (1.0 - s) * mx
}

/// Minimum of [`coherent_energy`] over `phi` in `[0, pi]`: dense sampling
/// followed by golden-section polishing of the best few samples. Returns
/// `(phi, energy)`.
pub fn coherent_minimum(p: u32, s: f64, lambda: f64) -> (f64, f64) {
    const SAMPLES: usize = 20_000;
    let h = std::f64::consts::PI / SAMPLES as f64;
    let e = |phi: f64| coherent_energy(p, s, lambda, phi);
    let mut local: Vec<usize> = (0..=SAMPLES)
        .filter(|&k| {
            let here = e(k as f64 * h);
            (k == 0 || here <= e((k - 1) as f64 * h)) && (k == SAMPLES || here <= e((k + 1) as f64 * h))
        })
        .collect();
    local.sort_by(|&a, &b| e(a as f64 * h).total_cmp(&e(b as f64 * h)));
    local.truncate(4);
    let mut best = (0.0, f64::INFINITY);
    for k in local {
        let (mut a, mut b) = (
            ((k as f64) - 1.0).max(0.0) * h,
            ((k as f64) + 1.0).min(SAMPLES as f64) * h,
        );
        let g = 0.618_033_988_749_894_9;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if e(c) < e(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let phi = 0.5 * (a + b);
        for cand in [phi, k as f64 * h] {
            if e(cand) < best.1 {
                best = (cand, e(cand));
            }
        }
    }
    best
}
