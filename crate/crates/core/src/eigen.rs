//! Eigenvalues of banded symmetric operators.
//!
//! The band is reduced to tridiagonal form with Givens rotations (each
//! rotation chases the bulge it creates down the band), and individual
//! eigenvalues are then isolated by Sturm-sequence bisection. This costs
//! `O(n^2)` per operator and needs no eigenvectors. Full eigendecompositions,
//! used for time evolution, go through `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sector::BandedSymmetricOperator;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Similarity transform with a rotation in plane `(q - 1, q)` chosen to
    /// zero entry `(row, q)`; `b` bounds the extent of the band plus bulge.
    fn annihilate(&mut self, row: usize, q: usize, b: usize) {
        let p = q - 1;
        let x = self.at(row, p);
        let y = self.at(row, q);
        if y == 0.0 {
            return;
        }
        let r = x.hypot(y);
        let (c, s) = (x / r, -y / r);
        let n = self.n;
        let lo = p.saturating_sub(b + 2);
        let hi = (q + b + 2).min(n);
        for j in lo..hi {
            let ap = self.a[p * n + j];
            let aq = self.a[q * n + j];
            self.a[p * n + j] = c * ap - s * aq;
            self.a[q * n + j] = s * ap + c * aq;
        }
        for j in lo..hi {
            let ap = self.a[j * n + p];
            let aq = self.a[j * n + q];
            self.a[j * n + p] = c * ap - s * aq;
            self.a[j * n + q] = s * ap + c * aq;
        }
        self.a[row * n + q] = 0.0;
        self.a[q * n + row] = 0.0;
    }
}

/// Orthogonal reduction of a banded symmetric operator to tridiagonal form.
pub fn tridiagonalize(op: &BandedSymmetricOperator) -> Tridiagonal {
    let n = op.dim();
    let b = op.half_bandwidth();
    if b <= 1 {
        return Tridiagonal {
            diag: op.band(0).to_vec(),
            off: if b == 1 {
                op.band(1).to_vec()
            } else {
                vec![0.0; n.saturating_sub(1)]
            },
        };
    }
    let mut w = Work { n, a: op.to_dense() };
    for k in 0..n {
        for j in ((k + 2)..=(k + b).min(n.saturating_sub(1))).rev() {
            w.annihilate(k, j, b);
            // The rotation in plane (j-1, j) fills entry (j-1, j+b); chase it
            // off the end of the matrix.
            let mut row = j - 1;
            let mut col = j + b;
            while col < n {
                w.annihilate(row, col, b);
                row = col - 1;
                col += b;
            }
        }
    }
    Tridiagonal {
        diag: (0..n).map(|i| w.at(i, i)).collect(),
        off: (0..n.saturating_sub(1)).map(|i| w.at(i, i + 1)).collect(),
    }
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn pivot_floor(&self) -> f64 {
        let emax = self.off.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivot_floor();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1] / q
            };
            q = self.diag[i] - x - coupling;
            if q.abs() <= pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (zero-based), bisected until the
    /// bracket cannot shrink further in floating point. Near zero the
    /// bracket stops at width `eps^2 * max|T|` instead of halving through
    /// the subnormal range.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::Eigensolver(format!(
                "requested eigenvalue {k} of a {}-dimensional operator",
                self.dim()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin_bounds();
        let pad = f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0)) * self.dim() as f64;
        lo -= pad;
        hi += pad;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Eigensolver("non-finite matrix entries".into()));
        }
        let floor = f64::EPSILON * f64::EPSILON * lo.abs().max(hi.abs());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= floor {
                return Ok(mid);
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::Eigensolver(format!(
            "bisection for eigenvalue {k} did not converge: bracket [{lo}, {hi}]"
        )))
    }
}

/// The `count` smallest eigenvalues in ascending order.
pub fn lowest_eigenvalues(op: &BandedSymmetricOperator, count: usize) -> Result<Vec<f64>> {
    if !op.is_finite() {
        return Err(Error::Eigensolver("operator has non-finite entries".into()));
    }
    let t = tridiagonalize(op);
    (0..count).map(|k| t.eigenvalue(k)).collect()
}

/// Full eigendecomposition of a dense real symmetric matrix with ascending
/// eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigendecomposition {
    pub fn of_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigensolver("operator has non-finite entries".into()));
        }
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        Ok(Self { values, vectors })
    }

    pub fn of(op: &BandedSymmetricOperator) -> Result<Self> {
        Self::of_matrix(op.to_matrix())
    }
}

/// Lowest eigenvalue and a normalized eigenvector. The sign is fixed so the
/// largest-magnitude component is positive.
pub fn ground_state(op: &BandedSymmetricOperator) -> Result<(f64, Vec<f64>)> {
    let eig = Eigendecomposition::of(op)?;
    let mut v: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((eig.values[0], v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::SchedulePoint;
    use crate::sector::{assemble, SectorBasis};

    fn dense_eigenvalues(op: &BandedSymmetricOperator) -> Vec<f64> {
        let mut v: Vec<f64> = op.to_matrix().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn tridiagonalization_preserves_spectrum() {
        for (n, s, l) in [(5, 0.3, 0.4), (12, 0.7, 0.2), (33, 0.45, 0.9)] {
            let op = assemble(SectorBasis::new(n).unwrap(), 5, SchedulePoint::new(s, l).unwrap()).unwrap();
            let t = tridiagonalize(&op);
            let mut tm = DMatrix::zeros(n + 1, n + 1);
            for i in 0..=n {
                tm[(i, i)] = t.diag[i];
                if i < n {
                    tm[(i, i + 1)] = t.off[i];
                    tm[(i + 1, i)] = t.off[i];
                }
            }
            let mut tv: Vec<f64> = tm.symmetric_eigenvalues().iter().copied().collect();
            tv.sort_by(f64::total_cmp);
            for (a, b) in tv.iter().zip(dense_eigenvalues(&op)) {
                assert!((a - b).abs() < 1e-11 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bisection_matches_dense_solver() {
        let op = assemble(SectorBasis::new(40).unwrap(), 3, SchedulePoint::new(0.36, 0.1).unwrap()).unwrap();
        let all = dense_eigenvalues(&op);
        let low = lowest_eigenvalues(&op, 4).unwrap();
        for (a, b) in low.iter().zip(&all) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn diagonal_and_tridiagonal_shortcuts() {
        let d = BandedSymmetricOperator::diagonal(vec![3.0, -1.0, 2.0]);
        assert_eq!(lowest_eigenvalues(&d, 3).unwrap(), vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let d = BandedSymmetricOperator::diagonal(vec![1.0]);
        assert!(lowest_eigenvalues(&d, 2).is_err());
    }

    #[test]
    fn ground_state_is_normalized_eigenvector() {
        let op = assemble(SectorBasis::new(9).unwrap(), 3, SchedulePoint::new(0.5, 0.5).unwrap()).unwrap();
        let (e, v) = ground_state(&op).unwrap();
        let mut hv = vec![0.0; v.len()];
        op.apply(&v, &mut hv);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        for (a, b) in hv.iter().zip(&v) {
            assert!((a - e * b).abs() < 1e-10);
        }
    }
}
