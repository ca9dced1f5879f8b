//! Operators of the total Hamiltonian restricted to the maximal total-spin
//! sector `S = N/2`.
//!
//! Basis index `i` runs over `0..=N` and labels the total `sigma^z`
//! eigenvalue `M = -N + 2i`. In this basis the target Hamiltonian is
//! diagonal, `S^x` is tridiagonal and `(S^x)^2` is pentadiagonal, so every
//! operator is stored as a symmetric band of half-bandwidth at most two.
//! Energies are extensive (not divided by `N`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::SchedulePoint;

/// Maximal-spin sector of `N` spin-1/2 particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SectorBasis {
    spins: usize,
}

impl SectorBasis {
    pub fn new(spins: usize) -> Result<Self> {
        if spins == 0 {
            return Err(Error::EmptySystem);
        }
        Ok(Self { spins })
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn dim(&self) -> usize {
        self.spins + 1
    }

    /// Total `sigma^z` eigenvalue `M = -N + 2i` of basis state `i`.
    pub fn total_sz(&self, i: usize) -> i64 {
        2 * i as i64 - self.spins as i64
    }

    /// Normalized magnetization `M/N` of basis state `i`.
    pub fn magnetization(&self, i: usize) -> f64 {
        self.total_sz(i) as f64 / self.spins as f64
    }
}

/// Interaction order and size of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelParams {
    pub p: u32,
    pub spins: usize,
}

impl ModelParams {
    pub fn new(p: u32, spins: usize) -> Result<Self> {
        if p < 3 {
            return Err(Error::InvalidOrder { p, min: 3 });
        }
        if spins == 0 {
            return Err(Error::EmptySystem);
        }
        Ok(Self { p, spins })
    }

    /// Even orders build well-defined matrices but fall outside the odd-`p`
    /// mean-field analysis; outputs carry this flag.
    pub fn even_order_warning(&self) -> bool {
        self.p.is_multiple_of(2)
    }
}

/// Real symmetric matrix stored as its diagonal and up to two
/// super-diagonals. `bands[k][i]` holds entry `(i, i + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetricOperator {
    dim: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedSymmetricOperator {
    pub const MAX_HALF_BANDWIDTH: usize = 2;

    pub fn zeros(dim: usize, half_bandwidth: usize) -> Self {
        assert!(half_bandwidth <= Self::MAX_HALF_BANDWIDTH);
        let bands = (0..=half_bandwidth).map(|k| vec![0.0; dim.saturating_sub(k)]).collect();
        Self { dim, bands }
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        Self {
            dim: values.len(),
            bands: vec![values],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Stored entries `(i, i + k)` for `i` in `0..dim - k`.
    pub fn band(&self, k: usize) -> &[f64] {
        self.bands.get(k).map_or(&[], |b| b.as_slice())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.bands.get(hi - lo).map_or(0.0, |b| b[lo])
    }

    fn set_upper(&mut self, i: usize, k: usize, value: f64) {
        self.bands[k][i] = value;
    }

    fn widened(&self, half_bandwidth: usize) -> Self {
        let mut out = Self::zeros(self.dim, half_bandwidth.max(self.half_bandwidth()));
        for (k, band) in self.bands.iter().enumerate() {
            out.bands[k].copy_from_slice(band);
        }
        out
    }

    /// `self + factor * other`, keeping the wider band.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut out = self.widened(other.half_bandwidth());
        for (k, band) in other.bands.iter().enumerate() {
            for (o, v) in out.bands[k].iter_mut().zip(band) {
                *o += factor * v;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            bands: self
                .bands
                .iter()
                .map(|b| b.iter().map(|v| factor * v).collect())
                .collect(),
        }
    }

    /// Linear combination `sum_k c_k A_k` of operators of equal dimension.
    pub fn combine(terms: &[(f64, &Self)]) -> Self {
        let dim = terms.first().map_or(0, |(_, a)| a.dim);
        let width = terms.iter().map(|(_, a)| a.half_bandwidth()).max().unwrap_or(0);
        terms
            .iter()
            .fold(Self::zeros(dim, width), |acc, (c, a)| acc.add_scaled(*c, a))
    }

    /// Exact band product `A * A`. The half-bandwidth doubles, so this is
    /// only defined for half-bandwidth at most one.
    pub fn square(&self) -> Self {
        let b = self.half_bandwidth();
        assert!(2 * b <= Self::MAX_HALF_BANDWIDTH, "square would exceed band storage");
        let n = self.dim;
        let mut out = Self::zeros(n, 2 * b);
        for i in 0..n {
            for k in 0..=2 * b {
                let j = i + k;
                if j >= n {
                    break;
                }
                // (A^2)_{ij} = sum_m A_im A_mj over |i - m|, |m - j| <= b.
                let lo = j.saturating_sub(b);
                let hi = (i + b).min(n - 1);
                let sum: f64 = (lo..=hi).map(|m| self.get(i, m) * self.get(m, j)).sum();
                out.set_upper(i, k, sum);
            }
        }
        out
    }

    /// Real matrix-vector product.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut()
            .zip(&self.bands[0])
            .zip(x)
            .for_each(|((y, d), x)| *y = d * x);
        for (k, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i] += a * x[i + k];
                y[i + k] += a * x[i];
            }
        }
    }

    /// Row-major dense expansion.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for (k, band) in self.bands.iter().enumerate() {
            for (i, &a) in band.iter().enumerate() {
                out[i * n + i + k] = a;
                out[(i + k) * n + i] = a;
            }
        }
        out
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.to_dense())
    }

    /// All structurally stored entries of both triangles as
    /// `(row, col, value)`, row-major.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        let b = self.half_bandwidth();
        let n = self.dim;
        let mut out = Vec::with_capacity(n * (2 * b + 1));
        for i in 0..n {
            for j in i.saturating_sub(b)..=(i + b).min(n - 1) {
                out.push((i, j, self.get(i, j)));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.bands.iter().flatten().all(|v| v.is_finite())
    }

    /// Gershgorin interval enclosing the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let b = self.half_bandwidth();
        let n = self.dim;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let radius: f64 = (i.saturating_sub(b)..=(i + b).min(n - 1))
                .filter(|&j| j != i)
                .map(|j| self.get(i, j).abs())
                .sum();
            let d = self.get(i, i);
            lo = lo.min(d - radius);
            hi = hi.max(d + radius);
        }
        (lo, hi)
    }
}

/// Target Hamiltonian `H0 = -N (M/N)^p`, diagonal in the sector basis.
///
/// Accepts any `p >= 1`; [`ModelParams`] enforces the stricter range used by
/// the rest of the analysis.
pub fn build_h0(basis: SectorBasis, p: u32) -> Result<BandedSymmetricOperator> {
    if p == 0 {
        return Err(Error::InvalidOrder { p, min: 1 });
    }
    let n = basis.spins() as f64;
    let exponent = i32::try_from(p).map_err(|_| Error::InvalidOrder { p, min: 1 })?;
    let diag = (0..basis.dim())
        .map(|i| -n * basis.magnetization(i).powi(exponent))
        .collect();
    Ok(BandedSymmetricOperator::diagonal(diag))
}

/// Collective `S^x = (1/2) sum_i sigma_i^x`: entry `(i, i+1)` is
/// `sqrt((i + 1)(N - i)) / 2`.
pub fn build_sx(basis: SectorBasis) -> BandedSymmetricOperator {
    let n = basis.spins();
    let mut op = BandedSymmetricOperator::zeros(basis.dim(), 1);
    for i in 0..n {
        op.set_upper(i, 1, (((i + 1) * (n - i)) as f64).sqrt() / 2.0);
    }
    op
}

/// Transverse-field driver `-sum_i sigma_i^x = -2 S^x`.
pub fn build_vtf(basis: SectorBasis) -> BandedSymmetricOperator {
    build_sx(basis).scaled(-2.0)
}

/// Antiferromagnetic fluctuation driver `N (2 S^x / N)^2 = (4/N) (S^x)^2`.
pub fn build_vaff(basis: SectorBasis) -> BandedSymmetricOperator {
    build_sx(basis).square().scaled(4.0 / basis.spins() as f64)
}

/// `H(s, lambda) = s {lambda H0 + (1 - lambda) V_AFF} + (1 - s) V_TF`.
pub fn assemble(basis: SectorBasis, p: u32, point: SchedulePoint) -> Result<BandedSymmetricOperator> {
    SectorHamiltonian::new(basis, p)?.at(point)
}

/// The three constituent operators of one `(N, p)` model, built once and
/// recombined for each schedule point.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    basis: SectorBasis,
    p: u32,
    h0: BandedSymmetricOperator,
    vtf: BandedSymmetricOperator,
    vaff: BandedSymmetricOperator,
}

impl SectorHamiltonian {
    pub fn new(basis: SectorBasis, p: u32) -> Result<Self> {
        Ok(Self {
            basis,
            p,
            h0: build_h0(basis, p)?,
            vtf: build_vtf(basis),
            vaff: build_vaff(basis),
        })
    }

    pub fn for_model(params: ModelParams) -> Result<Self> {
        Self::new(SectorBasis::new(params.spins)?, params.p)
    }

    pub fn basis(&self) -> SectorBasis {
        self.basis
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn h0(&self) -> &BandedSymmetricOperator {
        &self.h0
    }

    pub fn vtf(&self) -> &BandedSymmetricOperator {
        &self.vtf
    }

    pub fn vaff(&self) -> &BandedSymmetricOperator {
        &self.vaff
    }

    pub fn at(&self, point: SchedulePoint) -> Result<BandedSymmetricOperator> {
        let point = SchedulePoint::new(point.s, point.lambda)?;
        Ok(self.at_unchecked(point))
    }

    pub(crate) fn at_unchecked(&self, point: SchedulePoint) -> BandedSymmetricOperator {
        let SchedulePoint { s, lambda } = point;
        // Exact boundary values: zero weights drop terms entirely.
        let mut terms = Vec::with_capacity(3);
        if s * lambda != 0.0 {
            terms.push((s * lambda, &self.h0));
        }
        if s * (1.0 - lambda) != 0.0 {
            terms.push((s * (1.0 - lambda), &self.vaff));
        }
        if 1.0 - s != 0.0 {
            terms.push((1.0 - s, &self.vtf));
        }
        let mut op = BandedSymmetricOperator::combine(&terms);
        if op.half_bandwidth() < 2 {
            op = op.widened(2);
        }
        op
    }
}
