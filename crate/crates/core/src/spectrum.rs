//! Lowest two levels of `H(s, lambda)` in the maximal-spin sector, gap
//! curves, their local minima, and size-scaling fits of the minima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::lowest_eigenvalues;
use crate::error::{Error, Result};
use crate::meanfield::{classify_phase, InverseTemperature};
use crate::schedule::{SchedulePath, SchedulePoint};
use crate::sector::{BandedSymmetricOperator, SectorBasis, SectorHamiltonian};

/// Gaps below this are reported for review instead of trusted.
pub const NEAR_DEGENERATE: f64 = 1e-13;

/// Grid windows with gaps below this are sampled three times more densely.
pub const SMALL_GAP: f64 = 0.1;

/// The two smallest eigenvalues `E0 <= E1`.
pub fn lowest_two(op: &BandedSymmetricOperator) -> Result<(f64, f64)> {
    if op.dim() < 2 {
        return Err(Error::Eigensolver(format!(
            "need dimension >= 2 for a gap, got {}",
            op.dim()
        )));
    }
    let e = lowest_eigenvalues(op, 2)?;
    Ok((e[0], e[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub delta: f64,
}

fn sample(ham: &SectorHamiltonian, s: f64, lambda: f64) -> Result<GapSample> {
    let run = || -> Result<GapSample> {
        let op = ham.at(SchedulePoint::new(s, lambda)?)?;
        let (e0, e1) = lowest_two(&op)?;
        Ok(GapSample {
            s,
            e0,
            e1,
            delta: (e1 - e0).max(0.0),
        })
    };
    run().map_err(|e| match e {
        Error::Eigensolver(_) => Error::EigensolverAt { s, source: Box::new(e) },
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub p: u32,
    pub spins: usize,
    pub lambda: f64,
    pub samples: Vec<GapSample>,
}

impl GapCurve {
    /// Samples whose gap is too small to be trusted.
    pub fn review_flags(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|x| x.delta < NEAR_DEGENERATE)
            .map(|x| x.s)
            .collect()
    }

    pub fn hamiltonian(&self) -> Result<SectorHamiltonian> {
        SectorHamiltonian::new(SectorBasis::new(self.spins)?, self.p)
    }
}

fn check_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("s grid must be strictly increasing".into()));
    }
    if s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidGrid("s grid must lie within [0, 1]".into()));
    }
    Ok(())
}

/// Gap `E1 - E0` at every point of `s_grid` along constant `lambda`.
pub fn gap_curve(p: u32, spins: usize, lambda: f64, s_grid: &[f64]) -> Result<GapCurve> {
    check_grid(s_grid)?;
    SchedulePoint::new(0.0, lambda)?;
    let ham = SectorHamiltonian::new(SectorBasis::new(spins)?, p)?;
    let samples = s_grid
        .par_iter()
        .map(|&s| sample(&ham, s, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapCurve {
        p,
        spins,
        lambda,
        samples,
    })
}

/// `n` uniform points on `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// The default sampling: 2001 uniform points, with every interval touching
/// a gap below [`SMALL_GAP`] split in three.
pub fn adaptive_gap_curve(p: u32, spins: usize, lambda: f64, base: &[f64]) -> Result<GapCurve> {
    let coarse = gap_curve(p, spins, lambda, base)?;
    let mut extra = Vec::new();
    for w in coarse.samples.windows(2) {
        if w[0].delta < SMALL_GAP || w[1].delta < SMALL_GAP {
            let h = (w[1].s - w[0].s) / 3.0;
            extra.push(w[0].s + h);
            extra.push(w[0].s + 2.0 * h);
        }
    }
    if extra.is_empty() {
        return Ok(coarse);
    }
    let fine = gap_curve(p, spins, lambda, &extra)?;
    let mut samples = coarse.samples;
    samples.extend(fine.samples);
    samples.sort_by(|a, b| a.s.total_cmp(&b.s));
    Ok(GapCurve { samples, ..coarse })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMinimum {
    pub s_star: f64,
    pub delta: f64,
    /// Position among the minima of one curve, counted from the left.
    pub index: usize,
    pub spins: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once
/// the bracket is narrower than `tol`. Returns the best probe seen,
/// including `best` as a starting candidate.
fn golden_section<F>(mut a: f64, mut b: f64, tol: f64, best: (f64, f64), f: &mut F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best = best;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx < best.1 {
                best = (x, fx);
            }
        }
    }
    Ok(best)
}

/// Local minima of sampled `(s, delta)` data. Each interior sample below
/// both neighbours seeds a golden-section search over its neighbour bracket
/// using `eval`; minima come back left to right.
pub fn find_local_minima_with<F>(
    samples: &[(f64, f64)],
    spins: usize,
    refine_tol: f64,
    mut eval: F,
) -> Result<Vec<GapMinimum>>
where
    F: FnMut(f64) -> Result<f64>,
{
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let mut out = Vec::new();
    for w in samples.windows(3) {
        let (l, m, r) = (w[0], w[1], w[2]);
        if m.1 < l.1 && m.1 < r.1 {
            let (s_star, delta) = golden_section(l.0, r.0, refine_tol, m, &mut eval)?;
            out.push(GapMinimum {
                s_star,
                delta,
                index: out.len(),
                spins,
            });
        }
    }
    Ok(out)
}

/// Local minima of a gap curve, refined by re-diagonalizing at the probe
/// points.
pub fn find_local_minima(curve: &GapCurve, refine_tol: f64) -> Result<Vec<GapMinimum>> {
    let ham = curve.hamiltonian()?;
    let data: Vec<(f64, f64)> = curve.samples.iter().map(|x| (x.s, x.delta)).collect();
    find_local_minima_with(&data, curve.spins, refine_tol, |s| {
        sample(&ham, s, curve.lambda).map(|x| x.delta)
    })
}

/// `[leftmost, rightmost]` positions of the minima whose gap is below
/// `threshold`; the oscillatory small-gap region of a curve.
pub fn small_gap_window(minima: &[GapMinimum], threshold: f64) -> Option<(f64, f64)> {
    let mut small = minima.iter().filter(|m| m.delta < threshold);
    let first = small.next()?;
    let last = small.next_back().unwrap_or(first);
    Some((first.s_star, last.s_star))
}

/// How one minimum is picked from each curve of a size sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinimumSelection {
    /// Smallest gap on the curve.
    Global,
    /// The `k`-th minimum from the left. When a curve has a different number
    /// of minima than the first one, the minimum nearest in `s` to the
    /// previous pick is used instead.
    Ordinal(usize),
    Rightmost,
}

/// One minimum per size, in the order of `per_size`. Sizes without any
/// minimum are skipped.
pub fn select_minima(per_size: &[Vec<GapMinimum>], selection: MinimumSelection) -> Vec<GapMinimum> {
    let reference = per_size.iter().find(|m| !m.is_empty()).map_or(0, Vec::len);
    let mut out: Vec<GapMinimum> = Vec::with_capacity(per_size.len());
    for minima in per_size.iter().filter(|m| !m.is_empty()) {
        let pick = match selection {
            MinimumSelection::Global => minima.iter().min_by(|a, b| a.delta.total_cmp(&b.delta)),
            MinimumSelection::Rightmost => minima.last(),
            MinimumSelection::Ordinal(k) => match out.last() {
                Some(prev) if minima.len() != reference => minima.iter().min_by(|a, b| {
                    (a.s_star - prev.s_star)
                        .abs()
                        .total_cmp(&(b.s_star - prev.s_star).abs())
                }),
                _ => minima.get(k),
            },
        };
        if let Some(m) = pick {
            out.push(*m);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    /// `delta = a N^-b`
    Power,
    /// `delta = a exp(-c N)`
    Exponential,
}

impl FitModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Power => "power",
            Self::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub a: f64,
    /// `b` for the power law, `c` for the exponential.
    pub rate: f64,
    /// Coefficient of determination in the linearizing coordinates.
    pub r_squared: f64,
    pub sizes: Vec<usize>,
}

/// Least-squares fit of minimum gap against system size. At least four
/// distinct sizes are required.
pub fn scaling_fit(minima: &[GapMinimum], model: FitModel) -> Result<ScalingFit> {
    let mut sizes: Vec<usize> = minima.iter().map(|m| m.spins).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(Error::TooFewSizes {
            needed: 4,
            got: sizes.len(),
        });
    }
    if let Some(m) = minima.iter().find(|m| !(m.delta > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "cannot fit non-positive gap {} at N = {}",
            m.delta, m.spins
        )));
    }
    let pts: Vec<(f64, f64)> = minima
        .iter()
        .map(|m| {
            let n = m.spins as f64;
            let x = match model {
                FitModel::Power => n.ln(),
                FitModel::Exponential => n,
            };
            (x, m.delta.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).max(0.0) };
    Ok(ScalingFit {
        model,
        a: intercept.exp(),
        rate: -slope,
        r_squared,
        sizes,
    })
}

/// Smallest gap along a path, located on `samples` uniform arc-length
/// points and refined by golden-section search. Returns the arc-length
/// fraction and the gap.
pub fn path_minimum_gap(p: u32, spins: usize, path: &SchedulePath, samples: usize) -> Result<(f64, f64)> {
    if samples < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: samples,
        });
    }
    let ham = SectorHamiltonian::new(SectorBasis::new(spins)?, p)?;
    let gap = |u: f64| -> Result<f64> {
        let op = ham.at(path.at(u))?;
        let (e0, e1) = lowest_two(&op)?;
        Ok(e1 - e0)
    };
    let us = uniform_grid(samples);
    let deltas = us.par_iter().map(|&u| gap(u)).collect::<Result<Vec<_>>>()?;
    let i = (0..deltas.len())
        .min_by(|&a, &b| deltas[a].total_cmp(&deltas[b]))
        .unwrap_or(0);
    let lo = us[i.saturating_sub(1)];
    let hi = us[(i + 1).min(us.len() - 1)];
    golden_section(lo, hi, 1e-9, (us[i], deltas[i]), &mut |u| gap(u))
}

/// `|E0/N - f|` between the exact per-spin ground energy and the
/// zero-temperature mean-field free energy.
pub fn static_deviation(p: u32, spins: usize, point: SchedulePoint) -> Result<f64> {
    let ham = SectorHamiltonian::new(SectorBasis::new(spins)?, p)?;
    let op = ham.at(point)?;
    let e0 = lowest_eigenvalues(&op, 1)?[0];
    let f = classify_phase(p, point, InverseTemperature::Infinite)?.free_energy;
    Ok((e0 / spins as f64 - f).abs())
}
