//! Schrödinger evolution along an annealing path inside the maximal-spin
//! sector.
//!
//! Each step applies the fourth-order commutator-free Magnus propagator
//! `exp(-i h B) exp(-i h A)` with `A`, `B` fixed combinations of `H` at the
//! two Gauss nodes. Both exponentials are evaluated exactly through the
//! eigendecomposition of the real symmetric generator, so every step is
//! unitary to rounding error.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::eigen::{ground_state, Eigendecomposition};
use crate::error::{Error, Result};
use crate::schedule::SchedulePath;
use crate::sector::{BandedSymmetricOperator, SectorBasis, SectorHamiltonian};

/// Per-step norm change above which a step is retried with half the step.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

const MAX_HALVINGS: u32 = 12;

/// Amplitudes over the sector basis, stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    re: DVector<f64>,
    im: DVector<f64>,
}

impl StateVector {
    pub fn from_real(values: &[f64]) -> Self {
        Self {
            re: DVector::from_column_slice(values),
            im: DVector::zeros(values.len()),
        }
    }

    /// The fully x-polarized state, ground state of the transverse field:
    /// amplitude `sqrt(C(N, i)) / 2^(N/2)` on basis state `i`.
    pub fn x_polarized(basis: SectorBasis) -> Self {
        let n = basis.spins();
        let ln_fact: Vec<f64> = std::iter::once(0.0)
            .chain((1..=n).scan(0.0, |acc, k| {
                *acc += (k as f64).ln();
                Some(*acc)
            }))
            .collect();
        let half_ln2n = 0.5 * n as f64 * std::f64::consts::LN_2;
        let amps: Vec<f64> = (0..=n)
            .map(|i| (0.5 * (ln_fact[n] - ln_fact[i] - ln_fact[n - i]) - half_ln2n).exp())
            .collect();
        Self::from_real(&amps)
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn amplitudes(&self) -> Vec<Complex<f64>> {
        self.re
            .iter()
            .zip(self.im.iter())
            .map(|(&r, &i)| Complex::new(r, i))
            .collect()
    }

    pub fn norm(&self) -> f64 {
        (self.re.norm_squared() + self.im.norm_squared()).sqrt()
    }

    /// `|<v|psi>|^2` for a real vector `v`.
    pub fn overlap_sq(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        self.re.dot(&v).powi(2) + self.im.dot(&v).powi(2)
    }

    /// `<psi|H|psi>` for a real symmetric `H`.
    pub fn expectation(&self, op: &BandedSymmetricOperator) -> f64 {
        let mut out = vec![0.0; self.dim()];
        let mut total = 0.0;
        for part in [&self.re, &self.im] {
            op.apply(part.as_slice(), &mut out);
            total += part.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    /// `psi <- exp(-i h G) psi` for the eigendecomposition of `G`.
    fn propagate(&mut self, eig: &Eigendecomposition, h: f64) {
        let v: &DMatrix<f64> = &eig.vectors;
        let mut wr = v.tr_mul(&self.re);
        let mut wi = v.tr_mul(&self.im);
        for k in 0..wr.len() {
            let (sn, cs) = (-h * eig.values[k]).sin_cos();
            let (r, i) = (wr[k], wi[k]);
            wr[k] = cs * r - sn * i;
            wi[k] = sn * r + cs * i;
        }
        self.re = v * wr;
        self.im = v * wi;
    }
}

/// Overlap with the instantaneous ground state at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapSample {
    pub t: f64,
    pub s: f64,
    pub lambda: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealRun {
    pub p: u32,
    pub spins: usize,
    pub path: SchedulePath,
    pub tau: f64,
    /// Step actually used: `tau` divided by the number of steps.
    pub dt: f64,
    pub steps: usize,
    /// `|<ground(H_end)|psi(tau)>|^2`.
    pub fidelity: f64,
    /// `(<psi|H0|psi> - E0) / N` at the end of the run.
    pub residual_energy: f64,
    /// Largest `| |psi(t)| - 1 |` seen.
    pub norm_drift: f64,
    pub rejected_steps: usize,
    pub overlaps: Vec<OverlapSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolveOptions {
    /// Step size; defaults to `min(1e-2, tau / 1e4)`.
    pub dt: Option<f64>,
    /// Record the instantaneous ground-state overlap every this many steps.
    pub record_every: Option<usize>,
}

/// Default step `min(1e-2, tau / 1e4)`.
pub fn default_dt(tau: f64) -> f64 {
    (tau / 1e4).min(1e-2)
}

const SQRT3: f64 = 1.732_050_807_568_877_2;
const NODE_1: f64 = 0.5 - SQRT3 / 6.0;
const NODE_2: f64 = 0.5 + SQRT3 / 6.0;
const HEAVY: f64 = 0.25 + SQRT3 / 6.0;
const LIGHT: f64 = 0.25 - SQRT3 / 6.0;

struct Stepper<'a> {
    ham: &'a SectorHamiltonian,
    path: &'a SchedulePath,
    tau: f64,
}

impl Stepper<'_> {
    fn hamiltonian_at(&self, t: f64) -> Result<BandedSymmetricOperator> {
        self.ham.at(self.path.at(t / self.tau))
    }

    /// One propagator step over `[t, t + h]`.
    fn step(&self, psi: &mut StateVector, t: f64, h: f64) -> Result<()> {
        let h1 = self.hamiltonian_at(t + NODE_1 * h)?;
        let h2 = self.hamiltonian_at(t + NODE_2 * h)?;
        let first = BandedSymmetricOperator::combine(&[(HEAVY, &h1), (LIGHT, &h2)]);
        let second = BandedSymmetricOperator::combine(&[(LIGHT, &h1), (HEAVY, &h2)]);
        psi.propagate(&Eigendecomposition::of(&first)?, h);
        psi.propagate(&Eigendecomposition::of(&second)?, h);
        Ok(())
    }

    /// Advance over `[t, t + h]`, splitting the interval whenever a step
    /// changes the norm by more than [`UNITARITY_TOLERANCE`]. Returns the
    /// number of rejected attempts.
    fn advance(&self, psi: &mut StateVector, t: f64, h: f64, halvings: u32) -> Result<usize> {
        let before = psi.norm();
        let mut trial = psi.clone();
        self.step(&mut trial, t, h)?;
        let err = (trial.norm() - before).abs();
        if err <= UNITARITY_TOLERANCE {
            *psi = trial;
            return Ok(0);
        }
        if halvings >= MAX_HALVINGS {
            return Err(Error::StepRejected {
                time: t,
                error: err,
                halvings,
            });
        }
        let half = 0.5 * h;
        let left = self.advance(psi, t, half, halvings + 1)?;
        let right = self.advance(psi, t + half, half, halvings + 1)?;
        Ok(1 + left + right)
    }
}

/// Times at which the path passes its interior vertices.
fn corner_times(path: &SchedulePath, tau: f64) -> Vec<f64> {
    let total = path.length();
    if total == 0.0 {
        return Vec::new();
    }
    let mut acc = 0.0;
    let mut out = Vec::new();
    let segments: Vec<_> = path.segments().collect();
    for (a, b) in &segments[..segments.len().saturating_sub(1)] {
        acc += (b.s - a.s).hypot(b.lambda - a.lambda);
        out.push(tau * acc / total);
    }
    out
}

fn initial_state(ham: &SectorHamiltonian, path: &SchedulePath) -> Result<StateVector> {
    let start = path.start();
    if start.s == 0.0 {
        Ok(StateVector::x_polarized(ham.basis()))
    } else {
        let (_, v) = ground_state(&ham.at(start)?)?;
        Ok(StateVector::from_real(&v))
    }
}

/// Evolve from the ground state at the start of `path` for total time
/// `tau`, traversing the path at uniform arc-length speed.
pub fn evolve(p: u32, spins: usize, path: &SchedulePath, tau: f64, dt: Option<f64>) -> Result<AnnealRun> {
    evolve_with(p, spins, path, tau, &EvolveOptions { dt, record_every: None })
}

pub fn evolve_with(p: u32, spins: usize, path: &SchedulePath, tau: f64, options: &EvolveOptions) -> Result<AnnealRun> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be finite and >= 0, got {tau}"
        )));
    }
    let ham = SectorHamiltonian::new(SectorBasis::new(spins)?, p)?;
    let requested = options.dt.unwrap_or_else(|| default_dt(tau));
    if tau > 0.0 && !(requested > 0.0 && requested <= tau) {
        return Err(Error::InvalidArgument(format!(
            "dt must lie in (0, tau] = (0, {tau}], got {requested}"
        )));
    }
    let steps = if tau > 0.0 {
        (tau / requested).ceil() as usize
    } else {
        0
    };
    let dt = if steps > 0 { tau / steps as f64 } else { 0.0 };

    let mut psi = initial_state(&ham, path)?;
    let stepper = Stepper { ham: &ham, path, tau };
    let mut norm_drift = (psi.norm() - 1.0).abs();
    let mut rejected = 0;
    let mut overlaps = Vec::new();
    let record = |psi: &StateVector, t: f64, out: &mut Vec<OverlapSample>| -> Result<()> {
        let pt = if tau > 0.0 { path.at(t / tau) } else { path.end() };
        let (_, g) = ground_state(&ham.at(pt)?)?;
        out.push(OverlapSample {
            t,
            s: pt.s,
            lambda: pt.lambda,
            overlap: psi.overlap_sq(&g),
        });
        Ok(())
    };
    let every = options.record_every.filter(|&k| k > 0);
    if every.is_some() {
        record(&psi, 0.0, &mut overlaps)?;
    }
    let corners = corner_times(path, tau);
    for k in 0..steps {
        let t = k as f64 * dt;
        let end = if k + 1 == steps { tau } else { t + dt };
        // H(t) has a kink at every path vertex; stepping across one would
        // drop the integrator to second order.
        let mut from = t;
        for &c in corners.iter().filter(|&&c| c > t && c < end) {
            rejected += stepper.advance(&mut psi, from, c - from, 0)?;
            from = c;
        }
        rejected += stepper.advance(&mut psi, from, end - from, 0)?;
        norm_drift = norm_drift.max((psi.norm() - 1.0).abs());
        if let Some(e) = every {
            if (k + 1) % e == 0 || k + 1 == steps {
                record(&psi, (k + 1) as f64 * dt, &mut overlaps)?;
            }
        }
    }

    let (_, ground) = ground_state(&ham.at(path.end())?)?;
    let e0 = ham.h0().band(0).iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AnnealRun {
        p,
        spins,
        path: path.clone(),
        tau,
        dt,
        steps,
        fidelity: psi.overlap_sq(&ground).clamp(0.0, 1.0),
        residual_energy: (psi.expectation(ham.h0()) - e0) / spins as f64,
        norm_drift,
        rejected_steps: rejected,
        overlaps,
    })
}

/// Run two paths with identical settings, concurrently.
pub fn compare_paths(
    p: u32,
    spins: usize,
    tau: f64,
    a: &SchedulePath,
    b: &SchedulePath,
    dt: Option<f64>,
) -> Result<(AnnealRun, AnnealRun)> {
    let (ra, rb) = rayon::join(|| evolve(p, spins, a, tau, dt), || evolve(p, spins, b, tau, dt));
    Ok((ra?, rb?))
}
