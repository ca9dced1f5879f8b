//! Closed forms of the `p -> infinity` limit.
//!
//! As `p` grows, `(m^z)^p` vanishes for `m^z < 1`, so the ferromagnetic
//! solutions collapse onto two branches: `m^z = 1` with `f = -s lambda`, and a
//! lower branch that inherits the QP2 free energy.

use serde::Serialize;

use super::{f_qp, f_qp2, qp2_magnetization, FBranch, Magnetization, PhaseLabel, SaddleSolution};
use crate::error::Result;
use crate::schedule::SchedulePoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfinitePEnergies {
    /// QP free energy; `None` outside `s < 1/(3 - 2 lambda)`.
    pub f_qp: Option<f64>,
    /// Upper ferromagnetic branch, `-s lambda`.
    pub f_f: f64,
    /// QP2 free energy (shared by the lower F branch); `None` outside its
    /// domain.
    pub f_qp2: Option<f64>,
    /// `m^z` of the lower F branch where it exists.
    pub mz_lower: Option<f64>,
}

pub fn pinf_free_energies(point: SchedulePoint) -> Result<InfinitePEnergies> {
    let point = SchedulePoint::new(point.s, point.lambda)?;
    let mz_lower = qp2_magnetization(point)
        .ok()
        .map(|m| (1.0 - m.mx * m.mx).max(0.0).sqrt());
    Ok(InfinitePEnergies {
        f_qp: f_qp(point).ok(),
        f_f: -point.s * point.lambda,
        f_qp2: f_qp2(point).ok(),
        mz_lower,
    })
}

/// Stable phase at `p -> infinity`. On `lambda = 0` the `m^z` direction
/// carries no energy and the QP2 assignment is kept, as at finite `p`.
pub fn classify_infinite(point: SchedulePoint) -> Result<SaddleSolution> {
    let e = pinf_free_energies(point)?;
    let sol = |mz: f64, mx: f64, f: f64, phase: PhaseLabel| SaddleSolution {
        magnetization: Magnetization::new(mz, mx),
        free_energy: f,
        phase,
        converged: true,
        iterations: 0,
        residual: 0.0,
    };
    let SchedulePoint { s, lambda } = point;
    if lambda == 0.0 {
        return Ok(match (e.f_qp, qp2_magnetization(point), e.f_qp2) {
            (Some(f), _, _) => sol(0.0, 1.0, f, PhaseLabel::Qp),
            (None, Ok(m), Some(f)) => sol(0.0, m.mx, f, PhaseLabel::Qp2),
            _ => sol(0.0, 0.0, 0.0, PhaseLabel::Qp2),
        });
    }
    let mut best = sol(1.0, 0.0, e.f_f, PhaseLabel::F(FBranch::Upper));
    let mut candidates = Vec::with_capacity(2);
    if let Some(f) = e.f_qp {
        candidates.push(sol(0.0, 1.0, f, PhaseLabel::Qp));
    }
    if let (Some(f), Some(mz)) = (e.f_qp2, e.mz_lower) {
        let mx = (1.0 - s) / (2.0 * s * (1.0 - lambda));
        candidates.push(sol(mz, mx, f, PhaseLabel::F(FBranch::Lower)));
    }
    for c in candidates.into_iter().rev() {
        if c.free_energy <= best.free_energy {
            best = c;
        }
    }
    Ok(best)
}

/// Continuous QP to F boundary `s = 1/(3 - 2 lambda)`, present for
/// `lambda <= 1/2`.
pub fn pinf_second_order_boundary(lambda: f64) -> Option<f64> {
    (lambda <= 0.5).then(|| SchedulePoint::qp2_edge(lambda))
}

/// Discontinuous QP to F boundary `s = 1/2`, present for `lambda > 1/2`.
pub fn pinf_qp_f_boundary(lambda: f64) -> Option<f64> {
    (lambda > 0.5).then_some(0.5)
}

/// Level crossing of the two F branches,
/// `s = (1 - 2 sqrt(lambda - lambda^2)) / (2 lambda - 1)^2`, evaluated in the
/// equivalent form `1 / (1 + 2 sqrt(lambda - lambda^2))` that stays finite at
/// `lambda = 1/2`. It bounds the phase diagram only for `lambda <= 1/2`; above
/// that the crossing lies outside the lower branch's domain.
pub fn pinf_ff_boundary(lambda: f64) -> f64 {
    1.0 / (1.0 + 2.0 * (lambda - lambda * lambda).max(0.0).sqrt())
}
