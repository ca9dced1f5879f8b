//! Static-approximation mean-field theory of `H(s, lambda)`.
//!
//! The order parameters are the magnetizations `(m^z, m^x)`; their conjugate
//! fields are eliminated analytically so only the two self-consistent
//! equations remain. With `h^z = p s lambda (m^z)^(p-1)`,
//! `h^x = 1 - s - 2 s (1 - lambda) m^x` and `R = |h|` they read
//! `m = (h / R) tanh(beta R)`, which becomes `m = h / R` at zero temperature.

mod infinite;
mod transitions;

pub use infinite::{
    classify_infinite, pinf_ff_boundary, pinf_free_energies, pinf_qp_f_boundary, pinf_second_order_boundary,
    InfinitePEnergies,
};
pub(crate) use transitions::refine_edge;
pub use transitions::{detect_along, detect_jump, detect_jump_with, JumpSettings, Transition, TransitionOrder};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::SchedulePoint;

/// Inverse temperature, with zero temperature as a distinguished value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InverseTemperature {
    Finite(f64),
    Infinite,
}

impl InverseTemperature {
    pub fn finite(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self::Finite(beta))
        } else {
            Err(Error::InvalidBeta(beta))
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Self::Finite(b) => Self::finite(b),
            Self::Infinite => Ok(self),
        }
    }
}

impl fmt::Display for InverseTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(b) => write!(f, "{b}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for InverseTemperature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "INFINITE" => Ok(Self::Infinite),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse beta from {s:?}")))
                .and_then(Self::finite),
        }
    }
}

/// Order-parameter pair `(m^z, m^x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnetization {
    pub mz: f64,
    pub mx: f64,
}

impl Magnetization {
    pub const fn new(mz: f64, mx: f64) -> Self {
        Self { mz, mx }
    }

    fn max_abs_diff(self, other: Self) -> f64 {
        (self.mz - other.mz).abs().max((self.mx - other.mx).abs())
    }
}

/// Sub-flag of the ferromagnetic phase. Only the infinite-`p` analysis
/// distinguishes the `m^z = 1` branch from the intermediate one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FBranch {
    Unresolved,
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    /// Quantum paramagnet, `m^z = 0`, `m^x = 1`.
    Qp,
    /// `m^z = 0`, `m^x = (1 - s) / (2 s (1 - lambda))`.
    Qp2,
    /// Ferromagnet, `m^z > 0`.
    F(FBranch),
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Qp => "QP",
            Self::Qp2 => "QP2",
            Self::F(FBranch::Unresolved) => "F",
            Self::F(FBranch::Upper) => "F-upper",
            Self::F(FBranch::Lower) => "F-lower",
        }
    }

    pub fn is_ferromagnetic(&self) -> bool {
        matches!(self, Self::F(_))
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A solution of the self-consistent equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub magnetization: Magnetization,
    /// Free energy per spin.
    pub free_energy: f64,
    pub phase: PhaseLabel,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm self-consistency residual at the returned point.
    pub residual: f64,
}

/// Controls for the damped fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Initial weight of the new iterate: `phi <- phi + d (Phi(phi) - phi)`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Residual below which Newton steps on the angular equation are tried.
    pub newton_below: f64,
    /// Iterations without overshoot after which a reduced damping is
    /// doubled again, up to `damping`.
    pub calm_window: usize,
    /// At zero temperature, iterations after which the damped iteration is
    /// abandoned for a bracketed solve of the stationarity condition.
    pub stall_after: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-12,
            max_iterations: 100_000,
            newton_below: 1e-6,
            calm_window: 10,
            stall_after: 2_000,
        }
    }
}

/// Seeds used to search for ferromagnetic solutions.
pub const F_SEEDS: [Magnetization; 4] = [
    Magnetization::new(1.0, 0.0),
    Magnetization::new(0.9, 0.1),
    Magnetization::new(0.5, 0.5),
    Magnetization::new(0.1, 0.9),
];

/// Below this `m^z` a zero-temperature solution counts as paramagnetic.
const MZ_FLOOR: f64 = 1e-8;

const QP2_TIE: f64 = 1e-12;

fn effective_field(p: u32, pt: SchedulePoint, m: Magnetization) -> (f64, f64) {
    let SchedulePoint { s, lambda } = pt;
    let hz = f64::from(p) * s * lambda * m.mz.powi(p as i32 - 1);
    let hx = 1.0 - s - 2.0 * s * (1.0 - lambda) * m.mx;
    (hz, hx)
}

/// Pseudo free energy per spin. At zero temperature the `ln 2 cosh` term
/// reduces to the field magnitude.
pub fn free_energy(p: u32, point: SchedulePoint, beta: InverseTemperature, m: Magnetization) -> f64 {
    let SchedulePoint { s, lambda } = point;
    let (hz, hx) = effective_field(p, point, m);
    let r = hz.hypot(hx);
    let local = match beta {
        InverseTemperature::Infinite => r,
        // ln(2 cosh x) = x + ln(1 + exp(-2x)) for x >= 0.
        InverseTemperature::Finite(b) => r + (-2.0 * b * r).exp().ln_1p() / b,
    };
    f64::from(p - 1) * s * lambda * m.mz.powi(p as i32) - s * (1.0 - lambda) * m.mx * m.mx - local
}

/// Right-hand side `F(m)` of the self-consistent equations. `None` when the
/// field vanishes at zero temperature (the QP2 limit, handled analytically).
fn update(p: u32, pt: SchedulePoint, beta: InverseTemperature, m: Magnetization) -> Option<Magnetization> {
    let (hz, hx) = effective_field(p, pt, m);
    let r = hz.hypot(hx);
    let gain = match beta {
        InverseTemperature::Infinite if r == 0.0 => return None,
        InverseTemperature::Infinite => 1.0 / r,
        InverseTemperature::Finite(b) if r == 0.0 => b,
        InverseTemperature::Finite(b) => (b * r).tanh() / r,
    };
    Some(Magnetization::new(gain * hz, gain * hx))
}

/// Max-norm residual `|m - F(m)|`; infinite where `F` is undefined.
pub fn residual(p: u32, point: SchedulePoint, beta: InverseTemperature, m: Magnetization) -> f64 {
    update(p, point, beta, m).map_or(f64::INFINITY, |f| m.max_abs_diff(f))
}

/// Second derivative of the zero-temperature energy along the unit circle
/// `(m^z, m^x) = (sin phi, cos phi)`. Positive at stable solutions.
pub fn circle_curvature(p: u32, point: SchedulePoint, m: Magnetization) -> f64 {
    let SchedulePoint { s, lambda } = point;
    let phi = m.mz.atan2(m.mx);
    let (sn, cs) = phi.sin_cos();
    let pf = f64::from(p);
    let sp2 = if p >= 2 { sn.powi(p as i32 - 2) } else { 0.0 };
    -pf * s * lambda * ((pf - 1.0) * sp2 * cs * cs - sn.powi(p as i32)) - 2.0 * s * (1.0 - lambda) * (cs * cs - sn * sn)
        + (1.0 - s) * cs
}

fn label_of(m: Magnetization, beta: InverseTemperature) -> PhaseLabel {
    let floor = match beta {
        InverseTemperature::Infinite => MZ_FLOOR,
        InverseTemperature::Finite(_) => 1e-6,
    };
    if m.mz > floor {
        PhaseLabel::F(FBranch::Unresolved)
    } else if (m.mx - 1.0).abs() <= MZ_FLOOR || matches!(beta, InverseTemperature::Finite(_)) {
        PhaseLabel::Qp
    } else {
        PhaseLabel::Qp2
    }
}

fn check_order(p: u32) -> Result<()> {
    if p < 2 {
        Err(Error::InvalidOrder { p, min: 2 })
    } else {
        Ok(())
    }
}

fn check_point(point: SchedulePoint) -> Result<SchedulePoint> {
    SchedulePoint::new(point.s, point.lambda)
}

/// Length of the magnetization along the direction `phi`. At zero
/// temperature every solution is a unit vector; otherwise `rho` is the
/// largest root of `rho = tanh(beta R(rho))` in `[0, 1]`, the branch that
/// joins the zero-temperature one.
fn radius(p: u32, pt: SchedulePoint, beta: InverseTemperature, phi: f64) -> f64 {
    let InverseTemperature::Finite(b) = beta else {
        return 1.0;
    };
    let (sn, cs) = phi.sin_cos();
    let g = |rho: f64| {
        let (hz, hx) = effective_field(p, pt, Magnetization::new(rho * sn, rho * cs));
        (b * hz.hypot(hx)).tanh() - rho
    };
    if g(1.0) >= 0.0 {
        return 1.0;
    }
    // g(0) = tanh(beta |1 - s|) >= 0, so scanning down from 1 brackets the
    // largest root.
    const STEPS: usize = 64;
    let (mut lo, mut hi) = (0.0, 1.0);
    for k in (0..STEPS).rev() {
        let x = k as f64 / STEPS as f64;
        if g(x) >= 0.0 {
            lo = x;
            break;
        }
        hi = x;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn on_ray(rho: f64, phi: f64) -> Magnetization {
    let (sn, cs) = phi.sin_cos();
    Magnetization::new(rho * sn, rho * cs)
}

/// The point on the ray at angle `phi` and the direction of the field it
/// produces. `None` when the field vanishes at zero temperature.
fn angle_map(p: u32, pt: SchedulePoint, beta: InverseTemperature, phi: f64) -> Option<(Magnetization, f64)> {
    let m = on_ray(radius(p, pt, beta, phi), phi);
    let (hz, hx) = effective_field(p, pt, m);
    if matches!(beta, InverseTemperature::Infinite) && hz == 0.0 && hx == 0.0 {
        return None;
    }
    Some((m, hz.atan2(hx)))
}

/// Newton steps on `Phi(phi) - phi = 0` from a point already close to a
/// fixed point. Returns the polished angle, its residual and the steps
/// taken, or `None` once Newton stops reducing the residual.
fn newton_polish(
    p: u32,
    pt: SchedulePoint,
    beta: InverseTemperature,
    start: f64,
    start_residual: f64,
    tol: f64,
) -> Option<(f64, f64, usize)> {
    let g = |phi: f64| angle_map(p, pt, beta, phi).map(|(_, next)| next - phi);
    let (mut phi, mut r) = (start, start_residual);
    for step in 1..=30 {
        let h = 1e-7;
        let slope = (g(phi + h)? - g(phi - h)?) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            return None;
        }
        let next = phi - g(phi)? / slope;
        if !(0.0..=std::f64::consts::PI).contains(&next) {
            return None;
        }
        let rn = residual(p, pt, beta, on_ray(radius(p, pt, beta, next), next));
        if !(rn < r) {
            return None;
        }
        phi = next;
        r = rn;
        if r < tol {
            return Some((phi, r, step));
        }
    }
    None
}

/// Derivative of the zero-temperature energy along the unit circle,
/// `h^x sin phi - h^z cos phi`.
fn circle_slope(p: u32, pt: SchedulePoint, phi: f64) -> f64 {
    let (sn, cs) = phi.sin_cos();
    let (hz, hx) = effective_field(p, pt, Magnetization::new(sn, cs));
    hx * sn - hz * cs
}

/// Local minima of the zero-temperature energy on the circle, each bisected
/// to adjacent floats. Only minima where the field points along `m` are
/// kept; those are the stable solutions of `m = h/|h|`.
fn circle_minima(p: u32, pt: SchedulePoint) -> Vec<f64> {
    const CELLS: usize = 1024;
    let h = std::f64::consts::PI / CELLS as f64;
    let edge = 1e-3 * h;
    let mut out = Vec::new();
    let mut a = edge;
    let mut lo_slope = circle_slope(p, pt, a);
    for k in 1..=CELLS {
        let b = if k == CELLS { k as f64 * h - edge } else { k as f64 * h };
        let hi_slope = circle_slope(p, pt, b);
        if lo_slope < 0.0 && hi_slope >= 0.0 {
            let (mut lo, mut hi) = (a, b);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if circle_slope(p, pt, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let (sn, cs) = root.sin_cos();
            let (hz, hx) = effective_field(p, pt, Magnetization::new(sn, cs));
            if hz * sn + hx * cs > 0.0 {
                out.push(root);
            }
        }
        a = b;
        lo_slope = hi_slope;
    }
    out
}

/// Max-norm of the part of `h` perpendicular to the unit vector `m`. Unlike
/// `m - h/|h|` it stays meaningful when `|h|` is at rounding level.
fn tangential_residual(p: u32, pt: SchedulePoint, m: Magnetization) -> f64 {
    let (hz, hx) = effective_field(p, pt, m);
    let along = hz * m.mz + hx * m.mx;
    (hz - along * m.mz).abs().max((hx - along * m.mx).abs())
}

fn circle_minimum_near(p: u32, pt: SchedulePoint, phi: f64) -> Option<f64> {
    circle_minima(p, pt)
        .into_iter()
        .min_by(|a, b| (a - phi).abs().total_cmp(&(b - phi).abs()))
}

/// Solve the self-consistent equations from `seed` with the default
/// settings.
pub fn solve_saddle(
    p: u32,
    point: SchedulePoint,
    beta: InverseTemperature,
    seed: Magnetization,
) -> Result<SaddleSolution> {
    solve_saddle_with(p, point, beta, seed, &SolverSettings::default())
}

/// Damped fixed-point iteration of the self-consistent equations written
/// in polar form `m = rho (sin phi, cos phi)`: the radial equation is solved
/// exactly along each direction and the angular one, `phi = arg h`, is
/// iterated with damping. The damping is halved whenever an update
/// overshoots (the step changes sign), and Newton steps finish the solve
/// once the residual is small. At zero temperature an iteration that has not
/// settled after `stall_after` steps is finished by bisecting the
/// stationarity condition on the circle near the current angle; such a
/// solution counts as converged when either the residual or the component
/// of `h` perpendicular to `m` is below tolerance.
/// Minima of the free energy along the angle are attracting for this
/// iteration, whereas the plain iteration in `(m^z, m^x)` repels some of
/// them. Non-convergence is reported through `SaddleSolution::converged`,
/// not as an error.
pub fn solve_saddle_with(
    p: u32,
    point: SchedulePoint,
    beta: InverseTemperature,
    seed: Magnetization,
    settings: &SolverSettings,
) -> Result<SaddleSolution> {
    check_order(p)?;
    let point = check_point(point)?;
    let beta = beta.validate()?;
    for c in [seed.mz, seed.mx] {
        if !(-1.0..=1.0).contains(&c) {
            return Err(Error::InvalidSeed(c));
        }
    }
    let mut phi = if seed.mz == 0.0 && seed.mx == 0.0 {
        0.0
    } else {
        seed.mz.max(0.0).atan2(seed.mx)
    };
    let mut d = settings.damping;
    let mut last_step = 0.0;
    let mut calm = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut res = f64::INFINITY;
    let zero_t = matches!(beta, InverseTemperature::Infinite);
    while iterations < settings.max_iterations {
        if zero_t && iterations == settings.stall_after {
            if let Some(root) = circle_minimum_near(p, point, phi) {
                phi = root;
                let m = on_ray(1.0, phi);
                res = residual(p, point, beta, m);
                converged = res < settings.tolerance || tangential_residual(p, point, m) < settings.tolerance;
            }
            break;
        }
        let Some((m, next)) = angle_map(p, point, beta, phi) else {
            break;
        };
        res = residual(p, point, beta, m);
        if res < settings.tolerance {
            converged = true;
            break;
        }
        if res < settings.newton_below {
            if let Some((polished, r, steps)) = newton_polish(p, point, beta, phi, res, settings.tolerance) {
                phi = polished;
                res = r;
                iterations += steps;
                converged = true;
                break;
            }
        }
        let step = next - phi;
        if step * last_step < 0.0 {
            d = (0.5 * d).max(1e-6);
            calm = 0;
        } else {
            calm += 1;
            if calm >= settings.calm_window {
                d = (2.0 * d).min(settings.damping);
                calm = 0;
            }
        }
        last_step = step;
        phi += d * step;
        iterations += 1;
    }
    let m = on_ray(radius(p, point, beta, phi), phi);
    if !converged {
        res = residual(p, point, beta, m);
    }
    Ok(SaddleSolution {
        magnetization: m,
        free_energy: free_energy(p, point, beta, m),
        phase: label_of(m, beta),
        converged,
        iterations,
        residual: res,
    })
}

/// Free energy of the QP solution `(0, 1)`, self-consistent for
/// `s <= 1/(3 - 2 lambda)`; at the edge it coincides with QP2.
pub fn f_qp(point: SchedulePoint) -> Result<f64> {
    let SchedulePoint { s, lambda } = check_point(point)?;
    if s <= SchedulePoint::qp2_edge(lambda) {
        Ok(-s * lambda + 2.0 * s - 1.0)
    } else {
        Err(Error::Domain {
            what: "QP free energy",
            s,
            lambda,
        })
    }
}

fn in_qp2_domain(SchedulePoint { s, lambda }: SchedulePoint) -> bool {
    lambda < 1.0 && s < 1.0 && s >= SchedulePoint::qp2_edge(lambda)
}

/// Free energy `-(1 - s)^2 / (4 s (1 - lambda))` of the QP2 limit on
/// `1/(3 - 2 lambda) <= s < 1`, `lambda < 1`.
pub fn f_qp2(point: SchedulePoint) -> Result<f64> {
    let pt = check_point(point)?;
    if !in_qp2_domain(pt) {
        return Err(Error::Domain {
            what: "QP2 free energy",
            s: pt.s,
            lambda: pt.lambda,
        });
    }
    let SchedulePoint { s, lambda } = pt;
    Ok(-(1.0 - s).powi(2) / (4.0 * s * (1.0 - lambda)))
}

/// QP2 magnetization `(0, (1 - s) / (2 s (1 - lambda)))`.
pub fn qp2_magnetization(point: SchedulePoint) -> Result<Magnetization> {
    let pt = check_point(point)?;
    if !in_qp2_domain(pt) {
        return Err(Error::Domain {
            what: "QP2 magnetization",
            s: pt.s,
            lambda: pt.lambda,
        });
    }
    Ok(Magnetization::new(0.0, (1.0 - pt.s) / (2.0 * pt.s * (1.0 - pt.lambda))))
}

fn analytic(m: Magnetization, free_energy: f64, phase: PhaseLabel) -> SaddleSolution {
    SaddleSolution {
        magnetization: m,
        free_energy,
        phase,
        converged: true,
        iterations: 0,
        residual: 0.0,
    }
}

/// The `(1, 0)` corner: only `V_AFF` remains and no ordered solution
/// exists; it is the `s -> 1` limit of the QP2 branch.
fn degenerate_corner(point: SchedulePoint) -> Option<SaddleSolution> {
    (point.s == 1.0 && point.lambda == 0.0).then(|| analytic(Magnetization::new(0.0, 0.0), 0.0, PhaseLabel::Qp2))
}

/// All candidate solutions at a point: QP and QP2 where their domains
/// apply, plus every stable ferromagnetic solution reached from
/// [`F_SEEDS`] and, at zero temperature, from the minima of the energy on
/// the unit circle.
pub fn candidates(p: u32, point: SchedulePoint, beta: InverseTemperature) -> Result<Vec<SaddleSolution>> {
    candidates_with(p, point, beta, &F_SEEDS)
}

/// [`candidates`] with a caller-chosen ferromagnetic seed set.
pub fn candidates_with(
    p: u32,
    point: SchedulePoint,
    beta: InverseTemperature,
    seeds: &[Magnetization],
) -> Result<Vec<SaddleSolution>> {
    check_order(p)?;
    let point = check_point(point)?;
    let beta = beta.validate()?;
    let mut out = Vec::with_capacity(6);
    match beta {
        InverseTemperature::Infinite => {
            if let Some(corner) = degenerate_corner(point) {
                return Ok(vec![corner]);
            }
            if let Ok(f) = f_qp(point) {
                out.push(analytic(Magnetization::new(0.0, 1.0), f, PhaseLabel::Qp));
            }
            // With lambda = 0 the longitudinal field vanishes identically and
            // no solution with m^z > 0 exists. Otherwise the fixed seeds are
            // joined by the bracketed minima on the circle, since damped
            // steps from a fixed seed can hop over a shallow minimum.
            if point.lambda > 0.0 {
                let bracketed = circle_minima(p, point).into_iter().map(|phi| on_ray(1.0, phi));
                for seed in seeds.iter().copied().chain(bracketed) {
                    let sol = solve_saddle(p, point, beta, seed)?;
                    let stable = circle_curvature(p, point, sol.magnetization) >= -1e-9;
                    if sol.converged && sol.phase.is_ferromagnetic() && stable {
                        out.push(sol);
                    }
                }
            }
            // For lambda > 0 the circle point with the QP2 value of m^x lies
            // below QP2 by s lambda (m^z)^p, which can underflow rounding at
            // large p. An F solution within QP2_TIE of it therefore wins.
            if let (Ok(f), Ok(m)) = (f_qp2(point), qp2_magnetization(point)) {
                let shadowed = out
                    .iter()
                    .any(|c| c.phase.is_ferromagnetic() && c.free_energy <= f + QP2_TIE);
                // At its lower edge the QP2 solution coincides with QP.
                let label = if m.mx >= 1.0 - 1e-12 {
                    PhaseLabel::Qp
                } else {
                    PhaseLabel::Qp2
                };
                if !shadowed {
                    out.push(analytic(m, f, label));
                }
            }
        }
        InverseTemperature::Finite(_) => {
            for seed in std::iter::once(Magnetization::new(0.0, 1.0)).chain(seeds.iter().copied()) {
                let sol = solve_saddle(p, point, beta, seed)?;
                if sol.converged {
                    out.push(sol);
                }
            }
        }
    }
    Ok(out)
}

/// The stable phase: the candidate with the lowest free energy. Earlier
/// candidates win exact ties.
pub fn classify_phase(p: u32, point: SchedulePoint, beta: InverseTemperature) -> Result<SaddleSolution> {
    classify_phase_with(p, point, beta, &F_SEEDS)
}

pub fn classify_phase_with(
    p: u32,
    point: SchedulePoint,
    beta: InverseTemperature,
    seeds: &[Magnetization],
) -> Result<SaddleSolution> {
    candidates_with(p, point, beta, seeds)?
        .into_iter()
        .reduce(|best, c| if c.free_energy < best.free_energy { c } else { best })
        .ok_or(Error::NoConvergedCandidate {
            s: point.s,
            lambda: point.lambda,
        })
}

/// Interaction order `p`, including the `p -> infinity` limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionOrder {
    Finite(u32),
    Infinite,
}

impl InteractionOrder {
    /// Zero-temperature stable phase at `point`.
    pub fn classify(&self, point: SchedulePoint) -> Result<SaddleSolution> {
        match *self {
            Self::Finite(p) => classify_phase(p, point, InverseTemperature::Infinite),
            Self::Infinite => classify_infinite(point),
        }
    }
}

impl fmt::Display for InteractionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for InteractionOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "INFINITE" => Ok(Self::Infinite),
            t => {
                let p: u32 = t
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("cannot parse p from {s:?}")))?;
                if p < 3 {
                    return Err(Error::InvalidOrder { p, min: 3 });
                }
                Ok(Self::Finite(p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: f64, l: f64) -> SchedulePoint {
        SchedulePoint::new(s, l).unwrap()
    }

    const T0: InverseTemperature = InverseTemperature::Infinite;

    #[test]
    fn free_energy_examples() {
        let f = free_energy(3, pt(0.2, 0.1), T0, Magnetization::new(0.0, 1.0));
        assert!((f + 0.62).abs() < 1e-12);
        assert!((f - f_qp(pt(0.2, 0.1)).unwrap()).abs() < 1e-12);
        let f = free_energy(3, pt(1.0, 1.0), T0, Magnetization::new(1.0, 0.0));
        assert!((f + 1.0).abs() < 1e-12);
        for l in [0.0, 0.4, 1.0] {
            let f = free_energy(
                5,
                pt(0.0, l),
                InverseTemperature::Finite(1.0),
                Magnetization::new(0.0, 0.3),
            );
            assert!((f + (2.0 * 1f64.cosh()).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_beta_free_energy_is_stable_for_large_beta() {
        let m = Magnetization::new(0.2, 0.9);
        let f = free_energy(3, pt(0.4, 0.3), InverseTemperature::Finite(1e8), m);
        assert!(f.is_finite());
        assert!((f - free_energy(3, pt(0.4, 0.3), T0, m)).abs() < 1e-7);
    }

    #[test]
    fn qp_free_energy_examples() {
        assert!((f_qp(pt(1.0 / 3.0 - 1e-12, 0.0)).unwrap() + 1.0 / 3.0).abs() < 1e-10);
        assert_eq!(f_qp(pt(0.0, 0.7)).unwrap(), -1.0);
        assert!((f_qp(pt(0.2, 0.5)).unwrap() + 0.7).abs() < 1e-12);
        assert!(f_qp(pt(0.5, 0.0)).is_err());
    }

    #[test]
    fn qp2_examples() {
        assert!((f_qp2(pt(0.5, 0.5)).unwrap() + 0.25).abs() < 1e-12);
        for l in [0.0, 0.3, 0.8] {
            let edge = SchedulePoint::qp2_edge(l);
            let m = qp2_magnetization(pt(edge, l)).unwrap();
            assert!((m.mx - 1.0).abs() < 1e-12 && m.mz == 0.0);
        }
        let m = qp2_magnetization(pt(1.0 / 2.4, 0.3)).unwrap();
        assert!((m.mx - 1.0).abs() < 1e-12);
        assert!(f_qp2(pt(0.3, 0.3)).is_err());
        assert!(f_qp2(pt(1.0, 0.3)).is_err());
        assert!(f_qp2(pt(0.7, 1.0)).is_err());
    }

    #[test]
    fn solve_saddle_examples() {
        let sol = solve_saddle(3, pt(0.2, 0.1), T0, Magnetization::new(0.0, 1.0)).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.phase, PhaseLabel::Qp);
        assert_eq!(sol.magnetization, Magnetization::new(0.0, 1.0));

        let sol = solve_saddle(3, pt(1.0, 1.0), T0, Magnetization::new(0.9, 0.1)).unwrap();
        assert!(sol.converged);
        assert!((sol.magnetization.mz - 1.0).abs() < 1e-12 && sol.magnetization.mx.abs() < 1e-12);
        assert!((sol.free_energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn converged_zero_temperature_solutions_lie_on_circle() {
        for (p, s, l) in [(3, 0.5, 0.5), (5, 0.45, 0.1), (11, 0.45, 0.3), (7, 0.9, 0.6)] {
            for seed in F_SEEDS {
                let sol = solve_saddle(p, pt(s, l), T0, seed).unwrap();
                if sol.converged {
                    let m = sol.magnetization;
                    assert!((m.mz * m.mz + m.mx * m.mx - 1.0).abs() < 1e-8, "{p} {s} {l} {m:?}");
                    assert!(sol.residual < 1e-12);
                }
            }
        }
    }

    #[test]
    fn seeds_and_beta_validated() {
        assert!(solve_saddle(3, pt(0.2, 0.2), T0, Magnetization::new(1.5, 0.0)).is_err());
        assert!(InverseTemperature::finite(0.0).is_err());
        assert!(solve_saddle(
            3,
            pt(0.2, 0.2),
            InverseTemperature::Finite(-1.0),
            Magnetization::new(0.0, 1.0)
        )
        .is_err());
        assert!("inf".parse::<InverseTemperature>().unwrap() == T0);
        assert_eq!(
            "2.5".parse::<InverseTemperature>().unwrap(),
            InverseTemperature::Finite(2.5)
        );
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let settings = SolverSettings {
            max_iterations: 3,
            ..SolverSettings::default()
        };
        let sol = solve_saddle_with(5, pt(0.45, 0.1), T0, Magnetization::new(0.5, 0.5), &settings).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn classify_examples() {
        let sol = classify_phase(5, pt(0.2, 0.1), T0).unwrap();
        assert_eq!(sol.phase, PhaseLabel::Qp);
        let sol = classify_phase(11, pt(0.5, 0.3), T0).unwrap();
        assert!(sol.phase.is_ferromagnetic());
        let sol = classify_phase(5, pt(0.45, 0.1), T0).unwrap();
        assert!(sol.phase.is_ferromagnetic() && sol.magnetization.mz > 0.0);
    }

    #[test]
    fn lambda_zero_line_has_qp_then_qp2() {
        let below = classify_phase(7, pt(0.3, 0.0), T0).unwrap();
        assert_eq!(below.phase, PhaseLabel::Qp);
        let above = classify_phase(7, pt(0.5, 0.0), T0).unwrap();
        assert_eq!(above.phase, PhaseLabel::Qp2);
        assert!((above.free_energy - f_qp2(pt(0.5, 0.0)).unwrap()).abs() < 1e-15);
        let corner = classify_phase(7, pt(1.0, 0.0), T0).unwrap();
        assert_eq!(corner.phase, PhaseLabel::Qp2);
    }

    #[test]
    fn pure_transverse_field_is_qp_at_any_temperature() {
        let sol = classify_phase(3, pt(0.0, 0.5), InverseTemperature::Finite(2.0)).unwrap();
        assert_eq!(sol.phase, PhaseLabel::Qp);
        assert!((sol.magnetization.mx - 2f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn interaction_order_parsing() {
        assert_eq!("inf".parse::<InteractionOrder>().unwrap(), InteractionOrder::Infinite);
        assert_eq!("11".parse::<InteractionOrder>().unwrap(), InteractionOrder::Finite(11));
        assert!("2".parse::<InteractionOrder>().is_err());
        assert!("x".parse::<InteractionOrder>().is_err());
    }
}
