//! Control parameters of the annealing Hamiltonian and paths through them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(s, lambda)` of the control-parameter plane.
///
/// `s` interpolates between the transverse-field driver (`s = 0`) and the
/// rest of the Hamiltonian; `lambda` splits the latter between the target
/// ferromagnet and the antiferromagnetic fluctuation term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub s: f64,
    pub lambda: f64,
}

impl SchedulePoint {
    pub fn new(s: f64, lambda: f64) -> Result<Self> {
        check_unit("s", s)?;
        check_unit("lambda", lambda)?;
        Ok(Self { s, lambda })
    }

    /// Lower edge `1/(3 - 2 lambda)` of the QP2 domain; the QP phase is
    /// self-consistent strictly below it.
    pub fn qp2_edge(lambda: f64) -> f64 {
        1.0 / (3.0 - 2.0 * lambda)
    }

    /// `H(s, 0)` is diagonal in the x basis: no annealing dynamics happen on
    /// this line.
    pub fn on_degenerate_line(&self) -> bool {
        self.lambda == 0.0
    }

    fn lerp(a: Self, b: Self, t: f64) -> Self {
        Self {
            s: a.s + (b.s - a.s) * t,
            lambda: a.lambda + (b.lambda - a.lambda) * t,
        }
    }

    fn distance(a: Self, b: Self) -> f64 {
        (b.s - a.s).hypot(b.lambda - a.lambda)
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfUnitInterval { name, value })
    }
}

/// A polyline through the unit square, traversed at uniform arc-length speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePath {
    points: Vec<SchedulePoint>,
}

impl SchedulePath {
    pub fn new(points: Vec<SchedulePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidPath("path has no points".into()));
        }
        for p in &points {
            check_unit("s", p.s)?;
            check_unit("lambda", p.lambda)?;
        }
        Ok(Self { points })
    }

    /// A path that stays at one point for its whole duration.
    pub fn frozen(point: SchedulePoint) -> Self {
        Self { points: vec![point] }
    }

    pub fn points(&self) -> &[SchedulePoint] {
        &self.points
    }

    pub fn start(&self) -> SchedulePoint {
        self.points[0]
    }

    pub fn end(&self) -> SchedulePoint {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| SchedulePoint::distance(w[0], w[1]))
            .sum()
    }

    /// Point reached after the fraction `u` of the total arc length.
    pub fn at(&self, u: f64) -> SchedulePoint {
        let u = u.clamp(0.0, 1.0);
        let total = self.length();
        if total == 0.0 {
            return self.points[0];
        }
        if u == 1.0 {
            return self.end();
        }
        let mut remaining = u * total;
        for w in self.points.windows(2) {
            let len = SchedulePoint::distance(w[0], w[1]);
            if remaining <= len && len > 0.0 {
                return SchedulePoint::lerp(w[0], w[1], remaining / len);
            }
            remaining -= len;
        }
        self.end()
    }

    pub fn segments(&self) -> impl Iterator<Item = (SchedulePoint, SchedulePoint)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn is_monotone_in_s(&self) -> bool {
        self.points.windows(2).all(|w| w[1].s >= w[0].s)
    }

    pub fn is_monotone_in_lambda(&self) -> bool {
        self.points.windows(2).all(|w| w[1].lambda >= w[0].lambda)
    }
}

/// An annealing path: starts on the `s = 0` line and ends at `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealPath {
    path: SchedulePath,
}

impl AnnealPath {
    pub fn new(points: Vec<SchedulePoint>) -> Result<Self> {
        let path = SchedulePath::new(points)?;
        if path.start().s != 0.0 {
            return Err(Error::InvalidPath(format!(
                "annealing path must start at s = 0, got s = {}",
                path.start().s
            )));
        }
        let end = path.end();
        if end.s != 1.0 || end.lambda != 1.0 {
            return Err(Error::InvalidPath(format!(
                "annealing path must end at (1, 1), got ({}, {})",
                end.s, end.lambda
            )));
        }
        Ok(Self { path })
    }

    /// Constant-`lambda` sweep of `s` up to `s_turn`, then a straight leg to
    /// `(1, 1)`.
    pub fn constant_lambda(lambda: f64, s_turn: f64) -> Result<Self> {
        let mut points = vec![SchedulePoint::new(0.0, lambda)?];
        if s_turn > 0.0 {
            points.push(SchedulePoint::new(s_turn, lambda)?);
        }
        if s_turn < 1.0 || lambda < 1.0 {
            points.push(SchedulePoint::new(1.0, 1.0)?);
        }
        Self::new(points)
    }

    pub fn as_path(&self) -> &SchedulePath {
        &self.path
    }

    pub fn into_path(self) -> SchedulePath {
        self.path
    }
}

impl std::ops::Deref for AnnealPath {
    type Target = SchedulePath;

    fn deref(&self) -> &SchedulePath {
        &self.path
    }
}
