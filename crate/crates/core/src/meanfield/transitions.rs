//! Locating phase transitions along straight lines in the `(s, lambda)`
//! plane.
//!
//! Adjacent grid points are compared; any pair with different labels or a
//! magnetization difference above the threshold is bisected. A bracket that
//! keeps a jump above threshold down to `resolution` is a first-order
//! transition. A label change whose jump shrinks below threshold is second
//! order. Near a continuous onset `m^z` grows like `sqrt(s - s_c)`, so the
//! bracket must be far narrower than the threshold squared before the two
//! cases separate.

use rayon::prelude::*;
use serde::Serialize;

use super::{InteractionOrder, PhaseLabel, SaddleSolution};
use crate::error::{Error, Result};
use crate::schedule::SchedulePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TransitionOrder {
    First,
    Second,
}

impl TransitionOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::First => "first",
            Self::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub s: f64,
    pub lambda: f64,
    /// Magnetization change across the final bracket, right minus left.
    pub delta_mz: f64,
    pub delta_mx: f64,
    pub order: TransitionOrder,
    pub from: PhaseLabel,
    pub to: PhaseLabel,
    /// Width of the final bracket in the line parameter.
    pub bracket: f64,
    /// Set when one grid cell held more than one label change.
    pub coarse_grid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpSettings {
    pub threshold: f64,
    pub resolution: f64,
}

impl Default for JumpSettings {
    fn default() -> Self {
        Self {
            threshold: 1e-3,
            resolution: 1e-10,
        }
    }
}

fn jump(a: &SaddleSolution, b: &SaddleSolution) -> f64 {
    let (ma, mb) = (a.magnetization, b.magnetization);
    (mb.mz - ma.mz).abs().max((mb.mx - ma.mx).abs())
}

fn point_on(start: SchedulePoint, end: SchedulePoint, t: f64) -> SchedulePoint {
    SchedulePoint {
        s: (start.s + t * (end.s - start.s)).clamp(0.0, 1.0),
        lambda: (start.lambda + t * (end.lambda - start.lambda)).clamp(0.0, 1.0),
    }
}

struct Line<'a, F> {
    classify: &'a F,
    start: SchedulePoint,
    end: SchedulePoint,
    settings: JumpSettings,
}

impl<F> Line<'_, F>
where
    F: Fn(SchedulePoint) -> Result<SaddleSolution> + Sync,
{
    fn at(&self, t: f64) -> Result<SaddleSolution> {
        (self.classify)(point_on(self.start, self.end, t))
    }

    fn refine(
        &self,
        (mut ta, mut a): (f64, SaddleSolution),
        (mut tb, mut b): (f64, SaddleSolution),
    ) -> Result<Option<Transition>> {
        let threshold = self.settings.threshold;
        let mut coarse = false;
        loop {
            let delta = jump(&a, &b);
            if a.phase == b.phase && delta < threshold {
                return Ok(None);
            }
            if tb - ta <= self.settings.resolution {
                break;
            }
            let tc = 0.5 * (ta + tb);
            if tc <= ta || tc >= tb {
                break;
            }
            let c = self.at(tc)?;
            let left_change = a.phase != c.phase;
            let right_change = c.phase != b.phase;
            coarse |= left_change && right_change;
            let go_left = match (left_change, right_change) {
                (true, false) => true,
                (false, true) => false,
                _ => jump(&a, &c) >= jump(&c, &b),
            };
            if go_left {
                tb = tc;
                b = c;
            } else {
                ta = tc;
                a = c;
            }
        }
        let delta = jump(&a, &b);
        let tm = 0.5 * (ta + tb);
        let at = point_on(self.start, self.end, tm);
        Ok(Some(Transition {
            s: at.s,
            lambda: at.lambda,
            delta_mz: b.magnetization.mz - a.magnetization.mz,
            delta_mx: b.magnetization.mx - a.magnetization.mx,
            order: if delta >= threshold {
                TransitionOrder::First
            } else {
                TransitionOrder::Second
            },
            from: a.phase,
            to: b.phase,
            bracket: tb - ta,
            coarse_grid: coarse,
        }))
    }
}

/// Transitions on the segment from `start` to `end`, sampled at the line
/// parameters `ts` (strictly increasing in `[0, 1]`). `classify` may be any
/// phase classifier; grid points and edges are processed in parallel.
pub fn detect_along<F>(
    classify: &F,
    start: SchedulePoint,
    end: SchedulePoint,
    ts: &[f64],
    settings: JumpSettings,
) -> Result<Vec<Transition>>
where
    F: Fn(SchedulePoint) -> Result<SaddleSolution> + Sync,
{
    if ts.len() < 2 {
        return Err(Error::InvalidGrid("a line scan needs at least two points".into()));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) || ts[0] < 0.0 || ts[ts.len() - 1] > 1.0 {
        return Err(Error::InvalidGrid(
            "line parameters must be strictly increasing within [0, 1]".into(),
        ));
    }
    let line = Line {
        classify,
        start,
        end,
        settings,
    };
    let sols = ts.par_iter().map(|&t| line.at(t)).collect::<Result<Vec<_>>>()?;
    transitions_between(&line, ts, &sols)
}

fn transitions_between<F>(line: &Line<'_, F>, ts: &[f64], sols: &[SaddleSolution]) -> Result<Vec<Transition>>
where
    F: Fn(SchedulePoint) -> Result<SaddleSolution> + Sync,
{
    let found = (0..ts.len() - 1)
        .into_par_iter()
        .map(|i| line.refine((ts[i], sols[i]), (ts[i + 1], sols[i + 1])))
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Refine a single grid edge between two already classified points of the
/// line from `start` to `end`.
pub(crate) fn refine_edge<F>(
    classify: &F,
    start: SchedulePoint,
    end: SchedulePoint,
    a: (f64, SaddleSolution),
    b: (f64, SaddleSolution),
    settings: JumpSettings,
) -> Result<Option<Transition>>
where
    F: Fn(SchedulePoint) -> Result<SaddleSolution> + Sync,
{
    Line {
        classify,
        start,
        end,
        settings,
    }
    .refine(a, b)
}

/// Transitions along the constant-`lambda` slice sampled at `s_grid`
/// (strictly increasing within `[0, 1)`).
pub fn detect_jump(order: InteractionOrder, lambda: f64, s_grid: &[f64]) -> Result<Vec<Transition>> {
    detect_jump_with(order, lambda, s_grid, JumpSettings::default())
}

pub fn detect_jump_with(
    order: InteractionOrder,
    lambda: f64,
    s_grid: &[f64],
    settings: JumpSettings,
) -> Result<Vec<Transition>> {
    let start = SchedulePoint::new(0.0, lambda)?;
    let end = SchedulePoint::new(1.0, lambda)?;
    if s_grid.last().is_some_and(|&s| s >= 1.0) {
        return Err(Error::InvalidGrid("slice grid must stay below s = 1".into()));
    }
    let classify = |pt: SchedulePoint| order.classify(pt);
    detect_along(&classify, start, end, s_grid, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, hi: f64) -> Vec<f64> {
        (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn lambda_zero_has_single_second_order_point() {
        let ts = grid(100, 0.99);
        for p in [3, 7] {
            let found = detect_jump(InteractionOrder::Finite(p), 0.0, &ts).unwrap();
            assert_eq!(found.len(), 1, "{found:?}");
            assert_eq!(found[0].order, TransitionOrder::Second);
            assert!((found[0].s - 1.0 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn p3_small_jump() {
        let found = detect_jump(InteractionOrder::Finite(3), 0.1, &grid(100, 0.99)).unwrap();
        let first: Vec<_> = found.iter().filter(|t| t.order == TransitionOrder::First).collect();
        assert_eq!(first.len(), 1, "{found:?}");
        assert!((first[0].s - 0.3544).abs() < 1e-3);
    }

    #[test]
    fn infinite_p_slices() {
        let found = detect_jump(InteractionOrder::Infinite, 0.8, &grid(50, 0.98)).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].order, TransitionOrder::First);
        assert!((found[0].s - 0.5).abs() < 1e-9);
    }

    #[test]
    fn grid_validation() {
        let order = InteractionOrder::Finite(5);
        assert!(detect_jump(order, 0.1, &[0.1]).is_err());
        assert!(detect_jump(order, 0.1, &[0.1, 0.1, 0.2]).is_err());
        assert!(detect_jump(order, 0.1, &[0.1, 1.0]).is_err());
    }
}
