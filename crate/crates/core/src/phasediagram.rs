//! Zero-temperature phase diagrams on the `(s, lambda)` plane, their
//! boundaries, and checks of annealing paths against them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::{
    refine_edge, InteractionOrder, JumpSettings, PhaseLabel, SaddleSolution, Transition, TransitionOrder,
};
use crate::schedule::{SchedulePath, SchedulePoint};

/// Rectangular grid over the control plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            s_min: 0.0,
            s_max: 1.0,
            s_points: 201,
            lambda_min: 0.0,
            lambda_max: 1.0,
            lambda_points: 201,
        }
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl GridSpec {
    pub fn square(points: usize) -> Result<Self> {
        Self {
            s_points: points,
            lambda_points: points,
            ..Self::default()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        for (name, lo, hi, n) in [
            ("s", self.s_min, self.s_max, self.s_points),
            ("lambda", self.lambda_min, self.lambda_max, self.lambda_points),
        ] {
            SchedulePoint::new(lo, lo)?;
            SchedulePoint::new(hi, hi)?;
            if !(hi > lo) {
                return Err(Error::InvalidGrid(format!("{name} range [{lo}, {hi}] is empty")));
            }
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "{name} axis needs at least 3 points (2 cells), got {n}"
                )));
            }
        }
        Ok(self)
    }

    pub fn s_values(&self) -> Vec<f64> {
        axis(self.s_min, self.s_max, self.s_points)
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        axis(self.lambda_min, self.lambda_max, self.lambda_points)
    }

    pub fn s_step(&self) -> f64 {
        (self.s_max - self.s_min) / (self.s_points - 1) as f64
    }

    pub fn lambda_step(&self) -> f64 {
        (self.lambda_max - self.lambda_min) / (self.lambda_points - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub s: f64,
    pub lambda: f64,
    /// `None` when no candidate converged at this point.
    pub solution: Option<SaddleSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BoundaryKind {
    QpFSecondOrder,
    QpFFirstOrder,
    FFFirstOrder,
    /// The `lambda = 0` contact between QP and QP2.
    QpQp2SecondOrder,
}

impl BoundaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::QpFSecondOrder => "QP-F second order",
            Self::QpFFirstOrder => "QP-F first order",
            Self::FFFirstOrder => "F-F first order",
            Self::QpQp2SecondOrder => "QP-QP2 second order",
        }
    }

    pub fn is_first_order(&self) -> bool {
        matches!(self, Self::QpFFirstOrder | Self::FFFirstOrder)
    }

    fn of(t: &Transition) -> Option<Self> {
        let first = t.order == TransitionOrder::First;
        match (t.from.is_ferromagnetic(), t.to.is_ferromagnetic()) {
            (true, true) => first.then_some(Self::FFFirstOrder),
            (false, false) => Some(Self::QpQp2SecondOrder),
            _ if first => Some(Self::QpFFirstOrder),
            _ => Some(Self::QpFSecondOrder),
        }
    }
}

/// Direction of the grid edge a boundary point was found on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeAxis {
    S,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub s: f64,
    pub lambda: f64,
    pub kind: BoundaryKind,
    pub axis: EdgeAxis,
    pub delta_mz: f64,
    pub delta_mx: f64,
    pub from: PhaseLabel,
    pub to: PhaseLabel,
    pub coarse_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boundary {
    pub kind: BoundaryKind,
    /// `(s, lambda)` vertices.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub order: InteractionOrder,
    pub grid: GridSpec,
    /// Row-major: `lambda` outer, `s` inner.
    pub cells: Vec<Cell>,
    pub points: Vec<BoundaryPoint>,
    pub boundaries: Vec<Boundary>,
}

impl PhaseDiagram {
    pub fn cell(&self, i_s: usize, i_lambda: usize) -> &Cell {
        &self.cells[i_lambda * self.grid.s_points + i_s]
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.solution.is_none()).count()
    }

    /// Largest grid `lambda > 0` such that no row at or below it (other
    /// than `lambda = 0`) contains a first-order boundary point. `None` when
    /// the lowest such row already has one.
    pub fn lambda_star(&self) -> Option<f64> {
        let mut best = None;
        for lambda in self.grid.lambda_values().into_iter().filter(|&l| l > 0.0) {
            let first_order = self
                .points
                .iter()
                .any(|p| p.axis == EdgeAxis::S && p.lambda == lambda && p.kind.is_first_order());
            if first_order {
                break;
            }
            best = Some(lambda);
        }
        best
    }
}

struct Edge {
    axis: EdgeAxis,
    start: SchedulePoint,
    end: SchedulePoint,
    a: (f64, SaddleSolution),
    b: (f64, SaddleSolution),
}

/// Classify every grid point and locate boundaries on all grid edges. Edges
/// along `lambda` that touch `lambda = 0` are skipped: that line carries no
/// quantum fluctuations and its QP2 assignment is not the limit of the
/// `lambda > 0` phases.
pub fn scan(order: InteractionOrder, grid: GridSpec) -> Result<PhaseDiagram> {
    scan_with(order, grid, JumpSettings::default())
}

pub fn scan_with(order: InteractionOrder, grid: GridSpec, settings: JumpSettings) -> Result<PhaseDiagram> {
    let grid = grid.validated()?;
    let ss = grid.s_values();
    let ls = grid.lambda_values();
    let ns = ss.len();
    let coords: Vec<(f64, f64)> = ls.iter().flat_map(|&l| ss.iter().map(move |&s| (s, l))).collect();
    let cells = coords
        .par_iter()
        .map(|&(s, lambda)| match order.classify(SchedulePoint::new(s, lambda)?) {
            Ok(sol) => Ok(Cell {
                s,
                lambda,
                solution: Some(sol),
            }),
            Err(Error::NoConvergedCandidate { .. }) => Ok(Cell {
                s,
                lambda,
                solution: None,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut edges = Vec::new();
    for (j, &l) in ls.iter().enumerate() {
        for i in 0..ns {
            let here = &cells[j * ns + i];
            let Some(a) = here.solution else { continue };
            if i + 1 < ns {
                if let Some(b) = cells[j * ns + i + 1].solution {
                    edges.push(Edge {
                        axis: EdgeAxis::S,
                        start: SchedulePoint { s: 0.0, lambda: l },
                        end: SchedulePoint { s: 1.0, lambda: l },
                        a: (ss[i], a),
                        b: (ss[i + 1], b),
                    });
                }
            }
            if j + 1 < ls.len() && l > 0.0 {
                if let Some(b) = cells[(j + 1) * ns + i].solution {
                    edges.push(Edge {
                        axis: EdgeAxis::Lambda,
                        start: SchedulePoint { s: ss[i], lambda: 0.0 },
                        end: SchedulePoint { s: ss[i], lambda: 1.0 },
                        a: (l, a),
                        b: (ls[j + 1], b),
                    });
                }
            }
        }
    }
    let classify = |pt: SchedulePoint| order.classify(pt);
    let found = edges
        .par_iter()
        .map(|e| {
            refine_edge(&classify, e.start, e.end, e.a, e.b, settings).map(|t| {
                t.and_then(|t| {
                    BoundaryKind::of(&t).map(|kind| BoundaryPoint {
                        s: t.s,
                        lambda: t.lambda,
                        kind,
                        axis: e.axis,
                        delta_mz: t.delta_mz,
                        delta_mx: t.delta_mx,
                        from: t.from,
                        to: t.to,
                        coarse_grid: t.coarse_grid,
                    })
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<BoundaryPoint> = found.into_iter().flatten().collect();
    let link = 2.5 * grid.s_step().hypot(grid.lambda_step());
    let boundaries = chain_boundaries(&points, link);
    Ok(PhaseDiagram {
        order,
        grid,
        cells,
        points,
        boundaries,
    })
}

/// Greedy nearest-neighbour chaining of boundary points of each kind into
/// polylines; a gap wider than `link` starts a new polyline.
fn chain_boundaries(points: &[BoundaryPoint], link: f64) -> Vec<Boundary> {
    let mut kinds: Vec<BoundaryKind> = points.iter().map(|p| p.kind).collect();
    kinds.sort();
    kinds.dedup();
    let mut out = Vec::new();
    for kind in kinds {
        let mut rest: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.kind == kind)
            .map(|p| (p.s, p.lambda))
            .collect();
        rest.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        while !rest.is_empty() {
            let mut line = vec![rest.remove(0)];
            loop {
                let tail = *line.last().unwrap_or(&line[0]);
                let nearest = rest
                    .iter()
                    .enumerate()
                    .map(|(k, q)| (k, (q.0 - tail.0).hypot(q.1 - tail.1)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match nearest {
                    Some((k, d)) if d <= link => line.push(rest.remove(k)),
                    _ => break,
                }
            }
            out.push(Boundary { kind, points: line });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub s: f64,
    pub lambda: f64,
    pub kind: BoundaryKind,
    /// Arc-length fraction along the path.
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathCheck {
    /// No first-order boundary is crossed.
    pub safe: bool,
    pub crossings: Vec<Crossing>,
    /// Some segment of the path runs along `lambda = 0`.
    pub on_degenerate_line: bool,
}

fn seg_intersection(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64)) -> Option<(f64, (f64, f64))> {
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let d = (q1.0 - q0.0, q1.1 - q0.1);
    let denom = r.0 * d.1 - r.1 * d.0;
    if denom == 0.0 {
        return None;
    }
    let w = (q0.0 - p0.0, q0.1 - p0.1);
    let t = (w.0 * d.1 - w.1 * d.0) / denom;
    let u = (w.0 * r.1 - w.1 * r.0) / denom;
    let eps = 1e-12;
    ((-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u)).then_some((t, (p0.0 + t * r.0, p0.1 + t * r.1)))
}

fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let ab = (b.0 - a.0, b.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / len2).clamp(0.0, 1.0)
    };
    let c = (a.0 + t * ab.0, a.1 + t * ab.1);
    (t, (p.0 - c.0).hypot(p.1 - c.1))
}

/// Boundaries crossed by `path`. Polyline segments that intersect the path
/// count, as do boundary points within half a grid cell of it, which
/// catches isolated points and boundaries met at a grid row. Crossings of
/// one kind closer than a grid cell along the path are merged.
pub fn path_is_safe(diagram: &PhaseDiagram, path: &SchedulePath) -> PathCheck {
    let cell = diagram.grid.s_step().hypot(diagram.grid.lambda_step());
    let pts: Vec<(f64, f64)> = path.points().iter().map(|p| (p.s, p.lambda)).collect();
    let total = path.length();
    let mut offsets = vec![0.0];
    for w in pts.windows(2) {
        let last = *offsets.last().unwrap_or(&0.0);
        offsets.push(last + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
    }
    let frac = |k: usize, t: f64| {
        if total == 0.0 {
            0.0
        } else {
            let len = offsets[k + 1] - offsets[k];
            (offsets[k] + t * len) / total
        }
    };

    let mut raw = Vec::new();
    for (k, w) in pts.windows(2).enumerate() {
        for b in &diagram.boundaries {
            for q in b.points.windows(2) {
                if let Some((t, (s, lambda))) = seg_intersection(w[0], w[1], q[0], q[1]) {
                    raw.push(Crossing {
                        s,
                        lambda,
                        kind: b.kind,
                        u: frac(k, t),
                    });
                }
            }
        }
        for bp in &diagram.points {
            let (t, dist) = point_segment((bp.s, bp.lambda), w[0], w[1]);
            if dist <= 0.5 * cell {
                raw.push(Crossing {
                    s: bp.s,
                    lambda: bp.lambda,
                    kind: bp.kind,
                    u: frac(k, t),
                });
            }
        }
    }
    raw.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.kind.cmp(&b.kind)));
    let merge = if total > 0.0 { cell / total } else { 0.0 };
    let mut crossings: Vec<Crossing> = Vec::new();
    for c in raw {
        let dup = crossings
            .iter()
            .rev()
            .take_while(|x| c.u - x.u <= merge)
            .any(|x| x.kind == c.kind);
        if !dup {
            crossings.push(c);
        }
    }
    let on_degenerate_line = path.segments().any(|(a, b)| a.lambda == 0.0 && b.lambda == 0.0)
        || (path.points().len() == 1 && path.start().lambda == 0.0);
    PathCheck {
        safe: !crossings.iter().any(|c| c.kind.is_first_order()),
        crossings,
        on_degenerate_line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::pinf_ff_boundary;
    use crate::schedule::AnnealPath;

    fn small() -> GridSpec {
        GridSpec::square(41).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::square(2).is_err());
        let g = GridSpec {
            s_min: 0.5,
            s_max: 0.4,
            ..GridSpec::default()
        };
        assert!(g.validated().is_err());
        let v = GridSpec::square(5).unwrap().s_values();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn infinite_p_boundaries_follow_closed_forms() {
        let d = scan(InteractionOrder::Infinite, small()).unwrap();
        assert_eq!(d.failed_cells(), 0);
        for p in d.points.iter().filter(|p| p.axis == EdgeAxis::S && p.lambda > 0.0) {
            let expected = match p.kind {
                BoundaryKind::QpFSecondOrder => 1.0 / (3.0 - 2.0 * p.lambda),
                BoundaryKind::QpFFirstOrder => 0.5,
                BoundaryKind::FFFirstOrder => pinf_ff_boundary(p.lambda),
                BoundaryKind::QpQp2SecondOrder => unreachable!(),
            };
            assert!((p.s - expected).abs() < 1e-4, "{p:?}");
        }
        let path = AnnealPath::constant_lambda(0.1, 0.99).unwrap();
        assert!(!path_is_safe(&d, &path).safe);
    }

    #[test]
    fn lambda_zero_row_has_single_contact() {
        let d = scan(InteractionOrder::Finite(5), small()).unwrap();
        let row: Vec<_> = d.points.iter().filter(|p| p.lambda == 0.0).collect();
        assert_eq!(row.len(), 1, "{row:?}");
        assert_eq!(row[0].kind, BoundaryKind::QpQp2SecondOrder);
        assert!((row[0].s - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_line_flag() {
        let d = scan(InteractionOrder::Infinite, GridSpec::square(11).unwrap()).unwrap();
        let p = |s, l| SchedulePoint::new(s, l).unwrap();
        let along = SchedulePath::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]).unwrap();
        assert!(path_is_safe(&d, &along).on_degenerate_line);
        let off = AnnealPath::constant_lambda(0.2, 0.9).unwrap();
        assert!(!path_is_safe(&d, &off).on_degenerate_line);
    }

    #[test]
    fn segment_geometry() {
        let hit = seg_intersection((0.0, 0.0), (1.0, 0.0), (0.5, -1.0), (0.5, 1.0)).unwrap();
        assert!((hit.0 - 0.5).abs() < 1e-15);
        assert!(seg_intersection((0.0, 0.0), (1.0, 0.0), (0.5, 0.1), (0.5, 1.0)).is_none());
        let (t, d) = point_segment((0.5, 0.2), (0.0, 0.0), (1.0, 0.0));
        assert!((t - 0.5).abs() < 1e-15 && (d - 0.2).abs() < 1e-15);
    }
}
