use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use pspin_core::anneal::{evolve_with, AnnealRun, EvolveOptions};
use pspin_core::meanfield::{
    classify_infinite, classify_phase_with, detect_along, InteractionOrder, InverseTemperature, JumpSettings,
    Magnetization, Transition, F_SEEDS,
};
use pspin_core::phasediagram::{scan, GridSpec, PhaseDiagram};
use pspin_core::spectrum::{
    adaptive_gap_curve, find_local_minima, gap_curve, scaling_fit, select_minima, small_gap_window, uniform_grid,
    FitModel, GapCurve, GapMinimum, MinimumSelection,
};
use pspin_core::{AnnealPath, ModelParams, SchedulePath, SchedulePoint, SectorBasis, SectorHamiltonian};

use crate::config::{parse_pairs, parse_seeds, parse_sizes};
use crate::output::{num, resolve, sibling, write_json, write_table, Format, Header, Table};
use crate::{AnnealArgs, DiagramArgs, Failure, GapArgs, MatrixArgs, ModelChoice, OutputArgs, ScalingArgs, SliceArgs};

fn primary(dir: &Path, out: &OutputArgs, name: &str, format: Format) -> PathBuf {
    let default = PathBuf::from(format!("{name}.{}", format.extension()));
    resolve(dir, out.output.as_ref().unwrap_or(&default))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
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

fn unit(name: &str, x: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Failure::config(format!("--{name} = {x} lies outside [0, 1]")))
    }
}

fn model_params(p: u32, spins: usize) -> Result<ModelParams, Failure> {
    let params = ModelParams::new(p, spins)?;
    if params.even_order_warning() {
        eprintln!("warning: p = {p} is even; the mean-field analysis assumes odd p");
    }
    Ok(params)
}

fn transitions_table(found: &[Transition]) -> Table {
    let mut t = Table::new(&[
        "s",
        "lambda",
        "order",
        "from",
        "to",
        "delta_mz",
        "delta_mx",
        "bracket",
        "coarse_grid",
    ]);
    for x in found {
        t.push(vec![
            num(x.s),
            num(x.lambda),
            json!(x.order.as_str()),
            json!(x.from.as_str()),
            json!(x.to.as_str()),
            num(x.delta_mz),
            num(x.delta_mx),
            num(x.bracket),
            json!(x.coarse_grid),
        ]);
    }
    t
}

pub fn slice(dir: &Path, a: SliceArgs) -> Result<(), Failure> {
    let lambda = unit("lambda", a.lambda)?;
    unit("s-min", a.s_min)?;
    if !(a.s_max < 1.0 && a.s_max > a.s_min) {
        return Err(Failure::config("the slice needs s-min < s-max < 1"));
    }
    if a.s_points < 2 {
        return Err(Failure::config("--s-points must be at least 2"));
    }
    if !(a.jump_threshold > 0.0) {
        return Err(Failure::config("--jump-threshold must be positive"));
    }
    let seeds: Vec<Magnetization> = match &a.seeds {
        Some(text) => parse_seeds(text).map_err(Failure::config)?,
        None => F_SEEDS.to_vec(),
    };
    if a.p == InteractionOrder::Infinite && a.beta != InverseTemperature::Infinite {
        return Err(Failure::config("p = inf is available at zero temperature only"));
    }
    let (order, beta) = (a.p, a.beta);
    let classify = |pt: SchedulePoint| match order {
        InteractionOrder::Finite(p) => classify_phase_with(p, pt, beta, &seeds),
        InteractionOrder::Infinite => classify_infinite(pt),
    };
    let ss = linspace(a.s_min, a.s_max, a.s_points);
    let sols = ss
        .par_iter()
        .map(|&s| classify(SchedulePoint::new(s, lambda)?))
        .collect::<pspin_core::Result<Vec<_>>>()?;
    let settings = JumpSettings {
        threshold: a.jump_threshold,
        ..JumpSettings::default()
    };
    let found = detect_along(
        &classify,
        SchedulePoint::new(0.0, lambda)?,
        SchedulePoint::new(1.0, lambda)?,
        &ss,
        settings,
    )?;

    let mut header = Header::new("slice");
    header
        .set("p", order)
        .set("lambda", lambda)
        .set("s-min", a.s_min)
        .set("s-max", a.s_max)
        .set("s-points", a.s_points)
        .set("beta", beta)
        .set("jump-threshold", a.jump_threshold)
        .set(
            "seeds",
            seeds
                .iter()
                .map(|m| format!("{},{}", m.mz, m.mx))
                .collect::<Vec<_>>()
                .join(";"),
        );
    let mut points = Table::new(&["s", "mz", "mx", "f", "phase"]);
    for (s, sol) in ss.iter().zip(&sols) {
        points.push(vec![
            num(*s),
            num(sol.magnetization.mz),
            num(sol.magnetization.mx),
            num(sol.free_energy),
            json!(sol.phase.as_str()),
        ]);
    }
    let transitions = transitions_table(&found);
    let format = a.out.format.unwrap_or(Format::Csv);
    let path = primary(dir, &a.out, "slice", format);
    match format {
        Format::Csv => {
            write_table(&path, &header, "points", &points, format)?;
            let tpath = sibling(&path, "transitions", "csv");
            write_table(&tpath, &header, "transitions", &transitions, format)?;
            println!("wrote {} and {}", path.display(), tpath.display());
        }
        Format::Json => {
            write_json(
                &path,
                &header,
                vec![("points", points.to_json()), ("transitions", transitions.to_json())],
            )?;
            println!("wrote {}", path.display());
        }
    }
    for t in &found {
        println!(
            "{} order {} -> {} at s = {:.6} (jump mz {:.4}, mx {:.4})",
            t.order.as_str(),
            t.from,
            t.to,
            t.s,
            t.delta_mz,
            t.delta_mx
        );
    }
    Ok(())
}

fn diagram_json(d: &PhaseDiagram) -> Vec<(&'static str, Value)> {
    let points: Vec<Value> = d
        .points
        .iter()
        .map(|p| {
            json!({
                "s": num(p.s),
                "lambda": num(p.lambda),
                "kind": p.kind.as_str(),
                "first_order": p.kind.is_first_order(),
                "edge": match p.axis {
                    pspin_core::phasediagram::EdgeAxis::S => "s",
                    pspin_core::phasediagram::EdgeAxis::Lambda => "lambda",
                },
                "delta_mz": num(p.delta_mz),
                "delta_mx": num(p.delta_mx),
                "from": p.from.as_str(),
                "to": p.to.as_str(),
                "coarse_grid": p.coarse_grid,
            })
        })
        .collect();
    let lines: Vec<Value> = d
        .boundaries
        .iter()
        .map(|b| {
            json!({
                "kind": b.kind.as_str(),
                "first_order": b.kind.is_first_order(),
                "points": b.points.iter().map(|&(s, l)| json!([num(s), num(l)])).collect::<Vec<_>>(),
            })
        })
        .collect();
    vec![
        ("p", json!(d.order.to_string())),
        ("lambda_star", d.lambda_star().map_or(Value::Null, num)),
        ("failed_cells", json!(d.failed_cells())),
        ("boundaries", Value::Array(lines)),
        ("points", Value::Array(points)),
    ]
}

pub fn phase_diagram(dir: &Path, a: DiagramArgs) -> Result<(), Failure> {
    let grid = GridSpec {
        s_min: a.s_min,
        s_max: a.s_max,
        s_points: a.s_points.unwrap_or(a.resolution),
        lambda_min: a.lambda_min,
        lambda_max: a.lambda_max,
        lambda_points: a.lambda_points.unwrap_or(a.resolution),
    }
    .validated()?;
    let d = scan(a.p, grid)?;

    let mut header = Header::new("phase-diagram");
    header
        .set("p", a.p)
        .set("s-min", grid.s_min)
        .set("s-max", grid.s_max)
        .set("s-points", grid.s_points)
        .set("lambda-min", grid.lambda_min)
        .set("lambda-max", grid.lambda_max)
        .set("lambda-points", grid.lambda_points);
    let mut cells = Table::new(&["s", "lambda", "phase", "mz", "mx", "f"]);
    for c in &d.cells {
        let row = match c.solution {
            Some(sol) => vec![
                num(c.s),
                num(c.lambda),
                json!(sol.phase.as_str()),
                num(sol.magnetization.mz),
                num(sol.magnetization.mx),
                num(sol.free_energy),
            ],
            None => vec![
                num(c.s),
                num(c.lambda),
                json!("none"),
                Value::Null,
                Value::Null,
                Value::Null,
            ],
        };
        cells.push(row);
    }
    let format = a.out.format.unwrap_or(Format::Csv);
    let path = primary(dir, &a.out, "phase-diagram", format);
    write_table(&path, &header, "cells", &cells, format)?;
    let bpath = a
        .boundaries
        .as_ref()
        .map_or_else(|| sibling(&path, "boundaries", "json"), |b| resolve(dir, b));
    write_json(&bpath, &header, diagram_json(&d))?;
    println!("wrote {} and {}", path.display(), bpath.display());

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &d.points {
        *counts.entry(p.kind.as_str()).or_default() += 1;
    }
    for (kind, n) in counts {
        println!("{kind}: {n} boundary points");
    }
    match d.lambda_star() {
        Some(l) => println!("first-order-free constant-lambda slices up to lambda = {l}"),
        None => println!("no first-order-free constant-lambda slice on this grid"),
    }
    if d.failed_cells() > 0 {
        return Err(Failure::numerical(format!(
            "{} grid points had no converged solution",
            d.failed_cells()
        )));
    }
    Ok(())
}

fn curve_for(p: u32, spins: usize, lambda: f64, s_points: usize, refine: bool) -> Result<GapCurve, Failure> {
    if s_points < 3 {
        return Err(Failure::config("--s-points must be at least 3"));
    }
    let base = uniform_grid(s_points);
    let curve = if refine {
        adaptive_gap_curve(p, spins, lambda, &base)?
    } else {
        gap_curve(p, spins, lambda, &base)?
    };
    for s in curve.review_flags() {
        eprintln!("review: near-degenerate levels at s = {s} (N = {spins})");
    }
    Ok(curve)
}

fn minima_table(rows: &[(GapMinimum, bool)]) -> Table {
    let mut t = Table::new(&["N", "index", "s_star", "delta", "selected"]);
    for (m, selected) in rows {
        t.push(vec![
            json!(m.spins),
            json!(m.index),
            num(m.s_star),
            num(m.delta),
            json!(selected),
        ]);
    }
    t
}

pub fn gap(dir: &Path, a: GapArgs) -> Result<(), Failure> {
    model_params(a.p, a.spins)?;
    let lambda = unit("lambda", a.lambda)?;
    if !(a.refine_tol > 0.0) {
        return Err(Failure::config("--refine-tol must be positive"));
    }
    let curve = curve_for(a.p, a.spins, lambda, a.s_points, !a.no_refine)?;
    let minima = find_local_minima(&curve, a.refine_tol)?;
    let window = small_gap_window(&minima, a.window_threshold);

    let mut header = Header::new("gap");
    header
        .set("p", a.p)
        .set("N", a.spins)
        .set("lambda", lambda)
        .set("s-points", a.s_points)
        .set("refine", !a.no_refine)
        .set("refine-tol", a.refine_tol)
        .set("window-threshold", a.window_threshold);
    let mut samples = Table::new(&["s", "e0", "e1", "delta"]);
    for x in &curve.samples {
        samples.push(vec![num(x.s), num(x.e0), num(x.e1), num(x.delta)]);
    }
    let rows: Vec<(GapMinimum, bool)> = minima.iter().map(|&m| (m, false)).collect();
    let mins = minima_table(&rows);
    let format = a.out.format.unwrap_or(Format::Csv);
    let path = primary(dir, &a.out, "gap", format);
    match format {
        Format::Csv => {
            write_table(&path, &header, "curve", &samples, format)?;
            let mpath = sibling(&path, "minima", "csv");
            write_table(&mpath, &header, "minima", &mins, format)?;
            println!("wrote {} and {}", path.display(), mpath.display());
        }
        Format::Json => {
            let w = window.map_or(Value::Null, |(l, r)| json!([num(l), num(r)]));
            write_json(
                &path,
                &header,
                vec![("curve", samples.to_json()), ("minima", mins.to_json()), ("window", w)],
            )?;
            println!("wrote {}", path.display());
        }
    }
    println!("{} samples, {} local minima", curve.samples.len(), minima.len());
    if let Some(m) = minima.iter().min_by(|x, y| x.delta.total_cmp(&y.delta)) {
        println!("global minimum: delta = {:e} at s = {:.6}", m.delta, m.s_star);
    }
    match window {
        Some((l, r)) => println!("small-gap window: s = {l:.4} to {r:.4}"),
        None => println!("no minimum below {}", a.window_threshold),
    }
    Ok(())
}

fn parse_selection(text: &str) -> Result<MinimumSelection, Failure> {
    match text.trim() {
        "global" => Ok(MinimumSelection::Global),
        "rightmost" => Ok(MinimumSelection::Rightmost),
        t => t
            .parse::<usize>()
            .map(MinimumSelection::Ordinal)
            .map_err(|_| Failure::config(format!("--minimum must be global, rightmost or an ordinal, got {t:?}"))),
    }
}

pub fn scaling(dir: &Path, a: ScalingArgs) -> Result<(), Failure> {
    let sizes = parse_sizes(&a.sizes).map_err(Failure::config)?;
    for &n in &sizes {
        model_params(a.p, n)?;
    }
    let lambda = unit("lambda", a.lambda)?;
    let selection = parse_selection(&a.minimum)?;
    let models: &[FitModel] = match a.model {
        ModelChoice::Power => &[FitModel::Power],
        ModelChoice::Exponential => &[FitModel::Exponential],
        ModelChoice::Both => &[FitModel::Power, FitModel::Exponential],
    };
    let mut distinct = sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(pspin_core::Error::TooFewSizes {
            needed: 4,
            got: distinct.len(),
        }
        .into());
    }
    let mut per_size = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let curve = curve_for(a.p, n, lambda, a.s_points, true)?;
        per_size.push(find_local_minima(&curve, a.refine_tol)?);
    }
    let picked = select_minima(&per_size, selection);
    let fits = models
        .iter()
        .map(|&m| scaling_fit(&picked, m))
        .collect::<pspin_core::Result<Vec<_>>>()?;

    let mut header = Header::new("scaling");
    header
        .set("p", a.p)
        .set("lambda", lambda)
        .set("N", &a.sizes)
        .set("minimum", &a.minimum)
        .set("s-points", a.s_points)
        .set("refine-tol", a.refine_tol);
    let rows: Vec<(GapMinimum, bool)> = per_size
        .iter()
        .flatten()
        .map(|m| (*m, picked.iter().any(|q| q == m)))
        .collect();
    let mins = minima_table(&rows);
    let mut fit_table = Table::new(&["model", "a", "rate", "r_squared", "sizes"]);
    for f in &fits {
        fit_table.push(vec![
            json!(f.model.as_str()),
            num(f.a),
            num(f.rate),
            num(f.r_squared),
            json!(f.sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")),
        ]);
    }
    let format = a.out.format.unwrap_or(Format::Csv);
    let path = primary(dir, &a.out, "scaling", format);
    match format {
        Format::Csv => {
            write_table(&path, &header, "fits", &fit_table, format)?;
            let mpath = sibling(&path, "minima", "csv");
            write_table(&mpath, &header, "minima", &mins, format)?;
            println!("wrote {} and {}", path.display(), mpath.display());
        }
        Format::Json => {
            write_json(
                &path,
                &header,
                vec![("fits", fit_table.to_json()), ("minima", mins.to_json())],
            )?;
            println!("wrote {}", path.display());
        }
    }
    for f in &fits {
        println!(
            "{}: a = {:.6e}, rate = {:.6}, rSquared = {:.6}",
            f.model.as_str(),
            f.a,
            f.rate,
            f.r_squared
        );
    }
    Ok(())
}

fn anneal_path(lambda: Option<f64>, s_turn: f64, vertices: Option<&str>) -> Result<SchedulePath, Failure> {
    let path = match (lambda, vertices) {
        (Some(l), None) => AnnealPath::constant_lambda(l, s_turn)?,
        (None, Some(text)) => {
            let points = parse_pairs(text)
                .map_err(Failure::config)?
                .into_iter()
                .map(|(s, l)| SchedulePoint::new(s, l))
                .collect::<pspin_core::Result<Vec<_>>>()?;
            AnnealPath::new(points)?
        }
        _ => return Err(Failure::config("give exactly one of --lambda or --path")),
    };
    if path
        .segments()
        .any(|(x, y)| x.on_degenerate_line() && y.on_degenerate_line())
    {
        eprintln!("warning: the path runs along lambda = 0");
    }
    Ok(path.into_path())
}

fn run_record(label: &str, r: &AnnealRun) -> Value {
    json!({
        "label": label,
        "p": r.p,
        "N": r.spins,
        "path": r.path.points().iter().map(|pt| json!([num(pt.s), num(pt.lambda)])).collect::<Vec<_>>(),
        "tau": num(r.tau),
        "dt": num(r.dt),
        "steps": r.steps,
        "fidelity": num(r.fidelity),
        "residual_energy": num(r.residual_energy),
        "norm_drift": num(r.norm_drift),
        "rejected_steps": r.rejected_steps,
    })
}

pub fn anneal(dir: &Path, a: AnnealArgs) -> Result<(), Failure> {
    model_params(a.p, a.spins)?;
    if !(a.tau.is_finite() && a.tau >= 0.0) {
        return Err(Failure::config("--tau must be finite and non-negative"));
    }
    let main = anneal_path(a.lambda, a.s_turn, a.path.as_deref())?;
    let other = match (a.compare_lambda, a.compare_path.as_deref()) {
        (None, None) => None,
        (l, p) => Some(anneal_path(l, a.s_turn, p)?),
    };
    let options = EvolveOptions {
        dt: a.dt,
        record_every: a.record_every,
    };
    let runs: Vec<(&str, AnnealRun)> = match &other {
        None => vec![("a", evolve_with(a.p, a.spins, &main, a.tau, &options)?)],
        Some(b) => {
            let (ra, rb) = rayon::join(
                || evolve_with(a.p, a.spins, &main, a.tau, &options),
                || evolve_with(a.p, a.spins, b, a.tau, &options),
            );
            vec![("a", ra?), ("b", rb?)]
        }
    };

    let mut header = Header::new("anneal");
    header.set("p", a.p).set("N", a.spins).set("tau", a.tau);
    header.set("dt", a.dt.map_or_else(|| "default".to_string(), |d| d.to_string()));
    match (a.lambda, &a.path) {
        (Some(l), _) => header.set("lambda", l).set("s-turn", a.s_turn),
        (_, Some(p)) => header.set("path", p),
        _ => &mut header,
    };
    match (a.compare_lambda, &a.compare_path) {
        (Some(l), _) => {
            header.set("compare-lambda", l);
        }
        (_, Some(p)) => {
            header.set("compare-path", p);
        }
        _ => {}
    }
    if let Some(k) = a.record_every {
        header.set("record-every", k);
    }

    let format = a.out.format.unwrap_or(Format::Json);
    let path = primary(dir, &a.out, "anneal", format);
    match format {
        Format::Json => {
            let records: Vec<Value> = runs.iter().map(|(l, r)| run_record(l, r)).collect();
            write_json(&path, &header, vec![("runs", Value::Array(records))])?;
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "label",
                "tau",
                "dt",
                "steps",
                "fidelity",
                "residual_energy",
                "norm_drift",
                "rejected_steps",
            ]);
            for (l, r) in &runs {
                t.push(vec![
                    json!(l),
                    num(r.tau),
                    num(r.dt),
                    json!(r.steps),
                    num(r.fidelity),
                    num(r.residual_energy),
                    num(r.norm_drift),
                    json!(r.rejected_steps),
                ]);
            }
            write_table(&path, &header, "runs", &t, format)?;
        }
    }
    println!("wrote {}", path.display());
    if let Some(op) = &a.overlaps {
        let mut t = Table::new(&["label", "t", "s", "lambda", "overlap"]);
        for (l, r) in &runs {
            for x in &r.overlaps {
                t.push(vec![json!(l), num(x.t), num(x.s), num(x.lambda), num(x.overlap)]);
            }
        }
        let opath = resolve(dir, op);
        write_table(&opath, &header, "overlaps", &t, Format::Csv)?;
        println!("wrote {}", opath.display());
    }
    for (l, r) in &runs {
        println!(
            "run {l}: fidelity = {:.6e}, residual energy = {:.6e}, norm drift = {:.1e}, {} steps",
            r.fidelity, r.residual_energy, r.norm_drift, r.steps
        );
    }
    Ok(())
}

pub fn matrix_dump(dir: &Path, a: MatrixArgs) -> Result<(), Failure> {
    let params = model_params(a.p, a.spins)?;
    let point = SchedulePoint::new(a.s, a.lambda)?;
    let op = SectorHamiltonian::for_model(params)?.at(point)?;
    let dim = SectorBasis::new(a.spins)?.dim();
    let mut t = Table::new(&["i", "j", "value"]);
    if a.dense {
        let dense = op.to_dense();
        for i in 0..dim {
            for j in 0..dim {
                t.push(vec![json!(i), json!(j), num(dense[i * dim + j])]);
            }
        }
    } else {
        for (i, j, v) in op.triples() {
            t.push(vec![json!(i), json!(j), num(v)]);
        }
    }
    let mut header = Header::new("matrix-dump");
    header
        .set("p", a.p)
        .set("N", a.spins)
        .set("s", a.s)
        .set("lambda", a.lambda)
        .set("dense", a.dense)
        .set("dim", dim);
    let format = a.out.format.unwrap_or(Format::Csv);
    let path = primary(dir, &a.out, "matrix", format);
    write_table(&path, &header, "entries", &t, format)?;
    println!("wrote {} ({dim} x {dim})", path.display());
    Ok(())
}
