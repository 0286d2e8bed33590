//! IoU base distance, GOSPA, the LP form of the trajectory metric TGOSPA
//! with its TP/FN/FP/switch decomposition, and cardinality mismatch.

use std::collections::{BTreeSet, HashMap};

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::assignment::{solve, CostMatrix};
use crate::error::{Error, Result};
use crate::model::BBox2D;
use crate::trajectory::TrajectorySet;

/// Intersection over union of two bottom-centre boxes. Zero when both boxes
/// are degenerate.
pub fn iou(a: &BBox2D, b: &BBox2D) -> f64 {
    if a == b && a.area() > 0.0 {
        return 1.0;
    }
    let w = (a.left() + a.width.max(0.0)).min(b.left() + b.width.max(0.0)) - a.left().max(b.left());
    let h = a.y.min(b.y) - a.top().max(b.top());
    let inter = w.max(0.0) * h.max(0.0);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// `1 - IoU`.
pub fn iou_distance(a: &BBox2D, b: &BBox2D) -> f64 {
    1.0 - iou(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GospaDecomposition {
    /// Sum of `d^p` over assigned pairs with `d < c`.
    pub localization: f64,
    pub missed: usize,
    pub false_targets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GospaReport {
    pub value: f64,
    /// Only for `alpha = 2`.
    pub decomposition: Option<GospaDecomposition>,
}

/// GOSPA between estimates `x` and ground truth `y` with `1 - IoU` cut at
/// `c`.
pub fn gospa(x: &[BBox2D], y: &[BBox2D], c: f64, p: f64, alpha: f64) -> Result<GospaReport> {
    if !(alpha > 0.0 && alpha <= 2.0) || !(c > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "GOSPA needs 0 < alpha <= 2, c > 0, p >= 1 (got {alpha}, {c}, {p})"
        )));
    }
    let cp = c.powf(p);
    let dist = |a: &BBox2D, b: &BBox2D| iou_distance(a, b).min(c).powf(p);
    if alpha != 2.0 {
        let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
        let mut loc = 0.0;
        if !small.is_empty() {
            let data = small
                .iter()
                .flat_map(|a| large.iter().map(move |b| dist(a, b)))
                .collect();
            loc = solve(&CostMatrix::new(small.len(), large.len(), data)?)?.cost;
        }
        let value = (loc + cp / alpha * (large.len() - small.len()) as f64).powf(1.0 / p);
        return Ok(GospaReport {
            value,
            decomposition: None,
        });
    }
    // Rows are estimates; columns are truths followed by one "false" column
    // per estimate. A matched pair saves one missed and one false cost.
    let (nx, ny) = (x.len(), y.len());
    let half = cp / 2.0;
    let mut cm = CostMatrix::forbidden(nx, ny + nx);
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            let d = iou_distance(a, b);
            if d < c {
                cm.set(i, j, d.powf(p) - cp);
            }
        }
        cm.set(i, ny + i, 0.0);
    }
    let sol = solve(&cm)?;
    let mut localization = 0.0;
    let mut matched = 0;
    for (i, &j) in sol.cols.iter().enumerate() {
        if j < ny {
            localization += iou_distance(&x[i], &y[j]).powf(p);
            matched += 1;
        }
    }
    let missed = ny - matched;
    let false_targets = nx - matched;
    let value = (localization + half * (missed + false_targets) as f64)
        .max(0.0)
        .powf(1.0 / p);
    Ok(GospaReport {
        value,
        decomposition: Some(GospaDecomposition {
            localization,
            missed,
            false_targets,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TgospaParams {
    pub c: f64,
    pub p: f64,
    pub gamma: f64,
}

impl Default for TgospaParams {
    fn default() -> Self {
        let (c, p) = (0.5, 1.8);
        Self {
            c,
            p,
            gamma: c * 10f64.powf(1.0 / p),
        }
    }
}

impl TgospaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.p >= 1.0 && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "TGOSPA needs c > 0, p >= 1, gamma > 0 (got {}, {}, {})",
                self.c, self.p, self.gamma
            )));
        }
        Ok(())
    }
}

/// Metric value and its decomposition. Counts may be fractional when the LP
/// optimum is not integral; switches may be half-integers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TgospaReport {
    pub total: f64,
    pub localization: f64,
    pub tp_count: f64,
    pub fn_count: f64,
    pub fp_count: f64,
    pub switches: f64,
}

/// One `(estimate, truth)` pair that is closer than the cutoff somewhere.
struct Pair {
    x: usize,
    y: usize,
    /// `frame -> d^p` where both exist and `d < c`.
    close: HashMap<usize, f64>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else if (v - 1.0).abs() < 1e-9 {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// TGOSPA between estimated trajectories `x` and ground truth `y`, computed
/// through its linear-programming relaxation.
///
/// Pairs that are never within the cutoff are left out (they can only add
/// switching cost), the problem splits into independent components of the
/// remaining pair graph, and frames where no member of a component exists
/// are skipped since holding the weights there is free.
pub fn tgospa(x: &TrajectorySet, y: &TrajectorySet, params: &TgospaParams) -> Result<TgospaReport> {
    params.validate()?;
    let (c, p) = (params.c, params.p);
    let cp = c.powf(p);
    let switch_w = params.gamma.powf(p) / 2.0;
    let nx = x.len();
    let frames = x.frames.max(y.frames);

    let mut pairs: Vec<Pair> = Vec::new();
    let mut pair_index: HashMap<(usize, usize), usize> = HashMap::new();
    let xf = TrajectorySet { frames, ..x.clone() }.by_frame();
    let yf = TrajectorySet { frames, ..y.clone() }.by_frame();
    let xi: HashMap<u64, usize> = x.trajectories.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let yi: HashMap<u64, usize> = y.trajectories.iter().enumerate().map(|(j, t)| (t.id, j)).collect();
    for k in 0..frames {
        for (xid, a) in &xf[k] {
            for (yid, b) in &yf[k] {
                let d = iou_distance(a, b);
                if d < c {
                    let key = (xi[xid], yi[yid]);
                    let idx = *pair_index.entry(key).or_insert_with(|| {
                        pairs.push(Pair {
                            x: key.0,
                            y: key.1,
                            close: HashMap::new(),
                        });
                        pairs.len() - 1
                    });
                    pairs[idx].close.insert(k + 1, d.powf(p));
                }
            }
        }
    }

    let total_x = x.total_boxes() as f64;
    let total_y = y.total_boxes() as f64;
    let mut tp = 0.0;
    let mut localization = 0.0;
    let mut switches = 0.0;

    let mut parent: Vec<usize> = (0..nx + y.len()).collect();
    for pr in &pairs {
        let (a, b) = (find(&mut parent, pr.x), find(&mut parent, nx + pr.y));
        parent[a] = b;
    }
    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for (idx, pr) in pairs.iter().enumerate() {
        let root = find(&mut parent, pr.x);
        components.entry(root).or_default().push(idx);
    }
    let mut roots: Vec<_> = components.keys().copied().collect();
    roots.sort_unstable();

    for root in roots {
        let members = &components[&root];
        let sol = solve_component(members, &pairs, x, y, switch_w, cp)?;
        tp += sol.tp;
        localization += sol.localization;
        switches += sol.switches;
    }

    let fn_count = (total_y - tp).max(0.0);
    let fp_count = (total_x - tp).max(0.0);
    let objective = localization + cp / 2.0 * (fn_count + fp_count) + switch_w * 2.0 * switches;
    Ok(TgospaReport {
        total: objective.max(0.0).powf(1.0 / p),
        localization,
        tp_count: tp,
        fn_count,
        fp_count,
        switches,
    })
}

struct ComponentSolution {
    tp: f64,
    localization: f64,
    switches: f64,
}

fn solve_component(
    members: &[usize],
    pairs: &[Pair],
    x: &TrajectorySet,
    y: &TrajectorySet,
    switch_w: f64,
    cp: f64,
) -> Result<ComponentSolution> {
    let mut active = BTreeSet::new();
    let mut xs = BTreeSet::new();
    let mut ys = BTreeSet::new();
    for &m in members {
        xs.insert(pairs[m].x);
        ys.insert(pairs[m].y);
    }
    for &i in &xs {
        active.extend(x.trajectories[i].boxes.keys().copied());
    }
    for &j in &ys {
        active.extend(y.trajectories[j].boxes.keys().copied());
    }
    let frames: Vec<usize> = active.into_iter().collect();

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut w = Vec::with_capacity(members.len());
    for &m in members {
        let vars: Vec<_> = frames
            .iter()
            .map(|k| {
                let coef = pairs[m].close.get(k).map_or(0.0, |dp| dp - cp);
                lp.add_var(coef, (0.0, 1.0))
            })
            .collect();
        w.push(vars);
    }
    for (vars, _) in w.iter().zip(members) {
        for f in 1..frames.len() {
            let e = lp.add_var(switch_w, (0.0, f64::INFINITY));
            lp.add_constraint([(e, 1.0), (vars[f], -1.0), (vars[f - 1], 1.0)], ComparisonOp::Ge, 0.0);
            lp.add_constraint([(e, 1.0), (vars[f], 1.0), (vars[f - 1], -1.0)], ComparisonOp::Ge, 0.0);
        }
    }
    // At most one unit of assignment per trajectory and frame.
    let mut rows: HashMap<(bool, usize), Vec<usize>> = HashMap::new();
    for (a, &m) in members.iter().enumerate() {
        rows.entry((true, pairs[m].x)).or_default().push(a);
        rows.entry((false, pairs[m].y)).or_default().push(a);
    }
    let mut keys: Vec<_> = rows.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let group = &rows[&key];
        if group.len() < 2 {
            continue;
        }
        #[allow(clippy::needless_range_loop)]
        for f in 0..frames.len() {
            lp.add_constraint(group.iter().map(|&a| (w[a][f], 1.0)), ComparisonOp::Le, 1.0);
        }
    }

    let outcome = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let sol = outcome
        .into_solution()
        .map_err(|_| Error::Lp("solver interrupted".into()))?;
    let mut out = ComponentSolution {
        tp: 0.0,
        localization: 0.0,
        switches: 0.0,
    };
    for (vars, &m) in w.iter().zip(members) {
        let vals: Vec<f64> = vars.iter().map(|v| snap(sol.var_value(*v))).collect();
        for (f, k) in frames.iter().enumerate() {
            if let Some(dp) = pairs[m].close.get(k) {
                out.tp += vals[f];
                out.localization += vals[f] * dp;
            }
        }
        out.switches += vals.windows(2).map(|v| (v[1] - v[0]).abs()).sum::<f64>() / 2.0;
    }
    Ok(out)
}

/// `|Σ_k |X_k| - Σ_k |Y_k||`.
pub fn cardinality_mismatch(x: &TrajectorySet, y: &TrajectorySet) -> usize {
    x.total_boxes().abs_diff(y.total_boxes())
}
