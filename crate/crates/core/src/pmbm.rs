//! Poisson multi-Bernoulli mixture filter with single-Gaussian local
//! hypotheses, UKF updates and Murty hypothesis expansion. Estimates are the
//! confident Bernoullis of the best global hypothesis.

use std::collections::{BinaryHeap, HashSet};

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assignment::{murty_mbest_partial, CostMatrix};
use crate::error::{Error, Result};
use crate::inference::{project_density, ukf_predict, PredictedMeasurement};
use crate::model::{BBox2D, BirthModel, CameraModel, SpoModel};
use crate::rfs::{
    normalize_log_weights, BernoulliComponent, GaussianDensity, GaussianMixture, GlobalHypothesis, PmbmPosterior,
    PoissonIntensity, Track,
};
use crate::trajectory::TrajectorySet;

/// `ln(f64::MIN_POSITIVE)`: stands in for a zero weight when every
/// hypothesis would otherwise be impossible.
const MIN_LOG_WEIGHT: f64 = -708.396_418_532_264_1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Mahalanobis distance bound for gating.
    pub gate_threshold: f64,
    pub max_globals: usize,
    /// Normalized log-weight below which global hypotheses are dropped.
    pub prune_log_weight: f64,
    /// Assignments generated per prior global hypothesis.
    pub murty_m: usize,
    /// Existence needed to report a Bernoulli.
    pub estimate_threshold: f64,
    /// Tracks whose existence stays below this in every global are dropped.
    pub min_existence: f64,
    pub poisson_min_mass: f64,
    pub poisson_cap: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            gate_threshold: 6.0,
            max_globals: 25,
            prune_log_weight: -100.0,
            murty_m: 3,
            estimate_threshold: 0.5,
            min_existence: 1e-4,
            poisson_min_mass: 1e-5,
            poisson_cap: 50,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_threshold > 0.0) {
            return Err(Error::InvalidParameter("filter.gate_threshold must be > 0".into()));
        }
        if self.max_globals == 0 || self.murty_m == 0 {
            return Err(Error::InvalidParameter(
                "filter.max_globals and filter.murty_m must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.estimate_threshold) {
            return Err(Error::InvalidParameter(
                "filter.estimate_threshold must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// One reported object.
#[derive(Debug, Clone)]
pub struct TrackedEstimate {
    pub label: u64,
    pub existence: f64,
    pub state: GaussianDensity,
    pub bbox: BBox2D,
    pub bbox_cov: DMatrix<f64>,
}

/// Prior before the first frame: the birth intensity, no tracks.
pub fn initial_posterior(birth: &BirthModel) -> PmbmPosterior {
    let undetected = if birth.expected_count > 0.0 {
        PoissonIntensity::new(birth.mixture.clone().scaled(birth.expected_count))
    } else {
        PoissonIntensity::default()
    };
    PmbmPosterior {
        undetected,
        tracks: Vec::new(),
        globals: vec![GlobalHypothesis {
            log_weight: 0.0,
            assignment: Vec::new(),
        }],
        next_label: 1,
    }
}

/// Time update.
pub fn predict(post: &PmbmPosterior, model: &SpoModel) -> Result<PmbmPosterior> {
    let ps = model.survival;
    let tr = &model.transition;
    let mut undetected = GaussianMixture::empty();
    for (w, c) in post.undetected.mixture.iter() {
        undetected.push(w * ps, ukf_predict(c, tr)?);
    }
    let beta = model.birth.expected_count;
    if beta > 0.0 {
        for (w, c) in model.birth.mixture.iter() {
            undetected.push(w * beta, c.clone());
        }
    }
    let tracks = post
        .tracks
        .iter()
        .map(|t| {
            let hypotheses = t
                .hypotheses
                .iter()
                .map(|h| {
                    Ok(BernoulliComponent {
                        existence: h.existence * ps,
                        density: ukf_predict(&h.density, tr)?,
                        label: h.label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Track {
                label: t.label,
                hypotheses,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PmbmPosterior {
        undetected: PoissonIntensity::new(undetected),
        tracks,
        globals: post.globals.clone(),
        next_label: post.next_label,
    })
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn predicted(g: &GaussianDensity, model: &SpoModel) -> Option<PredictedMeasurement> {
    match PredictedMeasurement::new(g, &model.camera, &model.measurement_noise) {
        Ok(pm) => Some(pm),
        Err(e) => {
            debug!("component not measurable: {e}");
            None
        }
    }
}

/// Updated children of one track's local hypotheses.
struct TrackChildren {
    hypotheses: Vec<BernoulliComponent>,
    log_weights: Vec<f64>,
    /// Per prior local hypothesis: miss child index.
    miss: Vec<usize>,
    /// Per prior local hypothesis: `(measurement, child index)` for gated
    /// measurements, ordered by measurement.
    detections: Vec<Vec<(usize, usize)>>,
}

fn track_children(track: &Track, z: &[DVector<f64>], model: &SpoModel, cfg: &FilterConfig) -> Result<TrackChildren> {
    let pd = model.detection;
    let mut out = TrackChildren {
        hypotheses: Vec::new(),
        log_weights: Vec::new(),
        miss: Vec::new(),
        detections: Vec::new(),
    };
    for h in &track.hypotheses {
        let r = h.existence;
        let miss_w = 1.0 - r * pd;
        let r_miss = if miss_w > 0.0 { r * (1.0 - pd) / miss_w } else { 0.0 };
        out.miss.push(out.hypotheses.len());
        out.hypotheses.push(BernoulliComponent {
            existence: r_miss.clamp(0.0, 1.0),
            density: h.density.clone(),
            label: h.label,
        });
        out.log_weights.push(miss_w.max(0.0).ln());

        let mut dets = Vec::new();
        if let Some(pm) = predicted(&h.density, model) {
            let log_rpd = r.ln() + pd.ln();
            for (j, zj) in z.iter().enumerate() {
                if !pm.gate(zj, cfg.gate_threshold).0 {
                    continue;
                }
                let (post, ll) = pm.update(zj)?;
                dets.push((j, out.hypotheses.len()));
                out.hypotheses.push(BernoulliComponent {
                    existence: 1.0,
                    density: post,
                    label: h.label,
                });
                out.log_weights.push(log_rpd + ll);
            }
        }
        out.detections.push(dets);
    }
    Ok(out)
}

/// Measurement-side quantities: `ln(λc(z) + e(z))` and the Bernoulli of a
/// potential new object, if any undetected mass explains the measurement.
struct NewObject {
    log_weight: f64,
    bernoulli: Option<(f64, GaussianDensity)>,
}

fn new_objects(
    undetected: &PoissonIntensity,
    boxes: &[BBox2D],
    z: &[DVector<f64>],
    model: &SpoModel,
    cfg: &FilterConfig,
) -> Result<Vec<NewObject>> {
    let pd = model.detection;
    let pms: Vec<_> = undetected
        .mixture
        .iter()
        .map(|(w, c)| (w, predicted(c, model)))
        .collect();
    let log_lambda = model.clutter.lambda.ln();
    let mut out = Vec::with_capacity(z.len());
    for (zj, bj) in z.iter().zip(boxes) {
        let mut logs = Vec::new();
        let mut posts = Vec::new();
        for (w, pm) in &pms {
            let Some(pm) = pm else { continue };
            if *w <= 0.0 || !pm.gate(zj, cfg.gate_threshold).0 {
                continue;
            }
            let (post, ll) = pm.update(zj)?;
            logs.push(w.ln() + pd.ln() + ll);
            posts.push(post);
        }
        let log_e = logs.iter().copied().fold(f64::NEG_INFINITY, ln_add);
        let log_c = log_lambda + model.clutter.log_density(bj);
        let log_weight = ln_add(log_e, log_c);
        let bernoulli = if log_e.is_finite() {
            let r = (log_e - log_weight).exp().min(1.0);
            let weights = logs.iter().map(|l| (l - log_e).exp()).collect();
            let density = GaussianMixture::new(weights, posts)?
                .moment_match()
                .ok_or_else(|| Error::stage("update", "empty new-object mixture"))??;
            Some((r, density))
        } else {
            None
        };
        out.push(NewObject { log_weight, bernoulli });
    }
    Ok(out)
}

/// Data-association alternatives for one prior global hypothesis.
struct Expansion {
    cost: f64,
    /// Child index per existing track (only tracks present in the prior).
    children: Vec<Option<usize>>,
    /// Measurements explained by new objects or clutter.
    to_new: Vec<bool>,
}

struct Cluster {
    tracks: Vec<usize>,
    meas: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn weight(log_w: f64, clamp: bool) -> f64 {
    if clamp && log_w == f64::NEG_INFINITY {
        MIN_LOG_WEIGHT
    } else {
        log_w
    }
}

/// The `m` cheapest combinations of one entry from each ascending list.
fn k_best_sums(lists: &[Vec<f64>], m: usize) -> Vec<(f64, Vec<usize>)> {
    #[derive(PartialEq)]
    struct Item(f64, Vec<usize>);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
        }
    }
    if lists.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let sum = |idx: &[usize]| idx.iter().zip(lists).map(|(&i, l)| l[i]).sum::<f64>();
    let start = vec![0; lists.len()];
    let mut heap = BinaryHeap::from([Item(sum(&start), start.clone())]);
    let mut seen = HashSet::from([start]);
    let mut out = Vec::new();
    while let Some(Item(cost, idx)) = heap.pop() {
        for k in 0..idx.len() {
            if idx[k] + 1 < lists[k].len() {
                let mut next = idx.clone();
                next[k] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Item(sum(&next), next));
                }
            }
        }
        out.push((cost, idx));
        if out.len() == m {
            break;
        }
    }
    out
}

fn expand(
    global: &GlobalHypothesis,
    children: &[TrackChildren],
    news: &[NewObject],
    m: usize,
    clamp: bool,
) -> Result<Vec<Expansion>> {
    let n_meas = news.len();
    let present: Vec<(usize, usize)> = global
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(t, l)| l.map(|l| (t, l)))
        .collect();
    // Union-find over present tracks followed by measurements.
    let mut parent: Vec<usize> = (0..present.len() + n_meas).collect();
    for (p, &(t, l)) in present.iter().enumerate() {
        for &(j, _) in &children[t].detections[l] {
            let (a, b) = (find(&mut parent, p), find(&mut parent, present.len() + j));
            parent[a] = b;
        }
    }
    let mut fixed_cost = 0.0;
    let mut base = Expansion {
        cost: 0.0,
        children: vec![None; global.assignment.len()],
        to_new: vec![false; n_meas],
    };
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut root_cluster = std::collections::HashMap::new();
    for (p, &(t, l)) in present.iter().enumerate() {
        if children[t].detections[l].is_empty() {
            let miss = children[t].miss[l];
            fixed_cost -= weight(children[t].log_weights[miss], clamp);
            base.children[t] = Some(miss);
            continue;
        }
        let root = find(&mut parent, p);
        let c = *root_cluster.entry(root).or_insert_with(|| {
            clusters.push(Cluster {
                tracks: Vec::new(),
                meas: Vec::new(),
            });
            clusters.len() - 1
        });
        clusters[c].tracks.push(p);
    }
    for (j, new) in news.iter().enumerate().take(n_meas) {
        let root = find(&mut parent, present.len() + j);
        match root_cluster.get(&root) {
            Some(&c) => clusters[c].meas.push(j),
            None => {
                fixed_cost -= weight(new.log_weight, clamp);
                base.to_new[j] = true;
            }
        }
    }
    if !fixed_cost.is_finite() {
        return Ok(Vec::new());
    }

    let mut solutions = Vec::with_capacity(clusters.len());
    for cl in &clusters {
        let (a, b) = (cl.tracks.len(), cl.meas.len());
        let mut cm = CostMatrix::forbidden(a + b, a + b);
        for (r, &p) in cl.tracks.iter().enumerate() {
            let (t, l) = present[p];
            let ch = &children[t];
            for &(j, idx) in &ch.detections[l] {
                let col = cl
                    .meas
                    .iter()
                    .position(|&mj| mj == j)
                    .expect("gated measurement in cluster");
                cm.set(r, col, -weight(ch.log_weights[idx], clamp));
            }
            cm.set(r, b + r, -weight(ch.log_weights[ch.miss[l]], clamp));
        }
        for (i, &j) in cl.meas.iter().enumerate() {
            cm.set(a + i, i, -weight(news[j].log_weight, clamp));
            for r in 0..a {
                cm.set(a + i, b + r, 0.0);
            }
        }
        match murty_mbest_partial(&cm, m, a) {
            Ok(s) => solutions.push(s),
            Err(Error::Infeasible) => return Ok(Vec::new()),
            Err(e) => return Err(e),
        }
    }

    let costs: Vec<Vec<f64>> = solutions.iter().map(|s| s.iter().map(|a| a.cost).collect()).collect();
    let mut out = Vec::new();
    for (cost, pick) in k_best_sums(&costs, m) {
        let mut e = Expansion {
            cost: fixed_cost + cost,
            children: base.children.clone(),
            to_new: base.to_new.clone(),
        };
        for ((cl, sols), &k) in clusters.iter().zip(&solutions).zip(&pick) {
            let cols = &sols[k].cols;
            let (a, b) = (cl.tracks.len(), cl.meas.len());
            for (r, &p) in cl.tracks.iter().enumerate() {
                let (t, l) = present[p];
                let ch = &children[t];
                e.children[t] = Some(if cols[r] < b {
                    let j = cl.meas[cols[r]];
                    ch.detections[l].iter().find(|d| d.0 == j).expect("gated").1
                } else {
                    ch.miss[l]
                });
            }
            for (i, &j) in cl.meas.iter().enumerate() {
                e.to_new[j] = cols[a + i] == i;
            }
        }
        out.push(e);
    }
    Ok(out)
}

/// Measurement update with the boxes detected in one frame.
pub fn update(post: &PmbmPosterior, boxes: &[BBox2D], model: &SpoModel, cfg: &FilterConfig) -> Result<PmbmPosterior> {
    let z: Vec<DVector<f64>> = boxes.iter().map(BBox2D::to_vector).collect();
    let news = new_objects(&post.undetected, boxes, &z, model, cfg)?;
    let children = post
        .tracks
        .iter()
        .map(|t| track_children(t, &z, model, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut globals = Vec::new();
    for clamp in [false, true] {
        for g in &post.globals {
            for e in expand(g, &children, &news, cfg.murty_m, clamp)? {
                let log_weight = g.log_weight - e.cost;
                if log_weight.is_finite() {
                    globals.push((log_weight, e));
                }
            }
        }
        if !globals.is_empty() {
            break;
        }
        warn!("no feasible association; treating zero-probability events as negligible");
    }
    if globals.is_empty() {
        return Err(Error::DegenerateHypotheses);
    }

    let mut next_label = post.next_label;
    let mut tracks: Vec<Track> = post
        .tracks
        .iter()
        .zip(&children)
        .map(|(t, ch)| Track {
            label: t.label,
            hypotheses: ch.hypotheses.clone(),
        })
        .collect();
    let mut new_track_index = vec![None; news.len()];
    for (j, n) in news.iter().enumerate() {
        if let Some((r, density)) = &n.bernoulli {
            new_track_index[j] = Some(tracks.len());
            tracks.push(Track {
                label: next_label,
                hypotheses: vec![BernoulliComponent::new(*r, density.clone(), next_label)?],
            });
            next_label += 1;
        }
    }
    let log_weights: Vec<f64> = globals.iter().map(|g| g.0).collect();
    let (normalized, _) = normalize_log_weights(&log_weights)?;
    let globals = globals
        .into_iter()
        .zip(normalized)
        .map(|((_, e), log_weight)| {
            let mut assignment = e.children;
            assignment.resize(tracks.len(), None);
            for (j, idx) in new_track_index.iter().enumerate() {
                if let (Some(t), true) = (idx, e.to_new[j]) {
                    assignment[*t] = Some(0);
                }
            }
            GlobalHypothesis { log_weight, assignment }
        })
        .collect();

    let mut undetected = post.undetected.clone().mixture.scaled(1.0 - model.detection);
    let mut poisson = PoissonIntensity::new(std::mem::take(&mut undetected));
    poisson.prune(cfg.poisson_min_mass, cfg.poisson_cap);

    let mut out = PmbmPosterior {
        undetected: poisson,
        tracks,
        globals,
        next_label,
    };
    out.prune_and_cap(cfg.prune_log_weight, cfg.max_globals, cfg.min_existence);
    Ok(out)
}

/// Confident Bernoullis of the most likely global hypothesis,
/// projected to the image.
pub fn estimate(post: &PmbmPosterior, cfg: &FilterConfig, camera: &CameraModel) -> Vec<TrackedEstimate> {
    let Some(best) = post.best_global() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (t, l) in best.assignment.iter().enumerate() {
        let Some(l) = l else { continue };
        let h = &post.tracks[t].hypotheses[*l];
        if h.existence < cfg.estimate_threshold {
            continue;
        }
        match project_density(&h.density, camera) {
            Ok(b) => out.push(TrackedEstimate {
                label: post.tracks[t].label,
                existence: h.existence,
                state: h.density.clone(),
                bbox: BBox2D::from_slice(b.mean().as_slice()),
                bbox_cov: b.cov().clone(),
            }),
            Err(e) => debug!("track {} not projectable: {e}", post.tracks[t].label),
        }
    }
    out
}

/// Frame-by-frame filter state.
#[derive(Debug, Clone)]
pub struct PmbmTracker {
    model: SpoModel,
    cfg: FilterConfig,
    posterior: PmbmPosterior,
    frame: usize,
}

impl PmbmTracker {
    pub fn new(model: SpoModel, cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            posterior: initial_posterior(&model.birth),
            model,
            cfg,
            frame: 0,
        })
    }

    pub fn posterior(&self) -> &PmbmPosterior {
        &self.posterior
    }

    pub fn model(&self) -> &SpoModel {
        &self.model
    }

    /// Replaces the model, e.g. to switch off births after initialization.
    pub fn set_model(&mut self, model: SpoModel) {
        self.model = model;
    }

    /// Processes the next frame. The first frame updates the initial prior
    /// directly.
    pub fn step(&mut self, boxes: &[BBox2D]) -> Result<Vec<TrackedEstimate>> {
        let prior = if self.frame == 0 {
            std::mem::take(&mut self.posterior)
        } else {
            predict(&self.posterior, &self.model).map_err(|e| Error::stage("predict", e.to_string()))?
        };
        self.posterior = update(&prior, boxes, &self.model, &self.cfg)?;
        self.frame += 1;
        Ok(estimate(&self.posterior, &self.cfg, &self.model.camera))
    }
}

/// Runs the filter over a whole sequence; frame `k` of the output holds the
/// estimates after processing `frames[k - 1]`.
pub fn run_sequence(frames: &[Vec<BBox2D>], model: &SpoModel, cfg: &FilterConfig) -> Result<TrajectorySet> {
    let mut tracker = PmbmTracker::new(model.clone(), cfg.clone())?;
    let mut out = TrajectorySet::new(frames.len());
    for (k, boxes) in frames.iter().enumerate() {
        for est in tracker.step(boxes)? {
            out.insert(k + 1, est.label, est.bbox);
        }
    }
    Ok(out)
}
