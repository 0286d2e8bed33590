//! Model identification from annotated sequences: detection probability,
//! clutter rate and measurement noise from ground truth vs. detections, the
//! detection-probability curve over visibility, and population statistics
//! (lifespan, birth rate, cardinality moments).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assignment::{solve, CostMatrix};
use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::model::BBox2D;
use crate::trajectory::TrajectorySet;

/// Outcome of matching one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatches {
    /// `(gt index, detection index)`.
    pub matched: Vec<(usize, usize)>,
    pub missed: Vec<usize>,
    pub clutter: Vec<usize>,
}

/// Maximum-total-IoU matching restricted to pairs with IoU above `min_iou`
/// (0 admits every overlapping pair).
pub fn match_frame(gt: &[BBox2D], det: &[BBox2D], min_iou: f64) -> FrameMatches {
    let (n, m) = (gt.len(), det.len());
    let mut cm = CostMatrix::forbidden(n, m + n);
    for (i, g) in gt.iter().enumerate() {
        for (j, d) in det.iter().enumerate() {
            let o = iou(g, d);
            if o > min_iou.max(0.0) {
                cm.set(i, j, 1.0 - o);
            }
        }
        cm.set(i, m + i, 1.0);
    }
    let cols = solve(&cm).expect("dummy columns keep matching feasible").cols;
    let mut out = FrameMatches::default();
    let mut used = vec![false; m];
    for (i, &j) in cols.iter().enumerate() {
        if j < m {
            out.matched.push((i, j));
            used[j] = true;
        } else {
            out.missed.push(i);
        }
    }
    out.clutter = (0..m).filter(|&j| !used[j]).collect();
    out
}

pub fn match_frames(gt: &[Vec<BBox2D>], det: &[Vec<BBox2D>], min_iou: f64) -> Vec<FrameMatches> {
    let frames = gt.len().max(det.len());
    (0..frames)
        .map(|k| {
            let g = gt.get(k).map_or(&[][..], Vec::as_slice);
            let d = det.get(k).map_or(&[][..], Vec::as_slice);
            match_frame(g, d, min_iou)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionStats {
    pub p_d: f64,
    pub lambda: f64,
    /// Residual covariance divided by `γ²`; row-major `[x, y, w, h]`.
    pub r_hat: [[f64; 4]; 4],
    pub gt_count: usize,
    pub matched: usize,
    pub clutter: usize,
    pub frames: usize,
}

impl DetectionStats {
    pub fn r_hat_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(4, 4, |i, j| self.r_hat[i][j])
    }
}

/// Accumulates detection statistics over several sequences.
#[derive(Debug, Clone, Default)]
pub struct DetectionTally {
    gt_count: usize,
    matched: usize,
    clutter: usize,
    frames: usize,
    /// Residuals divided by `γ` of their sequence.
    residuals: Vec<DVector<f64>>,
}

impl DetectionTally {
    pub fn add_sequence(&mut self, gt: &[Vec<BBox2D>], det: &[Vec<BBox2D>], matches: &[FrameMatches], gamma: f64) {
        self.frames += matches.len();
        for (k, fm) in matches.iter().enumerate() {
            self.gt_count += fm.matched.len() + fm.missed.len();
            self.matched += fm.matched.len();
            self.clutter += fm.clutter.len();
            for &(i, j) in &fm.matched {
                self.residuals
                    .push((det[k][j].to_vector() - gt[k][i].to_vector()) / gamma);
            }
        }
    }

    pub fn merge(&mut self, other: &DetectionTally) {
        self.gt_count += other.gt_count;
        self.matched += other.matched;
        self.clutter += other.clutter;
        self.frames += other.frames;
        self.residuals.extend(other.residuals.iter().cloned());
    }

    pub fn finish(&self) -> Result<DetectionStats> {
        if self.gt_count == 0 {
            return Err(Error::EmptyGroundTruth);
        }
        let n = self.residuals.len();
        if n < 2 {
            return Err(Error::InsufficientMatches { needed: 2, found: n });
        }
        let mean = self.residuals.iter().fold(DVector::zeros(4), |a, r| a + r) / n as f64;
        let mut cov = DMatrix::zeros(4, 4);
        for r in &self.residuals {
            let d = r - &mean;
            cov += &d * d.transpose();
        }
        cov /= (n - 1) as f64;
        let mut r_hat = [[0.0; 4]; 4];
        for (i, row) in r_hat.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            }
        }
        Ok(DetectionStats {
            p_d: self.matched as f64 / self.gt_count as f64,
            lambda: self.clutter as f64 / self.frames.max(1) as f64,
            r_hat,
            gt_count: self.gt_count,
            matched: self.matched,
            clutter: self.clutter,
            frames: self.frames,
        })
    }
}

/// Single-sequence convenience over [`DetectionTally`].
pub fn detection_stats(
    gt: &[Vec<BBox2D>],
    det: &[Vec<BBox2D>],
    matches: &[FrameMatches],
    gamma: f64,
) -> Result<DetectionStats> {
    let mut t = DetectionTally::default();
    t.add_sequence(gt, det, matches, gamma);
    t.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilityBin {
    pub lower: f64,
    pub upper: f64,
    pub total: usize,
    pub detected: usize,
    pub p_d: f64,
}

/// Fraction of ground truth detected per visibility bin. `visibility[k][i]`
/// belongs to ground-truth box `i` of frame `k`. Empty bins are omitted.
pub fn pd_vs_visibility(matches: &[FrameMatches], visibility: &[Vec<f64>], bins: usize) -> Result<Vec<VisibilityBin>> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be >= 1".into()));
    }
    let mut total = vec![0usize; bins];
    let mut detected = vec![0usize; bins];
    for (fm, vis) in matches.iter().zip(visibility) {
        let bin = |v: f64| ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        for &(i, _) in &fm.matched {
            total[bin(vis[i])] += 1;
            detected[bin(vis[i])] += 1;
        }
        for &i in &fm.missed {
            total[bin(vis[i])] += 1;
        }
    }
    Ok((0..bins)
        .filter(|&b| total[b] > 0)
        .map(|b| VisibilityBin {
            lower: b as f64 / bins as f64,
            upper: (b + 1) as f64 / bins as f64,
            total: total[b],
            detected: detected[b],
            p_d: detected[b] as f64 / total[b] as f64,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationStats {
    /// Mean lifespan, seconds.
    pub mean_lifespan: f64,
    /// Births per second.
    pub birth_rate: f64,
    pub mean_cardinality: f64,
    pub var_cardinality: f64,
    pub objects: usize,
    pub frames: usize,
    pub duration: f64,
}

impl PopulationStats {
    /// Stationary mean (and variance) of the birth-death model, `L·η`.
    pub fn stationary_mean(&self) -> f64 {
        self.mean_lifespan * self.birth_rate
    }
}

/// Accumulates population statistics over several sequences.
#[derive(Debug, Clone, Default)]
pub struct PopulationTally {
    lifespans: Vec<f64>,
    cardinalities: Vec<f64>,
    duration: f64,
}

impl PopulationTally {
    /// Every object counts as a birth, including those already present in
    /// the first frame.
    pub fn add_sequence(&mut self, gt: &TrajectorySet, frame_rate: f64) {
        let period = 1.0 / frame_rate;
        for t in &gt.trajectories {
            if let (Some(a), Some(b)) = (t.first_frame(), t.last_frame()) {
                self.lifespans.push((b - a + 1) as f64 * period);
            }
        }
        self.cardinalities
            .extend(gt.cardinalities().into_iter().map(|c| c as f64));
        self.duration += gt.frames as f64 * period;
    }

    pub fn merge(&mut self, other: &PopulationTally) {
        self.lifespans.extend_from_slice(&other.lifespans);
        self.cardinalities.extend_from_slice(&other.cardinalities);
        self.duration += other.duration;
    }

    pub fn finish(&self) -> Result<PopulationStats> {
        if self.lifespans.is_empty() || self.duration <= 0.0 {
            return Err(Error::EmptyGroundTruth);
        }
        let n = self.cardinalities.len() as f64;
        let mean = self.cardinalities.iter().sum::<f64>() / n;
        let var = if n > 1.0 {
            self.cardinalities.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(PopulationStats {
            mean_lifespan: self.lifespans.iter().sum::<f64>() / self.lifespans.len() as f64,
            birth_rate: self.lifespans.len() as f64 / self.duration,
            mean_cardinality: mean,
            var_cardinality: var,
            objects: self.lifespans.len(),
            frames: self.cardinalities.len(),
            duration: self.duration,
        })
    }
}

/// Single-sequence convenience over [`PopulationTally`].
pub fn lifespan_birth_stats(gt: &TrajectorySet, frame_rate: f64) -> Result<PopulationStats> {
    let mut t = PopulationTally::default();
    t.add_sequence(gt, frame_rate);
    t.finish()
}
