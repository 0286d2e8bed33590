//! SORT-style baseline: one constant-velocity Kalman filter per track on the
//! bottom-centre box, IoU assignment, M/N track management.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::assignment::{solve, CostMatrix};
use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::model::BBox2D;
use crate::trajectory::TrajectorySet;

type State = SVector<f64, 8>;
type Cov = SMatrix<f64, 8, 8>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SortConfig {
    pub iou_threshold: f64,
    pub min_hits: usize,
    pub max_age: usize,
    /// Measurement noise standard deviation, pixels.
    pub measurement_std: f64,
    /// Acceleration noise standard deviation, pixels per frame².
    pub process_std: f64,
    /// Prior velocity standard deviation for a new track, pixels per frame.
    pub velocity_std: f64,
}

impl Default for SortConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.3,
            min_hits: 3,
            max_age: 1,
            measurement_std: 5.0,
            process_std: 1.0,
            velocity_std: 10.0,
        }
    }
}

impl SortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::InvalidParameter("sort.iou_threshold must be in [0, 1]".into()));
        }
        if self.min_hits == 0 {
            return Err(Error::InvalidParameter("sort.min_hits must be >= 1".into()));
        }
        for (name, v) in [
            ("measurement_std", self.measurement_std),
            ("process_std", self.process_std),
            ("velocity_std", self.velocity_std),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("sort.{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Track {
    id: Option<u64>,
    x: State,
    p: Cov,
    hit_streak: usize,
    misses: usize,
}

impl Track {
    fn bbox(&self) -> BBox2D {
        BBox2D::new(self.x[0], self.x[1], self.x[2], self.x[3])
    }
}

/// Online SORT tracker. State is `[x, y, w, h, ẋ, ẏ, ẇ, ḣ]`, one frame per step.
#[derive(Debug, Clone)]
pub struct SortTracker {
    cfg: SortConfig,
    f: Cov,
    q: Cov,
    tracks: Vec<Track>,
    next_id: u64,
}

impl SortTracker {
    pub fn new(cfg: SortConfig) -> Result<Self> {
        cfg.validate()?;
        let mut f = Cov::identity();
        let mut q = Cov::zeros();
        let a2 = cfg.process_std.powi(2);
        for i in 0..4 {
            f[(i, i + 4)] = 1.0;
            q[(i, i)] = 0.25 * a2;
            q[(i, i + 4)] = 0.5 * a2;
            q[(i + 4, i)] = 0.5 * a2;
            q[(i + 4, i + 4)] = a2;
        }
        Ok(Self {
            cfg,
            f,
            q,
            tracks: Vec::new(),
            next_id: 1,
        })
    }

    /// Processes one frame and returns the confirmed tracks updated in it.
    pub fn step(&mut self, detections: &[BBox2D]) -> Vec<(u64, BBox2D)> {
        for t in &mut self.tracks {
            t.x = self.f * t.x;
            t.p = self.f * t.p * self.f.transpose() + self.q;
        }

        let (n, m) = (self.tracks.len(), detections.len());
        let mut cm = CostMatrix::forbidden(n, m + n);
        for (i, t) in self.tracks.iter().enumerate() {
            let b = t.bbox();
            for (j, d) in detections.iter().enumerate() {
                let o = iou(&b, d);
                if o >= self.cfg.iou_threshold && o > 0.0 {
                    cm.set(i, j, 1.0 - o);
                }
            }
            cm.set(i, m + i, 1.0);
        }
        let cols = solve(&cm).expect("dummy columns keep the problem feasible").cols;

        let r = self.cfg.measurement_std.powi(2);
        let mut used = vec![false; m];
        for (t, &j) in self.tracks.iter_mut().zip(&cols) {
            if j < m {
                used[j] = true;
                let z = SVector::<f64, 4>::new(
                    detections[j].x,
                    detections[j].y,
                    detections[j].width,
                    detections[j].height,
                );
                // H selects the first four state entries.
                let s = t.p.fixed_view::<4, 4>(0, 0) + SMatrix::<f64, 4, 4>::identity() * r;
                let s_inv = s.try_inverse().expect("innovation covariance is positive definite");
                let k = t.p.fixed_view::<8, 4>(0, 0) * s_inv;
                let innov = z - t.x.fixed_rows::<4>(0);
                t.x += k * innov;
                t.p -= k * t.p.fixed_view::<4, 8>(0, 0);
                t.p = (t.p + t.p.transpose()) * 0.5;
                t.hit_streak += 1;
                t.misses = 0;
            } else {
                t.hit_streak = 0;
                t.misses += 1;
            }
        }
        let max_age = self.cfg.max_age;
        self.tracks.retain(|t| t.misses <= max_age);

        let v2 = self.cfg.velocity_std.powi(2);
        for (_, d) in detections.iter().enumerate().filter(|(j, _)| !used[*j]) {
            let mut p = Cov::zeros();
            for i in 0..4 {
                p[(i, i)] = r;
                p[(i + 4, i + 4)] = v2;
            }
            self.tracks.push(Track {
                id: None,
                x: State::from_column_slice(&[d.x, d.y, d.width, d.height, 0.0, 0.0, 0.0, 0.0]),
                p,
                hit_streak: 1,
                misses: 0,
            });
        }

        let mut out = Vec::new();
        for t in &mut self.tracks {
            if t.misses > 0 {
                continue;
            }
            if t.id.is_none() && t.hit_streak >= self.cfg.min_hits {
                t.id = Some(self.next_id);
                self.next_id += 1;
            }
            if let Some(id) = t.id {
                out.push((id, t.bbox()));
            }
        }
        out.sort_by_key(|(id, _)| *id);
        out
    }
}

pub fn sort_track(frames: &[Vec<BBox2D>], cfg: &SortConfig) -> Result<TrajectorySet> {
    let mut tracker = SortTracker::new(cfg.clone())?;
    let mut set = TrajectorySet::new(frames.len());
    for (k, dets) in frames.iter().enumerate() {
        for (id, b) in tracker.step(dets) {
            set.insert(k + 1, id, b);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn walker(k: usize) -> BBox2D {
        BBox2D::new(500.0 + 3.0 * k as f64, 800.0, 80.0, 200.0)
    }

    #[test]
    fn persistent_stream_confirms_at_min_hits() {
        let frames: Vec<_> = (0..20).map(|k| vec![walker(k)]).collect();
        let set = sort_track(&frames, &SortConfig::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.trajectories[0].first_frame(), Some(3));
        assert_eq!(set.trajectories[0].last_frame(), Some(20));
    }

    #[test]
    fn two_missed_frames_delete_the_track() {
        let mut frames: Vec<_> = (0..20).map(|k| vec![walker(k)]).collect();
        frames[9].clear();
        let one_gap = sort_track(&frames, &SortConfig::default()).unwrap();
        assert_eq!(one_gap.len(), 1);
        frames[10].clear();
        let two_gap = sort_track(&frames, &SortConfig::default()).unwrap();
        assert_eq!(two_gap.len(), 2);
        assert_eq!(two_gap.trajectories[1].first_frame(), Some(14));
    }

    #[test]
    fn confirmed_tracks_never_share_a_detection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frames: Vec<Vec<BBox2D>> = (0..60)
            .map(|_| {
                (0..rng.gen_range(0..6))
                    .map(|_| BBox2D::new(rng.gen_range(0.0..300.0), rng.gen_range(100.0..300.0), 60.0, 120.0))
                    .collect()
            })
            .collect();
        let mut tr = SortTracker::new(SortConfig::default()).unwrap();
        for dets in &frames {
            let out = tr.step(dets);
            assert!(out.len() <= dets.len());
            assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
        }
        let a = sort_track(&frames, &SortConfig::default()).unwrap();
        assert_eq!(a, sort_track(&frames, &SortConfig::default()).unwrap());
    }
}
