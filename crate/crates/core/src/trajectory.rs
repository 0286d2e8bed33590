//! Labeled per-frame 2D boxes: tracker output, ground truth, detections.

use std::collections::BTreeMap;

use crate::model::BBox2D;

/// One labeled object over the frames it appears in. Frames are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub boxes: BTreeMap<usize, BBox2D>,
}

impl Trajectory {
    pub fn new(id: u64) -> Self {
        Self {
            id,
            boxes: BTreeMap::new(),
        }
    }

    pub fn at(&self, frame: usize) -> Option<&BBox2D> {
        self.boxes.get(&frame)
    }

    pub fn first_frame(&self) -> Option<usize> {
        self.boxes.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.boxes.keys().next_back().copied()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

/// Trajectories over frames `1..=frames`, sorted by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySet {
    pub frames: usize,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectorySet {
    pub fn new(frames: usize) -> Self {
        Self {
            frames,
            trajectories: Vec::new(),
        }
    }

    /// Builds a set from `(frame, id, box)` rows. A later row for the same
    /// `(frame, id)` replaces an earlier one.
    pub fn from_rows(frames: usize, rows: impl IntoIterator<Item = (usize, u64, BBox2D)>) -> Self {
        let mut by_id: BTreeMap<u64, Trajectory> = BTreeMap::new();
        let mut last = frames;
        for (frame, id, b) in rows {
            last = last.max(frame);
            by_id
                .entry(id)
                .or_insert_with(|| Trajectory::new(id))
                .boxes
                .insert(frame, b);
        }
        Self {
            frames: last,
            trajectories: by_id.into_values().collect(),
        }
    }

    pub fn insert(&mut self, frame: usize, id: u64, b: BBox2D) {
        self.frames = self.frames.max(frame);
        match self.trajectories.binary_search_by_key(&id, |t| t.id) {
            Ok(i) => {
                self.trajectories[i].boxes.insert(frame, b);
            }
            Err(i) => {
                let mut t = Trajectory::new(id);
                t.boxes.insert(frame, b);
                self.trajectories.insert(i, t);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Boxes present at `frame`, ordered by id.
    pub fn frame(&self, frame: usize) -> Vec<(u64, BBox2D)> {
        self.trajectories
            .iter()
            .filter_map(|t| t.at(frame).map(|b| (t.id, *b)))
            .collect()
    }

    /// Per-frame box lists for frames `1..=frames`.
    pub fn by_frame(&self) -> Vec<Vec<(u64, BBox2D)>> {
        let mut out = vec![Vec::new(); self.frames];
        for t in &self.trajectories {
            for (&k, b) in &t.boxes {
                if (1..=self.frames).contains(&k) {
                    out[k - 1].push((t.id, *b));
                }
            }
        }
        out
    }

    /// `(frame, id, box)` rows ordered by frame, then id.
    pub fn rows(&self) -> Vec<(usize, u64, BBox2D)> {
        let mut rows: Vec<_> = self
            .trajectories
            .iter()
            .flat_map(|t| t.boxes.iter().map(move |(&k, b)| (k, t.id, *b)))
            .collect();
        rows.sort_by_key(|r| (r.0, r.1));
        rows
    }

    /// `Σ_k |X_k|`.
    pub fn total_boxes(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    /// Number of boxes at each frame `1..=frames`.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.by_frame().iter().map(Vec::len).collect()
    }
}
