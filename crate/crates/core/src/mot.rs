//! MOT-Challenge text formats: `seqinfo.ini`, `gt.txt`, `det.txt` and
//! tracker result files.
//!
//! Files store boxes as top-left corner plus size; in memory they are
//! anchored at the bottom centre.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::BBox2D;
use crate::trajectory::TrajectorySet;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_rate: f64,
    pub image_width: f64,
    pub image_height: f64,
    pub frame_count: usize,
}

/// Reads the `[Sequence]` section of a `seqinfo.ini`.
pub fn parse_seqinfo(text: &str) -> Result<SequenceMeta> {
    let mut section = String::new();
    let mut kv = std::collections::HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected key=value, got `{line}`"),
            });
        };
        if section.eq_ignore_ascii_case("sequence") {
            kv.insert(k.trim().to_string(), (n + 1, v.trim().to_string()));
        }
    }
    let get = |key: &str| kv.get(key).ok_or_else(|| Error::MissingKey(key.to_string()));
    let positive = |key: &str| -> Result<f64> {
        let (line, v) = get(key)?;
        match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(Error::Parse {
                line: *line,
                message: format!("`{key}` must be a positive number, got `{v}`"),
            }),
        }
    };
    Ok(SequenceMeta {
        name: get("name")?.1.clone(),
        frame_rate: positive("frameRate")?,
        image_width: positive("imWidth")?,
        image_height: positive("imHeight")?,
        frame_count: positive("seqLength")? as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxKind {
    /// `frame, id, left, top, w, h, consider, class, visibility`
    GroundTruth,
    /// `frame, id, left, top, w, h, confidence, ...`
    Detection,
}

/// One parsed row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotBox {
    pub frame: usize,
    pub id: i64,
    pub bbox: BBox2D,
    /// Detector confidence, or the consider flag for ground truth.
    pub confidence: f64,
    pub class: Option<i64>,
    pub visibility: Option<f64>,
}

/// Which ground-truth rows to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GtFilter {
    pub pedestrians_only: bool,
    pub considered_only: bool,
}

impl Default for GtFilter {
    fn default() -> Self {
        Self {
            pedestrians_only: true,
            considered_only: true,
        }
    }
}

impl GtFilter {
    pub const ALL: GtFilter = GtFilter {
        pedestrians_only: false,
        considered_only: false,
    };

    pub fn keeps(&self, b: &MotBox) -> bool {
        (!self.pedestrians_only || b.class.unwrap_or(1) == 1) && (!self.considered_only || b.confidence == 1.0)
    }
}

/// Parses comma-separated MOT rows. Blank lines are skipped.
pub fn parse_boxes(text: &str, kind: BoxKind) -> Result<Vec<MotBox>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: n + 1, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let needed = if kind == BoxKind::GroundTruth { 8 } else { 7 };
        if fields.len() < needed {
            return Err(err(format!("expected at least {needed} fields, got {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("field {} is not a number: `{}`", i + 1, fields[i])))
        };
        let frame = num(0)?;
        if frame < 1.0 || frame.fract() != 0.0 {
            return Err(err(format!("invalid frame `{}`", fields[0])));
        }
        let id = num(1)?;
        let bbox = BBox2D::from_tlwh(num(2)?, num(3)?, num(4)?, num(5)?);
        let confidence = num(6)?;
        let (class, visibility) = match kind {
            BoxKind::GroundTruth => (
                Some(num(7)? as i64),
                if fields.len() > 8 { Some(num(8)?) } else { None },
            ),
            BoxKind::Detection => (None, None),
        };
        out.push(MotBox {
            frame: frame as usize,
            id: id as i64,
            bbox,
            confidence,
            class,
            visibility,
        });
    }
    Ok(out)
}

/// Detections grouped by frame `1..=frames`; rows beyond `frames` extend it.
pub fn detections_by_frame(rows: &[MotBox], frames: usize) -> Vec<Vec<BBox2D>> {
    let last = rows.iter().map(|r| r.frame).max().unwrap_or(0).max(frames);
    let mut out = vec![Vec::new(); last];
    for r in rows {
        out[r.frame - 1].push(r.bbox);
    }
    out
}

/// Labeled rows as trajectories.
pub fn to_trajectories(rows: &[MotBox], frames: usize) -> TrajectorySet {
    TrajectorySet::from_rows(frames, rows.iter().map(|r| (r.frame, r.id as u64, r.bbox)))
}

/// MOT result rows ordered by `(frame, id)`, two decimals.
pub fn write_results(set: &TrajectorySet) -> String {
    let mut out = String::new();
    for (k, id, b) in set.rows() {
        let _ = writeln!(
            out,
            "{k},{id},{:.2},{:.2},{:.2},{:.2},1,-1,-1,-1",
            b.left(),
            b.top(),
            b.width,
            b.height
        );
    }
    out
}

/// Inverse of [`write_results`].
pub fn parse_results(text: &str) -> Result<TrajectorySet> {
    let rows = parse_boxes(text, BoxKind::Detection)?;
    if let Some(r) = rows.iter().find(|r| r.id < 0) {
        return Err(Error::Parse {
            line: 0,
            message: format!("negative track id {} in results", r.id),
        });
    }
    Ok(to_trajectories(&rows, 0))
}

/// Ground-truth rows (consider flag 1, pedestrian class, full visibility).
pub fn write_ground_truth(set: &TrajectorySet) -> String {
    let mut out = String::new();
    for (k, id, b) in set.rows() {
        let _ = writeln!(
            out,
            "{k},{id},{:.2},{:.2},{:.2},{:.2},1,1,1",
            b.left(),
            b.top(),
            b.width,
            b.height
        );
    }
    out
}

/// Unlabeled detection rows with confidence 1.
pub fn write_detections(frames: &[Vec<BBox2D>]) -> String {
    let mut out = String::new();
    for (k, dets) in frames.iter().enumerate() {
        for b in dets {
            let _ = writeln!(
                out,
                "{},-1,{:.2},{:.2},{:.2},{:.2},1,-1,-1,-1",
                k + 1,
                b.left(),
                b.top(),
                b.width,
                b.height
            );
        }
    }
    out
}

pub fn write_seqinfo(meta: &SequenceMeta) -> String {
    format!(
        "[Sequence]\nname={}\nimDir=img1\nframeRate={}\nseqLength={}\nimWidth={}\nimHeight={}\nimExt=.jpg\n",
        meta.name, meta.frame_rate, meta.frame_count, meta.image_width, meta.image_height
    )
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// One sequence directory (`seqinfo.ini`, `gt/gt.txt`, `det/det.txt`).
#[derive(Debug, Clone)]
pub struct Sequence {
    pub dir: PathBuf,
    pub meta: SequenceMeta,
}

impl Sequence {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let meta = parse_seqinfo(&read(&dir.join("seqinfo.ini"))?)?;
        Ok(Self { dir, meta })
    }

    pub fn gt_path(&self) -> PathBuf {
        self.dir.join("gt").join("gt.txt")
    }

    pub fn det_path(&self) -> PathBuf {
        self.dir.join("det").join("det.txt")
    }

    pub fn ground_truth_rows(&self, filter: GtFilter) -> Result<Vec<MotBox>> {
        let rows = parse_boxes(&read(&self.gt_path())?, BoxKind::GroundTruth)?;
        Ok(rows.into_iter().filter(|r| filter.keeps(r)).collect())
    }

    pub fn ground_truth(&self, filter: GtFilter) -> Result<TrajectorySet> {
        Ok(to_trajectories(&self.ground_truth_rows(filter)?, self.meta.frame_count))
    }

    pub fn detections(&self) -> Result<Vec<Vec<BBox2D>>> {
        let rows = parse_boxes(&read(&self.det_path())?, BoxKind::Detection)?;
        Ok(detections_by_frame(&rows, self.meta.frame_count))
    }
}

/// Sequence directories under `root` (those holding a `seqinfo.ini`),
/// sorted by name. A `root` that is itself a sequence is returned alone.
pub fn discover_sequences(root: &Path) -> Result<Vec<Sequence>> {
    if root.join("seqinfo.ini").is_file() {
        return Ok(vec![Sequence::open(root)?]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("seqinfo.ini").is_file())
        .collect();
    dirs.sort();
    dirs.into_iter().map(Sequence::open).collect()
}
