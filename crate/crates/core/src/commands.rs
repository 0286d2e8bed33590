//! Library side of the command-line tool: identification, tracking,
//! evaluation and simulation over MOT-style dataset directories.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::identify::{match_frames, pd_vs_visibility, DetectionTally, FrameMatches, PopulationTally, VisibilityBin};
use crate::metrics::{cardinality_mismatch, tgospa};
use crate::model::{BBox2D, SpoModel};
use crate::mot::{
    discover_sequences, parse_results, write_detections, write_ground_truth, write_results, write_seqinfo, Sequence,
    SequenceMeta,
};
use crate::pmbm::run_sequence;
use crate::report::{bar_chart_svg, write_csv, write_text};
use crate::simulate::sample_scenario;
use crate::sort::sort_track;

/// Environment variable naming the default dataset root.
pub const DATASET_ENV: &str = "SPOTRACK_DATASET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Pmbm,
    Sort,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pmbm" => Ok(Engine::Pmbm),
            "sort" => Ok(Engine::Sort),
            _ => Err(Error::Config(format!("unknown engine `{s}` (expected pmbm or sort)"))),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Pmbm => "pmbm",
            Engine::Sort => "sort",
        })
    }
}

/// Runs `f` on a pool of `jobs` threads; `0` picks the rayon default.
fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Sequences under `root`, restricted to names ending in `-<detector>` when
/// any such name exists.
pub fn select_sequences(root: &Path, detector: &str) -> Result<Vec<Sequence>> {
    let all = discover_sequences(root)?;
    if all.is_empty() {
        return Err(Error::stage(
            "discover",
            format!("no sequences under {}", root.display()),
        ));
    }
    let suffix = format!("-{detector}");
    if detector.is_empty() || !all.iter().any(|s| s.meta.name.ends_with(&suffix)) {
        return Ok(all);
    }
    Ok(all.into_iter().filter(|s| s.meta.name.ends_with(&suffix)).collect())
}

pub fn sequence_model(cfg: &Config, meta: &SequenceMeta) -> Result<SpoModel> {
    let params = cfg.model();
    let cam = params.camera(meta.image_width, meta.image_height, meta.frame_rate)?;
    SpoModel::new(&params, cam)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationRow {
    pub sequence: String,
    pub frames: usize,
    pub objects: usize,
    pub mean_lifespan: f64,
    pub birth_rate: f64,
    pub l_eta: f64,
    pub mean_cardinality: f64,
    pub var_cardinality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRow {
    pub sequence: String,
    pub gt_count: usize,
    pub matched: usize,
    pub clutter: usize,
    pub frames: usize,
    pub p_d: f64,
    pub lambda: f64,
    pub r_xx: f64,
    pub r_xy: f64,
    pub r_xw: f64,
    pub r_xh: f64,
    pub r_yy: f64,
    pub r_yw: f64,
    pub r_yh: f64,
    pub r_ww: f64,
    pub r_wh: f64,
    pub r_hh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyReport {
    /// One row per sequence, then the pooled `entire-dataset` row.
    pub population: Vec<PopulationRow>,
    pub detection: Vec<DetectionRow>,
    pub visibility: Vec<VisibilityBin>,
}

/// Name of the pooled row in identification tables.
pub const POOLED: &str = "entire-dataset";

struct SequenceEvidence {
    name: String,
    population: PopulationTally,
    detection: DetectionTally,
    matches: Vec<FrameMatches>,
    visibility: Vec<Vec<f64>>,
}

fn gather(seq: &Sequence, cfg: &Config) -> Result<SequenceEvidence> {
    let meta = &seq.meta;
    let rows = seq.ground_truth_rows(cfg.identify.gt_filter())?;
    let frames = meta.frame_count;
    let mut gt = vec![Vec::new(); frames];
    let mut visibility = vec![Vec::new(); frames];
    let mut sorted = rows.clone();
    sorted.sort_by_key(|r| (r.frame, r.id));
    for r in &sorted {
        if (1..=frames).contains(&r.frame) {
            gt[r.frame - 1].push(r.bbox);
            visibility[r.frame - 1].push(r.visibility.unwrap_or(1.0));
        }
    }
    let mut det = seq.detections()?;
    det.truncate(frames);
    let matches = match_frames(&gt, &det, cfg.identify.min_iou);
    let gamma = meta.image_width.min(meta.image_height);
    let mut detection = DetectionTally::default();
    detection.add_sequence(&gt, &det, &matches, gamma);
    let mut population = PopulationTally::default();
    population.add_sequence(&crate::mot::to_trajectories(&sorted, frames), meta.frame_rate);
    Ok(SequenceEvidence {
        name: meta.name.clone(),
        population,
        detection,
        matches,
        visibility,
    })
}

fn population_row(name: &str, tally: &PopulationTally) -> Result<PopulationRow> {
    let s = tally.finish()?;
    Ok(PopulationRow {
        sequence: name.to_string(),
        frames: s.frames,
        objects: s.objects,
        mean_lifespan: s.mean_lifespan,
        birth_rate: s.birth_rate,
        l_eta: s.stationary_mean(),
        mean_cardinality: s.mean_cardinality,
        var_cardinality: s.var_cardinality,
    })
}

fn detection_row(name: &str, tally: &DetectionTally) -> Result<DetectionRow> {
    let s = tally.finish()?;
    let r = s.r_hat;
    Ok(DetectionRow {
        sequence: name.to_string(),
        gt_count: s.gt_count,
        matched: s.matched,
        clutter: s.clutter,
        frames: s.frames,
        p_d: s.p_d,
        lambda: s.lambda,
        r_xx: r[0][0],
        r_xy: r[0][1],
        r_xw: r[0][2],
        r_xh: r[0][3],
        r_yy: r[1][1],
        r_yw: r[1][2],
        r_yh: r[1][3],
        r_ww: r[2][2],
        r_wh: r[2][3],
        r_hh: r[3][3],
    })
}

/// Estimates the model parameters from every selected sequence.
pub fn identify(root: &Path, cfg: &Config, jobs: usize) -> Result<IdentifyReport> {
    cfg.validate()?;
    let seqs = select_sequences(root, &cfg.identify.detector)?;
    let evidence = with_jobs(jobs, || {
        seqs.par_iter()
            .map(|s| gather(s, cfg).map_err(|e| Error::stage("identify", format!("{}: {e}", s.meta.name))))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut population = Vec::new();
    let mut detection = Vec::new();
    let mut pooled_pop = PopulationTally::default();
    let mut pooled_det = DetectionTally::default();
    let mut all_matches = Vec::new();
    let mut all_vis = Vec::new();
    for ev in &evidence {
        let stage = |e: Error| Error::stage("identify", format!("{}: {e}", ev.name));
        population.push(population_row(&ev.name, &ev.population).map_err(stage)?);
        detection.push(detection_row(&ev.name, &ev.detection).map_err(stage)?);
        pooled_pop.merge(&ev.population);
        pooled_det.merge(&ev.detection);
        all_matches.extend(ev.matches.iter().cloned());
        all_vis.extend(ev.visibility.iter().cloned());
    }
    let stage = |e: Error| Error::stage("identify", format!("{POOLED}: {e}"));
    population.push(population_row(POOLED, &pooled_pop).map_err(stage)?);
    detection.push(detection_row(POOLED, &pooled_det).map_err(stage)?);
    let visibility = pd_vs_visibility(&all_matches, &all_vis, cfg.identify.visibility_bins)?;
    Ok(IdentifyReport {
        population,
        detection,
        visibility,
    })
}

/// Writes `population.csv`, `detection.csv` and `pd_visibility.csv`.
pub fn write_identify(report: &IdentifyReport, out_dir: &Path) -> Result<()> {
    write_csv(&out_dir.join("population.csv"), &report.population)?;
    write_csv(&out_dir.join("detection.csv"), &report.detection)?;
    write_csv(&out_dir.join("pd_visibility.csv"), &report.visibility)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSummary {
    pub sequence: String,
    pub engine: String,
    pub frames: usize,
    pub trajectories: usize,
    pub boxes: usize,
    pub seconds: f64,
}

pub fn track_frames(
    engine: Engine,
    frames: &[Vec<BBox2D>],
    cfg: &Config,
    meta: &SequenceMeta,
) -> Result<crate::trajectory::TrajectorySet> {
    match engine {
        Engine::Pmbm => run_sequence(frames, &sequence_model(cfg, meta)?, &cfg.filter),
        Engine::Sort => sort_track(frames, &cfg.sort),
    }
}

/// Tracks every selected sequence and writes `<out_dir>/<sequence>.txt`.
pub fn track(root: &Path, cfg: &Config, engine: Engine, out_dir: &Path, jobs: usize) -> Result<Vec<TrackSummary>> {
    cfg.validate()?;
    let seqs = select_sequences(root, &cfg.identify.detector)?;
    with_jobs(jobs, || {
        seqs.par_iter()
            .map(|s| {
                let name = &s.meta.name;
                let stage = |e: Error| Error::stage("track", format!("{name}: {e}"));
                let start = Instant::now();
                let mut frames = s.detections().map_err(stage)?;
                frames.resize(s.meta.frame_count, Vec::new());
                let set = track_frames(engine, &frames, cfg, &s.meta).map_err(stage)?;
                let seconds = start.elapsed().as_secs_f64();
                log::info!("{engine} {name}: {} frames in {seconds:.2} s", frames.len());
                write_text(&out_dir.join(format!("{name}.txt")), &write_results(&set)).map_err(stage)?;
                Ok(TrackSummary {
                    sequence: name.clone(),
                    engine: engine.to_string(),
                    frames: frames.len(),
                    trajectories: set.len(),
                    boxes: set.total_boxes(),
                    seconds,
                })
            })
            .collect()
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub engine: String,
    pub sequence: String,
    pub tgospa: f64,
    pub localization: f64,
    pub tp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fp: f64,
    pub switches: f64,
    pub cardinality_mismatch: usize,
    pub estimated_boxes: usize,
    pub truth_boxes: usize,
}

/// Scores each `(label, results dir)` against the ground truth under `gt_root`.
pub fn evaluate(results: &[(String, PathBuf)], gt_root: &Path, cfg: &Config, jobs: usize) -> Result<Vec<EvalRow>> {
    cfg.validate()?;
    let seqs = select_sequences(gt_root, &cfg.identify.detector)?;
    let jobs_list: Vec<(&String, &PathBuf, &Sequence)> = results
        .iter()
        .flat_map(|(label, dir)| seqs.iter().map(move |s| (label, dir, s)))
        .collect();
    with_jobs(jobs, || {
        jobs_list
            .par_iter()
            .map(|(label, dir, s)| {
                let name = &s.meta.name;
                let stage = |e: Error| Error::stage("evaluate", format!("{label}/{name}: {e}"));
                let path = dir.join(format!("{name}.txt"));
                if !path.is_file() {
                    return Err(Error::stage(
                        "evaluate",
                        format!("{label}: missing results for sequence {name} ({})", path.display()),
                    ));
                }
                let mut est = parse_results(&crate::mot::read(&path).map_err(stage)?).map_err(stage)?;
                let truth = s.ground_truth(cfg.identify.gt_filter()).map_err(stage)?;
                if est.frames > truth.frames {
                    return Err(Error::stage(
                        "evaluate",
                        format!(
                            "{label}/{name}: results reach frame {} but the sequence has {}",
                            est.frames, truth.frames
                        ),
                    ));
                }
                est.frames = truth.frames;
                let r = tgospa(&est, &truth, &cfg.metrics).map_err(stage)?;
                Ok(EvalRow {
                    engine: label.to_string(),
                    sequence: name.clone(),
                    tgospa: r.total,
                    localization: r.localization,
                    tp: r.tp_count,
                    fn_: r.fn_count,
                    fp: r.fp_count,
                    switches: r.switches,
                    cardinality_mismatch: cardinality_mismatch(&est, &truth),
                    estimated_boxes: est.total_boxes(),
                    truth_boxes: truth.total_boxes(),
                })
            })
            .collect()
    })?
}

/// Writes `evaluation.csv` plus `tgospa.svg` and `cardinality.svg`.
pub fn write_evaluation(rows: &[EvalRow], out_dir: &Path) -> Result<()> {
    write_csv(&out_dir.join("evaluation.csv"), rows)?;
    let mut sequences: Vec<String> = Vec::new();
    let mut engines: Vec<String> = Vec::new();
    for r in rows {
        if !sequences.contains(&r.sequence) {
            sequences.push(r.sequence.clone());
        }
        if !engines.contains(&r.engine) {
            engines.push(r.engine.clone());
        }
    }
    let series = |f: &dyn Fn(&EvalRow) -> f64| -> Vec<(String, Vec<f64>)> {
        engines
            .iter()
            .map(|e| {
                let v = sequences
                    .iter()
                    .map(|s| {
                        rows.iter()
                            .find(|r| &r.engine == e && &r.sequence == s)
                            .map_or(f64::NAN, f)
                    })
                    .collect();
                (e.clone(), v)
            })
            .collect()
    };
    write_text(
        &out_dir.join("tgospa.svg"),
        &bar_chart_svg("TGOSPA", &sequences, &series(&|r| r.tgospa)),
    )?;
    write_text(
        &out_dir.join("cardinality.svg"),
        &bar_chart_svg(
            "Cardinality mismatch",
            &sequences,
            &series(&|r| r.cardinality_mismatch as f64),
        ),
    )
}

/// Samples one synthetic sequence and writes it in MOT layout under
/// `<out_dir>/<name>/`, with the effective configuration in `params.toml`.
pub fn simulate(cfg: &Config, out_dir: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let sim = &cfg.simulate;
    if sim.frames == 0 {
        return Err(Error::stage("simulate", "frames must be >= 1"));
    }
    let meta = SequenceMeta {
        name: sim.name.clone(),
        frame_rate: sim.frame_rate,
        image_width: sim.image_width,
        image_height: sim.image_height,
        frame_count: sim.frames,
    };
    let model = sequence_model(cfg, &meta)?;
    let initial = sim
        .initial_mean
        .unwrap_or(cfg.population.mean_lifespan * cfg.population.birth_rate);
    let scenario = sample_scenario(&model, sim.frames, sim.seed, initial)?;
    let dir = out_dir.join(&sim.name);
    write_text(&dir.join("seqinfo.ini"), &write_seqinfo(&meta))?;
    write_text(&dir.join("gt").join("gt.txt"), &write_ground_truth(&scenario.gt))?;
    write_text(
        &dir.join("det").join("det.txt"),
        &write_detections(&scenario.detections),
    )?;
    write_text(&dir.join("params.toml"), &cfg.to_toml()?)?;
    Ok(dir)
}
