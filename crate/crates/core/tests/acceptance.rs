//! Acceptance criteria 1-9, one `[PASS]`/`[FAIL]` line each.
//!
//! Criteria 1-3 need the MOT-17 training set (`SPOTRACK_DATASET` pointing at
//! its `train` directory). Without it they are reported as `[FAIL]` with
//! "not evaluated" and do not fail the run; every other criterion must pass.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson as PoissonDist};

use spo_track::assignment::{murty_mbest, CostMatrix};
use spo_track::commands::{self, Engine, DATASET_ENV, POOLED};
use spo_track::config::Config;
use spo_track::identify::PopulationTally;
use spo_track::inference::{ukf_predict, ukf_update};
use spo_track::metrics::{gospa, tgospa, TgospaParams};
use spo_track::model::{BBox2D, BirthDesign, ModelParams, SpoModel, FRCNN_NOISE_SHAPE};
use spo_track::mot::{parse_results, write_results};
use spo_track::pmbm::{FilterConfig, PmbmTracker};
use spo_track::rfs::{mb_to_poisson, normalize_log_weights, prune_and_cap, GaussianDensity, GlobalHypothesis};
use spo_track::simulate::Simulator;
use spo_track::trajectory::TrajectorySet;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Required data is missing; reported as a failure but not fatal.
    NotEvaluated(String),
}

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dataset() -> Option<PathBuf> {
    std::env::var_os(DATASET_ENV).map(PathBuf::from).filter(|p| p.is_dir())
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

// ---------------------------------------------------------------- 1-3

const REFERENCE_POPULATION: [(&str, f64, f64, f64, f64); 8] = [
    ("MOT17-02", 30.968, 14.281, 9.990, 2.000),
    ("MOT17-04", 45.292, 10.680, 19.010, 1.171),
    ("MOT17-05", 8.264, 4.599, 3.715, 2.124),
    ("MOT17-09", 10.143, 4.375, 6.827, 1.143),
    ("MOT17-10", 19.632, 10.497, 7.508, 1.743),
    ("MOT17-11", 10.484, 4.822, 4.194, 1.933),
    ("MOT17-13", 15.523, 73.831, 4.234, 2.933),
    (POOLED, 21.124, 205.54, 7.481, 1.925),
];

fn criterion_1(root: &Path) -> Check {
    let cfg = Config::default();
    let start = Instant::now();
    let seqs = commands::select_sequences(root, &cfg.identify.detector).map_err(|e| e.to_string())?;
    let mut pooled = PopulationTally::default();
    let mut rows = BTreeMap::new();
    for s in &seqs {
        let gt = s.ground_truth(cfg.identify.gt_filter()).map_err(|e| e.to_string())?;
        let mut t = PopulationTally::default();
        t.add_sequence(&gt, s.meta.frame_rate);
        pooled.merge(&t);
        rows.insert(s.meta.name.clone(), t.finish().map_err(|e| e.to_string())?);
    }
    rows.insert(POOLED.to_string(), pooled.finish().map_err(|e| e.to_string())?);
    let secs = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    for (name, e_n, var_n, l, eta) in REFERENCE_POPULATION {
        let r = rows
            .iter()
            .find(|(k, _)| k.starts_with(name))
            .map(|(_, v)| v)
            .ok_or_else(|| format!("sequence {name} not found"))?;
        for (what, got, want, tol) in [
            ("L", r.mean_lifespan, l, 0.02),
            ("eta", r.birth_rate, eta, 0.02),
            ("E[n]", r.mean_cardinality, e_n, 0.02),
            ("Var[n]", r.var_cardinality, var_n, 0.05),
        ] {
            let e = rel_err(got, want);
            worst = worst.max(e / tol);
            ensure(e <= tol, || {
                format!("{name} {what} = {got:.3}, expected {want} ± {:.0}%", tol * 100.0)
            })?;
        }
    }
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "all rows within tolerance (worst at {:.0}% of band), {secs:.1} s",
        worst * 100.0
    ))
}

fn criterion_2(root: &Path) -> Check {
    let start = Instant::now();
    let rep = commands::identify(root, &Config::default(), 0).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let d = rep.detection.last().ok_or("no detection rows")?;
    ensure((d.p_d - 0.529).abs() <= 0.03, || format!("P_D = {:.3}", d.p_d))?;
    ensure((d.lambda - 1.552).abs() <= 0.15, || format!("lambda = {:.3}", d.lambda))?;
    for (i, got) in [d.r_xx, d.r_yy, d.r_ww, d.r_hh].into_iter().enumerate() {
        let want = 1e-5 * FRCNN_NOISE_SHAPE[i][i];
        let ratio = got / want;
        ensure((1.0 / 1.5..=1.5).contains(&ratio), || {
            format!("R_hat[{i}][{i}] ratio {ratio:.2}")
        })?;
    }
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("P_D={:.3} lambda={:.3} in {secs:.1} s", d.p_d, d.lambda))
}

const REFERENCE_PMBM: [(&str, f64, f64); 7] = [
    ("MOT17-02", 6553.0, 12028.0),
    ("MOT17-04", 26996.0, 20561.0),
    ("MOT17-05", 3318.0, 3599.0),
    ("MOT17-09", 3145.0, 2180.0),
    ("MOT17-10", 7025.0, 5814.0),
    ("MOT17-11", 5632.0, 3840.0),
    ("MOT17-13", 5306.0, 6336.0),
];

fn criterion_3(root: &Path) -> Check {
    let cfg = Config::default();
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut results = Vec::new();
    for engine in [Engine::Pmbm, Engine::Sort] {
        let dir = out.path().join(engine.to_string());
        let summary = commands::track(root, &cfg, engine, &dir, 0).map_err(|e| e.to_string())?;
        if let Some(s) = summary.iter().find(|s| s.seconds > 300.0) {
            return Err(format!("{engine} {} took {:.0} s", s.sequence, s.seconds));
        }
        results.push((engine.to_string(), dir));
    }
    let rows = commands::evaluate(&results, root, &cfg, 0).map_err(|e| e.to_string())?;
    let (mut card_wins, mut tp_wins) = (0, 0);
    for (name, tp, fn_) in REFERENCE_PMBM {
        let find = |eng: &str| {
            rows.iter()
                .find(|r| r.engine == eng && r.sequence.starts_with(name))
                .ok_or_else(|| format!("{eng} {name} missing"))
        };
        let (p, s) = (find("pmbm")?, find("sort")?);
        card_wins += usize::from(p.cardinality_mismatch < s.cardinality_mismatch);
        tp_wins += usize::from(p.tp > s.tp);
        ensure(rel_err(p.tp, tp) <= 0.15, || {
            format!("{name} |TP| = {:.0}, expected {tp} ± 15%", p.tp)
        })?;
        ensure(rel_err(p.fn_, fn_) <= 0.15, || {
            format!("{name} |FN| = {:.0}, expected {fn_} ± 15%", p.fn_)
        })?;
    }
    ensure(card_wins >= 5, || {
        format!("cardinality mismatch lower on only {card_wins}/7")
    })?;
    ensure(tp_wins >= 5, || format!("|TP| higher on only {tp_wins}/7"))?;
    Ok(format!("cardinality wins {card_wins}/7, TP wins {tp_wins}/7"))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Check {
    let mut p = ModelParams::default();
    p.detection.probability = 1.0;
    p.clutter.lambda = 0.0;
    p.population.mean_lifespan = 1e9;
    p.motion.q_z = 0.01;
    p.birth = BirthDesign {
        components: 1,
        max_speed: 0.3,
        ..BirthDesign::default()
    };
    let cam = p.camera(1920.0, 1080.0, 30.0).map_err(|e| e.to_string())?;
    let model = SpoModel::new(&p, cam.clone()).map_err(|e| e.to_string())?;
    let mut quiet = model.clone();
    quiet.birth = quiet.birth.with_expected_count(0.0);

    // First seed whose initial population is exactly one object.
    let frames = 500;
    let mut scenario = None;
    for seed in 0..100 {
        let mut sim = Simulator::new(quiet.clone(), 1.0, seed).map_err(|e| e.to_string())?;
        let dets: Vec<Vec<BBox2D>> = (0..frames).map(|_| sim.step().detections).collect();
        if dets.iter().all(|d| d.len() == 1) {
            scenario = Some(dets);
            break;
        }
    }
    let dets = scenario.ok_or("no single-object seed found")?;

    let mut tracker = PmbmTracker::new(model.clone(), FilterConfig::default()).map_err(|e| e.to_string())?;
    let mut oracle: Option<GaussianDensity> = None;
    let mut worst = 0.0f64;
    for (k, z) in dets.iter().enumerate() {
        let prior = match &oracle {
            None => model.birth.mixture.components()[0].clone(),
            Some(g) => ukf_predict(g, &model.transition).map_err(|e| e.to_string())?,
        };
        let (g, _) = ukf_update(&prior, &z[0], &cam, &model.measurement_noise).map_err(|e| e.to_string())?;
        let est = tracker.step(z).map_err(|e| format!("frame {}: {e}", k + 1))?;
        tracker.set_model(quiet.clone());
        ensure(est.len() == 1, || format!("frame {}: {} estimates", k + 1, est.len()))?;
        let dm = (est[0].state.mean() - g.mean()).amax();
        let dc = (est[0].state.cov() - g.cov()).amax();
        worst = worst.max(dm).max(dc);
        ensure(dm <= 1e-9 && dc <= 1e-9, || {
            format!("frame {}: mean diff {dm:e}, cov diff {dc:e}", k + 1)
        })?;
        oracle = Some(g);
    }
    Ok(format!("{frames} frames, max abs difference {worst:.1e}"))
}

// ---------------------------------------------------------------- 5

fn brute_force_costs(c: &CostMatrix) -> Vec<f64> {
    fn rec(c: &CostMatrix, row: usize, used: &mut [bool], acc: f64, out: &mut Vec<f64>) {
        if row == c.rows() {
            out.push(acc);
            return;
        }
        for j in 0..c.cols() {
            let v = c.get(row, j);
            if !used[j] && v.is_finite() {
                used[j] = true;
                rec(c, row + 1, used, acc + v, out);
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(c, 0, &mut vec![false; c.cols()], 0.0, &mut out);
    out.sort_by(f64::total_cmp);
    out
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 10;
    for case in 0..1000 {
        let rows = rng.gen_range(1..=5);
        let cols = rng.gen_range(rows..=8);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    f64::INFINITY
                } else {
                    // Coarse values make ties common.
                    (rng.gen_range(-20..20) as f64) / 4.0
                }
            })
            .collect();
        let c = CostMatrix::new(rows, cols, data).map_err(|e| e.to_string())?;
        let want: Vec<f64> = brute_force_costs(&c).into_iter().take(m).collect();
        let got: Vec<f64> = match murty_mbest(&c, m) {
            Ok(list) => list.iter().map(|a| a.cost).collect(),
            Err(_) if want.is_empty() => Vec::new(),
            Err(e) => return Err(format!("case {case}: {e}")),
        };
        ensure(got.len() == want.len(), || {
            format!("case {case}: {} vs {} solutions", got.len(), want.len())
        })?;
        for (g, w) in got.iter().zip(&want) {
            ensure((g - w).abs() <= 1e-9, || format!("case {case}: cost {g} vs {w}"))?;
        }
    }
    Ok("1000 matrices up to 5x8, M=10".into())
}

// ---------------------------------------------------------------- 6

fn random_set(rng: &mut ChaCha8Rng, frames: usize) -> TrajectorySet {
    let mut set = TrajectorySet::new(frames);
    for id in 1..=rng.gen_range(0..=3u64) {
        for k in 1..=frames {
            if rng.gen_bool(0.7) {
                let b = BBox2D::new(
                    rng.gen_range(0.0..40.0),
                    rng.gen_range(0.0..40.0),
                    rng.gen_range(10.0..30.0),
                    rng.gen_range(10.0..30.0),
                );
                set.insert(k, id, b);
            }
        }
    }
    set.frames = frames;
    set
}

fn criterion_6() -> Check {
    let params = TgospaParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = |a: &TrajectorySet, b: &TrajectorySet| tgospa(a, b, &params).map(|r| r.total).map_err(|e| e.to_string());
    for case in 0..500 {
        let frames = rng.gen_range(1..=4);
        let (x, y, z) = (
            random_set(&mut rng, frames),
            random_set(&mut rng, frames),
            random_set(&mut rng, frames),
        );
        let (xy, yx, yz, xz, xx) = (d(&x, &y)?, d(&y, &x)?, d(&y, &z)?, d(&x, &z)?, d(&x, &x)?);
        ensure(xx.abs() <= 1e-6, || format!("case {case}: d(x,x) = {xx}"))?;
        ensure((xy - yx).abs() <= 1e-6, || {
            format!("case {case}: asymmetric {xy} vs {yx}")
        })?;
        ensure(xz <= xy + yz + 1e-6, || {
            format!("case {case}: triangle {xz} > {xy} + {yz}")
        })?;
        if x != y {
            ensure(xy > 0.0, || format!("case {case}: distinct sets at distance 0"))?;
        }
    }
    for case in 0..500 {
        let (x, y) = (random_set(&mut rng, 1), random_set(&mut rng, 1));
        let t = d(&x, &y)?;
        let bx: Vec<BBox2D> = x.frame(1).into_iter().map(|(_, b)| b).collect();
        let by: Vec<BBox2D> = y.frame(1).into_iter().map(|(_, b)| b).collect();
        let g = gospa(&bx, &by, params.c, params.p, 2.0)
            .map_err(|e| e.to_string())?
            .value;
        ensure((t - g).abs() <= 1e-9, || {
            format!("single frame case {case}: TGOSPA {t} vs GOSPA {g}")
        })?;
    }
    let mut one = TrajectorySet::new(1);
    one.insert(1, 1, BBox2D::new(0.0, 0.0, 1.0, 1.0));
    let v = d(&one, &TrajectorySet::new(1))?;
    ensure(format!("{v:.3}") == "0.340", || format!("unmatched box costs {v}"))?;
    Ok(format!(
        "500 triples satisfy the axioms, 500 single-frame equalities, c/2^(1/p) = {v:.4}"
    ))
}

// ---------------------------------------------------------------- 7

/// Asymptotic Kolmogorov distribution tail with Stephens' small-sample correction.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

fn criterion_7() -> Check {
    let p = ModelParams {
        population: spo_track::model::PopulationParams {
            mean_lifespan: 7.481,
            birth_rate: 1.925,
        },
        ..Default::default()
    };
    let cam = p.camera(1920.0, 1080.0, 30.0).map_err(|e| e.to_string())?;
    let model = SpoModel::new(&p, cam).map_err(|e| e.to_string())?;
    let (beta, ps, dt) = (model.birth.expected_count, model.survival, model.period());
    let l_eta = 7.481 * 1.925;
    let steps = 100_000;
    let mut sim = Simulator::new(model, l_eta, 7).map_err(|e| e.to_string())?;
    let mut births = [0usize; 3];
    let mut counts = Vec::with_capacity(steps);
    for k in 0..steps {
        let s = sim.step();
        if k > 0 {
            births[s.births.min(2)] += 1;
        }
        counts.push(s.objects.len() as f64);
    }

    // Chi-square on birth counts, bins {0, 1, >=2}.
    let pois = PoissonDist::new(beta).map_err(|e| e.to_string())?;
    let n = (steps - 1) as f64;
    let probs = [pois.pmf(0), pois.pmf(1), 1.0 - pois.pmf(0) - pois.pmf(1)];
    let chi2: f64 = births
        .iter()
        .zip(probs)
        .map(|(&o, p)| (o as f64 - n * p).powi(2) / (n * p))
        .sum();
    let crit = ChiSquared::new(2.0).map_err(|e| e.to_string())?.inverse_cdf(0.99);
    ensure(chi2 < crit, || format!("birth chi-square {chi2:.2} >= {crit:.2}"))?;

    // KS on lifespans of objects born in the first half (all of which have
    // died by the end), jittered within their last frame.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let l = 7.481;
    let tail = 1.0 - (-dt / l).exp();
    let mut lives: Vec<f64> = sim
        .finished()
        .iter()
        .filter(|s| s.first <= steps / 2)
        .map(|s| {
            let v = -(l / dt) * (1.0 - rng.gen::<f64>() * tail).ln();
            (s.frames() as f64 - 1.0 + v) * dt
        })
        .collect();
    lives.sort_by(f64::total_cmp);
    let m = lives.len();
    let d = lives
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = 1.0 - (-t / l).exp();
            (f - i as f64 / m as f64)
                .abs()
                .max(((i + 1) as f64 / m as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    let p_ks = ks_p_value(d, m);
    ensure(p_ks > 0.01, || format!("lifespan KS D={d:.4} p={p_ks:.4} (n={m})"))?;

    // Stationary mean and variance against L·η; the population is an AR(1)
    // process with coefficient P_S.
    let k = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / k;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let sd_mean = (l_eta / k * (1.0 + ps) / (1.0 - ps)).sqrt();
    let sd_var = (l_eta * l_eta / k * (2.0 + 1.0 / l_eta) * (1.0 + ps * ps) / (1.0 - ps * ps)).sqrt();
    ensure((mean - l_eta).abs() <= 3.0 * sd_mean, || {
        format!("mean {mean:.3} vs {l_eta:.3} (sd {sd_mean:.3})")
    })?;
    ensure((var - l_eta).abs() <= 3.0 * sd_var, || {
        format!("variance {var:.3} vs {l_eta:.3} (sd {sd_var:.3})")
    })?;
    Ok(format!(
        "chi2={chi2:.2} (crit {crit:.2}), KS p={p_ks:.3} n={m}, mean={mean:.2}±{sd_mean:.2}, var={var:.2}±{sd_var:.2}"
    ))
}

// ---------------------------------------------------------------- 8

fn tce(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(tce(msg()))
    }
}

fn unit_density(mean: f64) -> GaussianDensity {
    GaussianDensity::new(
        nalgebra::DVector::from_element(2, mean),
        nalgebra::DMatrix::identity(2, 2),
    )
    .unwrap()
}

fn criterion_8() -> Check {
    let cases = 2000;
    let mut runner = TestRunner::new(PtConfig {
        cases,
        ..PtConfig::default()
    });

    runner
        .run(
            &(prop::collection::vec(-50.0..50.0f64, 1..20), -1e3..1e3f64),
            |(w, shift)| {
                let (n, _) = normalize_log_weights(&w).map_err(|e| tce(e.to_string()))?;
                let total: f64 = n.iter().map(|v| v.exp()).sum();
                check((total - 1.0).abs() < 1e-9, || format!("sums to {total}"))?;
                let shifted: Vec<f64> = w.iter().map(|v| v + shift).collect();
                let (ns, _) = normalize_log_weights(&shifted).map_err(|e| tce(e.to_string()))?;
                check(n.iter().zip(&ns).all(|(a, b)| (a - b).abs() < 1e-9), || {
                    "not shift-invariant".into()
                })?;
                let (nn, norm) = normalize_log_weights(&n).map_err(|e| tce(e.to_string()))?;
                check(
                    norm.abs() < 1e-9 && n.iter().zip(&nn).all(|(a, b)| (a - b).abs() < 1e-12),
                    || "not idempotent".into(),
                )
            },
        )
        .map_err(|e| e.to_string())?;

    let globals = prop::collection::vec(
        (-30.0..0.0f64, prop::collection::vec(prop::option::of(0usize..3), 3)),
        1..15,
    );
    runner
        .run(
            &(globals, -20.0..-1.0f64, 1usize..10, -100.0..100.0f64),
            |(g, thr, cap, shift)| {
                let hyps: Vec<GlobalHypothesis> = g
                    .into_iter()
                    .map(|(log_weight, assignment)| GlobalHypothesis { log_weight, assignment })
                    .collect();
                let once = prune_and_cap(hyps.clone(), thr, cap);
                check(!once.is_empty() && once.len() <= cap, || {
                    format!("{} survivors, cap {cap}", once.len())
                })?;
                let lw: Vec<f64> = once.iter().map(|h| h.log_weight).collect();
                let (_, norm) = normalize_log_weights(&lw).map_err(|e| tce(e.to_string()))?;
                check(norm.abs() < 1e-9, || format!("log normalizer {norm}"))?;
                let twice = prune_and_cap(once.clone(), thr, cap);
                check(
                    twice.len() == once.len()
                        && twice
                            .iter()
                            .zip(&once)
                            .all(|(a, b)| a.assignment == b.assignment && (a.log_weight - b.log_weight).abs() < 1e-9),
                    || "not idempotent".into(),
                )?;
                let shifted: Vec<GlobalHypothesis> = hyps
                    .iter()
                    .map(|h| GlobalHypothesis {
                        log_weight: h.log_weight + shift,
                        assignment: h.assignment.clone(),
                    })
                    .collect();
                let s = prune_and_cap(shifted, thr, cap);
                check(
                    s.len() == once.len()
                        && s.iter()
                            .zip(&once)
                            .all(|(a, b)| a.assignment == b.assignment && (a.log_weight - b.log_weight).abs() < 1e-9),
                    || "not shift-invariant".into(),
                )
            },
        )
        .map_err(|e| e.to_string())?;

    runner
        .run(&prop::collection::vec((0.0..=1.0f64, -5.0..5.0f64), 0..12), |comps| {
            let mb: Vec<(f64, GaussianDensity)> = comps.iter().map(|&(r, m)| (r, unit_density(m))).collect();
            let fit = mb_to_poisson(&mb).map_err(|e| tce(e.to_string()))?;
            let sum: f64 = comps.iter().map(|c| c.0).sum();
            check((fit.beta - sum).abs() < 1e-12, || format!("beta {} vs {sum}", fit.beta))?;
            if fit.degenerate {
                return check(fit.spatial.is_empty() && sum == 0.0, || "degenerate with mass".into());
            }
            check((fit.spatial.total_weight() - 1.0).abs() < 1e-9, || {
                "spatial density not normalized".into()
            })?;
            // Converting the fitted intensity again changes nothing.
            let again: Vec<(f64, GaussianDensity)> =
                fit.spatial.iter().map(|(w, d)| (w * fit.beta, d.clone())).collect();
            let refit = mb_to_poisson(&again).map_err(|e| tce(e.to_string()))?;
            check(
                (refit.beta - fit.beta).abs() < 1e-12
                    && refit
                        .spatial
                        .weights()
                        .iter()
                        .zip(fit.spatial.weights())
                        .all(|(a, b)| (a - b).abs() < 1e-12),
                || "not idempotent".into(),
            )
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("3 property suites x {cases} cases"))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Check {
    let mut runner = TestRunner::new(PtConfig {
        cases: 1000,
        ..PtConfig::default()
    });
    let row = (
        1usize..60,
        0u64..20,
        -50_000i64..250_000,
        -50_000i64..150_000,
        1i64..50_000,
        1i64..80_000,
    );
    runner
        .run(&prop::collection::vec(row, 0..80), |rows| {
            let set = TrajectorySet::from_rows(
                0,
                rows.into_iter().map(|(k, id, l, t, w, h)| {
                    (
                        k,
                        id,
                        BBox2D::from_tlwh(l as f64 / 100.0, t as f64 / 100.0, w as f64 / 100.0, h as f64 / 100.0),
                    )
                }),
            );
            let back = parse_results(&write_results(&set)).map_err(|e| tce(e.to_string()))?;
            check(back == set, || "round trip changed the set".into())
        })
        .map_err(|e| format!("{e}"))?;
    Ok("1000 random trajectory sets".into())
}

// ---------------------------------------------------------------- driver

fn main() {
    let data = dataset();
    type Job = Box<dyn FnOnce() -> Outcome + Send>;
    let needs_data = |f: fn(&Path) -> Check| -> Job {
        let data = data.clone();
        Box::new(move || match data {
            Some(root) => match f(&root) {
                Ok(s) => Outcome::Pass(s),
                Err(s) => Outcome::Fail(s),
            },
            None => Outcome::NotEvaluated(format!("MOT-17 train data unavailable; set {DATASET_ENV}")),
        })
    };
    let plain = |f: fn() -> Check| -> Job {
        Box::new(move || match f() {
            Ok(s) => Outcome::Pass(s),
            Err(s) => Outcome::Fail(s),
        })
    };
    let criteria: Vec<(&str, Job)> = vec![
        ("population statistics on MOT-17", needs_data(criterion_1)),
        ("detection statistics", needs_data(criterion_2)),
        ("PMBM beats SORT on MOT-17", needs_data(criterion_3)),
        ("degenerate PMBM equals a UKF chain", plain(criterion_4)),
        ("Murty equals brute-force M-best", plain(criterion_5)),
        ("TGOSPA metric axioms", plain(criterion_6)),
        ("simulator statistics", plain(criterion_7)),
        ("RFS algebra properties", plain(criterion_8)),
        ("MOT I/O round trip", plain(criterion_9)),
    ];

    let outcomes: Vec<(String, Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .into_iter()
            .map(|(name, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
                        .unwrap_or_else(|_| Outcome::Fail("panicked".into()));
                    (name.to_string(), o, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread"))
            .collect()
    });

    let mut failed = 0;
    for (i, (name, outcome, secs)) in outcomes.iter().enumerate() {
        match outcome {
            Outcome::Pass(d) => println!("[PASS] {} {name}: {d} ({secs:.1} s)", i + 1),
            Outcome::Fail(d) => {
                failed += 1;
                println!("[FAIL] {} {name}: {d}", i + 1);
            }
            Outcome::NotEvaluated(d) => println!("[FAIL] {} {name}: not evaluated, {d}", i + 1),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
