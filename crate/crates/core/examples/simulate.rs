//! Samples a synthetic sequence from the point-object model and writes it in
//! MOT layout.

use spo_track::config::Config;
use spo_track::simulate::sample_scenario;
use spo_track::{commands, Result};

fn main() -> Result<()> {
    let mut cfg = Config::default();
    cfg.simulate.frames = 300;
    let model = commands::sequence_model(
        &cfg,
        &spo_track::mot::SequenceMeta {
            name: "demo".into(),
            frame_rate: cfg.simulate.frame_rate,
            image_width: cfg.simulate.image_width,
            image_height: cfg.simulate.image_height,
            frame_count: cfg.simulate.frames,
        },
    )?;
    println!(
        "P_S = {:.4}, expected births per frame = {:.4}",
        model.survival, model.birth.expected_count
    );

    let mean = cfg.population.mean_lifespan * cfg.population.birth_rate;
    let sc = sample_scenario(&model, cfg.simulate.frames, 7, mean)?;
    let card = sc.gt.cardinalities();
    let avg = card.iter().sum::<usize>() as f64 / card.len() as f64;
    let dets: usize = sc.detections.iter().map(Vec::len).sum();
    println!(
        "{} trajectories, mean {avg:.2} visible objects per frame, {dets} detections",
        sc.gt.len()
    );

    let out = std::env::temp_dir().join("spo-track-simulate-example");
    let dir = commands::simulate(&cfg, &out)?;
    println!("wrote {}", dir.display());
    Ok(())
}
