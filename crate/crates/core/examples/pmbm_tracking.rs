//! Runs the PMBM filter frame by frame on simulated detections and prints
//! what it reports.

use spo_track::model::{ModelParams, SpoModel};
use spo_track::pmbm::{FilterConfig, PmbmTracker};
use spo_track::simulate::sample_scenario;

fn main() -> spo_track::Result<()> {
    let params = ModelParams::default();
    let model = SpoModel::new(&params, params.camera(1920.0, 1080.0, 30.0)?)?;
    let sc = sample_scenario(
        &model,
        60,
        3,
        params.population.mean_lifespan * params.population.birth_rate,
    )?;

    let mut tracker = PmbmTracker::new(model, FilterConfig::default())?;
    for (k, boxes) in sc.detections.iter().enumerate() {
        let est = tracker.step(boxes)?;
        if (k + 1) % 10 == 0 {
            let post = tracker.posterior();
            println!(
                "frame {:>3}: {} detections, {} truth, {} estimates, {} globals, {} tracks, undetected mass {:.2}",
                k + 1,
                boxes.len(),
                sc.gt.frame(k + 1).len(),
                est.len(),
                post.globals.len(),
                post.tracks.len(),
                post.undetected.total_mass()
            );
            for e in est.iter().take(3) {
                println!("    #{} r={:.2} z={:.1} m", e.label, e.existence, e.state.mean()[4]);
            }
        }
    }
    Ok(())
}
