//! Tracks the same simulated sequences with SORT and with the PMBM filter and
//! scores both with TGOSPA.

use spo_track::metrics::{cardinality_mismatch, tgospa, TgospaParams};
use spo_track::model::{ModelParams, SpoModel};
use spo_track::pmbm::{run_sequence, FilterConfig};
use spo_track::simulate::sample_scenario;
use spo_track::sort::{sort_track, SortConfig};

fn main() -> spo_track::Result<()> {
    let params = ModelParams::default();
    let model = SpoModel::new(&params, params.camera(1920.0, 1080.0, 30.0)?)?;
    let metric = TgospaParams::default();
    println!("seed engine  tgospa      tp     fn     fp  switches card");
    for seed in 1..=3 {
        let sc = sample_scenario(
            &model,
            100,
            seed,
            params.population.mean_lifespan * params.population.birth_rate,
        )?;
        let runs = [
            ("pmbm", run_sequence(&sc.detections, &model, &FilterConfig::default())?),
            ("sort", sort_track(&sc.detections, &SortConfig::default())?),
        ];
        for (name, est) in &runs {
            let r = tgospa(est, &sc.gt, &metric)?;
            println!(
                "{seed:>4} {name:<6} {:>7.1} {:>7.0} {:>6.0} {:>6.0} {:>9.1} {:>4}",
                r.total,
                r.tp_count,
                r.fn_count,
                r.fp_count,
                r.switches,
                cardinality_mismatch(est, &sc.gt)
            );
        }
    }
    Ok(())
}
