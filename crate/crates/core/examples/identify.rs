//! Estimates model parameters from a simulated dataset and compares them with
//! the values used to generate it.

use spo_track::commands::{self, POOLED};
use spo_track::config::Config;

fn main() -> spo_track::Result<()> {
    let mut cfg = Config::default();
    cfg.simulate.frames = 10_000;
    // A nearly constant depth keeps every object in front of the camera.
    cfg.motion.q_z = 1e-4;
    cfg.birth.max_speed = 0.3;
    cfg.identify.min_iou = 0.6;
    let root = std::env::temp_dir().join("spo-track-identify-example");
    let _ = std::fs::remove_dir_all(&root);
    commands::simulate(&cfg, &root)?;

    let rep = commands::identify(&root, &cfg, 0)?;
    let pop = rep
        .population
        .iter()
        .find(|r| r.sequence == POOLED)
        .expect("pooled row");
    let det = rep.detection.last().expect("pooled row");
    println!("             true    estimated");
    println!(
        "L [s]      {:>7.3}  {:>9.3}",
        cfg.population.mean_lifespan, pop.mean_lifespan
    );
    println!("eta [1/s]  {:>7.3}  {:>9.3}", cfg.population.birth_rate, pop.birth_rate);
    println!("P_D        {:>7.3}  {:>9.3}", cfg.detection.probability, det.p_d);
    println!("lambda     {:>7.3}  {:>9.3}", cfg.clutter.lambda, det.lambda);
    println!(
        "E[n] = {:.2}, Var[n] = {:.2}",
        pop.mean_cardinality, pop.var_cardinality
    );
    commands::write_identify(&rep, &root.join("identify"))?;
    println!("tables in {}", root.join("identify").display());
    Ok(())
}
