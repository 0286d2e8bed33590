//! Loads a configuration from TOML, applies command-line style overrides and
//! builds the per-sequence model from it.

use spo_track::config::Config;

const TOML: &str = r#"
[population]
mean_lifespan = 5.0

[filter]
max_globals = 10
"#;

fn main() -> spo_track::Result<()> {
    let mut cfg = Config::from_toml(TOML)?;
    cfg.set("detection.probability=0.7")?;
    cfg.set("simulate.name=DEMO")?;
    cfg.validate()?;

    let model = cfg.model();
    println!(
        "L = {}, P_D = {}, max_globals = {}",
        model.population.mean_lifespan, model.detection.probability, cfg.filter.max_globals
    );
    if let Err(e) = cfg.set("filter.unknown_key=1") {
        println!("rejected: {e}");
    }
    print!("{}", cfg.to_toml()?);
    Ok(())
}
