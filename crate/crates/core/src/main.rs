use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spo_track::commands::{self, Engine, DATASET_ENV};
use spo_track::config::Config;
use spo_track::report::write_csv;
use spo_track::{Error, Result};

#[derive(Parser)]
#[command(
    name = "spo-track",
    version,
    about = "Monocular multi-object tracking with a PMBM filter"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set filter.max_globals=40`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Sequences processed in parallel (0 = all cores).
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate model parameters from ground truth and detections.
    Identify {
        #[arg(env = DATASET_ENV)]
        dataset: PathBuf,
        /// Detector suffix of the sequences to use.
        #[arg(long)]
        detector: Option<String>,
        #[arg(long, default_value = "identify-out")]
        out: PathBuf,
    },
    /// Run a tracker over every sequence and write MOT result files.
    Track {
        #[arg(env = DATASET_ENV)]
        dataset: PathBuf,
        #[arg(long, default_value = "pmbm", value_parser = parse_engine)]
        engine: Engine,
        #[arg(long)]
        detector: Option<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Score result directories against ground truth with TGOSPA.
    Evaluate {
        #[arg(env = DATASET_ENV)]
        gt: PathBuf,
        /// `LABEL=DIR` pairs, one per engine.
        #[arg(long = "results", value_name = "LABEL=DIR", required = true, value_parser = parse_results_arg)]
        results: Vec<(String, PathBuf)>,
        #[arg(long)]
        detector: Option<String>,
        #[arg(long, default_value = "evaluation")]
        out: PathBuf,
    },
    /// Sample a synthetic sequence in MOT layout.
    Simulate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long, default_value = "synthetic")]
        out: PathBuf,
    },
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_results_arg(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((label, dir)) if !label.is_empty() => Ok((label.to_string(), dir.into())),
        _ => Ok((
            PathBuf::from(s)
                .file_name()
                .map_or("results".into(), |n| n.to_string_lossy().into_owned()),
            s.into(),
        )),
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.set(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::Config(
            "no subcommand given (identify, track, evaluate, simulate)".into(),
        ));
    };
    match command {
        Command::Identify { dataset, detector, out } => {
            if let Some(d) = detector {
                cfg.identify.detector = d;
            }
            let rep = commands::identify(&dataset, &cfg, cli.jobs)?;
            commands::write_identify(&rep, &out)?;
            for r in &rep.population {
                println!(
                    "{:<20} L={:.3} s  eta={:.3}/s  L*eta={:.3}  E[n]={:.3}  Var[n]={:.3}",
                    r.sequence, r.mean_lifespan, r.birth_rate, r.l_eta, r.mean_cardinality, r.var_cardinality
                );
            }
            if let Some(d) = rep.detection.last() {
                println!("P_D={:.3}  lambda={:.3}", d.p_d, d.lambda);
            }
        }
        Command::Track {
            dataset,
            engine,
            detector,
            out,
        } => {
            if let Some(d) = detector {
                cfg.identify.detector = d;
            }
            let summary = commands::track(&dataset, &cfg, engine, &out, cli.jobs)?;
            write_csv(&out.join("timing.csv"), &summary)?;
            for s in &summary {
                println!(
                    "{:<20} {:>6} frames {:>5} tracks {:8.2} s",
                    s.sequence, s.frames, s.trajectories, s.seconds
                );
            }
        }
        Command::Evaluate {
            gt,
            results,
            detector,
            out,
        } => {
            if let Some(d) = detector {
                cfg.identify.detector = d;
            }
            let rows = commands::evaluate(&results, &gt, &cfg, cli.jobs)?;
            commands::write_evaluation(&rows, &out)?;
            for r in &rows {
                println!(
                    "{:<8} {:<20} tgospa={:.2} tp={:.0} fn={:.0} fp={:.0} sw={:.1} card={}",
                    r.engine, r.sequence, r.tgospa, r.tp, r.fn_, r.fp, r.switches, r.cardinality_mismatch
                );
            }
        }
        Command::Simulate { seed, frames, out } => {
            if let Some(s) = seed {
                cfg.simulate.seed = s;
            }
            if let Some(k) = frames {
                cfg.simulate.frames = k;
            }
            let dir = commands::simulate(&cfg, &out)?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
