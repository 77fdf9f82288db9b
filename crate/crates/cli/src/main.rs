use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ecoevo::checkpoint;
use ecoevo::config::{load_config, render_config};
use ecoevo::engine::{NeuralPolicy, SimConfig};
use ecoevo::export::CsvSink;
use ecoevo::lab::{self, Density, LabConfig};
use ecoevo::runner::{self, RunOptions};

#[derive(Parser)]
#[command(name = "ecoevo", version, about = "Non-episodic neuroevolution grid world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the natural environment.
    Natural(NaturalArgs),
    /// Evaluate genomes from a checkpoint in lab environments.
    Lab(LabArgs),
    /// Print the default configuration file.
    Defaults,
}

#[derive(clap::Args)]
struct NaturalArgs {
    /// TOML configuration; missing keys take their default values.
    #[arg(long, env = "ECOEVO_CONFIG", conflicts_with = "resume")]
    config: Option<PathBuf>,
    #[arg(long, env = "ECOEVO_SEED", conflicts_with = "resume")]
    seed: Option<u64>,
    /// Total number of steps, counted from the start of the run.
    #[arg(long, env = "ECOEVO_STEPS")]
    steps: Option<u64>,
    #[arg(long, env = "ECOEVO_OUT")]
    out: PathBuf,
    #[arg(long, env = "ECOEVO_CHECKPOINT_EVERY")]
    checkpoint_every: Option<u64>,
    /// Continue from this checkpoint, appending to the metric files in --out.
    #[arg(long, env = "ECOEVO_RESUME")]
    resume: Option<PathBuf>,
    /// Steps between progress lines on stderr; 0 silences them.
    #[arg(long, default_value_t = 10_000)]
    progress_every: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Greediness,
    Pressure,
}

#[derive(clap::Args)]
struct LabArgs {
    #[arg(long, env = "ECOEVO_CHECKPOINT")]
    checkpoint: PathBuf,
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long, default_value_t = 50)]
    genomes: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, env = "ECOEVO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "ECOEVO_OUT")]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trial_length: u64,
}

/// Failure with a specific exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Natural(args) => natural(args),
        Command::Lab(args) => lab(args),
        Command::Defaults => {
            print!("{}", render_config(&SimConfig::default()));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit(code, _)) => ExitCode::from(*code),
                None => ExitCode::FAILURE,
            }
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!(Exit(2, format!("{what} {} not found", path.display())));
    }
    Ok(())
}

fn natural(args: NaturalArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let ckpt_dir = args.out.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)
        .with_context(|| format!("creating {}", ckpt_dir.display()))?;
    let opts = RunOptions {
        checkpoint_dir: Some(ckpt_dir.clone()),
        checkpoint_every: args.checkpoint_every.filter(|&n| n > 0),
        progress_every: (args.progress_every > 0).then_some(args.progress_every),
    };

    let (start, resumed) = match &args.resume {
        Some(path) => {
            require_file(path, "checkpoint")?;
            let mut ck = checkpoint::load(path)?;
            if let Some(steps) = args.steps {
                ck.simulation.set_total_steps(steps);
            }
            (ck, true)
        }
        None => {
            let mut cfg = match &args.config {
                Some(path) => {
                    require_file(path, "config")?;
                    load_config(path)?
                }
                None => SimConfig::default(),
            };
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(steps) = args.steps {
                cfg.total_steps = steps;
            }
            let sim = ecoevo::engine::Simulation::new(cfg)?;
            let tracker = ecoevo::metrics::WindowTracker::new(&sim);
            (
                checkpoint::Checkpoint {
                    simulation: sim,
                    tracker,
                },
                false,
            )
        }
    };

    let start_step = start.simulation.current_step();
    let will_step = start.simulation.config().total_steps > start_step;
    let summary = if will_step {
        let mut sink = if resumed {
            CsvSink::resume(&args.out, start_step)?
        } else {
            CsvSink::create(&args.out)?
        };
        let (_, summary) = runner::run_from(start, &mut sink, &opts)?;
        sink.flush()?;
        summary
    } else {
        let mut sink = ecoevo::metrics::NullSink;
        runner::run_from(start, &mut sink, &opts)?.1
    };

    println!("final step: {}", summary.final_step);
    println!("population: {}", summary.population);
    println!("resources: {}", summary.resources);
    match summary.extinct_at {
        Some(step) => println!("extinct after step: {step}"),
        None => println!("extinct: no"),
    }
    println!(
        "checkpoint: {}",
        ckpt_dir.join(runner::FINAL_CHECKPOINT).display()
    );
    println!("digest: {}", summary.digest);
    Ok(())
}

fn lab(args: LabArgs) -> Result<()> {
    require_file(&args.checkpoint, "checkpoint")?;
    let ck = checkpoint::load(&args.checkpoint)?;
    let cfg = LabConfig {
        genomes: args.genomes,
        trials: args.trials,
        seed: args.seed,
        trial_length: args.trial_length,
        ..LabConfig::default()
    };
    let sampled = lab::sample_genomes(&ck.simulation, cfg.genomes, cfg.seed)?;
    if sampled.len() < cfg.genomes {
        eprintln!(
            "only {} live agents in the checkpoint; evaluating all of them",
            sampled.len()
        );
    }
    let genomes: Vec<_> = sampled.into_iter().map(|(_, g)| g).collect();
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let report = match args.experiment {
        Experiment::Greediness => {
            let report = lab::run_greediness_experiment(&genomes, &cfg, &NeuralPolicy)?;
            lab::write_greediness_trials(&args.out.join("greediness_trials.csv"), &report)?;
            lab::render_greediness_report(&report)
        }
        Experiment::Pressure => {
            let report = lab::run_pressure_experiment(&genomes, &cfg, &NeuralPolicy, &Density::ALL)?;
            lab::write_pressure_trials(&args.out.join("pressure_trials.csv"), &report)?;
            lab::render_pressure_report(&report)
        }
    };
    let path = args.out.join(match args.experiment {
        Experiment::Greediness => "greediness_report.md",
        Experiment::Pressure => "pressure_report.md",
    });
    std::fs::write(&path, &report).with_context(|| format!("writing {}", path.display()))?;
    print!("{report}");
    Ok(())
}
