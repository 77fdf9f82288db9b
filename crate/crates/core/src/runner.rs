//! Long natural runs: stepping, metric streaming, periodic checkpoints.

use std::path::{Path, PathBuf};

use crate::checkpoint::{self, Checkpoint};
use crate::engine::{SimConfig, Simulation};
use crate::error::Result;
use crate::metrics::{MetricsFrame, MetricsSink, WindowTracker};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory for checkpoints; none are written without it.
    pub checkpoint_dir: Option<PathBuf>,
    /// Interval between periodic checkpoints, in steps.
    pub checkpoint_every: Option<u64>,
    /// Interval between progress lines on stderr.
    pub progress_every: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub final_step: u64,
    /// Step after which no agent was left, if that happened.
    pub extinct_at: Option<u64>,
    pub population: usize,
    pub resources: usize,
    /// Hex digest of the final checkpoint bytes.
    pub digest: String,
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("step_{step:09}.ckpt"))
}

pub const FINAL_CHECKPOINT: &str = "final.ckpt";

/// Runs a fresh simulation for `cfg.total_steps` steps or until extinction.
pub fn run(cfg: SimConfig, sink: &mut dyn MetricsSink, opts: &RunOptions) -> Result<(Simulation, RunSummary)> {
    let sim = Simulation::new(cfg)?;
    let tracker = WindowTracker::new(&sim);
    run_from(
        Checkpoint {
            simulation: sim,
            tracker,
        },
        sink,
        opts,
    )
}

/// Continues from a checkpoint up to the configured total step count.
pub fn run_from(
    start: Checkpoint,
    sink: &mut dyn MetricsSink,
    opts: &RunOptions,
) -> Result<(Simulation, RunSummary)> {
    let Checkpoint {
        simulation: mut sim,
        mut tracker,
    } = start;
    let total = sim.config().total_steps;
    let save = |sim: &Simulation, tracker: &WindowTracker, name: PathBuf| -> Result<()> {
        checkpoint::save(&name, sim, tracker).map(|_| ())
    };
    if let (Some(dir), Some(_), 0) = (&opts.checkpoint_dir, opts.checkpoint_every, sim.current_step()) {
        save(&sim, &tracker, checkpoint_path(dir, 0))?;
    }

    let mut extinct_at = None;
    while sim.current_step() < total {
        if sim.is_extinct() {
            extinct_at = Some(sim.current_step());
            break;
        }
        let events = sim.step()?;
        let step = events.step;
        let now = sim.current_step();
        let frame = MetricsFrame::capture(&sim, &events);
        sink.frame(&frame).map_err(|e| e.at_step(step))?;
        tracker.record(&sim, &events, sink).map_err(|e| e.at_step(step))?;

        if let (Some(dir), Some(every)) = (&opts.checkpoint_dir, opts.checkpoint_every) {
            if every > 0 && now % every == 0 {
                save(&sim, &tracker, checkpoint_path(dir, now)).map_err(|e| e.at_step(step))?;
            }
        }
        if let Some(every) = opts.progress_every {
            if every > 0 && now % every == 0 {
                eprintln!(
                    "step {now}: population {} resources {} births {} deaths {}",
                    frame.population, frame.resources, frame.births, frame.deaths
                );
            }
        }
    }
    if extinct_at.is_none() && sim.is_extinct() && sim.current_step() > 0 {
        extinct_at = Some(sim.current_step());
    }
    if let Some(step) = extinct_at {
        if opts.progress_every.is_some() {
            eprintln!("population extinct after step {step}");
        }
    }

    let bytes = match &opts.checkpoint_dir {
        Some(dir) => checkpoint::save(&dir.join(FINAL_CHECKPOINT), &sim, &tracker)?,
        None => checkpoint::encode(&sim, &tracker),
    };
    let summary = RunSummary {
        final_step: sim.current_step(),
        extinct_at,
        population: sim.population().alive_count(),
        resources: sim.world().resource_count(),
        digest: checkpoint::digest_hex(&bytes),
    };
    Ok((sim, summary))
}
