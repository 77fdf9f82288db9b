//! Measurements of the natural and lab environments.
//!
//! Per-step frames (population, resources, births, deaths, energy), movement
//! histograms over aligned 50-step windows, life expectancy over aligned
//! 500-step windows, and the lab measures greediness and efficiency.

use serde::{Deserialize, Serialize};

use crate::agents::Position;
use crate::engine::{Simulation, StepEvents};
use crate::error::{Error, Result};

pub const MOVEMENT_WINDOW: u64 = 50;
pub const MOVEMENT_BINS: usize = 17;
pub const EXPECTANCY_WINDOW: u64 = 500;
pub const GREEDINESS_WINDOW: usize = 20;

/// State of the world right after one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFrame {
    /// Index of the step that produced this frame.
    pub step: u64,
    pub population: usize,
    pub resources: usize,
    pub births: usize,
    pub deaths: usize,
    /// `None` when no agent is alive.
    pub mean_energy: Option<f64>,
}

impl MetricsFrame {
    pub fn capture(sim: &Simulation, events: &StepEvents) -> Self {
        let pop = sim.population();
        let mean_energy = (pop.alive_count() > 0).then(|| {
            pop.iter_alive().map(|(_, a)| a.energy.to_f64()).sum::<f64>()
                / pop.alive_count() as f64
        });
        Self {
            step: events.step,
            population: pop.alive_count(),
            resources: sim.world().resource_count(),
            births: events.births.len(),
            deaths: events.deaths.len(),
            mean_energy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementHistogram {
    pub window_start: u64,
    pub bins: [u64; MOVEMENT_BINS],
}

impl MovementHistogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Share of agents in the lowest bin, the highest bin, and the largest
    /// share among the bins in between, as percentages.
    pub fn extremes_summary(&self) -> Option<MovementSummary> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let pct = |c: u64| 100.0 * c as f64 / total as f64;
        let middle = self.bins[1..MOVEMENT_BINS - 1].iter().copied().max().unwrap_or(0);
        Some(MovementSummary {
            window_start: self.window_start,
            low: pct(self.bins[0]),
            high: pct(self.bins[MOVEMENT_BINS - 1]),
            max_middle: pct(middle),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovementSummary {
    pub window_start: u64,
    pub low: f64,
    pub high: f64,
    pub max_middle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectancyWindow {
    pub window_start: u64,
    pub mean_death_age: Option<f64>,
}

/// Bin of the Manhattan distance covered during one movement window.
pub fn movement_bin(start: Position, end: Position) -> usize {
    distance_bin(start.manhattan(end))
}

pub fn distance_bin(distance: usize) -> usize {
    (distance / 3).min(MOVEMENT_BINS - 1)
}

/// Mean age at death, `None` without deaths.
pub fn life_expectancy(death_ages: &[u32]) -> Option<f64> {
    if death_ages.is_empty() {
        return None;
    }
    Some(death_ages.iter().map(|&a| a as f64).sum::<f64>() / death_ages.len() as f64)
}

/// What a focal agent experienced during one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ForagingRecord {
    pub resource_visible: bool,
    pub consumed: u32,
}

/// `C_r / T_r` over non-overlapping windows of `window` steps: `T_r` counts
/// windows with a visible resource, `C_r` those of them with a consumption.
/// A trailing partial window is ignored. `None` when `T_r` is zero.
pub fn greediness(trace: &[ForagingRecord], window: usize) -> Option<f64> {
    let (consuming, visible) = greediness_windows(trace, window);
    (visible > 0).then(|| consuming as f64 / visible as f64)
}

/// `(C_r, T_r)` behind [`greediness`].
pub fn greediness_windows(trace: &[ForagingRecord], window: usize) -> (u32, u32) {
    let (mut visible, mut consuming) = (0u32, 0u32);
    for chunk in trace.chunks_exact(window) {
        if chunk.iter().any(|r| r.resource_visible) {
            visible += 1;
            if chunk.iter().any(|r| r.consumed > 0) {
                consuming += 1;
            }
        }
    }
    (consuming, visible)
}

/// Resources eaten during one trial and the number of agents that existed
/// during it (1 for a solo trial).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConsumption {
    pub consumed: u64,
    pub agents: u64,
}

impl TrialConsumption {
    pub fn solo(consumed: u64) -> Self {
        Self {
            consumed,
            agents: 1,
        }
    }

    pub fn per_capita(&self) -> f64 {
        self.consumed as f64 / self.agents as f64
    }
}

/// Mean per-capita consumption over trials.
pub fn efficiency(trials: &[TrialConsumption]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::Contract("efficiency of an empty trial set".into()));
    }
    if trials.iter().any(|t| t.agents == 0) {
        return Err(Error::Contract("trial without agents".into()));
    }
    Ok(trials.iter().map(TrialConsumption::per_capita).sum::<f64>() / trials.len() as f64)
}

/// Receives metric records in step order.
pub trait MetricsSink {
    fn frame(&mut self, frame: &MetricsFrame) -> Result<()>;

    fn movement(&mut self, _histogram: &MovementHistogram) -> Result<()> {
        Ok(())
    }

    fn expectancy(&mut self, _window: &ExpectancyWindow) -> Result<()> {
        Ok(())
    }
}

/// Keeps everything in memory.
#[derive(Clone, Debug, Default)]
pub struct MemorySink {
    pub frames: Vec<MetricsFrame>,
    pub movement: Vec<MovementHistogram>,
    pub expectancy: Vec<ExpectancyWindow>,
}

impl MetricsSink for MemorySink {
    fn frame(&mut self, frame: &MetricsFrame) -> Result<()> {
        self.frames.push(frame.clone());
        Ok(())
    }

    fn movement(&mut self, histogram: &MovementHistogram) -> Result<()> {
        self.movement.push(histogram.clone());
        Ok(())
    }

    fn expectancy(&mut self, window: &ExpectancyWindow) -> Result<()> {
        self.expectancy.push(window.clone());
        Ok(())
    }
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl MetricsSink for NullSink {
    fn frame(&mut self, _: &MetricsFrame) -> Result<()> {
        Ok(())
    }
}

/// Open windows of the movement and expectancy measures. Part of a
/// checkpoint so a resumed run emits the same records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowTracker {
    pub(crate) movement_start: u64,
    /// Per slot: identity and position of the occupant at window start.
    pub(crate) anchors: Vec<Option<(u64, Position)>>,
    pub(crate) expectancy_start: u64,
    pub(crate) death_age_sum: u64,
    pub(crate) death_count: u64,
}

impl WindowTracker {
    /// Opens windows at the simulation's current step, which must be aligned
    /// to the movement window.
    pub fn new(sim: &Simulation) -> Self {
        let now = sim.current_step();
        let mut tracker = Self {
            movement_start: now - now % MOVEMENT_WINDOW,
            anchors: Vec::new(),
            expectancy_start: now - now % EXPECTANCY_WINDOW,
            death_age_sum: 0,
            death_count: 0,
        };
        tracker.anchor(sim);
        tracker
    }

    fn anchor(&mut self, sim: &Simulation) {
        self.anchors = sim
            .population()
            .slots()
            .iter()
            .map(|a| a.alive.then_some((a.id, a.position)))
            .collect();
    }

    /// Feeds one executed step; closes any window that ends with it.
    pub fn record(
        &mut self,
        sim: &Simulation,
        events: &StepEvents,
        sink: &mut dyn MetricsSink,
    ) -> Result<()> {
        for d in &events.deaths {
            self.death_age_sum += d.age as u64;
            self.death_count += 1;
        }
        let now = events.step + 1;
        if now.is_multiple_of(MOVEMENT_WINDOW) {
            let mut bins = [0u64; MOVEMENT_BINS];
            for (slot, agent) in sim.population().iter_alive() {
                if let Some(Some((id, start))) = self.anchors.get(slot) {
                    if *id == agent.id {
                        bins[movement_bin(*start, agent.position)] += 1;
                    }
                }
            }
            sink.movement(&MovementHistogram {
                window_start: self.movement_start,
                bins,
            })?;
            self.movement_start = now;
            self.anchor(sim);
        }
        if now.is_multiple_of(EXPECTANCY_WINDOW) {
            let mean = (self.death_count > 0)
                .then(|| self.death_age_sum as f64 / self.death_count as f64);
            sink.expectancy(&ExpectancyWindow {
                window_start: self.expectancy_start,
                mean_death_age: mean,
            })?;
            self.expectancy_start = now;
            self.death_age_sum = 0;
            self.death_count = 0;
        }
        Ok(())
    }
}
