//! Lab environments: small controlled arenas for probing evolved genomes.
//!
//! A trial places one focal agent at the center of a wall-free arena
//! seeded with resources at one of three densities, then runs the regular
//! engine for a fixed number of steps. Two protocols build on it:
//!
//! * greediness: solo agent, no regrowth, three densities; per genome a
//!   one-way ANOVA across densities and Tukey's test classify the behavior
//! * pressure: the same trials with reproduction switched off and on
//!   (short reproduction time), comparing per-capita consumption

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{visible_resources, AgentState, BoundaryMode, PhysiologyConfig, Position};
use crate::engine::{Decision, Policy, Population, SimConfig, Simulation};
use crate::error::{Error, Result};
use crate::metrics::{
    efficiency, greediness_windows, ForagingRecord, TrialConsumption, GREEDINESS_WINDOW,
};
use crate::neural::{Action, NetworkParams, Observation, VIEW};
use crate::rng::{Purpose, RngStream};
use crate::stats::{one_way_anova, paired_t_test, tukey_hsd, AnovaResult, PairedTResult, TukeyResult};
use crate::world::{RegrowthConfig, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Low,
    Medium,
    High,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Low, Density::Medium, Density::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Density::Low => "low",
            Density::Medium => "medium",
            Density::High => "high",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub rows: usize,
    pub cols: usize,
    /// Fraction of cells holding a resource at trial start, per density.
    pub densities: [f64; 3],
    pub regrowth_enabled: bool,
    pub regrowth: RegrowthConfig,
    /// Reproduction time used when reproduction is on.
    pub reproduction_time: u32,
    pub trial_length: u64,
    pub trials: usize,
    pub genomes: usize,
    /// Slot capacity of the arena. A trial that needs more is aborted.
    pub max_population: usize,
    /// Mutation applied to offspring in reproduction trials.
    pub offspring_sigma: f32,
    pub physiology: PhysiologyConfig,
    pub boundary_mode: BoundaryMode,
    pub seed: u64,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            rows: 40,
            cols: 40,
            densities: [0.05, 0.15, 0.30],
            regrowth_enabled: false,
            regrowth: RegrowthConfig::default(),
            reproduction_time: 20,
            trial_length: 1000,
            trials: 10,
            genomes: 50,
            max_population: 1000,
            offspring_sigma: 0.0,
            physiology: PhysiologyConfig::default(),
            boundary_mode: BoundaryMode::Blocked,
            seed: 0,
        }
    }
}

impl LabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols == 0 {
            return Err(Error::Config("lab grid too small".into()));
        }
        if self.densities.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
            return Err(Error::Config(format!(
                "lab densities {:?} must lie in (0, 1]",
                self.densities
            )));
        }
        if self.trial_length == 0 || !self.trial_length.is_multiple_of(GREEDINESS_WINDOW as u64) {
            return Err(Error::Config(format!(
                "trial_length {} must be a positive multiple of {GREEDINESS_WINDOW}",
                self.trial_length
            )));
        }
        if self.trials == 0 || self.max_population == 0 {
            return Err(Error::Config("trials and max_population must be positive".into()));
        }
        if self.reproduction_time == 0 {
            return Err(Error::Config("reproduction_time must be positive".into()));
        }
        self.physiology.validate()?;
        self.regrowth.validate()
    }

    pub fn spawn(&self) -> Position {
        Position::new(self.rows / 2, self.cols / 2)
    }

    /// Root seed of trial `trial` in `density`. Shared by every genome and by
    /// both pressure arms, so all of them face the same resource layouts.
    pub fn trial_seed(&self, density: Density, trial: usize) -> u64 {
        RngStream::new(self.seed)
            .derive(Purpose::LabTrial, trial as u64, density.index() as u64)
            .seed()
    }

    fn sim_config(&self, seed: u64, reproduction: bool) -> SimConfig {
        let mut physiology = self.physiology.clone();
        if reproduction {
            physiology.time_to_reproduce = self.reproduction_time;
        }
        SimConfig {
            rows: self.rows,
            cols: self.cols,
            max_population: self.max_population,
            start_population: 1,
            start_resources: 0,
            total_steps: self.trial_length,
            sigma: self.offspring_sigma,
            init_weight_std: 0.0,
            seed,
            boundary_mode: self.boundary_mode,
            reproduction_enabled: reproduction,
            physiology,
            regrowth: if self.regrowth_enabled {
                self.regrowth.clone()
            } else {
                RegrowthConfig::disabled()
            },
        }
    }
}

/// Result of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// What the focal agent saw and ate, one record per step it lived.
    pub trace: Vec<ForagingRecord>,
    pub focal_consumed: u64,
    pub total_consumed: u64,
    /// Focal agent plus every offspring born during the trial.
    pub agents: u64,
    pub births: u64,
    pub steps: u64,
    /// Resource count at the start and after every step.
    pub resources: Vec<usize>,
    /// The arena ran out of slots; the trial stopped at that step and its
    /// counts cover only the steps that ran.
    pub aborted: bool,
}

impl TrialOutcome {
    pub fn greediness(&self) -> Option<f64> {
        crate::metrics::greediness(&self.trace, GREEDINESS_WINDOW)
    }

    pub fn consumption(&self) -> TrialConsumption {
        TrialConsumption {
            consumed: self.total_consumed,
            agents: self.agents,
        }
    }
}

/// Runs one trial. The genome is only read; offspring get copies.
pub fn run_trial(
    genome: &NetworkParams,
    policy: &dyn Policy,
    cfg: &LabConfig,
    density: Density,
    reproduction: bool,
    seed: u64,
) -> Result<TrialOutcome> {
    let sim_cfg = cfg.sim_config(seed, reproduction);
    let mut world = WorldState::new(cfg.rows, cfg.cols, cfg.regrowth.alpha)?;
    let spawn = cfg.spawn();
    let spawn_cell = world.index(spawn.row, spawn.col);
    let count = ((cfg.densities[density.index()] * world.cell_count() as f64).round() as usize)
        .min(world.cell_count() - 1);
    world.scatter_resources(
        count,
        &[spawn_cell],
        &mut RngStream::new(seed).substream(Purpose::InitResources, 0, 0),
    )?;
    let mut population = Population::new(cfg.max_population);
    let focal_slot = population
        .insert(genome, spawn, &sim_cfg.physiology)
        .expect("empty arena has a free slot");
    let focal_id = population.slots()[focal_slot].id;
    let mut sim = Simulation::from_parts(sim_cfg, world, population, 0);

    let mut out = TrialOutcome {
        trace: Vec::with_capacity(cfg.trial_length as usize),
        focal_consumed: 0,
        total_consumed: 0,
        agents: 1,
        births: 0,
        steps: 0,
        resources: vec![sim.world().resource_count()],
        aborted: false,
    };
    let focal = |sim: &Simulation| -> Option<Position> {
        let a = &sim.population().slots()[focal_slot];
        (a.alive && a.id == focal_id).then_some(a.position)
    };
    while out.steps < cfg.trial_length && !sim.is_extinct() {
        let seen = focal(&sim).map(|pos| visible_resources(pos, sim.world()) > 0);
        let events = sim.step_with(policy)?;
        out.steps += 1;
        out.total_consumed += events.consumed() as u64;
        out.births += events.births.len() as u64;
        out.agents += events.births.len() as u64;
        out.resources.push(sim.world().resource_count());
        if let Some(resource_visible) = seen {
            let ate = events.eaters.binary_search(&focal_slot).is_ok();
            out.focal_consumed += ate as u64;
            out.trace.push(ForagingRecord {
                resource_visible,
                consumed: ate as u32,
            });
        }
        if events.deferred > 0 {
            out.aborted = true;
            break;
        }
    }
    Ok(out)
}

/// Uniformly samples up to `n` distinct live genomes from a natural run.
pub fn sample_genomes(sim: &Simulation, n: usize, seed: u64) -> Result<Vec<(u64, NetworkParams)>> {
    let alive: Vec<&AgentState> = sim.population().iter_alive().map(|(_, a)| a).collect();
    if alive.is_empty() {
        return Err(Error::Config("no live agent to sample genomes from".into()));
    }
    let mut rng = RngStream::new(seed).substream(Purpose::LabSampling, 0, 0);
    let picks = index::sample(&mut rng, alive.len(), n.min(alive.len()));
    Ok(picks
        .into_iter()
        .map(|i| (alive[i].id, alive[i].genome.clone()))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Significantly greedier at low than at high density.
    SustainableForager,
    /// No significant density effect.
    OpportunisticTraveler,
    /// Significant differences in another pattern.
    Other,
    /// Too few trials with a defined greediness.
    Excluded,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::SustainableForager => "sustainable forager",
            Classification::OpportunisticTraveler => "opportunistic traveler",
            Classification::Other => "other",
            Classification::Excluded => "excluded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedinessTrial {
    pub genome: usize,
    pub density: Density,
    pub trial: usize,
    pub seed: u64,
    pub steps: u64,
    pub visible_windows: u32,
    pub consuming_windows: u32,
    pub greediness: Option<f64>,
    pub consumed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenomeGreediness {
    pub genome: usize,
    /// Defined greediness values per density, truncated to a common length.
    pub samples: [Vec<f64>; 3],
    pub anova: Option<AnovaResult>,
    pub tukey: Option<TukeyResult>,
    pub classification: Classification,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedinessReport {
    pub trials: Vec<GreedinessTrial>,
    pub genomes: Vec<GenomeGreediness>,
}

impl GreedinessReport {
    pub fn count(&self, class: Classification) -> usize {
        self.genomes.iter().filter(|g| g.classification == class).count()
    }
}

/// Smallest balanced sample per density that supports Tukey's test.
const MIN_DEFINED_TRIALS: usize = 3;

fn classify(genome: usize, trials: &[GreedinessTrial]) -> Result<GenomeGreediness> {
    let mut samples: [Vec<f64>; 3] = Default::default();
    for t in trials {
        if let Some(g) = t.greediness {
            samples[t.density.index()].push(g);
        }
    }
    let n = samples.iter().map(Vec::len).min().unwrap_or(0);
    if n < MIN_DEFINED_TRIALS {
        return Ok(GenomeGreediness {
            genome,
            samples,
            anova: None,
            tukey: None,
            classification: Classification::Excluded,
            note: Some(format!(
                "only {n} trials with a visible resource in some density, need {MIN_DEFINED_TRIALS}"
            )),
        });
    }
    let dropped: usize = samples.iter().map(|s| s.len() - n).sum();
    for s in samples.iter_mut() {
        s.truncate(n);
    }
    let groups = samples.to_vec();
    let anova = one_way_anova(&groups)?;
    let tukey = tukey_hsd(&groups)?;
    let low_high = tukey
        .pair(Density::Low.index(), Density::High.index())
        .expect("three groups");
    let classification = if low_high.significant && low_high.mean_difference > 0.0 {
        Classification::SustainableForager
    } else if !anova.significant() && tukey.pairs.iter().all(|p| !p.significant) {
        Classification::OpportunisticTraveler
    } else {
        Classification::Other
    };
    Ok(GenomeGreediness {
        genome,
        samples,
        anova: Some(anova),
        tukey: Some(tukey),
        classification,
        note: (dropped > 0).then(|| format!("{dropped} trials dropped to balance densities")),
    })
}

/// Every genome in every density, `cfg.trials` times, solo and without
/// regrowth unless configured otherwise.
pub fn run_greediness_experiment(
    genomes: &[NetworkParams],
    cfg: &LabConfig,
    policy: &dyn Policy,
) -> Result<GreedinessReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, Density, usize)> = (0..genomes.len())
        .flat_map(|g| {
            Density::ALL
                .into_iter()
                .flat_map(move |d| (0..cfg.trials).map(move |t| (g, d, t)))
        })
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(g, density, trial)| {
            let seed = cfg.trial_seed(density, trial);
            let out = run_trial(&genomes[g], policy, cfg, density, false, seed)?;
            let (consuming_windows, visible_windows) =
                greediness_windows(&out.trace, GREEDINESS_WINDOW);
            Ok(GreedinessTrial {
                genome: g,
                density,
                trial,
                seed,
                steps: out.steps,
                visible_windows,
                consuming_windows,
                greediness: out.greediness(),
                consumed: out.focal_consumed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let genomes = trials
        .chunks(3 * cfg.trials)
        .enumerate()
        .map(|(g, chunk)| classify(g, chunk))
        .collect::<Result<_>>()?;
    Ok(GreedinessReport { trials, genomes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureTrial {
    pub genome: usize,
    pub density: Density,
    pub reproduction: bool,
    pub trial: usize,
    pub seed: u64,
    pub steps: u64,
    pub consumed: u64,
    pub agents: u64,
    pub births: u64,
    pub focal_consumed: u64,
    pub aborted: bool,
}

impl PressureTrial {
    pub fn per_capita(&self) -> f64 {
        self.consumed as f64 / self.agents as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureSummary {
    pub density: Density,
    pub efficiency_off: f64,
    pub efficiency_on: f64,
    /// Mean consumption of the evaluated agent alone in the reproduction arm.
    pub focal_on: f64,
    pub aborted: usize,
    /// Paired over genomes, on per-genome mean efficiency (on minus off).
    pub comparison: Option<PairedTResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureReport {
    pub trials: Vec<PressureTrial>,
    pub summaries: Vec<PressureSummary>,
}

impl PressureReport {
    pub fn summary(&self, density: Density) -> Option<&PressureSummary> {
        self.summaries.iter().find(|s| s.density == density)
    }
}

/// Reproduction off versus on in each of `densities`.
pub fn run_pressure_experiment(
    genomes: &[NetworkParams],
    cfg: &LabConfig,
    policy: &dyn Policy,
    densities: &[Density],
) -> Result<PressureReport> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &density in densities {
        for g in 0..genomes.len() {
            for reproduction in [false, true] {
                for t in 0..cfg.trials {
                    jobs.push((density, g, reproduction, t));
                }
            }
        }
    }
    let trials = jobs
        .par_iter()
        .map(|&(density, g, reproduction, trial)| {
            let seed = cfg.trial_seed(density, trial);
            let out = run_trial(&genomes[g], policy, cfg, density, reproduction, seed)?;
            Ok(PressureTrial {
                genome: g,
                density,
                reproduction,
                trial,
                seed,
                steps: out.steps,
                consumed: out.total_consumed,
                agents: out.agents,
                births: out.births,
                focal_consumed: out.focal_consumed,
                aborted: out.aborted,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::new();
    for &density in densities {
        let arm = |on: bool| -> Vec<&PressureTrial> {
            trials
                .iter()
                .filter(|t| t.density == density && t.reproduction == on)
                .collect()
        };
        let consumption = |ts: &[&PressureTrial]| -> Vec<TrialConsumption> {
            ts.iter()
                .map(|t| TrialConsumption {
                    consumed: t.consumed,
                    agents: t.agents,
                })
                .collect()
        };
        let (off, on) = (arm(false), arm(true));
        let per_genome = |ts: &[&PressureTrial]| -> Vec<Option<f64>> {
            (0..genomes.len())
                .map(|g| {
                    let mine: Vec<TrialConsumption> = consumption(
                        &ts.iter().copied().filter(|t| t.genome == g).collect::<Vec<_>>(),
                    );
                    efficiency(&mine).ok()
                })
                .collect()
        };
        let (a, b): (Vec<f64>, Vec<f64>) = per_genome(&on)
            .into_iter()
            .zip(per_genome(&off))
            .filter_map(|(x, y)| Some((x?, y?)))
            .unzip();
        summaries.push(PressureSummary {
            density,
            efficiency_off: efficiency(&consumption(&off))?,
            efficiency_on: efficiency(&consumption(&on))?,
            focal_on: efficiency(
                &on.iter()
                    .map(|t| TrialConsumption::solo(t.focal_consumed))
                    .collect::<Vec<_>>(),
            )?,
            aborted: trials
                .iter()
                .filter(|t| t.density == density && t.aborted)
                .count(),
            comparison: paired_t_test(&a, &b).ok(),
        });
    }
    Ok(PressureReport { trials, summaries })
}

/// Always heads for the nearest visible resource; wanders straight when
/// none is in view.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysEat;

/// Never moves. Since consumption happens on entering a cell, it never eats
/// once its own cell is empty.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeverEat;

/// Forages like [`AlwaysEat`] only while fewer than `threshold` resources are
/// in view; otherwise keeps still.
#[derive(Clone, Copy, Debug)]
pub struct EatWhenScarce {
    pub threshold: usize,
}

const CENTER: usize = VIEW / 2;

fn nearest_resource(obs: &Observation) -> Option<(i64, i64)> {
    let mut best: Option<(usize, i64, i64)> = None;
    for r in 0..VIEW {
        for c in 0..VIEW {
            if (r, c) == (CENTER, CENTER) || obs.get(r, c, 0) == 0.0 {
                continue;
            }
            let (dr, dc) = (r as i64 - CENTER as i64, c as i64 - CENTER as i64);
            let d = dr.unsigned_abs() as usize + dc.unsigned_abs() as usize;
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, dr, dc));
            }
        }
    }
    best.map(|(_, dr, dc)| (dr, dc))
}

fn toward(dr: i64, dc: i64) -> Action {
    if dr < 0 {
        Action::Up
    } else if dr > 0 {
        Action::Down
    } else if dc < 0 {
        Action::Left
    } else {
        Action::Right
    }
}

fn visible_count(obs: &Observation) -> usize {
    (0..VIEW)
        .flat_map(|r| (0..VIEW).map(move |c| (r, c)))
        .filter(|&(r, c)| obs.get(r, c, 0) > 0.0)
        .count()
}

fn forage(agent: &AgentState, obs: &Observation) -> Action {
    match nearest_resource(obs) {
        Some((dr, dc)) => toward(dr, dc),
        None => {
            // keep the previous heading unless a wall is next in that direction
            let heading = agent.prev_action.filter(|a| *a != Action::Stay).unwrap_or(Action::Right);
            let (dr, dc) = heading.delta();
            let (r, c) = (CENTER as i64 + dr, CENTER as i64 + dc);
            if obs.get(r as usize, c as usize, 2) > 0.0 {
                match heading {
                    Action::Right => Action::Down,
                    Action::Down => Action::Left,
                    Action::Left => Action::Up,
                    _ => Action::Right,
                }
            } else {
                heading
            }
        }
    }
}

fn scripted(agent: &AgentState, action: Action) -> Decision {
    Decision {
        action,
        state: agent.recurrent,
    }
}

impl Policy for AlwaysEat {
    fn decide(&self, agent: &AgentState, obs: &Observation, _: &mut rand_chacha::ChaCha8Rng) -> Result<Decision> {
        Ok(scripted(agent, forage(agent, obs)))
    }
}

impl Policy for NeverEat {
    fn decide(&self, agent: &AgentState, _: &Observation, _: &mut rand_chacha::ChaCha8Rng) -> Result<Decision> {
        Ok(scripted(agent, Action::Stay))
    }
}

impl Policy for EatWhenScarce {
    fn decide(&self, agent: &AgentState, obs: &Observation, _: &mut rand_chacha::ChaCha8Rng) -> Result<Decision> {
        let action = if visible_count(obs) < self.threshold {
            forage(agent, obs)
        } else {
            Action::Stay
        };
        Ok(scripted(agent, action))
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_greediness_trials(path: &Path, report: &GreedinessReport) -> Result<()> {
    write_rows(path, &report.trials)
}

pub fn write_pressure_trials(path: &Path, report: &PressureReport) -> Result<()> {
    write_rows(path, &report.trials)
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

pub fn render_greediness_report(report: &GreedinessReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Greediness by resource density\n");
    let _ = writeln!(
        s,
        "| genome | G low | G medium | G high | F | p | q low-med | q low-high | q med-high | class |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
    for g in &report.genomes {
        let mean = |v: &Vec<f64>| {
            if v.is_empty() {
                "-".to_string()
            } else {
                format!("{:.3}", v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        let (f, p) = g
            .anova
            .as_ref()
            .map_or(("-".into(), "-".into()), |a| (format!("{:.3}", a.f_statistic), fmt_p(a.p_value)));
        let q = |i, j| {
            g.tukey
                .as_ref()
                .and_then(|t| t.pair(i, j))
                .map_or("-".to_string(), |p| {
                    format!("{:.3}{}", p.q, if p.significant { "*" } else { "" })
                })
        };
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {f} | {p} | {} | {} | {} | {} |",
            g.genome,
            mean(&g.samples[0]),
            mean(&g.samples[1]),
            mean(&g.samples[2]),
            q(0, 1),
            q(0, 2),
            q(1, 2),
            g.classification.name()
        );
    }
    let _ = writeln!(s, "\n`*` marks a Tukey pair significant at the 5% level.\n");
    for class in [
        Classification::SustainableForager,
        Classification::OpportunisticTraveler,
        Classification::Other,
        Classification::Excluded,
    ] {
        let _ = writeln!(s, "- {}: {}", class.name(), report.count(class));
    }
    let notes: Vec<_> = report
        .genomes
        .iter()
        .filter_map(|g| g.note.as_ref().map(|n| (g.genome, n)))
        .collect();
    if !notes.is_empty() {
        let _ = writeln!(s, "\nNotes:");
        for (g, n) in notes {
            let _ = writeln!(s, "- genome {g}: {n}");
        }
    }
    s
}

pub fn render_pressure_report(report: &PressureReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Efficiency with reproduction off and on\n");
    let _ = writeln!(
        s,
        "| density | reproduction off | reproduction on | on - off | t | p | focal agent on | aborted trials |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    for sm in &report.summaries {
        let (t, p) = sm.comparison.as_ref().map_or(("-".into(), "-".into()), |c| {
            (format!("{:.3}", c.t_statistic), fmt_p(c.p_value))
        });
        let _ = writeln!(
            s,
            "| {} | {:.4} | {:.4} | {:+.4} | {t} | {p} | {:.4} | {} |",
            sm.density.name(),
            sm.efficiency_off,
            sm.efficiency_on,
            sm.efficiency_on - sm.efficiency_off,
            sm.focal_on,
            sm.aborted
        );
    }
    let _ = writeln!(s);
    for sm in &report.summaries {
        let verdict = if sm.efficiency_on > sm.efficiency_off {
            "higher"
        } else {
            "not higher"
        };
        let sig = match &sm.comparison {
            Some(c) if c.significant() => "significant",
            Some(_) => "not significant",
            None => "untested",
        };
        let _ = writeln!(
            s,
            "- {}: efficiency with reproduction is {verdict} ({sig} at 5%)",
            sm.density.name()
        );
    }
    s
}
