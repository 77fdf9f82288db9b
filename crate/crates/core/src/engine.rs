//! Non-episodic simulation engine.
//!
//! A step runs these phases for every live agent, in order:
//!
//! 1. observe the step-start snapshot and pick an action (parallel, read-only)
//! 2. move; agents walking into a wall die here
//! 3. consume: one agent per resource cell eats, chosen uniformly
//! 4. life timers on the energy carried into the step, then energy update
//! 5. deaths (starvation, age), then births in parent slot order
//! 6. synchronous resource regrowth
//!
//! Phases 2 to 5 commit sequentially by slot index. All randomness is drawn
//! from streams addressed by `(seed, purpose, step, slot or cell)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{
    apply_move, fill_observation, step_energy, update_life_timers, AgentDensity, AgentState,
    BoundaryMode, PhysiologyConfig, Position,
};
use crate::error::{Error, Result};
use crate::neural::{forward, sample_action, Action, NetworkParams, Observation, RecurrentState};
use crate::rng::{Purpose, RngStream};
use crate::world::{step_regrowth, RegrowthConfig, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rows: usize,
    pub cols: usize,
    pub max_population: usize,
    pub start_population: usize,
    pub start_resources: usize,
    pub total_steps: u64,
    /// Standard deviation of the per-weight mutation noise.
    pub sigma: f32,
    /// Standard deviation of the initial random weights.
    pub init_weight_std: f32,
    pub seed: u64,
    pub boundary_mode: BoundaryMode,
    pub reproduction_enabled: bool,
    pub physiology: PhysiologyConfig,
    pub regrowth: RegrowthConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rows: 200,
            cols: 400,
            max_population: 1000,
            start_population: 330,
            start_resources: 16_000,
            total_steps: 1_000_000,
            sigma: 0.02,
            init_weight_std: 0.1,
            seed: 0,
            boundary_mode: BoundaryMode::Lethal,
            reproduction_enabled: true,
            physiology: PhysiologyConfig::default(),
            regrowth: RegrowthConfig::default(),
        }
    }
}

impl SimConfig {
    /// Quarter-area world (200 columns by 100 rows) with the starting
    /// population and resources scaled by area.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            rows: 100,
            cols: 200,
            start_population: 83,
            start_resources: 4_000,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols == 0 {
            return Err(Error::Config(format!(
                "grid must have at least 2 rows and 1 column, got {}x{}",
                self.rows, self.cols
            )));
        }
        if self.max_population == 0 {
            return Err(Error::Config("max_population must be positive".into()));
        }
        if self.start_population > self.max_population {
            return Err(Error::Config(format!(
                "start_population {} exceeds max_population {}",
                self.start_population, self.max_population
            )));
        }
        if self.start_resources > self.rows * self.cols {
            return Err(Error::Config(format!(
                "start_resources {} exceeds {} cells",
                self.start_resources,
                self.rows * self.cols
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma {} must be >= 0", self.sigma)));
        }
        if !(self.init_weight_std >= 0.0 && self.init_weight_std.is_finite()) {
            return Err(Error::Config("init_weight_std must be >= 0".into()));
        }
        self.physiology.validate()?;
        self.regrowth.validate()
    }
}

/// Fixed-capacity agent slots.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    slots: Vec<AgentState>,
    alive: usize,
    next_id: u64,
}

impl Population {
    pub fn new(capacity: usize) -> Self {
        Self {
            slots: (0..capacity).map(|_| AgentState::empty()).collect(),
            alive: 0,
            next_id: 0,
        }
    }

    pub(crate) fn from_parts(slots: Vec<AgentState>, next_id: u64) -> Self {
        let alive = slots.iter().filter(|a| a.alive).count();
        Self {
            slots,
            alive,
            next_id,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of live agents, K_t.
    pub fn alive_count(&self) -> usize {
        self.alive
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn slots(&self) -> &[AgentState] {
        &self.slots
    }

    pub fn get(&self, slot: usize) -> Option<&AgentState> {
        self.slots.get(slot)
    }

    pub fn get_mut(&mut self, slot: usize) -> Option<&mut AgentState> {
        self.slots.get_mut(slot)
    }

    pub fn iter_alive(&self) -> impl Iterator<Item = (usize, &AgentState)> {
        self.slots.iter().enumerate().filter(|(_, a)| a.alive)
    }

    fn free_slot(&self) -> Option<usize> {
        self.slots.iter().position(|a| !a.alive)
    }

    /// Places a newborn with `genome` in the lowest free slot.
    pub fn insert(
        &mut self,
        genome: &NetworkParams,
        position: Position,
        physiology: &PhysiologyConfig,
    ) -> Option<usize> {
        let slot = self.free_slot()?;
        let id = self.next_id;
        self.next_id += 1;
        let agent = &mut self.slots[slot];
        agent.be_born(id, position, physiology);
        agent.genome.as_mut_slice().copy_from_slice(genome.as_slice());
        self.alive += 1;
        Some(slot)
    }

    fn kill(&mut self, slot: usize) {
        debug_assert!(self.slots[slot].alive);
        self.slots[slot].alive = false;
        self.alive -= 1;
    }
}

/// Action chosen by a policy together with the agent's next memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub state: RecurrentState,
}

/// Maps an agent's observation to an action.
pub trait Policy: Sync {
    fn decide(
        &self,
        agent: &AgentState,
        observation: &Observation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision>;
}

/// Each agent acts through its own evolved network.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeuralPolicy;

impl Policy for NeuralPolicy {
    fn decide(
        &self,
        agent: &AgentState,
        observation: &Observation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision> {
        let out = forward(
            &agent.genome,
            observation,
            agent.prev_action,
            agent.ate,
            &agent.recurrent,
        )?;
        Ok(Decision {
            action: sample_action(&out.probs, rng)?,
            state: out.state,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeathCause {
    Wall,
    Starvation,
    Age,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Death {
    pub slot: usize,
    pub id: u64,
    pub age: u32,
    pub cause: DeathCause,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Birth {
    pub parent_slot: usize,
    pub slot: usize,
    pub id: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub step: u64,
    pub births: Vec<Birth>,
    pub deaths: Vec<Death>,
    /// Reproductions postponed because every slot was taken.
    pub deferred: usize,
    /// Slots that ate this step.
    pub eaters: Vec<usize>,
    pub grown: usize,
}

impl StepEvents {
    pub fn consumed(&self) -> usize {
        self.eaters.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpawnOutcome {
    Spawned(usize),
    Deferred,
}

/// One simulation instance: world, population and the step counter.
#[derive(Clone, Debug)]
pub struct Simulation {
    cfg: SimConfig,
    world: WorldState,
    population: Population,
    rng: RngStream,
    step: u64,
    density: AgentDensity,
}

impl Simulation {
    /// Fresh world: resources without replacement over free cells, agents
    /// uniformly over free cells, independent random weights.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = RngStream::new(cfg.seed);
        let mut world = WorldState::new(cfg.rows, cfg.cols, cfg.regrowth.alpha)?;
        world.scatter_resources(
            cfg.start_resources,
            &[],
            &mut rng.substream(Purpose::InitResources, 0, 0),
        )?;

        let free: Vec<usize> = (0..world.cell_count())
            .filter(|&i| !world.walls()[i])
            .collect();
        if free.is_empty() && cfg.start_population > 0 {
            return Err(Error::Config("no free cell to place agents".into()));
        }
        let mut population = Population::new(cfg.max_population);
        let mut place = rng.substream(Purpose::InitAgents, 0, 0);
        let mut genome = NetworkParams::zeros();
        for slot in 0..cfg.start_population {
            let cell = free[place.random_range(0..free.len())];
            let pos = Position::new(cell / cfg.cols, cell % cfg.cols);
            genome.fill_random(
                cfg.init_weight_std,
                &mut rng.substream(Purpose::InitWeights, 0, slot as u64),
            );
            population.insert(&genome, pos, &cfg.physiology);
        }
        Ok(Self::from_parts(cfg, world, population, 0))
    }

    /// Assembles a simulation from existing state, e.g. a checkpoint or a lab
    /// arena built by hand.
    pub fn from_parts(cfg: SimConfig, world: WorldState, population: Population, step: u64) -> Self {
        let rng = RngStream::new(cfg.seed);
        let density = AgentDensity::new(world.rows(), world.cols());
        Self {
            cfg,
            world,
            population,
            rng,
            step,
            density,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Extends or shortens a run, e.g. when resuming a checkpoint.
    pub fn set_total_steps(&mut self, steps: u64) {
        self.cfg.total_steps = steps;
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut WorldState {
        &mut self.world
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn population_mut(&mut self) -> &mut Population {
        &mut self.population
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// Number of steps executed so far; the index of the next step.
    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn is_extinct(&self) -> bool {
        self.population.alive_count() == 0
    }

    /// One step with every agent driven by its own network.
    pub fn step(&mut self) -> Result<StepEvents> {
        self.step_with(&NeuralPolicy)
    }

    pub fn step_with(&mut self, policy: &dyn Policy) -> Result<StepEvents> {
        let t = self.step;
        self.step_inner(policy, t).map_err(|e| e.at_step(t))
    }

    fn step_inner(&mut self, policy: &dyn Policy, t: u64) -> Result<StepEvents> {
        let mut events = StepEvents {
            step: t,
            ..Default::default()
        };

        // decide
        self.density.rebuild(self.population.slots.iter());
        let world = &self.world;
        let density = &self.density;
        let rng = &self.rng;
        let decisions: Vec<Option<Decision>> = self
            .population
            .slots
            .par_iter()
            .enumerate()
            .map_init(Observation::default, |obs, (slot, agent)| {
                if !agent.alive {
                    return Ok(None);
                }
                fill_observation(obs, agent.position, world, density);
                let mut stream = rng.substream(Purpose::Action, t, slot as u64);
                policy.decide(agent, obs, &mut stream).map(Some)
            })
            .collect::<Result<_>>()?;

        // move
        for (slot, decision) in decisions.into_iter().enumerate() {
            let Some(decision) = decision else { continue };
            let agent = &mut self.population.slots[slot];
            agent.recurrent = decision.state;
            agent.prev_action = Some(decision.action);
            agent.ate = false;
            let moved = apply_move(agent.position, decision.action, &self.world, self.cfg.boundary_mode);
            if moved.killed_by_wall {
                events.deaths.push(Death {
                    slot,
                    id: agent.id,
                    age: agent.age,
                    cause: DeathCause::Wall,
                });
                self.population.kill(slot);
            } else {
                agent.position = moved.position;
            }
        }

        // consume
        let mut claims: Vec<(usize, usize)> = self
            .population
            .iter_alive()
            .map(|(slot, a)| (self.world.index(a.position.row, a.position.col), slot))
            .filter(|&(cell, _)| self.world.resources()[cell])
            .collect();
        claims.sort_unstable();
        for group in claims.chunk_by(|a, b| a.0 == b.0) {
            let cell = group[0].0;
            let pick = if group.len() == 1 {
                0
            } else {
                self.rng
                    .substream(Purpose::Consume, t, cell as u64)
                    .random_range(0..group.len())
            };
            let slot = group[pick].1;
            self.world.take_resource(cell);
            self.population.slots[slot].ate = true;
            events.eaters.push(slot);
        }
        events.eaters.sort_unstable();

        // physiology
        let physio = &self.cfg.physiology;
        let mut reproducers = Vec::new();
        let mut dying = Vec::new();
        for (slot, agent) in self.population.slots.iter_mut().enumerate() {
            if !agent.alive {
                continue;
            }
            let life = update_life_timers(agent, physio);
            agent.energy = step_energy(agent.energy, agent.ate, physio);
            if life.die {
                let cause = if agent.death_timer >= physio.time_to_die {
                    DeathCause::Starvation
                } else {
                    DeathCause::Age
                };
                dying.push((slot, cause));
            } else if life.reproduce && self.cfg.reproduction_enabled {
                reproducers.push(slot);
            }
        }
        for (slot, cause) in dying {
            let a = &self.population.slots[slot];
            events.deaths.push(Death {
                slot,
                id: a.id,
                age: a.age,
                cause,
            });
            self.population.kill(slot);
        }
        for parent in reproducers {
            match self.spawn_offspring(parent, t) {
                SpawnOutcome::Spawned(slot) => events.births.push(Birth {
                    parent_slot: parent,
                    slot,
                    id: self.population.slots[slot].id,
                }),
                SpawnOutcome::Deferred => events.deferred += 1,
            }
        }

        events.grown = step_regrowth(&mut self.world, &self.cfg.regrowth, &self.rng, t);
        self.step += 1;
        Ok(events)
    }

    /// Asexual reproduction on the parent's cell. At capacity the attempt is
    /// deferred and the parent's streak stays saturated so it retries next step.
    pub fn spawn_offspring(&mut self, parent_slot: usize, step: u64) -> SpawnOutcome {
        let Some(child_slot) = self.population.free_slot() else {
            return SpawnOutcome::Deferred;
        };
        let id = self.population.next_id;
        self.population.next_id += 1;
        let (parent, child) = pair_mut(&mut self.population.slots, parent_slot, child_slot);
        child.be_born(id, parent.position, &self.cfg.physiology);
        let mut noise = self
            .rng
            .substream(Purpose::Mutation, step, parent_slot as u64);
        parent
            .genome
            .mutate_into(&mut child.genome, self.cfg.sigma, &mut noise);
        parent.repr_timer = 0;
        self.population.alive += 1;
        SpawnOutcome::Spawned(child_slot)
    }
}

fn pair_mut<T>(items: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = items.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = items.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Energy;

    /// Fixed action for every agent, memory untouched.
    struct Always(Action);

    impl Policy for Always {
        fn decide(&self, a: &AgentState, _: &Observation, _: &mut ChaCha8Rng) -> Result<Decision> {
            Ok(Decision {
                action: self.0,
                state: a.recurrent,
            })
        }
    }

    fn small_cfg() -> SimConfig {
        SimConfig {
            rows: 20,
            cols: 30,
            max_population: 50,
            start_population: 10,
            start_resources: 100,
            total_steps: 100,
            seed: 5,
            ..SimConfig::default()
        }
    }

    fn empty_sim(cfg: SimConfig) -> Simulation {
        let world = WorldState::new(cfg.rows, cfg.cols, cfg.regrowth.alpha).unwrap();
        let pop = Population::new(cfg.max_population);
        Simulation::from_parts(cfg, world, pop, 0)
    }

    #[test]
    fn default_config_matches_published_values() {
        let c = SimConfig::default();
        assert_eq!((c.rows, c.cols), (200, 400));
        assert_eq!(c.max_population, 1000);
        assert_eq!(c.start_population, 330);
        assert_eq!(c.start_resources, 16_000);
        assert_eq!(c.total_steps, 1_000_000);
        assert_eq!(c.sigma, 0.02);
        let p = &c.physiology;
        assert_eq!((p.time_to_reproduce, p.time_to_die, p.max_age), (140, 200, 650));
        assert_eq!((p.initial_energy, p.max_energy, p.min_energy), (3.0, 3.0, 0.0));
        assert_eq!((p.decay, p.eat_gain), (0.025, 1.0));
        assert_eq!(c.regrowth.per_neighbor_prob, 0.002);
        assert_eq!(c.regrowth.spontaneous_prob, 0.00005);
        assert_eq!(c.regrowth.alpha, 200.0);
    }

    #[test]
    fn init_counts() {
        let sim = Simulation::new(SimConfig {
            total_steps: 0,
            ..SimConfig::default()
        })
        .unwrap();
        assert_eq!(sim.population().alive_count(), 330);
        assert_eq!(sim.world().resource_count(), 16_000);
        for (_, a) in sim.population().iter_alive() {
            assert_eq!(a.energy, Energy::from_f64(3.0));
            assert_eq!((a.age, a.repr_timer, a.death_timer), (0, 0, 0));
            assert_eq!(a.recurrent, RecurrentState::default());
        }
    }

    #[test]
    fn init_saturated_grid() {
        let cfg = SimConfig {
            start_resources: 20 * 30,
            ..small_cfg()
        };
        let sim = Simulation::new(cfg).unwrap();
        assert_eq!(sim.world().resource_count(), 600);
    }

    #[test]
    fn init_rejects_bad_config() {
        let too_many = SimConfig {
            start_resources: 601,
            ..small_cfg()
        };
        assert!(matches!(Simulation::new(too_many), Err(Error::Config(_))));
        let crowd = SimConfig {
            start_population: 51,
            ..small_cfg()
        };
        assert!(Simulation::new(crowd).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let a = Simulation::new(small_cfg()).unwrap();
        let b = Simulation::new(small_cfg()).unwrap();
        assert_eq!(a.population(), b.population());
        assert_eq!(a.world(), b.world());
        let c = Simulation::new(SimConfig { seed: 6, ..small_cfg() }).unwrap();
        assert_ne!(a.world(), c.world());
    }

    #[test]
    fn empty_population_only_regrows() {
        let mut sim = empty_sim(SimConfig {
            regrowth: RegrowthConfig {
                spontaneous_prob: 0.1,
                ..RegrowthConfig::default()
            },
            ..small_cfg()
        });
        let ev = sim.step().unwrap();
        assert!(ev.births.is_empty() && ev.deaths.is_empty());
        assert!(ev.grown > 0);
        assert_eq!(sim.world().resource_count(), ev.grown);
    }

    #[test]
    fn stay_on_resource_eats_once() {
        let mut sim = empty_sim(SimConfig {
            regrowth: RegrowthConfig::disabled(),
            ..small_cfg()
        });
        sim.world_mut().set_resource(5, 5, true).unwrap();
        let physio = sim.config().physiology.clone();
        let slot = sim
            .population_mut()
            .insert(&NetworkParams::zeros(), Position::new(5, 5), &physio)
            .unwrap();
        sim.population_mut().get_mut(slot).unwrap().energy = Energy::from_f64(1.0);
        let ev = sim.step_with(&Always(Action::Stay)).unwrap();
        assert_eq!(ev.consumed(), 1);
        assert!(!sim.world().has_resource(5, 5));
        let a = sim.population().get(slot).unwrap();
        assert!(a.ate);
        assert_eq!(a.energy, Energy::from_f64(1.0 + 1.0 - 0.025));
    }

    #[test]
    fn shared_cell_single_eater() {
        for seed in 0..20 {
            let mut sim = empty_sim(SimConfig {
                seed,
                regrowth: RegrowthConfig::disabled(),
                ..small_cfg()
            });
            sim.world_mut().set_resource(3, 3, true).unwrap();
            let physio = sim.config().physiology.clone();
            for _ in 0..2 {
                sim.population_mut()
                    .insert(&NetworkParams::zeros(), Position::new(3, 3), &physio);
            }
            let ev = sim.step_with(&Always(Action::Stay)).unwrap();
            assert_eq!(ev.consumed(), 1);
            let eaters = sim.population().iter_alive().filter(|(_, a)| a.ate).count();
            assert_eq!(eaters, 1);
        }
    }

    #[test]
    fn wall_death_blocks_eating() {
        let mut sim = empty_sim(SimConfig {
            regrowth: RegrowthConfig::disabled(),
            ..small_cfg()
        });
        sim.world_mut().set_resource(0, 0, true).unwrap();
        let physio = sim.config().physiology.clone();
        sim.population_mut()
            .insert(&NetworkParams::zeros(), Position::new(0, 0), &physio);
        let ev = sim.step_with(&Always(Action::Left)).unwrap();
        assert_eq!(ev.deaths.len(), 1);
        assert_eq!(ev.deaths[0].cause, DeathCause::Wall);
        assert_eq!(ev.consumed(), 0);
        assert!(sim.world().has_resource(0, 0));
        assert!(sim.is_extinct());
    }

    #[test]
    fn offspring_on_parent_cell() {
        let mut sim = empty_sim(SimConfig {
            regrowth: RegrowthConfig::disabled(),
            ..small_cfg()
        });
        let physio = sim.config().physiology.clone();
        let genome = NetworkParams::random(0.1, &mut <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1));
        let slot = sim
            .population_mut()
            .insert(&genome, Position::new(7, 9), &physio)
            .unwrap();
        sim.population_mut().get_mut(slot).unwrap().repr_timer = 139;
        let ev = sim.step_with(&Always(Action::Stay)).unwrap();
        assert_eq!(ev.births.len(), 1);
        assert_eq!(sim.population().alive_count(), 2);
        let child = sim.population().get(ev.births[0].slot).unwrap();
        assert_eq!(child.position, Position::new(7, 9));
        assert_eq!(child.energy, Energy::from_f64(3.0));
        assert_ne!(child.genome, genome);
        assert_eq!(sim.population().get(slot).unwrap().repr_timer, 0);
    }

    #[test]
    fn zero_sigma_clones_genome() {
        let mut sim = empty_sim(SimConfig {
            sigma: 0.0,
            regrowth: RegrowthConfig::disabled(),
            ..small_cfg()
        });
        let physio = sim.config().physiology.clone();
        let genome = NetworkParams::random(0.1, &mut <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2));
        let slot = sim
            .population_mut()
            .insert(&genome, Position::new(1, 1), &physio)
            .unwrap();
        match sim.spawn_offspring(slot, 0) {
            SpawnOutcome::Spawned(c) => assert_eq!(sim.population().get(c).unwrap().genome, genome),
            SpawnOutcome::Deferred => panic!("slot available"),
        }
    }

    #[test]
    fn full_population_defers() {
        let mut sim = empty_sim(SimConfig {
            max_population: 2,
            start_population: 0,
            regrowth: RegrowthConfig::disabled(),
            ..small_cfg()
        });
        let physio = sim.config().physiology.clone();
        for _ in 0..2 {
            sim.population_mut()
                .insert(&NetworkParams::zeros(), Position::new(4, 4), &physio);
        }
        sim.population_mut().get_mut(0).unwrap().repr_timer = 139;
        let ev = sim.step_with(&Always(Action::Stay)).unwrap();
        assert_eq!(ev.deferred, 1);
        assert!(ev.births.is_empty());
        assert_eq!(sim.population().alive_count(), 2);
        let parent = sim.population().get(0).unwrap();
        assert!(parent.repr_timer >= 140);
        // still saturated next step
        let ev = sim.step_with(&Always(Action::Stay)).unwrap();
        assert_eq!(ev.deferred, 1);
    }

    #[test]
    fn scripted_starvation_death_step() {
        let mut sim = empty_sim(SimConfig {
            regrowth: RegrowthConfig::disabled(),
            ..small_cfg()
        });
        let physio = sim.config().physiology.clone();
        sim.population_mut()
            .insert(&NetworkParams::zeros(), Position::new(10, 10), &physio);
        for step in 1..=400u64 {
            let ev = sim.step_with(&Always(Action::Stay)).unwrap();
            if let Some(d) = ev.deaths.first() {
                assert_eq!(step, 320);
                assert_eq!(d.cause, DeathCause::Starvation);
                assert_eq!(d.age, 320);
                return;
            }
        }
        panic!("no death");
    }

    #[test]
    fn accounting_holds_on_random_run() {
        let mut sim = Simulation::new(SimConfig {
            regrowth: RegrowthConfig {
                per_neighbor_prob: 0.02,
                ..RegrowthConfig::default()
            },
            init_weight_std: 0.5,
            ..small_cfg()
        })
        .unwrap();
        for _ in 0..300 {
            let (r0, k0) = (sim.world().resource_count(), sim.population().alive_count());
            let ev = sim.step().unwrap();
            assert_eq!(sim.world().resource_count(), r0 - ev.consumed() + ev.grown);
            assert_eq!(
                sim.population().alive_count(),
                k0 + ev.births.len() - ev.deaths.len()
            );
            assert!(sim.population().alive_count() <= 50);
        }
    }

    #[test]
    fn thread_count_does_not_change_trajectory() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut sim = Simulation::new(SimConfig {
                    init_weight_std: 0.5,
                    ..small_cfg()
                })
                .unwrap();
                for _ in 0..200 {
                    sim.step().unwrap();
                }
                (sim.world().clone(), sim.population().clone())
            })
        };
        assert_eq!(run(1), run(4));
    }
}
