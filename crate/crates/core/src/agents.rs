//! Agent embodiment: what an agent sees, how it moves, and the energy
//! physiology behind reproduction and death.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{Action, NetworkParams, Observation, RecurrentState, VIEW};
use crate::world::WorldState;

/// Cells visible in each direction from the agent.
pub const VIEW_RADIUS: i64 = (VIEW / 2) as i64;

/// Energy in fixed-point micro-units, so repeated decay lands exactly on
/// thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Energy(i64);

impl Energy {
    pub const SCALE: f64 = 1_000_000.0;
    pub const ZERO: Energy = Energy(0);

    pub fn from_f64(value: f64) -> Energy {
        Energy((value * Self::SCALE).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE
    }

    pub fn from_raw(raw: i64) -> Energy {
        Energy(raw)
    }

    pub fn raw(self) -> i64 {
        self.0
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysiologyConfig {
    pub initial_energy: f64,
    pub max_energy: f64,
    /// Shared threshold of the reproduction and death timers.
    pub min_energy: f64,
    pub decay: f64,
    pub eat_gain: f64,
    pub time_to_reproduce: u32,
    pub time_to_die: u32,
    pub max_age: u32,
}

impl Default for PhysiologyConfig {
    fn default() -> Self {
        Self {
            initial_energy: 3.0,
            max_energy: 3.0,
            min_energy: 0.0,
            decay: 0.025,
            eat_gain: 1.0,
            time_to_reproduce: 140,
            time_to_die: 200,
            max_age: 650,
        }
    }
}

impl PhysiologyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::Config(format!("decay {} must be positive", self.decay)));
        }
        if self.time_to_reproduce == 0 || self.time_to_die == 0 || self.max_age == 0 {
            return Err(Error::Config(
                "time_to_reproduce, time_to_die and max_age must be positive".into(),
            ));
        }
        if self.initial_energy > self.max_energy {
            return Err(Error::Config("initial_energy exceeds max_energy".into()));
        }
        if !(self.eat_gain >= 0.0) {
            return Err(Error::Config("eat_gain must be non-negative".into()));
        }
        Ok(())
    }
}

/// What happens at the edge of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Leaving the grid kills the agent, like walking into a wall.
    #[default]
    Lethal,
    /// Moves off the grid are refused and the agent stays in place.
    Blocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Position) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub alive: bool,
    /// Unique per birth; distinguishes successive occupants of a slot.
    pub id: u64,
    pub position: Position,
    pub energy: Energy,
    pub age: u32,
    pub repr_timer: u32,
    pub death_timer: u32,
    pub recurrent: RecurrentState,
    pub prev_action: Option<Action>,
    pub ate: bool,
    pub genome: NetworkParams,
}

impl AgentState {
    pub fn empty() -> Self {
        Self {
            alive: false,
            id: 0,
            position: Position::default(),
            energy: Energy::ZERO,
            age: 0,
            repr_timer: 0,
            death_timer: 0,
            recurrent: RecurrentState::default(),
            prev_action: None,
            ate: false,
            genome: NetworkParams::zeros(),
        }
    }

    /// Resets every per-life field for a newborn at `position`. The genome is
    /// left to the caller.
    pub fn be_born(&mut self, id: u64, position: Position, cfg: &PhysiologyConfig) {
        self.alive = true;
        self.id = id;
        self.position = position;
        self.energy = Energy::from_f64(cfg.initial_energy);
        self.age = 0;
        self.repr_timer = 0;
        self.death_timer = 0;
        self.recurrent = RecurrentState::default();
        self.prev_action = None;
        self.ate = false;
    }
}

/// Number of agents per cell, the population layer agents observe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentDensity {
    cols: usize,
    counts: Vec<u16>,
}

impl AgentDensity {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            counts: vec![0; rows * cols],
        }
    }

    pub fn from_agents<'a>(
        rows: usize,
        cols: usize,
        agents: impl IntoIterator<Item = &'a AgentState>,
    ) -> Self {
        let mut d = Self::new(rows, cols);
        d.rebuild(agents);
        d
    }

    pub fn rebuild<'a>(&mut self, agents: impl IntoIterator<Item = &'a AgentState>) {
        self.counts.fill(0);
        for a in agents.into_iter().filter(|a| a.alive) {
            let i = a.position.row * self.cols + a.position.col;
            self.counts[i] = self.counts[i].saturating_add(1);
        }
    }

    #[inline]
    pub fn count(&self, row: usize, col: usize) -> u16 {
        self.counts[row * self.cols + col]
    }
}

/// The agent's `VIEW x VIEW` window. Channel 0 holds resources, channel 1 the
/// agent count (self included), channel 2 walls. Cells off the grid read as wall.
pub fn observe(position: Position, world: &WorldState, density: &AgentDensity) -> Observation {
    let mut obs = Observation::default();
    fill_observation(&mut obs, position, world, density);
    obs
}

pub fn fill_observation(
    obs: &mut Observation,
    position: Position,
    world: &WorldState,
    density: &AgentDensity,
) {
    let r0 = position.row as i64 - VIEW_RADIUS;
    let c0 = position.col as i64 - VIEW_RADIUS;
    for dy in 0..VIEW {
        let r = r0 + dy as i64;
        for dx in 0..VIEW {
            let c = c0 + dx as i64;
            let base = (dy * VIEW + dx) * 3;
            let cell = &mut obs.0[base..base + 3];
            if world.in_bounds(r, c) {
                let (r, c) = (r as usize, c as usize);
                cell[0] = world.has_resource(r, c) as u8 as f32;
                cell[1] = density.count(r, c) as f32;
                cell[2] = world.is_wall(r, c) as u8 as f32;
            } else {
                cell[0] = 0.0;
                cell[1] = 0.0;
                cell[2] = 1.0;
            }
        }
    }
}

/// Number of resources in the window an agent at `position` sees.
pub fn visible_resources(position: Position, world: &WorldState) -> usize {
    let mut n = 0;
    for dr in -VIEW_RADIUS..=VIEW_RADIUS {
        for dc in -VIEW_RADIUS..=VIEW_RADIUS {
            let (r, c) = (position.row as i64 + dr, position.col as i64 + dc);
            if world.in_bounds(r, c) && world.has_resource(r as usize, c as usize) {
                n += 1;
            }
        }
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveOutcome {
    pub position: Position,
    pub killed_by_wall: bool,
}

pub fn apply_move(
    position: Position,
    action: Action,
    world: &WorldState,
    boundary: BoundaryMode,
) -> MoveOutcome {
    let (dr, dc) = action.delta();
    if (dr, dc) == (0, 0) {
        return MoveOutcome {
            position,
            killed_by_wall: false,
        };
    }
    let (r, c) = (position.row as i64 + dr, position.col as i64 + dc);
    if !world.in_bounds(r, c) {
        return MoveOutcome {
            position,
            killed_by_wall: boundary == BoundaryMode::Lethal,
        };
    }
    let target = Position::new(r as usize, c as usize);
    if world.is_wall(target.row, target.col) {
        return MoveOutcome {
            position,
            killed_by_wall: true,
        };
    }
    MoveOutcome {
        position: target,
        killed_by_wall: false,
    }
}

/// Linear decay plus the eating bonus, clipped at the maximum. Not floored.
pub fn step_energy(energy: Energy, ate: bool, cfg: &PhysiologyConfig) -> Energy {
    let mut e = energy.raw() - Energy::from_f64(cfg.decay).raw();
    if ate {
        e += Energy::from_f64(cfg.eat_gain).raw();
    }
    Energy(e.min(Energy::from_f64(cfg.max_energy).raw()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct LifeUpdate {
    pub reproduce: bool,
    pub die: bool,
}

/// Ages the agent by one step and advances exactly one of its two streaks.
///
/// The streaks judge the energy the agent carried into the step, i.e. the
/// value before this step's decay and eating. A streak of `n` therefore means
/// the agent held its energy on that side of the threshold for `n` whole steps.
pub fn update_life_timers(agent: &mut AgentState, cfg: &PhysiologyConfig) -> LifeUpdate {
    agent.age += 1;
    if agent.energy > Energy::from_f64(cfg.min_energy) {
        agent.repr_timer += 1;
        agent.death_timer = 0;
    } else {
        agent.death_timer += 1;
        agent.repr_timer = 0;
    }
    LifeUpdate {
        reproduce: agent.repr_timer >= cfg.time_to_reproduce,
        die: agent.death_timer >= cfg.time_to_die || agent.age > cfg.max_age,
    }
}
