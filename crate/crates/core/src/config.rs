//! Flat TOML configuration for natural runs.
//!
//! Every key is optional and defaults to the published value. Unknown keys
//! are rejected so a typo cannot silently fall back to a default.
//!
//! ```toml
//! grid_rows = 200
//! grid_cols = 400
//! max_population = 1000
//! starting_population = 330
//! starting_resources = 16000
//! total_timesteps = 1000000
//! mutation_sigma = 0.02
//! time_to_reproduce = 140
//! time_to_die = 200
//! max_energy = 3.0
//! starting_energy = 3.0
//! energy_death = 0.0
//! energy_decay = 0.025
//! energy_gain = 1.0
//! maximum_age = 650
//! regrowth_per_neighbor = 0.002
//! regrowth_spontaneous = 0.00005
//! climate_alpha = 200.0
//! neighbor_mode = "proportional"
//! boundary = "lethal"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{BoundaryMode, PhysiologyConfig};
use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::world::{NeighborMode, RegrowthConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub max_population: usize,
    pub starting_population: usize,
    pub starting_resources: usize,
    pub total_timesteps: u64,
    /// Standard deviation of the mutation noise.
    pub mutation_sigma: f32,
    pub initial_weight_std: f32,
    pub seed: u64,
    pub reproduction: bool,
    pub time_to_reproduce: u32,
    pub time_to_die: u32,
    pub max_energy: f64,
    pub starting_energy: f64,
    pub energy_death: f64,
    pub energy_decay: f64,
    pub energy_gain: f64,
    pub maximum_age: u32,
    pub regrowth_per_neighbor: f64,
    pub regrowth_spontaneous: f64,
    pub climate_alpha: f64,
    pub neighbor_mode: NeighborMode,
    pub boundary: BoundaryMode,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self::from(&SimConfig::default())
    }
}

impl From<&SimConfig> for ConfigFile {
    fn from(c: &SimConfig) -> Self {
        Self {
            grid_rows: c.rows,
            grid_cols: c.cols,
            max_population: c.max_population,
            starting_population: c.start_population,
            starting_resources: c.start_resources,
            total_timesteps: c.total_steps,
            mutation_sigma: c.sigma,
            initial_weight_std: c.init_weight_std,
            seed: c.seed,
            reproduction: c.reproduction_enabled,
            time_to_reproduce: c.physiology.time_to_reproduce,
            time_to_die: c.physiology.time_to_die,
            max_energy: c.physiology.max_energy,
            starting_energy: c.physiology.initial_energy,
            energy_death: c.physiology.min_energy,
            energy_decay: c.physiology.decay,
            energy_gain: c.physiology.eat_gain,
            maximum_age: c.physiology.max_age,
            regrowth_per_neighbor: c.regrowth.per_neighbor_prob,
            regrowth_spontaneous: c.regrowth.spontaneous_prob,
            climate_alpha: c.regrowth.alpha,
            neighbor_mode: c.regrowth.neighbor_mode,
            boundary: c.boundary_mode,
        }
    }
}

impl From<ConfigFile> for SimConfig {
    fn from(f: ConfigFile) -> Self {
        SimConfig {
            rows: f.grid_rows,
            cols: f.grid_cols,
            max_population: f.max_population,
            start_population: f.starting_population,
            start_resources: f.starting_resources,
            total_steps: f.total_timesteps,
            sigma: f.mutation_sigma,
            init_weight_std: f.initial_weight_std,
            seed: f.seed,
            boundary_mode: f.boundary,
            reproduction_enabled: f.reproduction,
            physiology: PhysiologyConfig {
                initial_energy: f.starting_energy,
                max_energy: f.max_energy,
                min_energy: f.energy_death,
                decay: f.energy_decay,
                eat_gain: f.energy_gain,
                time_to_reproduce: f.time_to_reproduce,
                time_to_die: f.time_to_die,
                max_age: f.maximum_age,
            },
            regrowth: RegrowthConfig {
                per_neighbor_prob: f.regrowth_per_neighbor,
                spontaneous_prob: f.regrowth_spontaneous,
                alpha: f.climate_alpha,
                neighbor_mode: f.neighbor_mode,
            },
        }
    }
}

/// Parses and validates a configuration. Syntax and type errors carry the
/// line and key from the TOML parser.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let cfg = SimConfig::from(file);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        e => e,
    })
}

/// Renders a configuration with every key spelled out.
pub fn render_config(cfg: &SimConfig) -> String {
    toml::to_string(&ConfigFile::from(cfg)).expect("flat config always serializes")
}
