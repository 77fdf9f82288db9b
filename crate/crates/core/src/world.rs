//! Grid state and stochastic resource regrowth.
//!
//! Row 0 is the top of the map. Regrowth is strongest at the bottom row, where
//! the normalized latitude is 1.

use rand::seq::index;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStream};

/// How the occupied-neighbor count enters the regrowth probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NeighborMode {
    /// Probability grows linearly with the number of occupied neighbors.
    #[default]
    Proportional,
    /// Any occupied neighbor contributes the full increment once.
    Indicator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegrowthConfig {
    pub per_neighbor_prob: f64,
    pub spontaneous_prob: f64,
    pub alpha: f64,
    pub neighbor_mode: NeighborMode,
}

impl Default for RegrowthConfig {
    fn default() -> Self {
        Self {
            per_neighbor_prob: 0.002,
            spontaneous_prob: 0.00005,
            alpha: 200.0,
            neighbor_mode: NeighborMode::Proportional,
        }
    }
}

impl RegrowthConfig {
    /// No regrowth at all (used by the lab environments).
    pub fn disabled() -> Self {
        Self {
            per_neighbor_prob: 0.0,
            spontaneous_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.per_neighbor_prob) {
            return Err(Error::Config(format!(
                "per_neighbor_prob {} not in [0, 1]",
                self.per_neighbor_prob
            )));
        }
        if !unit(self.spontaneous_prob) {
            return Err(Error::Config(format!(
                "spontaneous_prob {} not in [0, 1]",
                self.spontaneous_prob
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha {} must be positive", self.alpha)));
        }
        Ok(())
    }
}

/// Climate value `(alpha^x + 1) / (alpha + 1)` of a row, with latitude
/// `x = row / (rows - 1)` so the bottom row gets 1.
pub fn climate_value(row: usize, rows: usize, alpha: f64) -> Result<f64> {
    if rows < 2 {
        return Err(Error::Config(format!(
            "climate needs at least 2 rows, got {rows}"
        )));
    }
    if row >= rows {
        return Err(Error::Contract(format!("row {row} outside {rows} rows")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("alpha {alpha} must be positive")));
    }
    let x = row as f64 / (rows - 1) as f64;
    Ok((alpha.powf(x) + 1.0) / (alpha + 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    rows: usize,
    cols: usize,
    resources: Vec<bool>,
    walls: Vec<bool>,
    climate: Vec<f64>,
}

impl WorldState {
    /// Empty world without walls.
    pub fn new(rows: usize, cols: usize, alpha: f64) -> Result<Self> {
        if cols == 0 {
            return Err(Error::Config("cols must be positive".into()));
        }
        let climate = (0..rows)
            .map(|r| climate_value(r, rows, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows,
            cols,
            resources: vec![false; rows * cols],
            walls: vec![false; rows * cols],
            climate,
        })
    }

    pub(crate) fn from_parts(
        rows: usize,
        cols: usize,
        alpha: f64,
        resources: Vec<bool>,
        walls: Vec<bool>,
    ) -> Result<Self> {
        let mut world = Self::new(rows, cols, alpha)?;
        if resources.len() != rows * cols || walls.len() != rows * cols {
            return Err(Error::Checkpoint("grid bitmap size mismatch".into()));
        }
        if resources.iter().zip(&walls).any(|(r, w)| *r && *w) {
            return Err(Error::Checkpoint("wall and resource share a cell".into()));
        }
        world.resources = resources;
        world.walls = walls;
        Ok(world)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    #[inline]
    pub fn has_resource(&self, row: usize, col: usize) -> bool {
        self.resources[self.index(row, col)]
    }

    #[inline]
    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.walls[self.index(row, col)]
    }

    pub fn climate(&self, row: usize) -> f64 {
        self.climate[row]
    }

    pub fn resources(&self) -> &[bool] {
        &self.resources
    }

    pub fn walls(&self) -> &[bool] {
        &self.walls
    }

    /// Full-grid popcount of the resource layer.
    pub fn resource_count(&self) -> usize {
        self.resources.iter().filter(|&&r| r).count()
    }

    pub fn free_cell_count(&self) -> usize {
        self.walls.iter().filter(|&&w| !w).count()
    }

    pub fn set_wall(&mut self, row: usize, col: usize, wall: bool) {
        let i = self.index(row, col);
        self.walls[i] = wall;
        if wall {
            self.resources[i] = false;
        }
    }

    /// Places or clears a resource. Walls never hold resources.
    pub fn set_resource(&mut self, row: usize, col: usize, present: bool) -> Result<()> {
        let i = self.index(row, col);
        if present && self.walls[i] {
            return Err(Error::Contract(format!(
                "resource on wall cell ({row}, {col})"
            )));
        }
        self.resources[i] = present;
        Ok(())
    }

    /// Removes the resource at `index`, returning whether one was there.
    #[inline]
    pub(crate) fn take_resource(&mut self, index: usize) -> bool {
        std::mem::replace(&mut self.resources[index], false)
    }

    /// Places `count` resources uniformly without replacement over non-wall
    /// cells that are not listed in `excluded`.
    pub fn scatter_resources(
        &mut self,
        count: usize,
        excluded: &[usize],
        rng: &mut impl RngCore,
    ) -> Result<()> {
        let candidates: Vec<usize> = (0..self.cell_count())
            .filter(|&i| !self.walls[i] && !self.resources[i] && !excluded.contains(&i))
            .collect();
        if count > candidates.len() {
            return Err(Error::Config(format!(
                "{count} starting resources exceed {} free cells",
                candidates.len()
            )));
        }
        for pick in index::sample(rng, candidates.len(), count) {
            self.resources[candidates[pick]] = true;
        }
        Ok(())
    }

    #[inline]
    fn occupied_neighbors(&self, row: usize, col: usize) -> u32 {
        let mut n = 0;
        if row > 0 && self.resources[self.index(row - 1, col)] {
            n += 1;
        }
        if row + 1 < self.rows && self.resources[self.index(row + 1, col)] {
            n += 1;
        }
        if col > 0 && self.resources[self.index(row, col - 1)] {
            n += 1;
        }
        if col + 1 < self.cols && self.resources[self.index(row, col + 1)] {
            n += 1;
        }
        n
    }
}

#[inline]
fn combine(n: u32, climate: f64, cfg: &RegrowthConfig) -> f64 {
    let driven = match cfg.neighbor_mode {
        NeighborMode::Proportional => n as f64,
        NeighborMode::Indicator => (n >= 1) as u8 as f64,
    };
    (cfg.per_neighbor_prob * driven * climate + cfg.spontaneous_prob).clamp(0.0, 1.0)
}

/// Probability that an empty, non-wall cell grows a resource this step.
pub fn regrowth_probability(
    (row, col): (usize, usize),
    world: &WorldState,
    cfg: &RegrowthConfig,
) -> Result<f64> {
    if row >= world.rows || col >= world.cols {
        return Err(Error::Contract(format!("cell ({row}, {col}) out of bounds")));
    }
    if world.is_wall(row, col) || world.has_resource(row, col) {
        return Err(Error::Contract(format!(
            "regrowth probability requested for occupied cell ({row}, {col})"
        )));
    }
    Ok(combine(
        world.occupied_neighbors(row, col),
        world.climate(row),
        cfg,
    ))
}

/// Uniform draw in [0, 1) with 53 bits of resolution.
#[inline]
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One synchronous regrowth sweep. Every cell samples against the grid as it
/// was on entry; the number of newly grown resources is returned.
///
/// Each row reads from its own stream `(Regrowth, step, row)`, one draw per
/// cell in column order, so rows can be processed in any order or in parallel.
pub fn step_regrowth(
    world: &mut WorldState,
    cfg: &RegrowthConfig,
    rng: &RngStream,
    step: u64,
) -> usize {
    if cfg.per_neighbor_prob == 0.0 && cfg.spontaneous_prob == 0.0 {
        return 0;
    }
    let snapshot = &*world;
    let grown: Vec<Vec<usize>> = (0..snapshot.rows)
        .into_par_iter()
        .map(|row| {
            let mut stream = rng.substream(Purpose::Regrowth, step, row as u64);
            let climate = snapshot.climate[row];
            let mut out = Vec::new();
            for col in 0..snapshot.cols {
                let u = unit_f64(&mut stream);
                let i = snapshot.index(row, col);
                if snapshot.resources[i] || snapshot.walls[i] {
                    continue;
                }
                let p = combine(snapshot.occupied_neighbors(row, col), climate, cfg);
                if u < p {
                    out.push(i);
                }
            }
            out
        })
        .collect();
    let mut count = 0;
    for i in grown.into_iter().flatten() {
        world.resources[i] = true;
        count += 1;
    }
    count
}
