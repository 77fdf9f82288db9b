//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "ECOEVOCK" | version u32
//! step u64 | config digest [32] | config json (u32 length + bytes)
//! rows u64 | cols u64 | resource bitmap | wall bitmap      (row-major, LSB first)
//! capacity u64 | next_id u64 | slots                        (dead slots: one zero byte)
//! window tracker
//! sha256 of everything above [32]
//! ```
//!
//! Random streams are addressed by seed and step, so the config and the
//! step index are the whole generator state.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::agents::{AgentState, Energy, Position};
use crate::engine::{Population, SimConfig, Simulation};
use crate::error::{Error, Result};
use crate::metrics::WindowTracker;
use crate::neural::{Action, PARAM_COUNT};
use crate::world::WorldState;

pub const MAGIC: &[u8; 8] = b"ECOEVOCK";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub simulation: Simulation,
    pub tracker: WindowTracker,
}

/// Lowercase hex SHA-256.
pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a configuration's canonical JSON form.
pub fn config_digest(cfg: &SimConfig) -> [u8; 32] {
    Sha256::digest(config_json(cfg)).into()
}

fn config_json(cfg: &SimConfig) -> Vec<u8> {
    serde_json::to_vec(cfg).expect("config always serializes")
}

pub fn encode(sim: &Simulation, tracker: &WindowTracker) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(sim.current_step());
    w.bytes(&config_digest(sim.config()));
    let json = config_json(sim.config());
    w.u32(json.len() as u32);
    w.bytes(&json);

    let world = sim.world();
    w.u64(world.rows() as u64);
    w.u64(world.cols() as u64);
    w.bitmap(world.resources());
    w.bitmap(world.walls());

    let pop = sim.population();
    w.u64(pop.capacity() as u64);
    w.u64(pop.next_id());
    for agent in pop.slots() {
        if !agent.alive {
            w.u8(0);
            continue;
        }
        w.u8(1);
        w.u64(agent.id);
        w.u64(agent.position.row as u64);
        w.u64(agent.position.col as u64);
        w.i64(agent.energy.raw());
        w.u32(agent.age);
        w.u32(agent.repr_timer);
        w.u32(agent.death_timer);
        for v in agent.recurrent.hidden.iter().chain(&agent.recurrent.cell) {
            w.f32(*v);
        }
        w.u8(agent.prev_action.map_or(u8::MAX, |a| a.index() as u8));
        w.u8(agent.ate as u8);
        for v in agent.genome.as_slice() {
            w.f32(*v);
        }
    }

    w.u64(tracker.movement_start);
    w.u64(tracker.expectancy_start);
    w.u64(tracker.death_age_sum);
    w.u64(tracker.death_count);
    w.u64(tracker.anchors.len() as u64);
    for anchor in &tracker.anchors {
        match anchor {
            None => w.u8(0),
            Some((id, pos)) => {
                w.u8(1);
                w.u64(*id);
                w.u64(pos.row as u64);
                w.u64(pos.col as u64);
            }
        }
    }

    let sum = Sha256::digest(&w.buf);
    w.bytes(&sum);
    w.buf
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let mut r = Reader {
        buf: &bytes[MAGIC.len()..],
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {version}, this build reads version {FORMAT_VERSION}"
        )));
    }
    let (body, sum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != sum {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }
    let mut r = Reader {
        buf: &body[MAGIC.len() + 4..],
    };

    let step = r.u64()?;
    let digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    let json_len = r.u32()? as usize;
    let cfg: SimConfig = serde_json::from_slice(r.take(json_len)?)
        .map_err(|e| Error::Checkpoint(format!("config: {e}")))?;
    if config_digest(&cfg) != digest {
        return Err(Error::Checkpoint("config digest mismatch".into()));
    }

    let rows = r.usize()?;
    let cols = r.usize()?;
    if rows != cfg.rows || cols != cfg.cols {
        return Err(Error::Checkpoint("grid shape disagrees with config".into()));
    }
    let resources = r.bitmap(rows * cols)?;
    let walls = r.bitmap(rows * cols)?;
    let world = WorldState::from_parts(rows, cols, cfg.regrowth.alpha, resources, walls)?;

    let capacity = r.usize()?;
    let next_id = r.u64()?;
    if capacity != cfg.max_population {
        return Err(Error::Checkpoint("slot count disagrees with config".into()));
    }
    let mut slots = Vec::with_capacity(capacity);
    for _ in 0..capacity {
        let mut agent = AgentState::empty();
        match r.u8()? {
            0 => {}
            1 => {
                agent.alive = true;
                agent.id = r.u64()?;
                agent.position = Position::new(r.usize()?, r.usize()?);
                if agent.position.row >= rows || agent.position.col >= cols {
                    return Err(Error::Checkpoint("agent outside the grid".into()));
                }
                agent.energy = Energy::from_raw(r.i64()?);
                agent.age = r.u32()?;
                agent.repr_timer = r.u32()?;
                agent.death_timer = r.u32()?;
                for v in agent.recurrent.hidden.iter_mut() {
                    *v = r.f32()?;
                }
                for v in agent.recurrent.cell.iter_mut() {
                    *v = r.f32()?;
                }
                agent.prev_action = match r.u8()? {
                    u8::MAX => None,
                    i => Some(
                        Action::from_index(i as usize)
                            .ok_or_else(|| Error::Checkpoint(format!("bad action {i}")))?,
                    ),
                };
                agent.ate = r.u8()? != 0;
                let weights = agent.genome.as_mut_slice();
                debug_assert_eq!(weights.len(), PARAM_COUNT);
                for v in weights.iter_mut() {
                    *v = r.f32()?;
                }
            }
            b => return Err(Error::Checkpoint(format!("bad slot tag {b}"))),
        }
        slots.push(agent);
    }
    let population = Population::from_parts(slots, next_id);

    let movement_start = r.u64()?;
    let expectancy_start = r.u64()?;
    let death_age_sum = r.u64()?;
    let death_count = r.u64()?;
    let n = r.usize()?;
    let mut anchors = Vec::with_capacity(n.min(capacity));
    for _ in 0..n {
        anchors.push(match r.u8()? {
            0 => None,
            _ => Some((r.u64()?, Position::new(r.usize()?, r.usize()?))),
        });
    }
    if !r.buf.is_empty() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }

    Ok(Checkpoint {
        simulation: Simulation::from_parts(cfg, world, population, step),
        tracker: WindowTracker {
            movement_start,
            anchors,
            expectancy_start,
            death_age_sum,
            death_count,
        },
    })
}

/// Writes through a temporary file so a crash never leaves a torn checkpoint.
pub fn save(path: &Path, sim: &Simulation, tracker: &WindowTracker) -> Result<Vec<u8>> {
    let bytes = encode(sim, tracker);
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Checkpoint(msg) => Error::Checkpoint(format!("{}: {msg}", path.display())),
        e => e,
    })
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }
    fn bitmap(&mut self, bits: &[bool]) {
        for chunk in bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i));
            self.buf.push(byte);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }
    fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflow".into()))
    }
    fn i64(&mut self) -> Result<i64> {
        self.array().map(i64::from_le_bytes)
    }
    fn f32(&mut self) -> Result<f32> {
        self.array().map(f32::from_le_bytes)
    }
    fn bitmap(&mut self, len: usize) -> Result<Vec<bool>> {
        let bytes = self.take(len.div_ceil(8))?;
        Ok((0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
    }
}
