//! Acceptance suite. Runs every criterion in order and prints one line each:
//!
//! ```text
//! [PASS] 1 parameter count: ...
//! ```
//!
//! Exits non-zero when any criterion fails. Criteria 9 and 10 evolve
//! desk-scale populations and dominate the run time.

use std::time::Instant;

use ecoevo::agents::{BoundaryMode, Position};
use ecoevo::checkpoint;
use ecoevo::engine::{DeathCause, Decision, NeuralPolicy, Policy, SimConfig, Simulation};
use ecoevo::lab::{self, AlwaysEat, Density, LabConfig, NeverEat};
use ecoevo::metrics::{movement_bin, NullSink};
use ecoevo::neural::{Action, NetworkParams, Observation, PARAM_COUNT, SEGMENTS};
use ecoevo::rng::RngStream;
use ecoevo::runner::{self, RunOptions};
use ecoevo::stats::{one_way_anova, studentized_range_critical, tukey_hsd};
use ecoevo::world::{climate_value, regrowth_probability, step_regrowth, RegrowthConfig, WorldState};
use ecoevo::Result;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

/// Parameter count from the layer shapes, independent of the library's own
/// bookkeeping.
fn criterion_1() -> Result<Verdict> {
    let view = 15usize;
    let same = |n: usize, stride: usize| n.div_ceil(stride);
    let valid = |n: usize, k: usize| n - k + 1;
    let side = valid(same(valid(same(view, 2), 2), 2), 2);
    let flat = side * side * 8;
    let embed = flat + 5 + 1;
    let conv1 = 3 * 3 * 3 * 4 + 4;
    let conv2 = 3 * 3 * 4 * 8 + 8;
    let lstm = 4 * (embed * 4 + 4 * 4 + 4);
    let dense = (embed + 4) * 8 + 8;
    let out = 8 * 5 + 5;
    let expected = [conv1, conv2, lstm, dense, out];
    let total: usize = expected.iter().sum();
    let built = NetworkParams::zeros().len();
    let segments: Vec<usize> = SEGMENTS.iter().map(|s| s.1).collect();
    verdict(
        total == 2445 && built == 2445 && PARAM_COUNT == 2445 && segments == expected,
        format!("shape count {total}, built {built}, segments {segments:?}"),
    )
}

fn criterion_2() -> Result<Verdict> {
    // 2x3 grid, one resource at (1,1):
    //   (1,0) bottom row, one occupied neighbor
    //   (0,2) no occupied neighbor
    let cfg = RegrowthConfig::default();
    let mut base = WorldState::new(2, 3, cfg.alpha)?;
    base.set_resource(1, 1, true)?;
    let p_one = regrowth_probability((1, 0), &base, &cfg)?;
    let p_none = regrowth_probability((0, 2), &base, &cfg)?;
    let rng = RngStream::new(2024);
    let n = 1_000_000u64;
    let (mut hits_one, mut hits_none) = (0u64, 0u64);
    for step in 0..n {
        let mut w = base.clone();
        step_regrowth(&mut w, &cfg, &rng, step);
        hits_one += w.has_resource(1, 0) as u64;
        hits_none += w.has_resource(0, 2) as u64;
    }
    let z = |hits: u64, p: f64| {
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        (hits as f64 / n as f64 - p) / sd
    };
    let (z_one, z_none) = (z(hits_one, 0.00205), z(hits_none, 0.00005));
    verdict(
        (p_one - 0.00205).abs() < 1e-15
            && (p_none - 0.00005).abs() < 1e-15
            && z_one.abs() <= 3.0
            && z_none.abs() <= 3.0,
        format!(
            "one neighbor {hits_one}/{n} (z {z_one:+.2}), spontaneous {hits_none}/{n} (z {z_none:+.2})"
        ),
    )
}

fn criterion_3() -> Result<Verdict> {
    let rows = 200;
    let ratio = climate_value(rows - 1, rows, 200.0)? / climate_value(0, rows, 200.0)?;
    verdict((ratio - 100.5).abs() < 1e-9, format!("ratio {ratio:.12}"))
}

struct Stay;

impl Policy for Stay {
    fn decide(&self, agent: &ecoevo::agents::AgentState, _: &Observation, _: &mut ChaCha8Rng) -> Result<Decision> {
        Ok(Decision {
            action: Action::Stay,
            state: agent.recurrent,
        })
    }
}

fn lone_agent_sim() -> Result<Simulation> {
    let cfg = SimConfig {
        rows: 20,
        cols: 20,
        max_population: 4,
        start_population: 0,
        start_resources: 0,
        reproduction_enabled: false,
        regrowth: RegrowthConfig::disabled(),
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(cfg)?;
    let physio = sim.config().physiology.clone();
    sim.population_mut()
        .insert(&NetworkParams::zeros(), Position::new(10, 10), &physio);
    Ok(sim)
}

/// Step count (1-based) at which the lone agent died, and the cause.
fn lone_agent_death(feed_every: Option<u64>) -> Result<Option<(u64, DeathCause)>> {
    let mut sim = lone_agent_sim()?;
    for step in 1..=2000u64 {
        if feed_every.is_some_and(|k| step % k == 0) {
            sim.world_mut().set_resource(10, 10, true)?;
        }
        let ev = sim.step_with(&Stay)?;
        if let Some(d) = ev.deaths.first() {
            return Ok(Some((step, d.cause)));
        }
    }
    Ok(None)
}

fn criterion_4() -> Result<Verdict> {
    let starved = lone_agent_death(None)?;
    let fed = lone_agent_death(Some(40))?;
    verdict(
        starved == Some((320, DeathCause::Starvation)) && fed == Some((651, DeathCause::Age)),
        format!("never fed: {starved:?}; fed every 40 steps: {fed:?} (age cap 650)"),
    )
}

fn criterion_5() -> Result<Verdict> {
    let mut cfg = SimConfig::desk_scale(1);
    cfg.total_steps = 10_000;
    let dir = tempfile::tempdir().map_err(|e| ecoevo::Error::io("tempdir", e))?;
    let opts = RunOptions {
        checkpoint_dir: Some(dir.path().to_owned()),
        checkpoint_every: Some(5_000),
        progress_every: None,
    };
    let (sim, first) = runner::run(cfg.clone(), &mut NullSink, &opts)?;
    let bytes_a = std::fs::read(dir.path().join(runner::FINAL_CHECKPOINT))
        .map_err(|e| ecoevo::Error::io(dir.path(), e))?;
    let (_, second) = runner::run(cfg, &mut NullSink, &RunOptions::default())?;
    let mid = checkpoint::load(&runner::checkpoint_path(dir.path(), 5_000))?;
    let (_, resumed) = runner::run_from(mid, &mut NullSink, &RunOptions::default())?;
    let identical = checkpoint::digest_hex(&bytes_a) == second.digest;
    verdict(
        identical && resumed.digest == first.digest,
        format!(
            "final population {}, digest {}, rerun {}, resumed from 5000 {}",
            sim.population().alive_count(),
            &first.digest[..16],
            if identical { "identical" } else { "DIFFERENT" },
            if resumed.digest == first.digest { "identical" } else { "DIFFERENT" }
        ),
    )
}

fn criterion_6() -> Result<Verdict> {
    use rand::{Rng, SeedableRng};
    let mut fuzz = ChaCha8Rng::seed_from_u64(6);
    let mut steps = 0u64;
    let mut violations = Vec::new();
    let mut peak = 0;
    let mut run = |cfg: SimConfig, n: u64, violations: &mut Vec<String>| -> Result<()> {
        let cap = cfg.max_population;
        let mut sim = Simulation::new(cfg)?;
        for _ in 0..n {
            let (r, k) = (sim.world().resource_count(), sim.population().alive_count());
            let ev = sim.step()?;
            steps += 1;
            let (r2, k2) = (sim.world().resource_count(), sim.population().alive_count());
            peak = peak.max(k2);
            if r2 + ev.consumed() != r + ev.grown {
                violations.push(format!("resources at step {}", ev.step));
            }
            if k2 + ev.deaths.len() != k + ev.births.len() {
                violations.push(format!("population at step {}", ev.step));
            }
            if k2 > cap || k2 > 1000 {
                violations.push(format!("cap at step {}", ev.step));
            }
        }
        Ok(())
    };
    // one long desk-scale run
    run(SimConfig::desk_scale(2), 10_000, &mut violations)?;
    // plus randomized small worlds, several saturating their slot capacity
    for _ in 0..20 {
        let rows = fuzz.random_range(5..40);
        let cols = fuzz.random_range(5..40);
        let cap = fuzz.random_range(1..=1000);
        let mut cfg = SimConfig {
            rows,
            cols,
            max_population: cap,
            start_population: fuzz.random_range(0..=cap),
            start_resources: fuzz.random_range(0..=rows * cols),
            seed: fuzz.random(),
            boundary_mode: if fuzz.random() {
                BoundaryMode::Lethal
            } else {
                BoundaryMode::Blocked
            },
            ..SimConfig::default()
        };
        cfg.physiology.time_to_reproduce = fuzz.random_range(5..200);
        cfg.regrowth.per_neighbor_prob = fuzz.random_range(0.0..0.2);
        cfg.regrowth.spontaneous_prob = fuzz.random_range(0.0..0.01);
        run(cfg, 500, &mut violations)?;
    }
    verdict(
        violations.is_empty(),
        format!(
            "{steps} steps checked, peak population {peak}, violations {:?}",
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_7() -> Result<Verdict> {
    let groups = vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]];
    let anova = one_way_anova(&groups)?;
    // F(2,6) upper tail at 3: (1 + 3*2/6)^(-3) = 1/8
    let reference_p = 0.125;
    let tukey = tukey_hsd(&groups)?;
    let extreme = tukey.pair(0, 2).expect("pair");
    let q_crit = studentized_range_critical(3, 6)?;
    verdict(
        anova.f_statistic == 3.0
            && (anova.p_value - reference_p).abs() <= 0.01
            && (extreme.q - 12f64.sqrt()).abs() <= 1e-3
            && (q_crit - 4.339).abs() <= 1e-3
            && !extreme.significant,
        format!(
            "F {} p {:.6}, q(1,3) {:.4} vs q_crit(3,6) {:.4}, significant {}",
            anova.f_statistic, anova.p_value, extreme.q, q_crit, extreme.significant
        ),
    )
}

fn criterion_8() -> Result<Verdict> {
    let o = Position::new(0, 0);
    let bins = [
        movement_bin(o, o),
        movement_bin(o, Position::new(3, 4)),
        movement_bin(o, Position::new(20, 30)),
    ];
    let cfg = LabConfig {
        densities: [1.0, 0.5, 0.3],
        trials: 3,
        ..LabConfig::default()
    };
    let genome = NetworkParams::zeros();
    let report_eat = lab::run_greediness_experiment(std::slice::from_ref(&genome), &cfg, &AlwaysEat)?;
    let report_never = lab::run_greediness_experiment(std::slice::from_ref(&genome), &cfg, &NeverEat)?;
    let g = |r: &lab::GreedinessReport, d: Density| -> Vec<Option<f64>> {
        r.trials.iter().filter(|t| t.density == d).map(|t| t.greediness).collect()
    };
    let eat = g(&report_eat, Density::Low);
    let never: Vec<Option<f64>> = Density::ALL.iter().flat_map(|&d| g(&report_never, d)).collect();
    verdict(
        bins == [0, 2, 16]
            && eat.iter().all(|x| *x == Some(1.0))
            && never.iter().all(|x| *x == Some(0.0)),
        format!("bins {bins:?}, always-eat G {eat:?} (full arena), never-eat G all {:?}", never[0]),
    )
}

/// Criterion 10 runs; the surviving final states feed criterion 9.
struct Evolved {
    runs: Vec<DeskRun>,
}

const DESK_STEPS: u64 = 200_000;
const DESK_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const EXTRA_SEEDS: [u64; 5] = [5, 6, 7, 8, 9];

struct DeskRun {
    seed: u64,
    extinct_at: Option<u64>,
    population: usize,
    maxima: usize,
    last: Simulation,
    /// Latest state at a multiple of SNAPSHOT_EVERY with agents alive.
    snapshot: Option<Simulation>,
}

const SNAPSHOT_EVERY: u64 = 50_000;

fn desk_run(seed: u64) -> Result<DeskRun> {
    let mut cfg = SimConfig::desk_scale(seed);
    cfg.total_steps = DESK_STEPS;
    let mut sim = Simulation::new(cfg)?;
    let mut population = Vec::with_capacity(DESK_STEPS as usize);
    let mut snapshot = None;
    while sim.current_step() < DESK_STEPS && !sim.is_extinct() {
        sim.step()?;
        population.push(sim.population().alive_count());
        if sim.current_step() % SNAPSHOT_EVERY == 0 && !sim.is_extinct() {
            snapshot = Some(sim.clone());
        }
    }
    let maxima = local_maxima(&smooth(&population));
    let extinct_at = sim.is_extinct().then_some(sim.current_step());
    eprintln!(
        "  seed {seed}: final step {}, population {}, local maxima {maxima}",
        sim.current_step(),
        sim.population().alive_count()
    );
    Ok(DeskRun {
        seed,
        extinct_at,
        population: sim.population().alive_count(),
        maxima,
        last: sim,
        snapshot,
    })
}

fn evolve() -> Result<Evolved> {
    let runs = DESK_SEEDS.iter().map(|&s| desk_run(s)).collect::<Result<Vec<_>>>()?;
    Ok(Evolved { runs })
}

fn survived(run: &DeskRun) -> bool {
    run.extinct_at.is_none() && run.population > 0
}

enum Sampled {
    /// Final state of a seed that survived all 200000 steps.
    Survivor(u64, Simulation),
    /// No survivor: the latest snapshot of the longest-lived seed.
    Fallback(u64, u64, Simulation),
}

/// First surviving population: the criterion 10 runs, then further seeds.
fn surviving_population(evolved: &Evolved) -> Result<Option<Sampled>> {
    if let Some(run) = evolved.runs.iter().find(|r| survived(r)) {
        return Ok(Some(Sampled::Survivor(run.seed, run.last.clone())));
    }
    let mut extra = Vec::new();
    for seed in EXTRA_SEEDS {
        let run = desk_run(seed)?;
        if survived(&run) {
            return Ok(Some(Sampled::Survivor(seed, run.last)));
        }
        extra.push(run);
    }
    Ok(evolved
        .runs
        .iter()
        .chain(&extra)
        .filter_map(|r| r.snapshot.as_ref().map(|s| (r.seed, s)))
        .max_by_key(|(_, s)| s.current_step())
        .map(|(seed, s)| Sampled::Fallback(seed, s.current_step(), s.clone())))
}

const BLOCK: usize = 1000;
const SMOOTH: usize = 5;

/// Means of consecutive 1000-step blocks, then a centered 5-block moving
/// average.
fn smooth(series: &[usize]) -> Vec<f64> {
    let blocks: Vec<f64> = series
        .chunks_exact(BLOCK)
        .map(|c| c.iter().sum::<usize>() as f64 / BLOCK as f64)
        .collect();
    blocks
        .windows(SMOOTH)
        .map(|w| w.iter().sum::<f64>() / SMOOTH as f64)
        .collect()
}

/// Interior points above both neighbors; flat tops count once.
fn local_maxima(xs: &[f64]) -> usize {
    let mut plateau: Vec<f64> = xs.to_vec();
    plateau.dedup();
    plateau
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2])
        .count()
}

fn criterion_10(evolved: &Evolved) -> Result<Verdict> {
    let survivors: Vec<&DeskRun> = evolved.runs.iter().filter(|r| survived(r)).collect();
    let oscillating = survivors.iter().all(|r| r.maxima >= 3);
    let lines: Vec<String> = evolved
        .runs
        .iter()
        .map(|r| match r.extinct_at {
            Some(at) => format!("seed {} extinct at {at} (maxima {})", r.seed, r.maxima),
            None => format!("seed {} K={} maxima={}", r.seed, r.population, r.maxima),
        })
        .collect();
    verdict(
        !survivors.is_empty() && oscillating,
        format!("{} of 5 survive 200000 steps; {}", survivors.len(), lines.join(", ")),
    )
}

const PRESSURE_GENOMES: usize = 20;
const PRESSURE_TRIALS: usize = 5;

fn criterion_9(evolved: &Evolved) -> Result<Verdict> {
    let (survivor, origin, sim) = match surviving_population(evolved)? {
        Some(Sampled::Survivor(seed, sim)) => (true, format!("seed {seed} at 200000"), sim),
        Some(Sampled::Fallback(seed, step, sim)) => (
            false,
            format!("no seed in 0..10 survived 200000 steps; diagnostic on seed {seed} at {step}"),
            sim,
        ),
        None => return verdict(false, "no desk-scale population to sample"),
    };
    let genomes: Vec<NetworkParams> = lab::sample_genomes(&sim, PRESSURE_GENOMES, 9)?
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    let cfg = LabConfig {
        trials: PRESSURE_TRIALS,
        genomes: genomes.len(),
        seed: 9,
        ..LabConfig::default()
    };
    let report = lab::run_pressure_experiment(&genomes, &cfg, &NeuralPolicy, &[Density::High])?;
    let s = report.summary(Density::High).expect("high density summary");
    let p = s.comparison.as_ref().map_or(f64::NAN, |c| c.p_value);
    verdict(
        survivor && s.efficiency_on > s.efficiency_off,
        format!(
            "{origin}; {} genomes x {} trials, high density: off {:.4}, on {:.4}, paired p {p:.3e}, focal agent on {:.4}, aborted {}",
            genomes.len(),
            PRESSURE_TRIALS,
            s.efficiency_off,
            s.efficiency_on,
            s.focal_on,
            s.aborted
        ),
    )
}

fn criterion_11() -> Result<Verdict> {
    let cfg = SimConfig {
        start_population: 1000,
        seed: 11,
        boundary_mode: BoundaryMode::Blocked,
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..20 {
        sim.step()?;
    }
    let steps = 300;
    let mut population = 0;
    let start = Instant::now();
    for _ in 0..steps {
        sim.step()?;
        population += sim.population().alive_count();
    }
    let rate = steps as f64 / start.elapsed().as_secs_f64();
    let mean_pop = population as f64 / steps as f64;
    verdict(
        rate >= 100.0 && mean_pop >= 990.0,
        format!(
            "{rate:.1} steps/s on 400x200 with mean population {mean_pop:.1}, {} worker threads",
            rayon::current_num_threads()
        ),
    )
}

fn report(id: u32, name: &str, f: impl FnOnce() -> Result<Verdict>) -> bool {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "[{}] {id} {name}: {detail} ({:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn main() {
    let mut all = true;
    all &= report(1, "parameter count", criterion_1);
    all &= report(2, "regrowth law", criterion_2);
    all &= report(3, "climate gradient", criterion_3);
    all &= report(4, "physiology", criterion_4);
    all &= report(5, "determinism and resume", criterion_5);
    all &= report(6, "conservation", criterion_6);
    all &= report(7, "statistics oracles", criterion_7);
    all &= report(8, "metric oracles", criterion_8);
    all &= report(11, "throughput", criterion_11);

    let start = Instant::now();
    let evolved = evolve();
    eprintln!("  desk-scale evolution took {:.0} s", start.elapsed().as_secs_f64());
    match evolved {
        Ok(evolved) => {
            all &= report(10, "eco-evolutionary dynamics", || criterion_10(&evolved));
            all &= report(9, "peer pressure direction", || criterion_9(&evolved));
        }
        Err(e) => {
            println!("[FAIL] 10 eco-evolutionary dynamics: error: {e}");
            println!("[FAIL] 9 peer pressure direction: no evolved population");
            all = false;
        }
    }
    if !all {
        std::process::exit(1);
    }
}
