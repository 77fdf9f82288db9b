//! Steps per second on the full-size grid with a saturated population.

use std::time::Instant;

use ecoevo::engine::{SimConfig, Simulation};

fn main() -> ecoevo::Result<()> {
    let steps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = SimConfig {
        start_population: 1000,
        seed: 1,
        boundary_mode: ecoevo::agents::BoundaryMode::Blocked,
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(cfg)?;
    let start = Instant::now();
    for _ in 0..steps {
        sim.step()?;
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{steps} steps in {secs:.2}s: {:.1} steps/s, population {}",
        steps as f64 / secs,
        sim.population().alive_count()
    );
    Ok(())
}
