//! The reflect-and-retry loop with the staged scripted model: each reflection
//! unlocks a better set of decision rules for the next round.

use roe::harness::{Harness, RunConfig};
use roe::llm::BackendConfig;
use roe::policies;
use roe::sim::{clock, Difficulty};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let backend_cfg = BackendConfig::scripted(policies::staged_table());
    let harness = Harness::from_backend_config(&backend_cfg);
    let mut cfg = RunConfig::new(Difficulty::Hard, backend_cfg);
    cfg.seed = seed;

    let result = harness.run_test(&cfg, 0)?;
    for (r, exp) in result.rounds.iter().zip(&result.experiences) {
        println!(
            "round {} seed {:>5}  {:<8} at {}  plan: {:?} ({} frames reflected on)",
            r.round,
            r.seed,
            r.result.outcome.to_string(),
            clock(r.result.tick_ended),
            r.experience_origin,
            r.reflection_input.as_ref().map_or(0, |i| i.frame_count),
        );
        println!("    defense point: {}", exp.strategic_points[6]);
    }
    println!("final: {} after {} rounds", result.final_outcome, result.rounds_used);
    Ok(())
}
