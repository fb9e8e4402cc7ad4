//! One full game with the scripted expert policy.
//!
//! `cargo run --example play_episode -- [difficulty] [seed]`

use roe::harness::{EpisodeId, Harness, RunConfig};
use roe::llm::BackendConfig;
use roe::policies;
use roe::sim::{clock, Difficulty};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let difficulty = args.next().and_then(|s| Difficulty::parse(&s)).unwrap_or(Difficulty::Hard);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let backend_cfg = BackendConfig::scripted(policies::expert_table());
    let harness = Harness::from_backend_config(&backend_cfg);
    let cfg = RunConfig::new(difficulty, backend_cfg);
    let backend = harness.backend()?;
    let id = EpisodeId { test: 0, round: 0, seed };
    let ep = harness.run_episode(&cfg, backend.as_ref(), &harness.expert(), id)?;

    for f in ep.log.frames.iter().filter(|f| f.index % 6 == 0 || !f.events.is_empty()) {
        let acts: Vec<&str> = f.action_taken.iter().map(|a| a.display_name()).collect();
        println!("{} {:<14} {}", clock(f.l2.tick), f.l2.phase.label(), acts.join(", "));
        for e in f.events.iter().filter(|e| !e.starts_with("Completed")) {
            println!("      {e}");
        }
    }
    println!(
        "\n{} at {} after {} decisions ({} ticks sampled)",
        ep.result.outcome,
        clock(ep.result.tick_ended),
        ep.log.len(),
        ep.series.len()
    );
    Ok(())
}
