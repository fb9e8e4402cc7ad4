//! Full loop against each ablation, with the size of the reflection input.

use roe::harness::{Ablation, Harness, RunConfig, DEFAULT_CONTEXT_BUDGET};
use roe::llm::BackendConfig;
use roe::policies;
use roe::sim::Difficulty;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let backend_cfg = BackendConfig::scripted(policies::staged_table());
    let harness = Harness::from_backend_config(&backend_cfg);
    let cfg = RunConfig::new(Difficulty::Hard, backend_cfg);

    println!("{:<22} {:<14} {:>10} {:>12}", "ablation", "won", "max chars", "over budget");
    for mode in Ablation::ALL {
        let report = harness.run_ablation(mode, &[Difficulty::Hard], n, &cfg)?;
        let inputs = report.tests.iter().flat_map(|t| &t.rounds).filter_map(|r| r.reflection_input.as_ref());
        let (mut max_chars, mut over) = (0, 0);
        for i in inputs {
            max_chars = max_chars.max(i.full_chars);
            over += usize::from(i.over_budget);
        }
        println!("{:<22} {:<14} {max_chars:>10} {over:>12}", mode.name(), report.rows[0].rate_text());
    }
    println!("(budget: {DEFAULT_CONTEXT_BUDGET} characters)");
    Ok(())
}
