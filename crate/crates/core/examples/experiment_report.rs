//! A difficulty sweep with the scripted expert policy, written to disk as a
//! win-rate table, per-episode time series and a run manifest.
//!
//! `cargo run --release --example experiment_report -- [out_dir] [n_tests]`

use std::path::PathBuf;

use roe::harness::{emit_report, Harness, RunConfig};
use roe::llm::BackendConfig;
use roe::policies;
use roe::sim::Difficulty;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("roe-experiment"));
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);

    let backend_cfg = BackendConfig::scripted(policies::expert_table());
    let harness = Harness::from_backend_config(&backend_cfg);
    let mut cfg = RunConfig::new(Difficulty::Hard, backend_cfg);
    cfg.max_round = 1;
    cfg.output_dir = Some(out.clone());

    let report = harness.run_experiment(&Difficulty::ALL, n, &cfg)?;
    let files = emit_report(&report, &out)?;
    print!("{}", report.table_text());
    println!("\nwrote {} files under {}", files.len(), out.display());
    println!("config hash {}", report.manifest.config_hash);
    Ok(())
}
