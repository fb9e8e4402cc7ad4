//! A full test over the OpenAI-compatible HTTP client, served by the
//! in-process stub server, showing the temperature of every request.

use roe::harness::{Harness, RunConfig};
use roe::llm::stub::StubServer;
use roe::llm::BackendConfig;
use roe::policies;
use roe::reflection::HEADER_RESULT;
use roe::sim::Difficulty;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = StubServer::scripted(policies::staged_table())?;
    let mut backend_cfg = BackendConfig::http(server.url(), "stub-model");
    backend_cfg.api_key_env_var = "ROE_EXAMPLE_KEY".into();
    let harness = Harness::from_backend_config(&backend_cfg);
    let mut cfg = RunConfig::new(Difficulty::Hard, backend_cfg);
    cfg.max_round = 2;

    let result = harness.run_test(&cfg, 0)?;
    println!("rounds: {:?}", result.outcomes());

    let mut decisions = std::collections::BTreeMap::new();
    let mut reflections = std::collections::BTreeMap::new();
    for req in server.captured() {
        let t = req.temperature().map_or("missing".to_string(), |t| t.to_string());
        let is_reflection = req.messages().iter().any(|m| m.content.contains(HEADER_RESULT));
        *if is_reflection { &mut reflections } else { &mut decisions }.entry(t).or_insert(0) += 1;
    }
    println!("decision requests by temperature:   {decisions:?}");
    println!("reflection requests by temperature: {reflections:?}");
    Ok(())
}
