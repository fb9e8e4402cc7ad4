//! A decision prompt, a scripted reply and the parsed action queue.

use std::sync::Arc;

use roe::agent::{build_decision_messages, decide, parse_actions, SystemPrompt, DEFAULT_MAX_ACTIONS};
use roe::llm::{RetryPolicy, Rule, ScriptTable, ScriptedBackend};
use roe::prompts::PromptCatalog;
use roe::reflection::expert_experience;
use roe::sim::{new_game, Difficulty, SimConfig};
use roe::summarizer::{EpisodeSummarizer, PhaseSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = PromptCatalog::builtin();
    let system = SystemPrompt::new(&catalog, &expert_experience(&catalog)?);
    let state = new_game(Arc::new(SimConfig::default()), 0, Difficulty::Hard)?;
    let l2 = EpisodeSummarizer::new().summarize(&state, PhaseSource::Rule)?;
    let bundle = build_decision_messages(&system, &l2, &catalog, DEFAULT_MAX_ACTIONS);
    println!("--- user message (temperature {}) ---\n{}", bundle.temperature, bundle.user);

    let table = ScriptTable::new("NO_OP").rule(Rule::contains("Workers: 12", "1. TRAIN_WORKER\n2. `BUILD_SUPPLY`\n3. dance"));
    let backend = ScriptedBackend::new(table);
    let d = decide(&backend, &bundle, DEFAULT_MAX_ACTIONS, RetryPolicy::default());
    println!("--- reply ---\n{}\n--- parsed ---\n{:?}", d.raw_text, d.queue.actions);
    for w in &d.queue.warnings {
        println!("warning: {w}");
    }

    let long = parse_actions("TRAIN_WORKER, TRAIN_WORKER, TRAIN_WORKER, SCOUT, DEFEND, ATTACK, RETREAT", 5);
    println!("\ntruncated: {:?} {:?}", long.actions, long.warnings);
    Ok(())
}
