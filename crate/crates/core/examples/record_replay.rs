//! Records one game's model traffic to a session file, then replays it
//! offline and checks the replayed game is identical.

use std::sync::Arc;

use roe::harness::{EpisodeId, Harness, RunConfig};
use roe::llm::{BackendConfig, RecordingBackend, ReplayBackend, ScriptedBackend};
use roe::policies;
use roe::prompts::PromptCatalog;
use roe::sim::Difficulty;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("roe-session-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let session = dir.join("session.jsonl");
    let _ = std::fs::remove_file(&session);

    let cfg = RunConfig::new(Difficulty::Harder, BackendConfig::scripted(policies::expert_table()));
    let id = EpisodeId { test: 0, round: 0, seed: 11 };

    let recorder = Arc::new(RecordingBackend::create(ScriptedBackend::new(policies::expert_table()), &session)?);
    let live = Harness::with_backend(recorder.clone(), PromptCatalog::builtin());
    let first = live.run_episode(&cfg, recorder.as_ref(), &live.expert(), id)?;

    let replay = Arc::new(ReplayBackend::load(&session)?);
    let offline = Harness::with_backend(replay.clone(), PromptCatalog::builtin());
    let second = offline.run_episode(&cfg, replay.as_ref(), &offline.expert(), id)?;

    let lines = std::fs::read_to_string(&session)?.lines().count();
    println!("recorded {lines} calls to {}", session.display());
    println!("live:   {} at tick {}", first.result.outcome, first.result.tick_ended);
    println!("replay: {} at tick {}", second.result.outcome, second.result.tick_ended);
    println!("identical logs: {}", first.log == second.log);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
