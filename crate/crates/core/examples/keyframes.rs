//! Key frames of a lost game: phase transitions plus evenly spaced frames.

use roe::harness::{EpisodeId, Harness, RunConfig};
use roe::keyframe::{frame_phases, render_key_frames, select_key_frames, KeyFrameParams};
use roe::llm::BackendConfig;
use roe::policies;
use roe::sim::Difficulty;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let backend_cfg = BackendConfig::scripted(policies::greedy_table());
    let harness = Harness::from_backend_config(&backend_cfg);
    let cfg = RunConfig::new(Difficulty::Hard, backend_cfg);
    let backend = harness.backend()?;
    let ep = harness.run_episode(&cfg, backend.as_ref(), &harness.expert(), EpisodeId { test: 0, round: 0, seed: 1 })?;

    let phases = frame_phases(&ep.log.frames)?;
    let labels: Vec<&str> = phases.iter().map(|p| p.label()).collect();
    println!("{} frames: {}", labels.len(), labels.join(" | "));

    let set = select_key_frames(&ep.log.frames, KeyFrameParams { window: 1, n_average: 4 })?;
    println!("transitions {:?}", set.transition_frames);
    println!("average     {:?}", set.average_frames);
    println!("merged      {:?}\n", set.merged);
    print!("{}", render_key_frames(&set, &ep.log.frames));
    Ok(())
}
