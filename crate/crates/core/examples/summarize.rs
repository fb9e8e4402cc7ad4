//! L1 deltas and the L2 situation text for a short opening.

use std::sync::Arc;

use roe::sim::{new_game, step, Action, Difficulty, SimConfig};
use roe::summarizer::{EpisodeSummarizer, PhaseSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut state = new_game(Arc::new(SimConfig::default()), 3, Difficulty::Harder)?;
    let mut summarizer = EpisodeSummarizer::new();
    for i in 0..12 {
        summarizer.summarize(&state, PhaseSource::Rule)?;
        let build = if i % 4 == 1 { Action::BuildSupply } else { Action::ExpandBase };
        step(&mut state, &[Action::TrainWorker, build], 10)?;
    }
    let l2 = summarizer.summarize(&state, PhaseSource::Rule)?;
    for l1 in summarizer.l1s().iter().rev().take(3).rev() {
        println!("L1 {:?}: {}", l1.tick_range, l1.delta_text);
    }
    println!("\n--- L2 at tick {} ({}) ---\n{}", l2.tick, l2.phase.label(), l2.situation_text);
    Ok(())
}
