//! Drives the simulator by hand and prints the text observation.

use std::sync::Arc;

use roe::sim::{new_game, observe_text, step, Action, Difficulty, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Arc::new(SimConfig::default());
    let mut state = new_game(cfg, 7, Difficulty::Hard)?;
    let plan: [&[Action]; 4] = [
        &[Action::TrainWorker, Action::TrainWorker],
        &[Action::BuildSupply],
        &[Action::TrainWorker, Action::BuildBarracksAnalog],
        &[Action::Scout, Action::TrainMeleeUnit],
    ];
    for actions in plan {
        let out = step(&mut state, actions, 10)?;
        println!("executed {:?}", out.executed);
        for r in &out.rejected {
            println!("rejected {:?}: {}", r.action, r.reason);
        }
        for e in &out.events {
            println!("event: {e}");
        }
    }
    println!("\n{}", observe_text(&state).text);
    Ok(())
}
