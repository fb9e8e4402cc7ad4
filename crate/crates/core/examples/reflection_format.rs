//! Parsing reflection documents and the errors for malformed ones.

use roe::reflection::{parse_reflection, ExperienceOrigin};

const GOOD: &str = "Strategic Points:
1. Opening: supply first, then one barracks.
2. Economy: train workers without pause.
3. Scouting: look at the enemy before 04:00.
4. Supply: keep three free supply.
5. Production: add barracks when minerals pile up.
6. Army: ranged units behind a melee line.
7. Defense: hold the ramp until the first push is beaten.
8. Attack: strike once the attack upgrade is done.
Key Time Points:
00:20 — first supply structure
01:00 — first barracks
02:00 — second base
05:30 — hold the first wave
10:00 — attack
";

fn main() {
    let exp = parse_reflection(GOOD, ExperienceOrigin::SelfReflection(1)).expect("valid document");
    println!("parsed {} points and {} time points", exp.strategic_points.len(), exp.key_timepoints.len());
    for (t, text) in &exp.key_timepoints {
        println!("  {t} {text}");
    }

    let broken = [
        ("seven points", GOOD.replace("8. Attack: strike once the attack upgrade is done.\n", "")),
        ("four time points", GOOD.replace("10:00 — attack\n", "")),
        ("late timestamp", GOOD.replace("10:00", "21:30")),
        ("bad timestamp", GOOD.replace("10:00", "1O:00")),
    ];
    for (name, text) in broken {
        match parse_reflection(&text, ExperienceOrigin::SelfReflection(1)) {
            Ok(_) => println!("{name}: accepted"),
            Err(e) => println!("{name}: {e}"),
        }
    }
}
