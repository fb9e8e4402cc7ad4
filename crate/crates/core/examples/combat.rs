//! Square-law engagements between two army powers.

use roe::sim::combat::surviving_count;
use roe::sim::{resolve_combat, Side};

fn main() {
    println!("{:>9} {:>9}  {:<8} {:>10} {:>9}", "attacker", "defender", "winner", "remaining", "survivors");
    for (a, d) in [(10.0, 6.0), (6.0, 10.0), (12.0, 12.0), (20.0, 3.0), (5.0, 4.9)] {
        let out = resolve_combat(a, d);
        let winner = match out.winner {
            Side::Attacker => "attacker",
            Side::Defender => "defender",
        };
        // 12 units on the winning side, scaled by the surviving power fraction.
        let start = if out.winner == Side::Attacker { a } else { d };
        let survivors = surviving_count(12, out.survivor_power / start);
        println!("{a:>9.1} {d:>9.1}  {winner:<8} {:>10.2} {survivors:>9}", out.survivor_power);
    }
}
