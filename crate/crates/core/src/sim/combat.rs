//! Closed-form battle resolution (Lanchester square law).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Attacker,
    Defender,
}

/// Outcome of one engagement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombatOutcome {
    pub winner: Side,
    pub survivor_power: f64,
}

/// Resolves a fight between two armies given their total power.
///
/// The stronger side wins with `sqrt(|a² - b²|)` power left; the loser is
/// wiped out. Equal powers annihilate each other and the defender is
/// credited with the (empty) field.
pub fn resolve_combat(attacker_power: f64, defender_power: f64) -> CombatOutcome {
    let a = attacker_power.max(0.0);
    let d = defender_power.max(0.0);
    let survivor_power = (a * a - d * d).abs().sqrt();
    let winner = if a > d { Side::Attacker } else { Side::Defender };
    CombatOutcome {
        winner,
        survivor_power,
    }
}

/// Scales unit counts to a surviving fraction, rounding each count down.
pub fn surviving_count(count: u32, fraction: f64) -> u32 {
    if fraction <= 0.0 {
        return 0;
    }
    let scaled = (f64::from(count) * fraction.min(1.0)).floor();
    // Guard against 0.9999... from the sqrt on exact squares.
    let nudged = (f64::from(count) * fraction.min(1.0) + 1e-9).floor();
    scaled.max(nudged).min(f64::from(count)) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unopposed_attacker_keeps_everything() {
        let out = resolve_combat(10.0, 0.0);
        assert_eq!(out.winner, Side::Attacker);
        assert_eq!(out.survivor_power, 10.0);
    }

    #[test]
    fn pythagorean_survivor() {
        let out = resolve_combat(10.0, 6.0);
        assert_eq!(out.winner, Side::Attacker);
        assert_eq!(out.survivor_power, 8.0);
        let out = resolve_combat(6.0, 10.0);
        assert_eq!(out.winner, Side::Defender);
        assert_eq!(out.survivor_power, 8.0);
    }

    #[test]
    fn ties_go_to_the_defender() {
        let out = resolve_combat(5.0, 5.0);
        assert_eq!(out.winner, Side::Defender);
        assert_eq!(out.survivor_power, 0.0);
        assert_eq!(resolve_combat(0.0, 0.0).winner, Side::Defender);
    }

    #[test]
    fn surviving_count_rounds_down() {
        assert_eq!(surviving_count(10, 0.8), 8);
        assert_eq!(surviving_count(3, 0.5), 1);
        assert_eq!(surviving_count(5, 0.0), 0);
        assert_eq!(surviving_count(5, 1.0), 5);
        // 0.6 * 10 computed through sqrt can land a hair under 6.
        assert_eq!(surviving_count(10, (0.36f64).sqrt()), 6);
    }
}
