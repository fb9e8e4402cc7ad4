use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::{BuildingKind, FieldStatus, GameState, QueueItem, UnitKind, Upgrade};

/// Formats a tick count as `mm:ss` game time.
pub fn clock(tick: u32) -> String {
    format!("{:02}:{:02}", tick / 60, tick % 60)
}

/// Player-visible numbers behind an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedMetrics {
    pub minerals: u64,
    pub gas: u64,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub workers: u32,
    pub bases: u32,
    pub army_power: f64,
    pub units: BTreeMap<UnitKind, u32>,
    pub buildings: BTreeMap<BuildingKind, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextObservation {
    pub tick: u32,
    pub text: String,
    pub metrics: ObservedMetrics,
    pub events: Vec<String>,
}

pub fn observed_metrics(state: &GameState) -> ObservedMetrics {
    let p = &state.player;
    let cfg = &state.config;
    ObservedMetrics {
        minerals: p.minerals,
        gas: p.gas,
        supply_used: p.supply_used,
        supply_cap: p.supply_cap,
        workers: p.workers,
        bases: p.bases,
        army_power: p.army_power(cfg),
        units: UnitKind::ALL.iter().map(|&k| (k, p.total_units(k))).collect(),
        buildings: p.production_structures.clone(),
    }
}

/// Alert keywords; shown on their own line so scripted policies can key on them.
pub fn alerts(state: &GameState) -> Vec<&'static str> {
    let p = &state.player;
    let cfg = &state.config;
    let mut out = Vec::new();
    let supply_queued = p.pending_count(|i| i == QueueItem::Building(BuildingKind::SupplyStructure));
    if p.supply_cap < cfg.economy.max_supply && p.supply_free() <= 4 + 2 * p.bases && supply_queued == 0 {
        out.push("SUPPLY_LOW");
    }
    match state.opponent.field.as_ref().map(|f| f.status) {
        Some(FieldStatus::Engaged) => out.push("UNDER_ATTACK"),
        Some(FieldStatus::Marching { eta }) if eta <= 10 => out.push("ENEMY_APPROACHING"),
        _ => {}
    }
    let saturation = cfg.economy.workers_per_base * p.bases + p.gas_workers(cfg);
    if p.workers >= saturation {
        out.push("WORKERS_SATURATED");
    }
    if p.home_unit_count() > 0 && p.field.is_none() {
        out.push("ARMY_AT_HOME");
    }
    out
}

/// Renders what the player can see. Opponent internals appear only through
/// the last scout report, stamped with the time it was taken.
pub fn observe_text(state: &GameState) -> TextObservation {
    let p = &state.player;
    let cfg = &state.config;
    let metrics = observed_metrics(state);
    let mut t = String::new();
    let _ = writeln!(t, "Time {}", clock(state.tick));
    let _ = writeln!(t, "Minerals: {} | Gas: {}", p.minerals, p.gas);
    let _ = writeln!(t, "Supply: {}/{}", p.supply_used, p.supply_cap);
    let _ = writeln!(t, "Workers: {} | Bases: {}", p.workers, p.bases);
    let b = |k| p.building(k);
    let _ = writeln!(
        t,
        "Buildings: supply={} gas={} barracks={} tech={} outpost={}",
        b(BuildingKind::SupplyStructure),
        b(BuildingKind::GasCollector),
        b(BuildingKind::Barracks),
        b(BuildingKind::TechStructure),
        b(BuildingKind::Outpost)
    );
    let _ = writeln!(
        t,
        "Army home: melee={} ranged={} siege={} | stance: {}",
        p.home_units(UnitKind::Melee),
        p.home_units(UnitKind::Ranged),
        p.home_units(UnitKind::Siege),
        match p.stance {
            super::state::Stance::Hold => "hold",
            super::state::Stance::Defend => "defend",
        }
    );
    let field = match p.field.as_ref() {
        None => "none".to_string(),
        Some(f) => {
            let status = match f.status {
                FieldStatus::Marching { eta } => format!("marching, arrives in {eta}s"),
                FieldStatus::Engaged => "fighting at the enemy base".to_string(),
                FieldStatus::Returning { eta } => format!("returning, home in {eta}s"),
            };
            format!("{} units, {}", f.unit_count(), status)
        }
    };
    let _ = writeln!(t, "Field army: {field}");
    let _ = writeln!(
        t,
        "Army supply: {} | Army power: {:.1}",
        p.army_supply(cfg),
        metrics.army_power
    );
    let _ = writeln!(
        t,
        "Upgrades: attack={} armor={}",
        p.upgrade_level(Upgrade::Attack),
        p.upgrade_level(Upgrade::Armor)
    );
    if p.pending.is_empty() {
        let _ = writeln!(t, "In production: nothing");
    } else {
        let items: Vec<String> = p
            .pending
            .iter()
            .map(|i| format!("{} ({}s)", i.item.label(), i.ticks_remaining))
            .collect();
        let _ = writeln!(t, "In production: {}", items.join(", "));
    }
    match &state.opponent_knowledge {
        None => {
            let _ = writeln!(t, "Enemy: no information");
        }
        Some(r) => {
            let _ = writeln!(
                t,
                "Enemy (scouted as of {}): bases={} workers={} army melee={} ranged={} siege={} power {:.1}, barracks={} tech={}",
                clock(r.tick),
                r.bases,
                r.workers,
                r.army.get(&UnitKind::Melee).copied().unwrap_or(0),
                r.army.get(&UnitKind::Ranged).copied().unwrap_or(0),
                r.army.get(&UnitKind::Siege).copied().unwrap_or(0),
                r.army_power,
                r.barracks,
                if r.tech_structure { "yes" } else { "no" }
            );
        }
    }
    let alerts = alerts(state);
    let _ = writeln!(
        t,
        "Alerts: {}",
        if alerts.is_empty() { "none".to_string() } else { alerts.join(", ") }
    );
    if !state.recent_events.is_empty() {
        let _ = writeln!(t, "Events: {}", state.recent_events.join("; "));
    }
    TextObservation {
        tick: state.tick,
        text: t,
        metrics,
        events: state.recent_events.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{new_game, step, Action, Difficulty, SimConfig};
    use std::sync::Arc;

    #[test]
    fn opening_observation() {
        let s = new_game(Arc::new(SimConfig::default()), 7, Difficulty::Hard).unwrap();
        let obs = observe_text(&s);
        assert!(obs.text.contains("Time 00:00"));
        assert!(obs.text.contains("Workers: 12"));
        assert!(obs.text.contains("Bases: 1"));
        assert!(obs.text.contains("Enemy: no information"));
    }

    #[test]
    fn scout_report_is_stale_dated() {
        let mut s = new_game(Arc::new(SimConfig::default()), 7, Difficulty::Hard).unwrap();
        step(&mut s, &[], 96).unwrap();
        step(&mut s, &[Action::Scout], 10).unwrap();
        let obs = observe_text(&s);
        assert!(obs.text.contains("as of 01:36"), "{}", obs.text);
        assert!(obs.text.contains("Time 01:46"));
    }

    #[test]
    fn clock_format() {
        assert_eq!(clock(0), "00:00");
        assert_eq!(clock(96), "01:36");
        assert_eq!(clock(1200), "20:00");
    }
}
