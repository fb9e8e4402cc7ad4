//! Scripted swarm-and-wave opponent.
//!
//! The bot follows a fixed build schedule (compressed by the difficulty's
//! income multiplier), spends everything else on army, launches waves of a
//! planned size at fixed ticks and goes all-in once it sees a much weaker
//! player army.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::Rational;
use super::state::{BuildingKind, GameState, QueueItem, UnitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpponentAction {
    TrainWorker,
    BuildSupply,
    BuildGasCollector,
    BuildBarracks,
    BuildTechStructure,
    Expand,
    TrainUnit(UnitKind),
    /// Send up to `size` home units toward the player.
    LaunchWave { size: u32 },
    /// Send every home unit toward the player.
    AllIn,
}

impl OpponentAction {
    /// Waves and all-ins; everything else builds up economy or army at home.
    pub fn is_aggressive(self) -> bool {
        matches!(self, OpponentAction::LaunchWave { .. } | OpponentAction::AllIn)
    }
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn due_count(ticks: &[u32], state: &GameState) -> u32 {
    ticks
        .iter()
        .filter(|&&t| state.difficulty.scale_tick(t) <= state.tick)
        .count() as u32
}

/// Decides the opponent's actions for the current tick.
///
/// Pure given `(state, rng)`: cloning the generator and calling twice
/// yields the same list.
pub fn opponent_policy(state: &GameState, rng: &mut ChaCha8Rng) -> Vec<OpponentAction> {
    let cfg = &state.config;
    let script = &cfg.opponent;
    let level = &state.difficulty;
    let me = &state.opponent;
    let tick = state.tick;
    let mut out = Vec::new();

    // Schedules are written for multiplier 1; a richer bot runs them faster.
    let schedule_time = (Rational::from_integer(u64::from(tick)) * level.income_multiplier)
        .to_integer() as u32;
    let pending_workers = me.pending_count(|i| i == QueueItem::Worker);
    if me.workers + pending_workers < script.worker_target_at(schedule_time) {
        out.push(OpponentAction::TrainWorker);
    }

    let pending_supply = me.pending_count(|i| i == QueueItem::Building(BuildingKind::SupplyStructure));
    let supply_margin = 4 + 4 * me.bases;
    if me.supply_free() < supply_margin
        && me.supply_cap < cfg.economy.max_supply
        && pending_supply < 1 + me.bases / 2
    {
        out.push(OpponentAction::BuildSupply);
    }

    let mut saving = false;
    let built_or_pending = |kind: BuildingKind| {
        me.building(kind) + me.pending_count(|i| i == QueueItem::Building(kind))
    };
    if built_or_pending(BuildingKind::Barracks) < due_count(&script.barracks_ticks, state) {
        out.push(OpponentAction::BuildBarracks);
    }
    if level.scale_tick(script.tech_tick) <= tick && built_or_pending(BuildingKind::TechStructure) == 0 {
        out.push(OpponentAction::BuildTechStructure);
    }
    if built_or_pending(BuildingKind::GasCollector) < due_count(&script.gas_ticks, state) {
        out.push(OpponentAction::BuildGasCollector);
    }
    let pending_bases = me.pending_count(|i| i == QueueItem::Base);
    if me.bases + pending_bases < 1 + due_count(&script.expansion_ticks, state)
        && me.bases + pending_bases < cfg.economy.max_bases
    {
        out.push(OpponentAction::Expand);
        if me.minerals < cfg.costs.base.minerals {
            saving = true;
        }
    }

    let barracks = me.building(BuildingKind::Barracks);
    // Banked minerals mean production is the bottleneck.
    if barracks > 0
        && !saving
        && me.minerals >= 3 * cfg.costs.barracks.minerals
        && me.pending_count(|i| i == QueueItem::Building(BuildingKind::Barracks)) == 0
    {
        out.push(OpponentAction::BuildBarracks);
    }
    if barracks > 0 && !saving {
        let busy = me.pending_count(|i| matches!(i, QueueItem::Unit(_)));
        let has_tech = me.building(BuildingKind::TechStructure) > 0;
        let siege = ratio_f64(script.siege_share);
        let ranged = ratio_f64(script.ranged_share);
        for _ in busy..barracks {
            let roll: f64 = rng.gen();
            let kind = if has_tech && roll < siege {
                UnitKind::Siege
            } else if has_tech && roll < siege + ranged {
                UnitKind::Ranged
            } else {
                UnitKind::Melee
            };
            out.push(OpponentAction::TrainUnit(kind));
        }
    }

    let progress = &state.opponent_progress;
    if let Some(&wave_tick) = level.attack_wave_ticks.get(progress.waves_launched) {
        if tick >= wave_tick {
            out.push(OpponentAction::LaunchWave {
                size: level.wave_size(progress.waves_launched),
            });
        }
    }

    let past_first_wave = level.first_wave_tick().is_some_and(|t| tick >= t);
    if past_first_wave && me.home_unit_count() > 0 {
        let own = me.army_power(cfg);
        let theirs = state.player.army_power(cfg);
        if progress.all_in || (own >= script.allin_min_power && theirs < 0.5 * own) {
            out.push(OpponentAction::AllIn);
        }
    }

    out
}
