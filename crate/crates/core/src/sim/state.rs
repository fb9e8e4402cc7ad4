use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{DifficultyLevel, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    Melee,
    Ranged,
    Siege,
}

impl UnitKind {
    pub const ALL: [UnitKind; 3] = [UnitKind::Melee, UnitKind::Ranged, UnitKind::Siege];

    pub fn label(self) -> &'static str {
        match self {
            UnitKind::Melee => "melee",
            UnitKind::Ranged => "ranged",
            UnitKind::Siege => "siege",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuildingKind {
    SupplyStructure,
    GasCollector,
    Barracks,
    TechStructure,
    Outpost,
}

impl BuildingKind {
    pub const ALL: [BuildingKind; 5] = [
        BuildingKind::SupplyStructure,
        BuildingKind::GasCollector,
        BuildingKind::Barracks,
        BuildingKind::TechStructure,
        BuildingKind::Outpost,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BuildingKind::SupplyStructure => "supply",
            BuildingKind::GasCollector => "gas",
            BuildingKind::Barracks => "barracks",
            BuildingKind::TechStructure => "tech",
            BuildingKind::Outpost => "outpost",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Upgrade {
    Attack,
    Armor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueueItem {
    Worker,
    Unit(UnitKind),
    Building(BuildingKind),
    Base,
    Research(Upgrade),
}

impl QueueItem {
    pub fn label(self) -> String {
        match self {
            QueueItem::Worker => "worker".into(),
            QueueItem::Unit(k) => k.label().into(),
            QueueItem::Building(b) => b.label().into(),
            QueueItem::Base => "base".into(),
            QueueItem::Research(Upgrade::Attack) => "attack upgrade".into(),
            QueueItem::Research(Upgrade::Armor) => "armor upgrade".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingItem {
    pub item: QueueItem,
    pub ticks_remaining: u32,
    /// Paid at enqueue time; kept so cancellations can refund exactly.
    pub minerals_paid: u64,
    pub gas_paid: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stance {
    Hold,
    Defend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldStatus {
    Marching { eta: u32 },
    Engaged,
    Returning { eta: u32 },
}

/// Units that have left home, either travelling or fighting at the enemy base.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldArmy {
    pub units: BTreeMap<UnitKind, u32>,
    pub status: FieldStatus,
}

impl FieldArmy {
    pub fn unit_count(&self) -> u32 {
        self.units.values().sum()
    }
}

/// Running totals used by the conservation invariant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub minerals_earned: u64,
    pub minerals_spent: u64,
    pub gas_earned: u64,
    pub gas_spent: u64,
    /// Fractional income carried between ticks, in units of `1/denominator`.
    pub mineral_carry: u64,
    pub gas_carry: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub minerals: u64,
    pub gas: u64,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub workers: u32,
    pub bases: u32,
    /// Hit points of the base currently exposed to attack.
    pub base_hp: u32,
    pub production_structures: BTreeMap<BuildingKind, u32>,
    pub tech: BTreeMap<Upgrade, u32>,
    /// Units at home.
    pub army: BTreeMap<UnitKind, u32>,
    pub field: Option<FieldArmy>,
    pub stance: Stance,
    pub pending: Vec<PendingItem>,
    pub ledger: ResourceLedger,
    pub recall_ready_at: u32,
}

impl PlayerState {
    pub fn opening(config: &SimConfig) -> PlayerState {
        let e = &config.economy;
        let mut p = PlayerState {
            minerals: e.starting_minerals,
            gas: e.starting_gas,
            supply_used: e.starting_workers,
            supply_cap: 0,
            workers: e.starting_workers,
            bases: 1,
            base_hp: config.combat.base_hp,
            production_structures: BuildingKind::ALL.iter().map(|&b| (b, 0)).collect(),
            tech: [(Upgrade::Attack, 0), (Upgrade::Armor, 0)].into_iter().collect(),
            army: UnitKind::ALL.iter().map(|&k| (k, 0)).collect(),
            field: None,
            stance: Stance::Hold,
            pending: Vec::new(),
            ledger: ResourceLedger::default(),
            recall_ready_at: 0,
        };
        p.recompute_supply_cap(config);
        p
    }

    pub fn building(&self, kind: BuildingKind) -> u32 {
        self.production_structures.get(&kind).copied().unwrap_or(0)
    }

    pub fn upgrade_level(&self, up: Upgrade) -> u32 {
        self.tech.get(&up).copied().unwrap_or(0)
    }

    pub fn home_units(&self, kind: UnitKind) -> u32 {
        self.army.get(&kind).copied().unwrap_or(0)
    }

    pub fn field_units(&self, kind: UnitKind) -> u32 {
        self.field
            .as_ref()
            .and_then(|f| f.units.get(&kind).copied())
            .unwrap_or(0)
    }

    /// Home plus field.
    pub fn total_units(&self, kind: UnitKind) -> u32 {
        self.home_units(kind) + self.field_units(kind)
    }

    pub fn home_unit_count(&self) -> u32 {
        self.army.values().sum()
    }

    pub fn pending_count(&self, pred: impl Fn(QueueItem) -> bool) -> u32 {
        self.pending.iter().filter(|p| pred(p.item)).count() as u32
    }

    pub fn supply_from_structures(&self, config: &SimConfig) -> u32 {
        let e = &config.economy;
        let raw = e.base_supply * self.bases
            + e.pylon_supply * self.building(BuildingKind::SupplyStructure);
        raw.min(e.max_supply)
    }

    pub fn recompute_supply_cap(&mut self, config: &SimConfig) {
        self.supply_cap = self.supply_from_structures(config);
    }

    pub fn supply_free(&self) -> u32 {
        self.supply_cap.saturating_sub(self.supply_used)
    }

    pub fn gas_workers(&self, config: &SimConfig) -> u32 {
        (config.economy.workers_per_collector * self.building(BuildingKind::GasCollector))
            .min(self.workers)
    }

    pub fn mineral_workers(&self, config: &SimConfig) -> u32 {
        (self.workers - self.gas_workers(config)).min(config.economy.workers_per_base * self.bases)
    }

    /// Supply held by army units (home, field, and in training).
    pub fn army_supply(&self, config: &SimConfig) -> u32 {
        let trained: u32 = UnitKind::ALL
            .iter()
            .map(|&k| self.total_units(k) * unit_spec(config, k).supply)
            .sum();
        trained
    }

    pub fn upgrade_multiplier(&self, config: &SimConfig) -> f64 {
        let levels = self.upgrade_level(Upgrade::Attack) + self.upgrade_level(Upgrade::Armor);
        let bonus = config.combat.upgrade_bonus;
        1.0 + f64::from(levels) * (*bonus.numer() as f64 / *bonus.denom() as f64)
    }

    pub fn units_power(&self, units: &BTreeMap<UnitKind, u32>, config: &SimConfig) -> f64 {
        let raw: f64 = units
            .iter()
            .map(|(&k, &n)| f64::from(n) * unit_spec(config, k).power)
            .sum();
        raw * self.upgrade_multiplier(config)
    }

    pub fn home_army_power(&self, config: &SimConfig) -> f64 {
        self.units_power(&self.army, config)
    }

    pub fn field_power(&self, config: &SimConfig) -> f64 {
        self.field
            .as_ref()
            .map(|f| self.units_power(&f.units, config))
            .unwrap_or(0.0)
    }

    /// Mobile army power, home plus field; outposts excluded.
    pub fn army_power(&self, config: &SimConfig) -> f64 {
        self.home_army_power(config) + self.field_power(config)
    }

    /// Power available when the home base is attacked.
    pub fn defensive_power(&self, config: &SimConfig) -> f64 {
        let mut army = self.home_army_power(config);
        if self.stance == Stance::Defend {
            let b = config.combat.defend_bonus;
            army *= 1.0 + *b.numer() as f64 / *b.denom() as f64;
        }
        army + f64::from(self.building(BuildingKind::Outpost)) * config.combat.outpost_power
    }
}

pub fn unit_spec(config: &SimConfig, kind: UnitKind) -> &super::config::UnitSpec {
    match kind {
        UnitKind::Melee => &config.units.melee,
        UnitKind::Ranged => &config.units.ranged,
        UnitKind::Siege => &config.units.siege,
    }
}

/// Timestamped snapshot of the opponent, as last seen by a scout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoutReport {
    pub tick: u32,
    pub bases: u32,
    pub workers: u32,
    pub army: BTreeMap<UnitKind, u32>,
    pub army_power: f64,
    pub barracks: u32,
    pub tech_structure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Victory,
    Defeat,
    Timeout,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Victory => "Victory",
            Outcome::Defeat => "Defeat",
            Outcome::Timeout => "Timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSnapshot {
    pub player_bases: u32,
    pub opponent_bases: u32,
    pub player_workers: u32,
    pub player_army_power: f64,
    pub opponent_army_power: f64,
    pub minerals_collected: u64,
    pub gas_collected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub outcome: Outcome,
    pub tick_ended: u32,
    pub final_state_snapshot: FinalSnapshot,
}

/// Bookkeeping for the scripted opponent's schedule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpponentProgress {
    pub waves_launched: usize,
    pub all_in: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameState {
    pub tick: u32,
    pub player: PlayerState,
    pub opponent: PlayerState,
    pub opponent_knowledge: Option<ScoutReport>,
    pub rng_state: ChaCha8Rng,
    pub difficulty: DifficultyLevel,
    pub terminal: Option<MatchResult>,
    pub opponent_progress: OpponentProgress,
    /// Events from the most recent step, shown in the next observation.
    pub recent_events: Vec<String>,
    #[serde(skip)]
    pub config: Arc<SimConfig>,
}
