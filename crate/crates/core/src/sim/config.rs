//! Simulator configuration.
//!
//! The canonical defaults live in `config/default_sim.toml` and are embedded
//! at compile time, so `SimConfig::default()` and the shipped file can never
//! drift apart.

use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::SimError;

pub const DEFAULT_SIM_TOML: &str = include_str!("../../config/default_sim.toml");

pub type Rational = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    Hard,
    Harder,
    VeryHard,
    Elite,
}

impl Difficulty {
    pub const ALL: [Difficulty; 4] = [
        Difficulty::Hard,
        Difficulty::Harder,
        Difficulty::VeryHard,
        Difficulty::Elite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Hard => "Hard",
            Difficulty::Harder => "Harder",
            Difficulty::VeryHard => "VeryHard",
            Difficulty::Elite => "Elite",
        }
    }

    pub fn parse(s: &str) -> Option<Difficulty> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "hard" => Some(Difficulty::Hard),
            "harder" => Some(Difficulty::Harder),
            "veryhard" => Some(Difficulty::VeryHard),
            "elite" => Some(Difficulty::Elite),
            _ => None,
        }
    }
}

impl std::fmt::Display for Difficulty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scripted-opponent strength knobs for one named level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyLevel {
    #[serde(skip_deserializing, default = "default_difficulty")]
    pub name: Difficulty,
    pub income_multiplier: Rational,
    pub attack_wave_ticks: Vec<u32>,
    pub base_wave_size: u32,
    pub wave_size_growth: Rational,
}

fn default_difficulty() -> Difficulty {
    Difficulty::Hard
}

impl DifficultyLevel {
    /// Planned number of units in wave `index` (0-based):
    /// `floor(base_wave_size * growth^index)`, computed exactly.
    pub fn wave_size(&self, index: usize) -> u32 {
        let mut size = Rational::from_integer(u64::from(self.base_wave_size));
        for _ in 0..index {
            size *= self.wave_size_growth;
        }
        size.to_integer() as u32
    }

    /// Planned size of the most recent wave due at or before `tick`, or 0
    /// before the first wave.
    pub fn wave_size_at(&self, tick: u32) -> u32 {
        match self.attack_wave_ticks.iter().rposition(|&t| t <= tick) {
            Some(i) => self.wave_size(i),
            None => 0,
        }
    }

    pub fn first_wave_tick(&self) -> Option<u32> {
        self.attack_wave_ticks.first().copied()
    }

    /// Rescales a schedule tick defined at multiplier 1.
    pub fn scale_tick(&self, tick: u32) -> u32 {
        let scaled = Rational::from_integer(u64::from(tick)) / self.income_multiplier;
        scaled.to_integer() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyTable {
    pub hard: DifficultyLevel,
    pub harder: DifficultyLevel,
    pub very_hard: DifficultyLevel,
    pub elite: DifficultyLevel,
}

impl DifficultyTable {
    pub fn get(&self, d: Difficulty) -> &DifficultyLevel {
        match d {
            Difficulty::Hard => &self.hard,
            Difficulty::Harder => &self.harder,
            Difficulty::VeryHard => &self.very_hard,
            Difficulty::Elite => &self.elite,
        }
    }

    fn fix_names(&mut self) {
        self.hard.name = Difficulty::Hard;
        self.harder.name = Difficulty::Harder;
        self.very_hard.name = Difficulty::VeryHard;
        self.elite.name = Difficulty::Elite;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub minerals: u64,
    pub gas: u64,
    pub ticks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub minerals: u64,
    pub gas: u64,
    pub ticks: u32,
    pub supply: u32,
    pub power: f64,
}

impl UnitSpec {
    pub fn cost(&self) -> Cost {
        Cost {
            minerals: self.minerals,
            gas: self.gas,
            ticks: self.ticks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomyConfig {
    pub starting_minerals: u64,
    pub starting_gas: u64,
    pub starting_workers: u32,
    pub mineral_rate: u64,
    pub gas_rate: u64,
    pub workers_per_base: u32,
    pub workers_per_collector: u32,
    pub collectors_per_base: u32,
    pub base_supply: u32,
    pub pylon_supply: u32,
    pub max_supply: u32,
    pub max_bases: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombatConfig {
    pub base_hp: u32,
    pub travel_ticks: u32,
    pub outpost_power: f64,
    pub upgrade_bonus: Rational,
    pub defend_bonus: Rational,
    pub max_upgrade_level: u32,
    pub recall_cooldown: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub worker: Cost,
    pub supply_structure: Cost,
    pub gas_collector: Cost,
    pub base: Cost,
    pub barracks: Cost,
    pub tech_structure: Cost,
    pub outpost: Cost,
    /// Cost of the first level; level `n` costs `n` times this.
    pub research: Cost,
    pub recall: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTable {
    pub melee: UnitSpec,
    pub ranged: UnitSpec,
    pub siege: UnitSpec,
}

/// Build schedule of the scripted opponent, expressed at income multiplier 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentScript {
    /// Piecewise-constant (from_tick, worker_count) targets.
    pub worker_target: Vec<(u32, u32)>,
    pub barracks_ticks: Vec<u32>,
    pub tech_tick: u32,
    pub gas_ticks: Vec<u32>,
    pub expansion_ticks: Vec<u32>,
    pub ranged_share: Rational,
    pub siege_share: Rational,
    pub allin_min_power: f64,
}

impl OpponentScript {
    pub fn worker_target_at(&self, tick: u32) -> u32 {
        self.worker_target
            .iter()
            .take_while(|(from, _)| *from <= tick)
            .last()
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub max_ticks: u32,
    pub decision_interval: u32,
    pub economy: EconomyConfig,
    pub combat: CombatConfig,
    pub costs: CostTable,
    pub units: UnitTable,
    pub opponent: OpponentScript,
    pub difficulty: DifficultyTable,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::from_toml_str(DEFAULT_SIM_TOML).expect("embedded default config is valid")
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<SimConfig, SimError> {
        let mut cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config {
            field: "<file>".into(),
            reason: e.to_string(),
        })?;
        cfg.difficulty.fix_names();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SimConfig, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config {
            field: path.display().to_string(),
            reason: e.to_string(),
        })?;
        SimConfig::from_toml_str(&text)
    }

    pub fn level(&self, d: Difficulty) -> &DifficultyLevel {
        self.difficulty.get(d)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        fn bad(field: &str, reason: &str) -> SimError {
            SimError::Config {
                field: field.to_string(),
                reason: reason.to_string(),
            }
        }
        if self.max_ticks == 0 {
            return Err(bad("max_ticks", "must be positive"));
        }
        if self.decision_interval == 0 {
            return Err(bad("decision_interval", "must be positive"));
        }
        let e = &self.economy;
        if e.mineral_rate == 0 {
            return Err(bad("economy.mineral_rate", "must be positive"));
        }
        if e.workers_per_base == 0 {
            return Err(bad("economy.workers_per_base", "must be positive"));
        }
        if e.base_supply == 0 || e.pylon_supply == 0 || e.max_supply == 0 {
            return Err(bad("economy.base_supply", "supply values must be positive"));
        }
        if e.max_bases == 0 {
            return Err(bad("economy.max_bases", "must be positive"));
        }
        if self.combat.base_hp == 0 {
            return Err(bad("combat.base_hp", "must be positive"));
        }
        if self.combat.travel_ticks == 0 {
            return Err(bad("combat.travel_ticks", "must be positive"));
        }
        let costs = [
            ("costs.worker", self.costs.worker),
            ("costs.supply_structure", self.costs.supply_structure),
            ("costs.gas_collector", self.costs.gas_collector),
            ("costs.base", self.costs.base),
            ("costs.barracks", self.costs.barracks),
            ("costs.tech_structure", self.costs.tech_structure),
            ("costs.outpost", self.costs.outpost),
            ("costs.research", self.costs.research),
            ("costs.recall", self.costs.recall),
            ("units.melee", self.units.melee.cost()),
            ("units.ranged", self.units.ranged.cost()),
            ("units.siege", self.units.siege.cost()),
        ];
        for (field, c) in costs {
            if c.minerals + c.gas == 0 {
                return Err(bad(field, "cost must be positive"));
            }
            if c.ticks == 0 {
                return Err(bad(field, "duration must be positive"));
            }
        }
        for (field, u) in [
            ("units.melee", &self.units.melee),
            ("units.ranged", &self.units.ranged),
            ("units.siege", &self.units.siege),
        ] {
            if u.supply == 0 || u.power.is_nan() || u.power <= 0.0 {
                return Err(bad(field, "supply and power must be positive"));
            }
        }
        for d in Difficulty::ALL {
            let lvl = self.level(d);
            if *lvl.income_multiplier.numer() == 0 {
                return Err(bad(
                    &format!("difficulty.{}.income_multiplier", d.name()),
                    "must be positive",
                ));
            }
            if lvl.attack_wave_ticks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad(
                    &format!("difficulty.{}.attack_wave_ticks", d.name()),
                    "must be strictly increasing",
                ));
            }
        }
        Ok(())
    }
}
