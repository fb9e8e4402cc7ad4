use serde::{Deserialize, Serialize};

/// The fixed legal action library, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    NoOp,
    TrainWorker,
    BuildSupply,
    BuildGasCollector,
    ExpandBase,
    BuildBarracksAnalog,
    BuildTechStructure,
    TrainMeleeUnit,
    TrainRangedUnit,
    TrainSiegeUnit,
    ResearchAttackUp,
    ResearchArmorUp,
    Scout,
    Attack,
    Retreat,
    Defend,
    BuildOutpost,
    MassRecallAnalog,
}

impl Action {
    pub const LIBRARY: [Action; 18] = [
        Action::NoOp,
        Action::TrainWorker,
        Action::BuildSupply,
        Action::BuildGasCollector,
        Action::ExpandBase,
        Action::BuildBarracksAnalog,
        Action::BuildTechStructure,
        Action::TrainMeleeUnit,
        Action::TrainRangedUnit,
        Action::TrainSiegeUnit,
        Action::ResearchAttackUp,
        Action::ResearchArmorUp,
        Action::Scout,
        Action::Attack,
        Action::Retreat,
        Action::Defend,
        Action::BuildOutpost,
        Action::MassRecallAnalog,
    ];

    /// Name exactly as shown to the language model.
    pub fn display_name(self) -> &'static str {
        match self {
            Action::NoOp => "NO_OP",
            Action::TrainWorker => "TRAIN_WORKER",
            Action::BuildSupply => "BUILD_SUPPLY",
            Action::BuildGasCollector => "BUILD_GAS_COLLECTOR",
            Action::ExpandBase => "EXPAND_BASE",
            Action::BuildBarracksAnalog => "BUILD_BARRACKS_ANALOG",
            Action::BuildTechStructure => "BUILD_TECH_STRUCTURE",
            Action::TrainMeleeUnit => "TRAIN_MELEE_UNIT",
            Action::TrainRangedUnit => "TRAIN_RANGED_UNIT",
            Action::TrainSiegeUnit => "TRAIN_SIEGE_UNIT",
            Action::ResearchAttackUp => "RESEARCH_ATTACK_UP",
            Action::ResearchArmorUp => "RESEARCH_ARMOR_UP",
            Action::Scout => "SCOUT",
            Action::Attack => "ATTACK",
            Action::Retreat => "RETREAT",
            Action::Defend => "DEFEND",
            Action::BuildOutpost => "BUILD_OUTPOST",
            Action::MassRecallAnalog => "MASS_RECALL_ANALOG",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Action::NoOp => "do nothing this decision",
            Action::TrainWorker => "train one worker at a base",
            Action::BuildSupply => "build a supply structure (+supply)",
            Action::BuildGasCollector => "build a gas collector (two per base)",
            Action::ExpandBase => "build a new base",
            Action::BuildBarracksAnalog => "build a unit production structure",
            Action::BuildTechStructure => "build the tech structure (unlocks ranged, siege, research, recall)",
            Action::TrainMeleeUnit => "train a cheap melee unit",
            Action::TrainRangedUnit => "train a ranged unit (needs tech)",
            Action::TrainSiegeUnit => "train a heavy siege unit (needs tech)",
            Action::ResearchAttackUp => "research the next attack upgrade",
            Action::ResearchArmorUp => "research the next armor upgrade",
            Action::Scout => "send a worker to scout the enemy",
            Action::Attack => "send the home army to attack the enemy bases",
            Action::Retreat => "march the field army back home",
            Action::Defend => "hold the home army in a defensive stance",
            Action::BuildOutpost => "build a static defensive outpost",
            Action::MassRecallAnalog => "instantly recall the field army home",
        }
    }

    /// Exact inverse of [`Action::display_name`].
    pub fn parse(name: &str) -> Option<Action> {
        Action::LIBRARY
            .iter()
            .copied()
            .find(|a| a.display_name() == name)
    }

    /// Case-insensitive lookup used when reading model output.
    pub fn parse_loose(name: &str) -> Option<Action> {
        Action::LIBRARY
            .iter()
            .copied()
            .find(|a| a.display_name().eq_ignore_ascii_case(name))
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.display_name())
    }
}
