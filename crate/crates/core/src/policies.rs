//! Scripted decision policies for offline play.
//!
//! Each policy is a [`ScriptTable`] over the rendered decision transcript, so
//! it exercises exactly the same prompt, parsing and logging path as a live
//! model. The staged table also answers reflection prompts: its plans contain
//! marker phrases that switch on better decision rules in the next round.

use crate::llm::{Condition, Rule, ScriptTable};
use crate::reflection::HEADER_RESULT;
use crate::sim::Action::{self, *};

/// Present only in decision prompts (the system prompt's action list).
pub const DECISION_MARK: &str = crate::agent::SECTION_ACTIONS;

/// Appears in the first staged reflection.
pub const TIER1_MARK: &str = "Keep a standing melee guard at home";
/// Appears in the second staged reflection.
pub const TIER2_MARK: &str = "Tech to siege units and push with the upgraded army";

fn queue(actions: &[Action]) -> String {
    actions.iter().map(|a| a.display_name()).collect::<Vec<_>>().join("\n")
}

fn contains(s: &str) -> Condition {
    Condition::Contains(s.into())
}

fn absent(s: &str) -> Condition {
    Condition::Absent(s.into())
}

fn regex(s: &str) -> Condition {
    Condition::Regex(s.into())
}

fn rule(gate: &[Condition], when: Vec<Condition>, actions: &[Action]) -> Rule {
    let mut all = gate.to_vec();
    all.extend(when);
    Rule::new(all, queue(actions))
}

/// Never acts.
pub fn passive_table() -> ScriptTable {
    ScriptTable::new("NO_OP")
}

/// Workers and expansions only; never builds an army.
pub fn greedy_rules(gate: &[Condition]) -> Vec<Rule> {
    vec![
        rule(gate, vec![contains("SUPPLY_LOW")], &[BuildSupply, TrainWorker]),
        rule(gate, vec![contains("WORKERS_SATURATED")], &[ExpandBase, BuildGasCollector]),
        rule(gate, vec![contains("Bases: 1\n")], &[TrainWorker, ExpandBase]),
        rule(gate, vec![], &[TrainWorker, BuildGasCollector]),
    ]
}

/// Greedy economy with a capped melee guard; never researches and never attacks.
pub fn guard_rules(gate: &[Condition]) -> Vec<Rule> {
    vec![
        rule(gate, vec![contains("SUPPLY_LOW")], &[BuildSupply, TrainWorker, TrainMeleeUnit]),
        rule(gate, vec![contains("barracks=0 ")], &[TrainWorker, BuildBarracksAnalog]),
        rule(gate, vec![regex(r"Army supply: 1?\d ")], &[TrainWorker, TrainMeleeUnit, TrainMeleeUnit]),
        rule(gate, vec![contains("Bases: 1\n")], &[ExpandBase, TrainWorker]),
        rule(gate, vec![], &[TrainWorker, BuildGasCollector]),
    ]
}

/// The tuned macro policy: fast expansion, static defense, tech and upgrades,
/// then one large upgraded push.
pub fn expert_rules(gate: &[Condition]) -> Vec<Rule> {
    let army = [TrainSiegeUnit, TrainRangedUnit, TrainMeleeUnit];
    vec![
        rule(
            gate,
            vec![regex(r"Army supply: (\d{3}|[89]\d) "), contains("Field army: none"), absent("attack=0 ")],
            &[Attack, TrainSiegeUnit, TrainRangedUnit, TrainMeleeUnit, TrainWorker],
        ),
        rule(gate, vec![contains("stance: hold")], &[Defend, TrainWorker, BuildSupply]),
        rule(gate, vec![contains("SUPPLY_LOW")], &[BuildSupply, TrainWorker, army[0], army[1], army[2]]),
        rule(gate, vec![contains("barracks=0 ")], &[TrainWorker, BuildBarracksAnalog]),
        rule(gate, vec![contains("Bases: 1\n")], &[ExpandBase, TrainWorker]),
        rule(gate, vec![contains("gas=0 ")], &[TrainWorker, BuildGasCollector, TrainMeleeUnit]),
        rule(gate, vec![contains("tech=0 ")], &[TrainWorker, BuildTechStructure, BuildGasCollector, TrainMeleeUnit]),
        rule(gate, vec![regex(r"outpost=[0-3]\n")], &[TrainWorker, BuildOutpost, ResearchAttackUp, TrainRangedUnit, TrainMeleeUnit]),
        rule(gate, vec![regex(r"barracks=[123] ")], &[TrainWorker, BuildBarracksAnalog, ResearchAttackUp, TrainRangedUnit, TrainMeleeUnit]),
        rule(gate, vec![regex(r"Minerals: \d{4}")], &[ResearchAttackUp, BuildBarracksAnalog, TrainSiegeUnit, TrainRangedUnit, TrainMeleeUnit]),
        rule(gate, vec![contains("WORKERS_SATURATED"), contains("Bases: 2\n")], &[ExpandBase, BuildGasCollector, ResearchAttackUp, TrainSiegeUnit, TrainRangedUnit]),
        rule(gate, vec![contains("WORKERS_SATURATED")], &[BuildGasCollector, ResearchAttackUp, ResearchArmorUp, TrainSiegeUnit, TrainRangedUnit]),
        rule(gate, vec![], &[TrainWorker, ResearchAttackUp, TrainSiegeUnit, TrainRangedUnit, TrainMeleeUnit]),
    ]
}

/// The expert macro policy without any gating.
pub fn expert_table() -> ScriptTable {
    ScriptTable::new("NO_OP").extend(expert_rules(&[]))
}

/// Workers and expansions only.
pub fn greedy_table() -> ScriptTable {
    ScriptTable::new("NO_OP").extend(greedy_rules(&[]))
}

/// A plan document with the given marker in its defense point.
pub fn staged_plan(mark: &str, attack: &str) -> String {
    format!(
        "Strategic Points:
1. Opening Build Order: supply structure first, then a barracks as soon as it finishes.
2. Economy Management: keep training workers and take the second base before 02:00.
3. Scouting: send a worker before the first wave to count the enemy army.
4. Supply Management: never let free supply drop to zero.
5. Production and Tech: add barracks as minerals pile up.
6. Army Composition and Upgrades: {attack}.
7. Defense: {mark}; the last game was lost to an undefended wave.
8. Attack Timing: do not leave the base empty while a wave is coming.
Key Time Points:
00:20 — Build the first supply structure.
01:00 — Start the first barracks.
01:50 — Start the second base.
04:40 — Have the guard ready for the first wave.
08:00 — Add more production.
"
    )
}

pub fn tier1_reflection() -> String {
    staged_plan(TIER1_MARK, "mass melee units, they are cheap and need no tech")
}

pub fn tier2_reflection() -> String {
    staged_plan(TIER1_MARK, TIER2_MARK)
}

/// Reflection answers keyed on the previous experience, then decision rules
/// for the best tier whose marker the current experience carries.
pub fn staged_table() -> ScriptTable {
    let reflect = contains(HEADER_RESULT);
    let t1 = contains(TIER1_MARK);
    let t2 = contains(TIER2_MARK);
    let mut rules = vec![
        Rule::new(vec![reflect.clone(), t1.clone()], tier2_reflection()),
        Rule::new(vec![reflect], tier1_reflection()),
    ];
    rules.extend(expert_rules(&[contains(DECISION_MARK), t2]));
    rules.extend(guard_rules(&[contains(DECISION_MARK), t1]));
    rules.extend(greedy_rules(&[contains(DECISION_MARK)]));
    ScriptTable::new("NO_OP").extend(rules)
}
