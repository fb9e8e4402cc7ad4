use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::Action;
use super::observe::clock;
use super::combat::{resolve_combat, surviving_count, Side};
use super::config::{Cost, Difficulty, Rational, SimConfig};
use super::opponent::{opponent_policy, OpponentAction};
use super::state::{
    unit_spec, BuildingKind, FieldArmy, FieldStatus, FinalSnapshot, GameState, MatchResult,
    OpponentProgress, Outcome, PendingItem, PlayerState, QueueItem, ScoutReport, Stance,
    UnitKind, Upgrade,
};
use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Unaffordable,
    SupplyBlocked,
    MissingRequirement(String),
    AtCapacity,
    NoArmy,
    OnCooldown,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Unaffordable => f.write_str("not enough resources"),
            RejectReason::SupplyBlocked => f.write_str("supply blocked"),
            RejectReason::MissingRequirement(r) => write!(f, "requires {r}"),
            RejectReason::AtCapacity => f.write_str("at capacity"),
            RejectReason::NoArmy => f.write_str("no army available"),
            RejectReason::OnCooldown => f.write_str("on cooldown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub action: Action,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideSample {
    pub minerals_collected: u64,
    pub gas_collected: u64,
    pub workers: u32,
    pub army_supply: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickSample {
    pub tick: u32,
    pub player: SideSample,
    pub opponent: SideSample,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub executed: Vec<Action>,
    pub rejected: Vec<Rejection>,
    pub events: Vec<String>,
    pub samples: Vec<TickSample>,
}

/// Canonical opening: one base, the configured workers, tick 0.
pub fn new_game(
    config: Arc<SimConfig>,
    seed: u64,
    difficulty: Difficulty,
) -> Result<GameState, SimError> {
    config.validate()?;
    let player = PlayerState::opening(&config);
    let opponent = PlayerState::opening(&config);
    Ok(GameState {
        tick: 0,
        player,
        opponent,
        opponent_knowledge: None,
        rng_state: ChaCha8Rng::seed_from_u64(seed),
        difficulty: config.level(difficulty).clone(),
        terminal: None,
        opponent_progress: OpponentProgress::default(),
        recent_events: Vec::new(),
        config,
    })
}

/// The model always sees the whole library; affordability is checked on execution.
pub fn legal_actions(state: &GameState) -> Result<&'static [Action], SimError> {
    if state.terminal.is_some() {
        return Err(SimError::Terminal);
    }
    Ok(&Action::LIBRARY)
}

pub fn is_terminal(state: &GameState) -> Option<MatchResult> {
    let outcome = if state.opponent.bases == 0 {
        Outcome::Victory
    } else if state.player.bases == 0 {
        Outcome::Defeat
    } else if state.tick >= state.config.max_ticks {
        Outcome::Timeout
    } else {
        return None;
    };
    let cfg = &state.config;
    Some(MatchResult {
        outcome,
        tick_ended: state.tick,
        final_state_snapshot: FinalSnapshot {
            player_bases: state.player.bases,
            opponent_bases: state.opponent.bases,
            player_workers: state.player.workers,
            player_army_power: state.player.army_power(cfg),
            opponent_army_power: state.opponent.army_power(cfg),
            minerals_collected: state.player.ledger.minerals_earned,
            gas_collected: state.player.ledger.gas_earned,
        },
    })
}

/// Executes `actions` at the current tick, then advances `decision_interval`
/// ticks (or until the game ends).
pub fn step(
    state: &mut GameState,
    actions: &[Action],
    decision_interval: u32,
) -> Result<StepOutcome, SimError> {
    if state.terminal.is_some() {
        return Err(SimError::Terminal);
    }
    if decision_interval == 0 {
        return Err(SimError::InvalidArgument("decision_interval must be at least 1".into()));
    }
    let config = Arc::clone(&state.config);
    let cfg = config.as_ref();
    let mut out = StepOutcome::default();

    for &action in actions {
        match execute_player_action(state, cfg, action) {
            Ok(event) => {
                out.executed.push(action);
                out.events.extend(event);
            }
            Err(reason) => out.rejected.push(Rejection { action, reason }),
        }
    }

    for _ in 0..decision_interval {
        advance_tick(state, cfg, &mut out.events);
        out.samples.push(sample(state, cfg));
        if let Some(result) = is_terminal(state) {
            out.events.push(format!("Game over: {}", result.outcome));
            state.terminal = Some(result);
            break;
        }
    }
    state.recent_events = out.events.clone();
    Ok(out)
}

fn sample(state: &GameState, cfg: &SimConfig) -> TickSample {
    let side = |p: &PlayerState| SideSample {
        minerals_collected: p.ledger.minerals_earned,
        gas_collected: p.ledger.gas_earned,
        workers: p.workers,
        army_supply: p.army_supply(cfg),
    };
    TickSample {
        tick: state.tick,
        player: side(&state.player),
        opponent: side(&state.opponent),
    }
}

fn pay(p: &mut PlayerState, cost: Cost) -> Result<(), RejectReason> {
    if p.minerals < cost.minerals || p.gas < cost.gas {
        return Err(RejectReason::Unaffordable);
    }
    p.minerals -= cost.minerals;
    p.gas -= cost.gas;
    p.ledger.minerals_spent += cost.minerals;
    p.ledger.gas_spent += cost.gas;
    Ok(())
}

fn enqueue(p: &mut PlayerState, item: QueueItem, cost: Cost) -> Result<(), RejectReason> {
    pay(p, cost)?;
    p.pending.push(PendingItem {
        item,
        ticks_remaining: cost.ticks,
        minerals_paid: cost.minerals,
        gas_paid: cost.gas,
    });
    Ok(())
}

fn require(cond: bool, what: &str) -> Result<(), RejectReason> {
    if cond {
        Ok(())
    } else {
        Err(RejectReason::MissingRequirement(what.to_string()))
    }
}

fn train_worker(p: &mut PlayerState, cfg: &SimConfig) -> Result<(), RejectReason> {
    if p.pending_count(|i| i == QueueItem::Worker) >= p.bases {
        return Err(RejectReason::AtCapacity);
    }
    if p.supply_free() < 1 {
        return Err(RejectReason::SupplyBlocked);
    }
    enqueue(p, QueueItem::Worker, cfg.costs.worker)?;
    p.supply_used += 1;
    Ok(())
}

fn train_unit(p: &mut PlayerState, cfg: &SimConfig, kind: UnitKind) -> Result<(), RejectReason> {
    require(p.building(BuildingKind::Barracks) > 0, "a barracks")?;
    if kind != UnitKind::Melee {
        require(p.building(BuildingKind::TechStructure) > 0, "the tech structure")?;
    }
    if p.pending_count(|i| matches!(i, QueueItem::Unit(_))) >= p.building(BuildingKind::Barracks) {
        return Err(RejectReason::AtCapacity);
    }
    let spec = *unit_spec(cfg, kind);
    if p.supply_free() < spec.supply {
        return Err(RejectReason::SupplyBlocked);
    }
    enqueue(p, QueueItem::Unit(kind), spec.cost())?;
    p.supply_used += spec.supply;
    Ok(())
}

fn build(p: &mut PlayerState, cfg: &SimConfig, kind: BuildingKind) -> Result<(), RejectReason> {
    let queued = |p: &PlayerState| p.pending_count(|i| i == QueueItem::Building(kind));
    let cost = match kind {
        BuildingKind::SupplyStructure => cfg.costs.supply_structure,
        BuildingKind::GasCollector => {
            let limit = cfg.economy.collectors_per_base * p.bases;
            if p.building(kind) + queued(p) >= limit {
                return Err(RejectReason::AtCapacity);
            }
            cfg.costs.gas_collector
        }
        BuildingKind::Barracks => {
            require(p.building(BuildingKind::SupplyStructure) > 0, "a supply structure")?;
            cfg.costs.barracks
        }
        BuildingKind::TechStructure => {
            require(p.building(BuildingKind::Barracks) > 0, "a barracks")?;
            if p.building(kind) + queued(p) > 0 {
                return Err(RejectReason::AtCapacity);
            }
            cfg.costs.tech_structure
        }
        BuildingKind::Outpost => {
            require(p.building(BuildingKind::SupplyStructure) > 0, "a supply structure")?;
            cfg.costs.outpost
        }
    };
    enqueue(p, QueueItem::Building(kind), cost)
}

fn expand(p: &mut PlayerState, cfg: &SimConfig) -> Result<(), RejectReason> {
    let queued = p.pending_count(|i| i == QueueItem::Base);
    if queued > 0 || p.bases + queued >= cfg.economy.max_bases {
        return Err(RejectReason::AtCapacity);
    }
    enqueue(p, QueueItem::Base, cfg.costs.base)
}

fn research(p: &mut PlayerState, cfg: &SimConfig, up: Upgrade) -> Result<(), RejectReason> {
    require(p.building(BuildingKind::TechStructure) > 0, "the tech structure")?;
    let level = p.upgrade_level(up);
    if level >= cfg.combat.max_upgrade_level || p.pending_count(|i| i == QueueItem::Research(up)) > 0 {
        return Err(RejectReason::AtCapacity);
    }
    let base = cfg.costs.research;
    let next = u64::from(level + 1);
    let cost = Cost {
        minerals: base.minerals * next,
        gas: base.gas * next,
        ticks: base.ticks,
    };
    enqueue(p, QueueItem::Research(up), cost)
}

fn send_units(p: &mut PlayerState, cfg: &SimConfig, limit: Option<u32>) -> Result<(), RejectReason> {
    let mut budget = limit.unwrap_or(u32::MAX);
    let mut moved: BTreeMap<UnitKind, u32> = BTreeMap::new();
    for kind in [UnitKind::Siege, UnitKind::Ranged, UnitKind::Melee] {
        let home = p.army.entry(kind).or_insert(0);
        let n = (*home).min(budget);
        *home -= n;
        budget -= n;
        if n > 0 {
            moved.insert(kind, n);
        }
    }
    if moved.is_empty() {
        return Err(RejectReason::NoArmy);
    }
    let travel = cfg.combat.travel_ticks;
    match p.field.as_mut() {
        Some(field) => {
            for (k, n) in moved {
                *field.units.entry(k).or_insert(0) += n;
            }
            if let FieldStatus::Returning { .. } = field.status {
                field.status = FieldStatus::Marching { eta: travel };
            }
        }
        None => {
            p.field = Some(FieldArmy {
                units: moved,
                status: FieldStatus::Marching { eta: travel },
            })
        }
    }
    Ok(())
}

fn scout_report(opponent: &PlayerState, cfg: &SimConfig, tick: u32) -> ScoutReport {
    ScoutReport {
        tick,
        bases: opponent.bases,
        workers: opponent.workers,
        army: UnitKind::ALL.iter().map(|&k| (k, opponent.home_units(k))).collect(),
        army_power: opponent.home_army_power(cfg),
        barracks: opponent.building(BuildingKind::Barracks),
        tech_structure: opponent.building(BuildingKind::TechStructure) > 0,
    }
}

fn execute_player_action(
    state: &mut GameState,
    cfg: &SimConfig,
    action: Action,
) -> Result<Option<String>, RejectReason> {
    let tick = state.tick;
    let p = &mut state.player;
    match action {
        Action::NoOp => {}
        Action::TrainWorker => train_worker(p, cfg)?,
        Action::BuildSupply => build(p, cfg, BuildingKind::SupplyStructure)?,
        Action::BuildGasCollector => build(p, cfg, BuildingKind::GasCollector)?,
        Action::ExpandBase => expand(p, cfg)?,
        Action::BuildBarracksAnalog => build(p, cfg, BuildingKind::Barracks)?,
        Action::BuildTechStructure => build(p, cfg, BuildingKind::TechStructure)?,
        Action::TrainMeleeUnit => train_unit(p, cfg, UnitKind::Melee)?,
        Action::TrainRangedUnit => train_unit(p, cfg, UnitKind::Ranged)?,
        Action::TrainSiegeUnit => train_unit(p, cfg, UnitKind::Siege)?,
        Action::ResearchAttackUp => research(p, cfg, Upgrade::Attack)?,
        Action::ResearchArmorUp => research(p, cfg, Upgrade::Armor)?,
        Action::BuildOutpost => build(p, cfg, BuildingKind::Outpost)?,
        Action::Scout => {
            if p.workers == 0 {
                return Err(RejectReason::MissingRequirement("a worker".into()));
            }
            let report = scout_report(&state.opponent, cfg, tick);
            state.opponent_knowledge = Some(report);
            return Ok(Some(format!("Scout report received at {}", clock(tick))));
        }
        Action::Attack => {
            send_units(p, cfg, None)?;
            return Ok(Some("Army sent to attack the enemy".into()));
        }
        Action::Retreat => match p.field.as_mut() {
            Some(f) if !matches!(f.status, FieldStatus::Returning { .. }) => {
                f.status = FieldStatus::Returning {
                    eta: cfg.combat.travel_ticks,
                };
                return Ok(Some("Field army retreating".into()));
            }
            _ => return Err(RejectReason::NoArmy),
        },
        Action::Defend => {
            p.stance = Stance::Defend;
        }
        Action::MassRecallAnalog => {
            require(p.building(BuildingKind::TechStructure) > 0, "the tech structure")?;
            if p.field.is_none() {
                return Err(RejectReason::NoArmy);
            }
            if tick < p.recall_ready_at {
                return Err(RejectReason::OnCooldown);
            }
            pay(p, cfg.costs.recall)?;
            p.recall_ready_at = tick + cfg.combat.recall_cooldown;
            return_home(p);
            return Ok(Some("Field army recalled home".into()));
        }
    }
    Ok(None)
}

fn execute_opponent_action(state: &mut GameState, cfg: &SimConfig, action: OpponentAction) {
    let p = &mut state.opponent;
    // The bot's failed attempts are silent; it simply tries again next tick.
    let _ = match action {
        OpponentAction::TrainWorker => train_worker(p, cfg),
        OpponentAction::BuildSupply => build(p, cfg, BuildingKind::SupplyStructure),
        OpponentAction::BuildGasCollector => build(p, cfg, BuildingKind::GasCollector),
        OpponentAction::BuildBarracks => build(p, cfg, BuildingKind::Barracks),
        OpponentAction::BuildTechStructure => build(p, cfg, BuildingKind::TechStructure),
        OpponentAction::Expand => expand(p, cfg),
        OpponentAction::TrainUnit(kind) => train_unit(p, cfg, kind),
        OpponentAction::LaunchWave { size } => {
            state.opponent_progress.waves_launched += 1;
            send_units(p, cfg, Some(size))
        }
        OpponentAction::AllIn => {
            state.opponent_progress.all_in = true;
            send_units(p, cfg, None)
        }
    };
}

fn return_home(p: &mut PlayerState) {
    if let Some(field) = p.field.take() {
        for (k, n) in field.units {
            *p.army.entry(k).or_insert(0) += n;
        }
    }
}

fn accrue_income(p: &mut PlayerState, cfg: &SimConfig, multiplier: Rational) {
    let (num, den) = (*multiplier.numer(), *multiplier.denom());
    let minerals = u64::from(p.mineral_workers(cfg)) * cfg.economy.mineral_rate * num + p.ledger.mineral_carry;
    let gas = u64::from(p.gas_workers(cfg)) * cfg.economy.gas_rate * num + p.ledger.gas_carry;
    let (m, g) = (minerals / den, gas / den);
    p.ledger.mineral_carry = minerals % den;
    p.ledger.gas_carry = gas % den;
    p.minerals += m;
    p.gas += g;
    p.ledger.minerals_earned += m;
    p.ledger.gas_earned += g;
}

fn progress_queue(p: &mut PlayerState, cfg: &SimConfig) -> Vec<QueueItem> {
    let mut done = Vec::new();
    for item in p.pending.iter_mut() {
        item.ticks_remaining -= 1;
        if item.ticks_remaining == 0 {
            done.push(item.item);
        }
    }
    p.pending.retain(|i| i.ticks_remaining > 0);
    for &item in &done {
        match item {
            QueueItem::Worker => p.workers += 1,
            QueueItem::Unit(k) => *p.army.entry(k).or_insert(0) += 1,
            QueueItem::Building(b) => *p.production_structures.entry(b).or_insert(0) += 1,
            QueueItem::Base => p.bases += 1,
            QueueItem::Research(u) => *p.tech.entry(u).or_insert(0) += 1,
        }
    }
    p.recompute_supply_cap(cfg);
    done
}

fn remove_units(p: &mut PlayerState, cfg: &SimConfig, before: &BTreeMap<UnitKind, u32>, after: &BTreeMap<UnitKind, u32>) {
    for (&k, &n) in before {
        let left = after.get(&k).copied().unwrap_or(0);
        p.supply_used -= (n - left) * unit_spec(cfg, k).supply;
    }
}

fn scale_units(units: &BTreeMap<UnitKind, u32>, fraction: f64) -> BTreeMap<UnitKind, u32> {
    units
        .iter()
        .map(|(&k, &n)| (k, surviving_count(n, fraction)))
        .collect()
}

/// Effects of one tick on one front, reported from the attacker's side.
#[derive(Debug, Default)]
struct FrontReport {
    arrived: bool,
    battle: Option<(Side, f64)>,
    bases_destroyed: u32,
    returned: bool,
}

fn advance_front(att: &mut PlayerState, def: &mut PlayerState, cfg: &SimConfig) -> FrontReport {
    let mut report = FrontReport::default();
    let Some(field) = att.field.as_mut() else {
        return report;
    };
    match field.status {
        FieldStatus::Marching { eta } => {
            if eta > 1 {
                field.status = FieldStatus::Marching { eta: eta - 1 };
                return report;
            }
            field.status = FieldStatus::Engaged;
            report.arrived = true;
        }
        FieldStatus::Returning { eta } => {
            if eta > 1 {
                field.status = FieldStatus::Returning { eta: eta - 1 };
            } else {
                return_home(att);
                report.returned = true;
            }
            return report;
        }
        FieldStatus::Engaged => {}
    }

    let defense = def.defensive_power(cfg);
    if defense > 0.0 {
        let attack = att.field_power(cfg);
        let outcome = resolve_combat(attack, defense);
        report.battle = Some((outcome.winner, outcome.survivor_power));
        match outcome.winner {
            Side::Attacker => {
                let home = std::mem::take(&mut def.army);
                let cleared: BTreeMap<UnitKind, u32> = home.keys().map(|&k| (k, 0)).collect();
                remove_units(def, cfg, &home, &cleared);
                def.army = cleared;
                def.production_structures.insert(BuildingKind::Outpost, 0);
                let field = att.field.as_mut().expect("engaged army present");
                let before = field.units.clone();
                let after = scale_units(&before, outcome.survivor_power / attack);
                field.units = after.clone();
                remove_units(att, cfg, &before, &after);
            }
            Side::Defender => {
                let field = att.field.take().expect("engaged army present");
                let wiped: BTreeMap<UnitKind, u32> = field.units.keys().map(|&k| (k, 0)).collect();
                remove_units(att, cfg, &field.units, &wiped);
                let fraction = outcome.survivor_power / defense;
                let before = def.army.clone();
                let after = scale_units(&before, fraction);
                remove_units(def, cfg, &before, &after);
                def.army = after;
                let outposts = def.building(BuildingKind::Outpost);
                def.production_structures
                    .insert(BuildingKind::Outpost, surviving_count(outposts, fraction));
                return report;
            }
        }
    }

    let Some(field) = att.field.as_ref() else {
        return report;
    };
    if field.unit_count() == 0 {
        att.field = None;
        return report;
    }
    let damage = (att.field_power(cfg).floor() as u32).max(1);
    if damage >= def.base_hp {
        destroy_base(def, cfg);
        report.bases_destroyed += 1;
    } else {
        def.base_hp -= damage;
    }
    report
}

fn destroy_base(p: &mut PlayerState, cfg: &SimConfig) {
    let share = p.workers / p.bases.max(1);
    p.bases = p.bases.saturating_sub(1);
    p.base_hp = cfg.combat.base_hp;
    p.workers -= share;
    p.supply_used -= share;
    p.recompute_supply_cap(cfg);
    enforce_supply(p, cfg);
}

/// Removes units (workers first, then army, then queued trainings with
/// refund) until supply used fits under the cap again.
fn enforce_supply(p: &mut PlayerState, cfg: &SimConfig) {
    while p.supply_used > p.supply_cap {
        let over = p.supply_used - p.supply_cap;
        if p.workers > 0 {
            let n = over.min(p.workers);
            p.workers -= n;
            p.supply_used -= n;
            continue;
        }
        let victim = UnitKind::ALL
            .iter()
            .copied()
            .find(|&k| p.home_units(k) > 0)
            .map(|k| (k, false))
            .or_else(|| {
                UnitKind::ALL
                    .iter()
                    .copied()
                    .find(|&k| p.field_units(k) > 0)
                    .map(|k| (k, true))
            });
        if let Some((kind, in_field)) = victim {
            let units = if in_field {
                &mut p.field.as_mut().expect("field present").units
            } else {
                &mut p.army
            };
            *units.get_mut(&kind).expect("unit present") -= 1;
            p.supply_used -= unit_spec(cfg, kind).supply;
            if p.field.as_ref().is_some_and(|f| f.unit_count() == 0) {
                p.field = None;
            }
            continue;
        }
        let pos = p
            .pending
            .iter()
            .rposition(|i| matches!(i.item, QueueItem::Worker | QueueItem::Unit(_)));
        match pos {
            Some(i) => {
                let item = p.pending.remove(i);
                let supply = match item.item {
                    QueueItem::Unit(k) => unit_spec(cfg, k).supply,
                    _ => 1,
                };
                p.supply_used -= supply;
                p.minerals += item.minerals_paid;
                p.gas += item.gas_paid;
                p.ledger.minerals_spent -= item.minerals_paid;
                p.ledger.gas_spent -= item.gas_paid;
            }
            None => break,
        }
    }
}

fn advance_tick(state: &mut GameState, cfg: &SimConfig, events: &mut Vec<String>) {
    accrue_income(&mut state.player, cfg, Rational::from_integer(1));
    let multiplier = state.difficulty.income_multiplier;
    accrue_income(&mut state.opponent, cfg, multiplier);

    for item in progress_queue(&mut state.player, cfg) {
        events.push(format!("Completed {} at {}", item.label(), clock(state.tick + 1)));
    }
    progress_queue(&mut state.opponent, cfg);

    let mut rng = state.rng_state.clone();
    let orders = opponent_policy(state, &mut rng);
    state.rng_state = rng;
    for order in orders {
        execute_opponent_action(state, cfg, order);
    }

    let now = clock(state.tick + 1);
    let ours = advance_front(&mut state.player, &mut state.opponent, cfg);
    if ours.arrived {
        events.push(format!("Our army reached the enemy base at {now}"));
    }
    match ours.battle {
        Some((Side::Attacker, left)) => {
            events.push(format!("Won a battle at the enemy base at {now} (power {left:.1} left)"))
        }
        Some((Side::Defender, _)) => {
            events.push(format!("Our attacking army was destroyed at {now}"))
        }
        None => {}
    }
    if ours.bases_destroyed > 0 {
        events.push(format!(
            "Destroyed an enemy base at {now} ({} left)",
            state.opponent.bases
        ));
    }
    if ours.returned {
        events.push(format!("Army returned home at {now}"));
    }
    if state.opponent.bases > 0 {
        enemy_front(state, cfg, &now, events);
    }
    state.tick += 1;
}

fn enemy_front(state: &mut GameState, cfg: &SimConfig, now: &str, events: &mut Vec<String>) {
    let theirs = advance_front(&mut state.opponent, &mut state.player, cfg);
    if theirs.arrived {
        events.push(format!("Enemy wave arrived at our base at {now}"));
    }
    match theirs.battle {
        Some((Side::Defender, left)) => {
            events.push(format!("Held our base at {now} (power {left:.1} left)"))
        }
        Some((Side::Attacker, left)) => events.push(format!(
            "Our defenders were destroyed at {now} (enemy power {left:.1} left)"
        )),
        None => {}
    }
    if theirs.bases_destroyed > 0 {
        events.push(format!("Lost a base at {now} ({} left)", state.player.bases));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opening(d: Difficulty) -> GameState {
        new_game(Arc::new(SimConfig::default()), 7, d).unwrap()
    }

    #[test]
    fn canonical_opening() {
        let s = opening(Difficulty::Hard);
        assert_eq!(s.player.workers, 12);
        assert_eq!(s.player.bases, 1);
        assert_eq!(s.tick, 0);
        assert!(s.terminal.is_none());
        assert_eq!(s, opening(Difficulty::Hard));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SimConfig { max_ticks: 0, ..SimConfig::default() };
        let err = new_game(Arc::new(cfg), 7, Difficulty::Hard).unwrap_err();
        assert!(matches!(err, SimError::Config { ref field, .. } if field == "max_ticks"));
    }

    #[test]
    fn income_without_spending() {
        let mut s = opening(Difficulty::Hard);
        let before = s.player.minerals;
        let out = step(&mut s, &[], 10).unwrap();
        // workers * rate * ticks
        assert_eq!(s.player.minerals - before, 12 * 10);
        assert_eq!(s.tick, 10);
        assert_eq!(s.player.workers, 12);
        assert_eq!(s.player.home_unit_count(), 0);
        assert_eq!(out.samples.len(), 10);
    }

    #[test]
    fn unaffordable_action_is_a_recorded_no_op() {
        let mut s = opening(Difficulty::Hard);
        s.player.minerals = 10;
        let out = step(&mut s, &[Action::TrainWorker], 1).unwrap();
        assert!(out.executed.is_empty());
        assert_eq!(
            out.rejected,
            vec![Rejection {
                action: Action::TrainWorker,
                reason: RejectReason::Unaffordable
            }]
        );
        assert!(s.player.pending.is_empty());
        assert_eq!(s.player.minerals, 10 + 12);
    }

    #[test]
    fn terminal_state_refuses_actions() {
        let mut s = opening(Difficulty::Hard);
        s.opponent.bases = 0;
        s.terminal = is_terminal(&s);
        assert_eq!(s.terminal.as_ref().unwrap().outcome, Outcome::Victory);
        assert!(matches!(legal_actions(&s), Err(SimError::Terminal)));
        assert!(matches!(step(&mut s, &[], 10), Err(SimError::Terminal)));
    }

    #[test]
    fn terminal_classification() {
        let mut s = opening(Difficulty::Hard);
        assert!(is_terminal(&s).is_none());
        s.player.bases = 0;
        assert_eq!(is_terminal(&s).unwrap().outcome, Outcome::Defeat);
        let mut s = opening(Difficulty::Hard);
        s.tick = s.config.max_ticks;
        assert_eq!(is_terminal(&s).unwrap().outcome, Outcome::Timeout);
    }

    #[test]
    fn legal_actions_is_the_full_library() {
        let s = opening(Difficulty::Elite);
        assert_eq!(legal_actions(&s).unwrap(), &Action::LIBRARY[..]);
    }

    #[test]
    fn supply_cap_tracks_structures() {
        let mut s = opening(Difficulty::Hard);
        assert_eq!(s.player.supply_cap, 15);
        s.player.minerals = 100;
        step(&mut s, &[Action::BuildSupply], 18).unwrap();
        assert_eq!(s.player.building(BuildingKind::SupplyStructure), 1);
        assert_eq!(s.player.supply_cap, 23);
    }

    #[test]
    fn losing_a_base_keeps_supply_consistent() {
        let cfg = SimConfig::default();
        let mut p = PlayerState::opening(&cfg);
        p.bases = 2;
        p.workers = 40;
        p.supply_used = 40;
        p.recompute_supply_cap(&cfg);
        p.army.insert(UnitKind::Melee, 5);
        p.supply_used += 10;
        destroy_base(&mut p, &cfg);
        assert!(p.supply_used <= p.supply_cap);
        assert_eq!(p.bases, 1);
    }

    #[test]
    fn scout_report_is_stamped() {
        let mut s = opening(Difficulty::Hard);
        step(&mut s, &[], 96).unwrap();
        let out = step(&mut s, &[Action::Scout], 1).unwrap();
        assert_eq!(s.opponent_knowledge.as_ref().unwrap().tick, 96);
        assert!(out.events.iter().any(|e| e.contains("01:36")));
    }
}
