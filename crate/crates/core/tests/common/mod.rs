#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use roe::reflection::GameClock;
use roe::sim::{Action, BuildingKind, GameState, PlayerState, SimConfig, UnitKind};
use roe::summarizer::{FrameRecord, GamePhase, L2Metrics, L2Summary};

/// Every state invariant that must hold between steps, as readable messages.
pub fn violations(state: &GameState) -> Vec<String> {
    let cfg = state.config.as_ref();
    let mut out = Vec::new();
    for (name, p) in [("player", &state.player), ("opponent", &state.opponent)] {
        check_player(name, p, cfg, &mut out);
    }
    out
}

fn check_player(name: &str, p: &PlayerState, cfg: &SimConfig, out: &mut Vec<String>) {
    let e = &cfg.economy;
    if p.supply_used > p.supply_cap {
        out.push(format!("{name}: supply {}/{}", p.supply_used, p.supply_cap));
    }
    let cap = (e.base_supply * p.bases + e.pylon_supply * p.building(BuildingKind::SupplyStructure)).min(e.max_supply);
    if p.supply_cap != cap {
        out.push(format!("{name}: supply cap {} but structures give {cap}", p.supply_cap));
    }
    let l = &p.ledger;
    if u128::from(p.minerals) + u128::from(l.minerals_spent) != u128::from(l.minerals_earned) + u128::from(e.starting_minerals) {
        out.push(format!(
            "{name}: minerals held {} + spent {} != earned {} + start {}",
            p.minerals, l.minerals_spent, l.minerals_earned, e.starting_minerals
        ));
    }
    if u128::from(p.gas) + u128::from(l.gas_spent) != u128::from(l.gas_earned) + u128::from(e.starting_gas) {
        out.push(format!("{name}: gas held {} + spent {} != earned {}", p.gas, l.gas_spent, l.gas_earned));
    }
    if let Some(item) = p.pending.iter().find(|i| i.ticks_remaining == 0) {
        out.push(format!("{name}: pending {:?} with zero ticks left", item.item));
    }
    let army_supply: u32 = UnitKind::ALL
        .iter()
        .map(|&k| p.total_units(k) * roe::sim::unit_spec(cfg, k).supply)
        .sum();
    let queued_supply: u32 = p
        .pending
        .iter()
        .map(|i| match i.item {
            roe::sim::QueueItem::Worker => 1,
            roe::sim::QueueItem::Unit(k) => roe::sim::unit_spec(cfg, k).supply,
            _ => 0,
        })
        .sum();
    if p.supply_used != p.workers + army_supply + queued_supply {
        out.push(format!(
            "{name}: supply used {} != workers {} + army {army_supply} + queued {queued_supply}",
            p.supply_used, p.workers
        ));
    }
}

pub fn random_actions(rng: &mut ChaCha8Rng, max: usize) -> Vec<Action> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| Action::LIBRARY[rng.gen_range(0..Action::LIBRARY.len())]).collect()
}

/// Key-frame selection written directly from its definition.
pub fn oracle_key_frames(phases: &[GamePhase], window: usize, n_average: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let len = phases.len() as i64;
    let mut transition = BTreeSet::new();
    for i in 1..phases.len() {
        if phases[i] != phases[i - 1] {
            let w = window as i64;
            for j in (i as i64 - w)..=(i as i64 + w) {
                if j >= 0 && j < len {
                    transition.insert(j as usize);
                }
            }
        }
    }
    let mut average = BTreeSet::new();
    if n_average == 1 {
        average.insert(0);
    } else if n_average > 1 {
        for k in 0..n_average {
            let x = k as f64 * (len - 1) as f64 / (n_average - 1) as f64;
            average.insert(x.round() as usize);
        }
    }
    let merged: BTreeSet<usize> = transition.union(&average).copied().collect();
    (
        transition.into_iter().collect(),
        average.into_iter().collect(),
        merged.into_iter().collect(),
    )
}

pub fn episode_of(phases: &[GamePhase]) -> Vec<FrameRecord> {
    phases
        .iter()
        .enumerate()
        .map(|(i, &p)| FrameRecord {
            index: i,
            l2: L2Summary {
                tick: 10 * i as u32,
                situation_text: format!("Phase: {}\nTime {}\n", p.label(), roe::sim::clock(10 * i as u32)),
                phase: p,
                metrics: L2Metrics {
                    minerals: 0,
                    gas: 0,
                    supply_used: 0,
                    supply_cap: 0,
                    worker_count: 0,
                    army_power: 0.0,
                    base_count: 1,
                },
            },
            action_taken: vec![Action::NoOp],
            rejected: Vec::new(),
            raw_response: "NO_OP".into(),
            events: Vec::new(),
            warnings: Vec::new(),
            incident: None,
        })
        .collect()
}

/// Survivors of a fight between homogeneous armies by small-step mutual
/// attrition: each side loses power at a rate equal to the other's power.
/// Returns (attacker survivors, defender survivors).
pub fn stepped_duel(a_count: u32, a_power: f64, d_count: u32, d_power: f64) -> (u32, u32) {
    let (mut a, mut d) = (f64::from(a_count) * a_power, f64::from(d_count) * d_power);
    let dt = 1e-4;
    let mut t = 0.0;
    while a > 1e-9 && d > 1e-9 && t < 50.0 {
        let (na, nd) = (a - d * dt, d - a * dt);
        a = na.max(0.0);
        d = nd.max(0.0);
        t += dt;
    }
    let alive = |left: f64, unit: f64, count: u32| ((left / unit + 1e-6).floor() as u32).min(count);
    (alive(a, a_power, a_count), alive(d, d_power, d_count))
}

/// `100 * won / total` as a decimal string: exact when some power of ten
/// clears the denominator, otherwise rounded half up to two places.
pub fn oracle_percent(won: u64, total: u64) -> String {
    let num = u128::from(won) * 100;
    let den = u128::from(total);
    for digits in 0..=12u32 {
        let scale = 10u128.pow(digits);
        if (num * scale) % den == 0 {
            let v = num * scale / den;
            if digits == 0 {
                return v.to_string();
            }
            let s = format!("{:0>width$}", v, width = digits as usize + 1);
            let (int, frac) = s.split_at(s.len() - digits as usize);
            return format!("{int}.{frac}");
        }
    }
    let hundredths = (num * 1000 / den + 5) / 10;
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

const WORDS: &[&str] = &[
    "scout", "expand", "barracks", "wave", "supply", "workers", "defend", "push", "upgrade", "ranged", "siege",
    "outpost", "gas", "timing", "guard", "tech",
];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..9);
    let words: Vec<&str> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
    let text = words.join(" ");
    format!("{}{}.", text[..1].to_uppercase(), &text[1..])
}

/// A random valid plan: 8 points and 5 to 9 time points.
pub fn random_plan(rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<(GameClock, String)>) {
    let points = (0..8).map(|_| sentence(rng)).collect();
    let n = rng.gen_range(5..10);
    let times = (0..n)
        .map(|_| (GameClock(rng.gen_range(0..=1200)), sentence(rng)))
        .collect();
    (points, times)
}
