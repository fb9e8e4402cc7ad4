//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roe::harness::{format_rate, Ablation, Harness, RunConfig, TestOutcome};
use roe::keyframe::{select_key_frames, KeyFrameParams};
use roe::llm::stub::StubServer;
use roe::llm::{BackendConfig, Rule, ScriptTable, ScriptedBackend};
use roe::policies;
use roe::prompts::PromptCatalog;
use roe::reflection::{parse_reflection, render_plan, ExperienceOrigin, FormatError, HEADER_RESULT};
use roe::sim::combat::surviving_count;
use roe::sim::{new_game, resolve_combat, step, unit_spec, Difficulty, Outcome, Side, SimConfig, UnitKind};
use roe::summarizer::GamePhase;

type Check = Result<String, String>;
type ErrorCase = (&'static str, String, fn(&FormatError) -> bool);
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn keyframe_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let len = rng.gen_range(1..=200);
        let labels = rng.gen_range(1..=5);
        let stickiness = rng.gen_range(0.0..0.98);
        let mut phases = vec![GamePhase::ALL[rng.gen_range(0..labels)]];
        while phases.len() < len {
            let next = if rng.gen_bool(stickiness) { *phases.last().unwrap() } else { GamePhase::ALL[rng.gen_range(0..labels)] };
            phases.push(next);
        }
        let params = KeyFrameParams {
            window: rng.gen_range(0..=3),
            n_average: rng.gen_range(0..=12),
        };
        let episode = common::episode_of(&phases);
        let got = select_key_frames(&episode, params).map_err(|e| format!("case {case}: {e}"))?;
        let (transition, average, merged) = common::oracle_key_frames(&phases, params.window, params.n_average);
        ensure(got.transition_frames == transition, || format!("case {case}: transitions {:?} vs {transition:?}", got.transition_frames))?;
        ensure(got.average_frames == average, || format!("case {case}: average {:?} vs {average:?}", got.average_frames))?;
        ensure(got.merged == merged, || format!("case {case}: merged {:?} vs {merged:?}", got.merged))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("1000 sequences match, {took:.2?}"))
}

fn control_flow() -> Check {
    let staged = BackendConfig::scripted(policies::staged_table());
    let backend = Arc::new(ScriptedBackend::new(policies::staged_table()));
    let h = Harness::with_backend(backend.clone(), PromptCatalog::builtin());
    let t = h.run_test(&RunConfig::new(Difficulty::Hard, staged), 0).map_err(|e| e.to_string())?;
    let origins = t.origins();
    ensure(origins.first() == Some(&ExperienceOrigin::Expert), || format!("round 0 used {:?}", origins.first()))?;
    for (i, o) in origins.iter().enumerate().skip(1) {
        ensure(*o == ExperienceOrigin::SelfReflection(i as u32), || format!("round {i} used {o:?}"))?;
        ensure(t.experiences[i] != t.experiences[i - 1], || format!("round {i} kept the old plan"))?;
    }
    ensure(t.experiences[1].raw_text == policies::tier1_reflection(), || "round 1 plan is not the reflection".into())?;
    let decisions_with = |mark: &str| {
        backend
            .call_log()
            .iter()
            .filter(|c| c.temperature == 0.0 && c.messages[0].content.contains(mark))
            .count()
    };
    ensure(decisions_with(policies::TIER1_MARK) > 0, || "reflected plan never reached a system prompt".into())?;
    let last = *t.outcomes().last().unwrap();
    ensure(last == Outcome::Victory && t.rounds_used < 5, || "staged test did not stop on Victory".into())?;

    let never = ScriptTable::new("NO_OP").rule(Rule::contains(HEADER_RESULT, policies::tier1_reflection()));
    let h = Harness::from_backend_config(&BackendConfig::scripted(never.clone()));
    let capped = h.run_test(&RunConfig::new(Difficulty::Hard, BackendConfig::scripted(never)), 0).map_err(|e| e.to_string())?;
    ensure(capped.rounds_used == 5 && capped.final_outcome == TestOutcome::DefeatAfterCap, || {
        format!("cap: {} rounds, {}", capped.rounds_used, capped.final_outcome)
    })?;
    Ok(format!("staged {:?}; never-win capped at {} rounds", t.outcomes(), capped.rounds_used))
}

fn simulator_invariants() -> Check {
    let start = Instant::now();
    let cfg = Arc::new(SimConfig::default());
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let per = 10_000 / workers + 1;
    let results: Vec<Result<(usize, u64), String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let cfg = Arc::clone(&cfg);
                scope.spawn(move || {
                    let mut done = 0;
                    let mut ticks = 0u64;
                    for i in (w * per)..((w + 1) * per).min(10_000) {
                        ticks += run_random_episode(&cfg, i as u64)?;
                        done += 1;
                    }
                    Ok((done, ticks))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut episodes = 0;
    let mut ticks = 0;
    for r in results {
        let (n, t) = r?;
        episodes += n;
        ticks += t;
    }
    let took = start.elapsed();
    ensure(episodes == 10_000, || format!("ran {episodes} episodes"))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{episodes} episodes, {ticks} ticks, 0 violations, {took:.2?}"))
}

/// Plays a random episode twice in lockstep, checking invariants and
/// equality after every step. Returns the ticks played.
fn run_random_episode(cfg: &Arc<SimConfig>, i: u64) -> Result<u64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0000 + i);
    let d = Difficulty::ALL[(i % 4) as usize];
    let mut a = new_game(Arc::clone(cfg), i, d).map_err(|e| e.to_string())?;
    let mut b = new_game(Arc::clone(cfg), i, d).map_err(|e| e.to_string())?;
    let interval = [1, 5, 10, 10, 10, 20][rng.gen_range(0..6)];
    while a.terminal.is_none() {
        let actions = common::random_actions(&mut rng, 6);
        let oa = step(&mut a, &actions, interval).map_err(|e| e.to_string())?;
        let ob = step(&mut b, &actions, interval).map_err(|e| e.to_string())?;
        if oa != ob || a != b {
            return Err(format!("episode {i}: re-run diverged at tick {}", a.tick));
        }
        let bad = common::violations(&a);
        if !bad.is_empty() {
            return Err(format!("episode {i} tick {}: {bad:?}", a.tick));
        }
    }
    Ok(u64::from(a.tick))
}

fn combat_oracle() -> Check {
    let cfg = SimConfig::default();
    let mut pairs = 0;
    let mut worst = 0i64;
    for ka in UnitKind::ALL {
        for kd in UnitKind::ALL {
            let (pa, pd) = (unit_spec(&cfg, ka).power, unit_spec(&cfg, kd).power);
            for na in 0..=20u32 {
                for nd in 0..=20u32 {
                    let out = resolve_combat(f64::from(na) * pa, f64::from(nd) * pd);
                    let (fast_a, fast_d) = match out.winner {
                        Side::Attacker if na > 0 => (surviving_count(na, out.survivor_power / (f64::from(na) * pa)), 0),
                        Side::Defender if nd > 0 => (0, surviving_count(nd, out.survivor_power / (f64::from(nd) * pd))),
                        _ => (0, 0),
                    };
                    let (slow_a, slow_d) = common::stepped_duel(na, pa, nd, pd);
                    let diff = (i64::from(fast_a) - i64::from(slow_a)).abs().max((i64::from(fast_d) - i64::from(slow_d)).abs());
                    worst = worst.max(diff);
                    ensure(diff <= 1, || {
                        format!("{na} {ka:?} vs {nd} {kd:?}: closed form ({fast_a},{fast_d}) vs stepped ({slow_a},{slow_d})")
                    })?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} army pairs, max survivor difference {worst}"))
}

fn defeat_to_victory() -> Check {
    let be = BackendConfig::scripted(policies::staged_table());
    let h = Harness::from_backend_config(&be);
    let cfg = RunConfig::new(Difficulty::Hard, be);
    let first = h.run_test(&cfg, 0).map_err(|e| e.to_string())?;
    let again = h.run_test(&cfg, 0).map_err(|e| e.to_string())?;
    let outcomes = first.outcomes();
    let ok_shape = outcomes.last() == Some(&Outcome::Victory) && outcomes.len() <= 3;
    ensure(ok_shape, || format!("rounds {outcomes:?}"))?;
    ensure(first.rounds == again.rounds, || "second run differs".into())?;
    Ok(format!("Hard seed 0: {outcomes:?}, identical on re-run"))
}

fn ablation_separation() -> Check {
    let be = BackendConfig::scripted(policies::staged_table());
    let h = Harness::from_backend_config(&be);
    let cfg = RunConfig::new(Difficulty::Hard, be);
    let mut won = BTreeMap::new();
    let mut over = BTreeMap::new();
    for mode in [Ablation::None, Ablation::NoReflection, Ablation::NoKeyframeFullLog] {
        let r = h.run_ablation(mode, &[Difficulty::Hard], 10, &cfg).map_err(|e| e.to_string())?;
        won.insert(mode.name(), r.total_won());
        let n = r
            .tests
            .iter()
            .flat_map(|t| &t.rounds)
            .filter_map(|r| r.reflection_input.as_ref())
            .filter(|i| i.over_budget)
            .count();
        over.insert(mode.name(), n);
    }
    ensure(won["none"] > won["no_reflection"], || format!("wins {won:?}"))?;
    ensure(over["no_keyframe_full_log"] >= 1, || format!("over budget {over:?}"))?;
    ensure(over["none"] == 0, || format!("over budget {over:?}"))?;
    Ok(format!(
        "wins full {} vs no_reflection {}; over budget full_log {} vs full 0",
        won["none"], won["no_reflection"], over["no_keyframe_full_log"]
    ))
}

fn monotone_difficulty() -> Check {
    let be = BackendConfig::scripted(policies::expert_table());
    let h = Harness::from_backend_config(&be);
    let mut cfg = RunConfig::new(Difficulty::Hard, be);
    cfg.max_round = 1;
    let r = h.run_experiment(&Difficulty::ALL, 20, &cfg).map_err(|e| e.to_string())?;
    let rates: Vec<_> = r.rows.iter().map(|row| row.rate()).collect();
    ensure(rates.windows(2).all(|w| w[0] >= w[1]), || {
        format!("rates {:?}", r.rows.iter().map(|x| x.rate_text()).collect::<Vec<_>>())
    })?;
    Ok(r.rows.iter().map(|x| format!("{} {}", x.difficulty.name(), x.rate_text())).collect::<Vec<_>>().join(", "))
}

fn format_contract() -> Check {
    let good = policies::tier1_reflection();
    parse_reflection(&good, ExperienceOrigin::SelfReflection(1)).map_err(|e| format!("valid doc rejected: {e}"))?;
    let drop_line = |needle: &str| good.lines().filter(|l| !l.starts_with(needle)).collect::<Vec<_>>().join("\n");
    let cases: Vec<ErrorCase> = vec![
        ("7 points", drop_line("8."), |e| matches!(e, FormatError::PointCount { found: 7 })),
        ("9 points", good.replace("Key Time Points:", "9. One more.\nKey Time Points:"), |e| {
            matches!(e, FormatError::PointCount { found: 9 })
        }),
        ("misnumbered", good.replace("\n3. ", "\n4. "), |e| matches!(e, FormatError::PointNumbering)),
        ("4 time points", drop_line("08:00"), |e| matches!(e, FormatError::TooFewTimepoints { found: 4 })),
        ("past 20:00", good.replace("08:00", "20:01"), |e| matches!(e, FormatError::TimestampOutOfRange(_))),
        ("bad seconds", good.replace("08:00", "08:75"), |e| matches!(e, FormatError::TimestampOutOfRange(_))),
        ("garbled", good.replace("08:00", "8h00"), |e| matches!(e, FormatError::UnparseableTimestamp(_))),
    ];
    for (name, text, expected) in &cases {
        match parse_reflection(text, ExperienceOrigin::SelfReflection(1)) {
            Ok(_) => return Err(format!("{name}: accepted")),
            Err(e) if expected(&e) => {}
            Err(e) => return Err(format!("{name}: wrong error {e:?}")),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..200 {
        let (points, times) = common::random_plan(&mut rng);
        let text = render_plan(&points, &times);
        let e = parse_reflection(&text, ExperienceOrigin::SelfReflection(1)).map_err(|e| format!("doc {i}: {e}"))?;
        ensure(e.strategic_points == points && e.key_timepoints == times, || format!("doc {i} did not round-trip"))?;
        ensure(e.render() == text, || format!("doc {i} renders differently"))?;
    }
    Ok(format!("{} violation classes rejected by name, 200 documents round-trip", cases.len()))
}

fn wire_temperatures() -> Check {
    let server = StubServer::scripted(policies::staged_table()).map_err(|e| e.to_string())?;
    let mut be = BackendConfig::http(server.url(), "stub");
    be.api_key_env_var = "ROE_ACCEPTANCE_UNSET_KEY".into();
    let h = Harness::from_backend_config(&be);
    let t = h.run_test(&RunConfig::new(Difficulty::Hard, be), 0).map_err(|e| e.to_string())?;
    let mut decision = BTreeMap::new();
    let mut reflection = BTreeMap::new();
    for req in server.captured() {
        let temp = req.temperature().ok_or("request without temperature")?;
        let is_reflection = req.messages().iter().any(|m| m.content.contains(HEADER_RESULT));
        let bucket = if is_reflection { &mut reflection } else { &mut decision };
        *bucket.entry(temp.to_string()).or_insert(0usize) += 1;
    }
    ensure(decision.keys().eq(["0"].iter()), || format!("decision temperatures {decision:?}"))?;
    ensure(reflection.keys().eq(["1"].iter()), || format!("reflection temperatures {reflection:?}"))?;
    ensure(t.outcomes().last() == Some(&Outcome::Victory), || format!("over http: {:?}", t.outcomes()))?;
    Ok(format!("{} decision calls at 0, {} reflection calls at 1", decision["0"], reflection["1"]))
}

fn report_arithmetic() -> Check {
    for (k, n) in [(2, 10), (10, 10), (0, 10), (1, 3), (2, 3), (1, 8), (7, 20), (1, 7), (5, 6), (3, 16)] {
        let got = format_rate(k, n);
        let want = format!("{k}/{n} ({}%)", common::oracle_percent(k, n));
        ensure(got == want, || format!("{got} vs {want}"))?;
    }
    ensure(format_rate(2, 10) == "2/10 (20%)", || "2/10 formatting".into())?;

    let be = BackendConfig::scripted(policies::expert_table());
    let h = Harness::from_backend_config(&be);
    let mut cfg = RunConfig::new(Difficulty::Hard, be);
    cfg.max_round = 1;
    let r = h.run_experiment(&[Difficulty::Hard, Difficulty::Harder], 10, &cfg).map_err(|e| e.to_string())?;
    let table = r.table_text();
    let mut lines = Vec::new();
    for d in [Difficulty::Hard, Difficulty::Harder] {
        let k = r.tests.iter().filter(|t| t.difficulty == d && t.final_outcome == TestOutcome::Victory).count() as u64;
        let want = format!("{k}/10 ({}%)", common::oracle_percent(k, 10));
        ensure(table.contains(&want), || format!("table lacks {want}:\n{table}"))?;
        lines.push(format!("{} {want}", d.name()));
    }
    Ok(lines.join(", "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("keyframe oracle equivalence", keyframe_oracle),
        ("reflection loop control flow", control_flow),
        ("simulator invariants", simulator_invariants),
        ("combat oracle", combat_oracle),
        ("defeat to victory arc", defeat_to_victory),
        ("ablation separation", ablation_separation),
        ("monotone difficulty", monotone_difficulty),
        ("reflection format contract", format_contract),
        ("wire protocol temperatures", wire_temperatures),
        ("report arithmetic", report_arithmetic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
