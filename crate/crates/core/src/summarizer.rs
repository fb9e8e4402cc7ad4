//! Chain-of-summary compression of observations.
//!
//! Raw observations are folded into L1 window summaries; each decision point
//! gets an L2 summary whose text carries exactly one game-phase keyword. The
//! key-frame selector later searches for those keywords, so their spelling
//! here is load-bearing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatBackend, ChatMessage, LlmError};
use crate::prompts::{fill, PromptCatalog};
use crate::sim::{clock, observe_text, Action, BuildingKind, GameState, Rejection, TextObservation, UnitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GamePhase {
    EarlyGame,
    EarlyMidGame,
    MidGame,
    LateMidGame,
    LateGame,
}

impl GamePhase {
    pub const ALL: [GamePhase; 5] = [
        GamePhase::EarlyGame,
        GamePhase::EarlyMidGame,
        GamePhase::MidGame,
        GamePhase::LateMidGame,
        GamePhase::LateGame,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GamePhase::EarlyGame => "Early Game",
            GamePhase::EarlyMidGame => "Early Mid Game",
            GamePhase::MidGame => "Mid Game",
            GamePhase::LateMidGame => "Late Mid Game",
            GamePhase::LateGame => "Late Game",
        }
    }
}

impl std::fmt::Display for GamePhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Every phase keyword occurrence in `text`, left to right.
///
/// "Mid Game" is a suffix of two longer labels, so at each position the
/// longest label wins and its bytes are consumed.
pub fn find_phase_keywords(text: &str) -> Vec<GamePhase> {
    let mut by_len = GamePhase::ALL;
    by_len.sort_by_key(|p| std::cmp::Reverse(p.label().len()));
    let mut found = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if let Some(p) = by_len.iter().find(|p| rest.starts_with(p.label())) {
            found.push(*p);
            i += p.label().len();
        } else {
            i += rest.chars().next().map(char::len_utf8).unwrap_or(1);
        }
    }
    found
}

/// The single phase named in `text`, or `None` if zero or several distinct
/// phases appear.
pub fn unique_phase_keyword(text: &str) -> Option<GamePhase> {
    let found = find_phase_keywords(text);
    let first = *found.first()?;
    found.iter().all(|&p| p == first).then_some(first)
}

/// Deterministic phase rule table; the first matching row wins.
pub fn classify_phase(state: &GameState) -> GamePhase {
    let t = state.tick;
    let bases = state.player.bases;
    let tech = state.player.building(BuildingKind::TechStructure) > 0;
    if t < 240 && bases <= 1 {
        GamePhase::EarlyGame
    } else if t < 480 || (bases == 2 && !tech) {
        GamePhase::EarlyMidGame
    } else if t < 720 || tech {
        GamePhase::MidGame
    } else if t < 960 {
        GamePhase::LateMidGame
    } else {
        GamePhase::LateGame
    }
}

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("cannot summarize an empty observation window")]
    EmptyWindow,
    #[error("phase query failed: {0}")]
    Transport(#[from] LlmError),
}

impl SummaryError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, SummaryError::Transport(e) if e.is_retryable())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct L1Summary {
    /// Half-open `[start, end)` window; single-observation windows are `(t, t)`.
    pub tick_range: (u32, u32),
    pub delta_text: String,
}

fn signed(v: i64) -> String {
    if v >= 0 {
        format!("+{v}")
    } else {
        v.to_string()
    }
}

fn unit_list(units: &BTreeMap<UnitKind, i64>) -> String {
    units
        .iter()
        .map(|(k, n)| format!("{} {}", k.label(), n))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn l1_summarize(observations: &[TextObservation]) -> Result<L1Summary, SummaryError> {
    let first = observations.first().ok_or(SummaryError::EmptyWindow)?;
    let last = observations.last().expect("non-empty");
    if observations.len() == 1 {
        let m = &first.metrics;
        return Ok(L1Summary {
            tick_range: (first.tick, first.tick),
            delta_text: format!(
                "Snapshot at {}: minerals {}, gas {}, supply {}/{}, workers {}, bases {}, army power {:.1}",
                clock(first.tick),
                m.minerals,
                m.gas,
                m.supply_used,
                m.supply_cap,
                m.workers,
                m.bases,
                m.army_power
            ),
        });
    }

    let (a, b) = (&first.metrics, &last.metrics);
    let mut parts = Vec::new();
    let diffs = [
        ("minerals", b.minerals as i64 - a.minerals as i64),
        ("gas", b.gas as i64 - a.gas as i64),
        ("workers", i64::from(b.workers) - i64::from(a.workers)),
        ("bases", i64::from(b.bases) - i64::from(a.bases)),
    ];
    for (name, d) in diffs {
        if d != 0 {
            parts.push(format!("{name} {}", signed(d)));
        }
    }
    let mut gained = BTreeMap::new();
    let mut lost = BTreeMap::new();
    for kind in UnitKind::ALL {
        let before = i64::from(a.units.get(&kind).copied().unwrap_or(0));
        let after = i64::from(b.units.get(&kind).copied().unwrap_or(0));
        if after > before {
            gained.insert(kind, after - before);
        } else if after < before {
            lost.insert(kind, before - after);
        }
    }
    if !gained.is_empty() {
        parts.push(format!("units gained: {}", unit_list(&gained)));
    }
    if !lost.is_empty() {
        parts.push(format!("units lost: {}", unit_list(&lost)));
    }
    let mut built = Vec::new();
    for kind in BuildingKind::ALL {
        let before = a.buildings.get(&kind).copied().unwrap_or(0);
        let after = b.buildings.get(&kind).copied().unwrap_or(0);
        if after != before {
            built.push(format!("{} {}", kind.label(), signed(i64::from(after) - i64::from(before))));
        }
    }
    if !built.is_empty() {
        parts.push(format!("buildings {}", built.join(", ")));
    }
    let mut events: Vec<&str> = Vec::new();
    for obs in &observations[1..] {
        for e in &obs.events {
            if !first.events.contains(e) && !events.contains(&e.as_str()) {
                events.push(e);
            }
        }
    }
    if !events.is_empty() {
        parts.push(format!("events: {}", events.join("; ")));
    }
    let delta_text = if parts.is_empty() {
        "no significant change".to_string()
    } else {
        parts.join("; ")
    };
    Ok(L1Summary {
        tick_range: (first.tick, last.tick),
        delta_text,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Metrics {
    pub minerals: u64,
    pub gas: u64,
    pub supply_used: u32,
    pub supply_cap: u32,
    pub worker_count: u32,
    pub army_power: f64,
    pub base_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Summary {
    pub tick: u32,
    pub situation_text: String,
    pub phase: GamePhase,
    pub metrics: L2Metrics,
}

/// How the phase label of an L2 summary is produced.
#[derive(Clone, Copy)]
pub enum PhaseSource<'a> {
    Rule,
    Llm {
        backend: &'a dyn ChatBackend,
        catalog: &'a PromptCatalog,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Outcome {
    pub summary: L2Summary,
    /// Set when the model's phase answer was unusable and the rule table was used.
    pub warning: Option<String>,
}

/// Renders the L2 text for a known phase. The phase keyword appears once, on
/// the first line.
pub fn render_l2(l1s: &[L1Summary], state: &GameState, phase: GamePhase) -> L2Summary {
    let obs = observe_text(state);
    let mut text = format!("Phase: {}\n{}", phase.label(), obs.text);
    if let Some(l1) = l1s.last() {
        text.push_str(&format!(
            "Recent ({}-{}): {}\n",
            clock(l1.tick_range.0),
            clock(l1.tick_range.1),
            l1.delta_text
        ));
    }
    let m = &obs.metrics;
    L2Summary {
        tick: state.tick,
        situation_text: text,
        phase,
        metrics: L2Metrics {
            minerals: m.minerals,
            gas: m.gas,
            supply_used: m.supply_used,
            supply_cap: m.supply_cap,
            worker_count: m.workers,
            army_power: m.army_power,
            base_count: m.bases,
        },
    }
}

/// Asks the model for the current phase; `Ok(None)` means the answer did not
/// name exactly one phase.
pub fn query_phase(
    backend: &dyn ChatBackend,
    catalog: &PromptCatalog,
    state: &GameState,
) -> Result<(Option<GamePhase>, String), LlmError> {
    let obs = observe_text(state);
    let messages = [
        ChatMessage::system(catalog.phase_rules.clone()),
        ChatMessage::user(fill(&catalog.phase_division_request, &[("situation", &obs.text)])),
    ];
    let reply = backend.query(&messages, 0.0)?;
    Ok((unique_phase_keyword(&reply), reply))
}

pub fn l2_summarize(l1s: &[L1Summary], state: &GameState, source: PhaseSource<'_>) -> Result<L2Outcome, SummaryError> {
    if l1s.is_empty() {
        return Err(SummaryError::EmptyWindow);
    }
    let (phase, warning) = resolve_phase(state, source)?;
    Ok(L2Outcome {
        summary: render_l2(l1s, state, phase),
        warning,
    })
}

fn resolve_phase(state: &GameState, source: PhaseSource<'_>) -> Result<(GamePhase, Option<String>), SummaryError> {
    match source {
        PhaseSource::Rule => Ok((classify_phase(state), None)),
        PhaseSource::Llm { backend, catalog } => {
            let (phase, reply) = query_phase(backend, catalog, state)?;
            match phase {
                Some(p) => Ok((p, None)),
                None => {
                    let fallback = classify_phase(state);
                    let warning = format!(
                        "phase answer at {} did not name exactly one phase ({:?}); using rule table: {}",
                        clock(state.tick),
                        reply.chars().take(80).collect::<String>(),
                        fallback
                    );
                    log::warn!("{warning}");
                    Ok((fallback, Some(warning)))
                }
            }
        }
    }
}

/// Keeps the L1 chain and phase history of one episode. Phases never move
/// backwards within an episode, even if a lost base would reclassify the
/// state into an earlier row of the rule table.
#[derive(Debug, Default)]
pub struct EpisodeSummarizer {
    last_observation: Option<TextObservation>,
    l1s: Vec<L1Summary>,
    phase: Option<GamePhase>,
    pub warnings: Vec<String>,
}

impl EpisodeSummarizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn l1s(&self) -> &[L1Summary] {
        &self.l1s
    }

    /// Folds the current state into the chain and returns its L2 summary.
    pub fn summarize(&mut self, state: &GameState, source: PhaseSource<'_>) -> Result<L2Summary, SummaryError> {
        let obs = observe_text(state);
        let window: Vec<TextObservation> = match self.last_observation.take() {
            Some(prev) => vec![prev, obs.clone()],
            None => vec![obs.clone()],
        };
        self.l1s.push(l1_summarize(&window)?);
        self.last_observation = Some(obs);

        let (mut phase, warning) = match resolve_phase(state, source) {
            Ok(r) => r,
            Err(e) => {
                let fallback = classify_phase(state);
                let warning = format!("phase query at {} failed ({e}); using rule table: {fallback}", clock(state.tick));
                log::warn!("{warning}");
                (fallback, Some(warning))
            }
        };
        self.warnings.extend(warning);
        if let Some(prev) = self.phase {
            phase = phase.max(prev);
        }
        self.phase = Some(phase);
        Ok(render_l2(&self.l1s, state, phase))
    }
}

/// One decision point of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub l2: L2Summary,
    pub action_taken: Vec<Action>,
    pub rejected: Vec<Rejection>,
    pub raw_response: String,
    pub events: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident: Option<String>,
}

/// Ordered frames of one episode; stored as one JSON record per line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub frames: Vec<FrameRecord>,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            out.push_str(&serde_json::to_string(f).expect("frame serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<EpisodeLog, serde_json::Error> {
        let frames = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<FrameRecord>, _>>()?;
        Ok(EpisodeLog { frames })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ScriptTable, ScriptedBackend};
    use crate::sim::{new_game, step, Difficulty, SimConfig};
    use std::sync::Arc;

    fn opening() -> GameState {
        new_game(Arc::new(SimConfig::default()), 7, Difficulty::Hard).unwrap()
    }

    #[test]
    fn keyword_search_prefers_longest_label() {
        assert_eq!(find_phase_keywords("Phase: Early Mid Game"), vec![GamePhase::EarlyMidGame]);
        assert_eq!(find_phase_keywords("Late Mid Game then Late Game"), vec![GamePhase::LateMidGame, GamePhase::LateGame]);
        assert_eq!(find_phase_keywords("Mid Game"), vec![GamePhase::MidGame]);
        assert!(find_phase_keywords("no stage here").is_empty());
        assert_eq!(unique_phase_keyword("Early Game and Mid Game"), None);
    }

    #[test]
    fn phase_rule_table() {
        let mut s = opening();
        assert_eq!(classify_phase(&s), GamePhase::EarlyGame);
        s.tick = 300;
        s.player.bases = 2;
        assert_eq!(classify_phase(&s), GamePhase::EarlyMidGame);
        s.tick = 1000;
        s.player.bases = 3;
        assert_eq!(classify_phase(&s), GamePhase::LateGame);
        s.tick = 1000;
        s.player.bases = 2;
        assert_eq!(classify_phase(&s), GamePhase::EarlyMidGame);
        s.player.production_structures.insert(BuildingKind::TechStructure, 1);
        assert_eq!(classify_phase(&s), GamePhase::MidGame);
    }

    #[test]
    fn l1_base_case_and_no_change() {
        let s = opening();
        let obs = observe_text(&s);
        assert!(matches!(l1_summarize(&[]), Err(SummaryError::EmptyWindow)));
        let single = l1_summarize(std::slice::from_ref(&obs)).unwrap();
        assert!(single.delta_text.contains("workers 12"));
        assert_eq!(single.tick_range, (0, 0));
        let same = l1_summarize(&[obs.clone(), obs]).unwrap();
        assert_eq!(same.delta_text, "no significant change");
    }

    #[test]
    fn l1_lists_units_lost() {
        let mut s = opening();
        s.player.army.insert(UnitKind::Melee, 5);
        let before = observe_text(&s);
        s.player.army.insert(UnitKind::Melee, 2);
        s.tick = 10;
        let after = observe_text(&s);
        let l1 = l1_summarize(&[before, after]).unwrap();
        assert!(l1.delta_text.contains("units lost: melee 3"), "{}", l1.delta_text);
    }

    #[test]
    fn rule_mode_opening() {
        let s = opening();
        let l1 = l1_summarize(&[observe_text(&s)]).unwrap();
        let out = l2_summarize(&[l1], &s, PhaseSource::Rule).unwrap();
        assert_eq!(out.summary.phase, GamePhase::EarlyGame);
        assert_eq!(find_phase_keywords(&out.summary.situation_text), vec![GamePhase::EarlyGame]);
        assert_eq!(out.summary.metrics.worker_count, 12);
        assert!(out.warning.is_none());
        assert!(matches!(l2_summarize(&[], &s, PhaseSource::Rule), Err(SummaryError::EmptyWindow)));
    }

    #[test]
    fn llm_mode_parses_keyword() {
        let s = opening();
        let l1 = l1_summarize(&[observe_text(&s)]).unwrap();
        let backend = ScriptedBackend::new(ScriptTable::new("We are now in the Early Mid Game; expand."));
        let catalog = PromptCatalog::builtin();
        let out = l2_summarize(&[l1], &s, PhaseSource::Llm { backend: &backend, catalog: &catalog }).unwrap();
        assert_eq!(out.summary.phase, GamePhase::EarlyMidGame);
        assert!(out.warning.is_none());
        assert_eq!(backend.call_log()[0].temperature, 0.0);
    }

    #[test]
    fn llm_mode_falls_back_without_keyword() {
        let s = opening();
        let l1 = l1_summarize(&[observe_text(&s)]).unwrap();
        let backend = ScriptedBackend::new(ScriptTable::new("things are fine"));
        let catalog = PromptCatalog::builtin();
        let out = l2_summarize(&[l1], &s, PhaseSource::Llm { backend: &backend, catalog: &catalog }).unwrap();
        assert_eq!(out.summary.phase, GamePhase::EarlyGame);
        assert!(out.warning.unwrap().contains("rule table"));
    }

    #[test]
    fn l2_text_is_pure() {
        let mut s = opening();
        step(&mut s, &[], 10).unwrap();
        let run = || {
            let mut sum = EpisodeSummarizer::new();
            sum.summarize(&s, PhaseSource::Rule).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn episode_phase_never_regresses() {
        let mut s = opening();
        let mut sum = EpisodeSummarizer::new();
        s.tick = 500;
        s.player.production_structures.insert(BuildingKind::TechStructure, 1);
        assert_eq!(sum.summarize(&s, PhaseSource::Rule).unwrap().phase, GamePhase::MidGame);
        s.tick = 510;
        s.player.production_structures.insert(BuildingKind::TechStructure, 0);
        s.player.bases = 2;
        // raw table says Early Mid Game here
        assert_eq!(classify_phase(&s), GamePhase::EarlyMidGame);
        assert_eq!(sum.summarize(&s, PhaseSource::Rule).unwrap().phase, GamePhase::MidGame);
    }
}
