//! Post-game reflection: prompt assembly, the temperature-1 query, parsing of
//! the standardized plan, and swapping that plan into the system prompt.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::SystemPrompt;
use crate::llm::{query_with_retry, ChatBackend, ChatMessage, LlmError, RetryPolicy};
use crate::prompts::{fill, PromptCatalog};
use crate::sim::{clock, MatchResult};

pub const REFLECTION_TEMPERATURE: f64 = 1.0;
pub const STRATEGIC_POINTS: usize = 8;
pub const MIN_TIMEPOINTS: usize = 5;
/// Latest timestamp a plan may mention, in seconds.
pub const MAX_CLOCK_SECONDS: u32 = 20 * 60;

pub const HEADER_ASPECTS: &str = "## Key Aspects";
pub const HEADER_TASK: &str = "## Task";
pub const HEADER_FORMAT: &str = "## Output Format";
pub const HEADER_FRAMES: &str = "## Key Frames";
pub const HEADER_PREVIOUS: &str = "## Previous Experience";
pub const HEADER_RESULT: &str = "## Match Result";

/// Game time in whole seconds, written `mm:ss`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GameClock(pub u32);

impl GameClock {
    pub fn parse(s: &str) -> Result<GameClock, FormatError> {
        let bad = || FormatError::UnparseableTimestamp(s.to_string());
        let (m, sec) = s.split_once(':').ok_or_else(bad)?;
        let digits = |p: &str, max_len: usize| !p.is_empty() && p.len() <= max_len && p.bytes().all(|b| b.is_ascii_digit());
        if !digits(m, 2) || !digits(sec, 2) || sec.len() != 2 {
            return Err(bad());
        }
        let (m, sec): (u32, u32) = (m.parse().map_err(|_| bad())?, sec.parse().map_err(|_| bad())?);
        let total = m * 60 + sec;
        if sec >= 60 || total > MAX_CLOCK_SECONDS {
            return Err(FormatError::TimestampOutOfRange(s.to_string()));
        }
        Ok(GameClock(total))
    }
}

impl fmt::Display for GameClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&clock(self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperienceOrigin {
    Expert,
    SelfReflection(u32),
}

impl fmt::Display for ExperienceOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperienceOrigin::Expert => f.write_str("Expert"),
            ExperienceOrigin::SelfReflection(r) => write!(f, "SelfReflection({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experience {
    pub origin: ExperienceOrigin,
    pub strategic_points: Vec<String>,
    pub key_timepoints: Vec<(GameClock, String)>,
    pub raw_text: String,
}

impl Experience {
    /// Builds an experience whose raw text is the canonical rendering.
    pub fn new(origin: ExperienceOrigin, strategic_points: Vec<String>, key_timepoints: Vec<(GameClock, String)>) -> Experience {
        let raw_text = render_plan(&strategic_points, &key_timepoints);
        Experience {
            origin,
            strategic_points,
            key_timepoints,
            raw_text,
        }
    }

    pub fn render(&self) -> String {
        render_plan(&self.strategic_points, &self.key_timepoints)
    }
}

pub fn render_plan(points: &[String], timepoints: &[(GameClock, String)]) -> String {
    let mut out = String::from("Strategic Points:\n");
    for (i, p) in points.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", i + 1, p));
    }
    out.push_str("Key Time Points:\n");
    for (t, text) in timepoints {
        out.push_str(&format!("{t} — {text}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("expected exactly 8 strategic points, found {found}")]
    PointCount { found: usize },
    #[error("strategic points must be numbered 1 to 8 in order")]
    PointNumbering,
    #[error("expected at least 5 key time points, found {found}")]
    TooFewTimepoints { found: usize },
    #[error("timestamp out of range: {0} (allowed 00:00 to 20:00)")]
    TimestampOutOfRange(String),
    #[error("unparseable timestamp: {0}")]
    UnparseableTimestamp(String),
}

#[derive(Debug, Error)]
pub enum ReflectionError {
    #[error("reflection rejected: {error}")]
    Format { error: FormatError, last_response: String },
    #[error(transparent)]
    Transport(#[from] LlmError),
}

impl ReflectionError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ReflectionError::Transport(e) if e.is_retryable())
    }
}

fn point_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:\*\*)?(\d{1,2})[.)](?:\*\*)?\s+(.*?)\s*$").expect("valid regex"))
}

fn timepoint_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*(?:[-*•]\s*)?(?:\*\*)?(\d\S*?)(?:\*\*)?\s+(?:—|–|--?)\s+(.*?)\s*$").expect("valid regex")
    })
}

fn is_header(line: &str, name: &str) -> bool {
    let l = line.trim().trim_matches(|c: char| c == '*' || c == '#' || c.is_whitespace());
    l.to_ascii_lowercase().starts_with(name)
}

/// Parses a plan with numbered points `1.`..`8.` and timestamped `mm:ss` lines.
///
/// The section headers are optional. With a "Strategic Points" header, any
/// text before it (such as the model's analysis) is ignored.
pub fn parse_reflection(text: &str, origin: ExperienceOrigin) -> Result<Experience, FormatError> {
    let lines: Vec<&str> = text.lines().collect();
    let tp_header = lines.iter().position(|l| is_header(l, "key time points"));
    let sp_header = lines[..tp_header.unwrap_or(lines.len())]
        .iter()
        .rposition(|l| is_header(l, "strategic points"));
    let sp_start = sp_header.map_or(0, |i| i + 1);
    let sp_end = tp_header.unwrap_or(lines.len());

    let mut numbered: Vec<(u32, String)> = Vec::new();
    for line in &lines[sp_start..sp_end] {
        if let Some(c) = point_re().captures(line) {
            numbered.push((c[1].parse().unwrap_or(0), c[2].to_string()));
        } else if tp_header.is_none() && timepoint_re().is_match(line) {
            continue;
        } else if let Some(last) = numbered.last_mut() {
            let extra = line.trim();
            if !extra.is_empty() {
                if !last.1.is_empty() {
                    last.1.push(' ');
                }
                last.1.push_str(extra);
            }
        }
    }
    if numbered.len() != STRATEGIC_POINTS {
        return Err(FormatError::PointCount { found: numbered.len() });
    }
    if numbered.iter().enumerate().any(|(i, (n, _))| *n as usize != i + 1) {
        return Err(FormatError::PointNumbering);
    }

    let tp_lines = match tp_header {
        Some(h) => &lines[h + 1..],
        None => &lines[..],
    };
    let mut key_timepoints = Vec::new();
    for line in tp_lines {
        let Some(c) = timepoint_re().captures(line) else { continue };
        if tp_header.is_none() && point_re().is_match(line) {
            continue;
        }
        key_timepoints.push((GameClock::parse(&c[1])?, c[2].to_string()));
    }
    if key_timepoints.len() < MIN_TIMEPOINTS {
        return Err(FormatError::TooFewTimepoints { found: key_timepoints.len() });
    }

    Ok(Experience {
        origin,
        strategic_points: numbered.into_iter().map(|(_, p)| p).collect(),
        key_timepoints,
        raw_text: text.to_string(),
    })
}

/// The shipped expert document, parsed like any reflection.
pub fn expert_experience(catalog: &PromptCatalog) -> Result<Experience, FormatError> {
    parse_reflection(&catalog.expert_experience, ExperienceOrigin::Expert)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionPrompt {
    pub role_introduction: String,
    pub key_aspects: String,
    pub task_instructions: String,
    pub format_requirements: String,
    pub key_frames_text: String,
    pub previous_experience: String,
    pub match_result: String,
}

impl ReflectionPrompt {
    pub fn user_text(&self) -> String {
        [
            (HEADER_ASPECTS, &self.key_aspects),
            (HEADER_TASK, &self.task_instructions),
            (HEADER_FORMAT, &self.format_requirements),
            (HEADER_FRAMES, &self.key_frames_text),
            (HEADER_PREVIOUS, &self.previous_experience),
            (HEADER_RESULT, &self.match_result),
        ]
        .iter()
        .map(|(h, body)| format!("{h}\n{}\n", body.trim_end()))
        .collect::<Vec<_>>()
        .join("\n")
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![
            ChatMessage::system(self.role_introduction.trim_end()),
            ChatMessage::user(self.user_text()),
        ]
    }
}

pub fn match_result_text(result: &MatchResult) -> String {
    let s = &result.final_state_snapshot;
    format!(
        "Result: {} at {}.\nYour bases: {} | Enemy bases: {} | Your workers: {}\nArmy power: yours {:.1}, enemy {:.1}\nCollected: {} minerals, {} gas",
        result.outcome,
        clock(result.tick_ended),
        s.player_bases,
        s.opponent_bases,
        s.player_workers,
        s.player_army_power,
        s.opponent_army_power,
        s.minerals_collected,
        s.gas_collected
    )
}

pub fn build_reflection_prompt(
    catalog: &PromptCatalog,
    key_frames_text: &str,
    previous: &Experience,
    result: &MatchResult,
) -> ReflectionPrompt {
    ReflectionPrompt {
        role_introduction: catalog.reflection_role.trim_end().to_string(),
        key_aspects: catalog.reflection_aspects.trim_end().to_string(),
        task_instructions: catalog.reflection_task.trim_end().to_string(),
        format_requirements: catalog.reflection_format.trim_end().to_string(),
        key_frames_text: key_frames_text.to_string(),
        previous_experience: previous.raw_text.trim_end().to_string(),
        match_result: match_result_text(result),
    }
}

/// Queries at temperature 1. A reply that breaks the format gets exactly one
/// follow-up that quotes the violated rule.
pub fn generate_reflection(
    backend: &dyn ChatBackend,
    catalog: &PromptCatalog,
    prompt: &ReflectionPrompt,
    round: u32,
    retry: RetryPolicy,
) -> Result<Experience, ReflectionError> {
    let origin = ExperienceOrigin::SelfReflection(round);
    let mut messages = prompt.messages();
    let first = query_with_retry(backend, &messages, REFLECTION_TEMPERATURE, retry)?;
    let error = match parse_reflection(&first, origin) {
        Ok(e) => return Ok(e),
        Err(e) => e,
    };
    log::warn!("reflection for round {round} rejected ({error}); asking again");
    messages.push(ChatMessage::assistant(first));
    messages.push(ChatMessage::user(
        fill(&catalog.format_reminder, &[("error", &error.to_string())]).trim_end(),
    ));
    let second = query_with_retry(backend, &messages, REFLECTION_TEMPERATURE, retry)?;
    parse_reflection(&second, origin).map_err(|error| ReflectionError::Format {
        error,
        last_response: second,
    })
}

/// Replaces the experience section and nothing else.
pub fn iterate_strategy(sp: &SystemPrompt, new: &Experience) -> SystemPrompt {
    SystemPrompt {
        experience_section: new.raw_text.trim_end().to_string(),
        ..sp.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Rule, ScriptTable, ScriptedBackend};
    use crate::sim::{FinalSnapshot, Outcome};

    fn doc(points: usize, times: &[&str]) -> String {
        let mut s = String::from("Strategic Points:\n");
        for i in 1..=points {
            s.push_str(&format!("{i}. point number {i}\n"));
        }
        s.push_str("Key Time Points:\n");
        for t in times {
            s.push_str(&format!("{t} — do the thing\n"));
        }
        s
    }

    const FIVE: [&str; 5] = ["01:36", "01:54", "05:42", "09:24", "12:12"];

    fn defeat() -> MatchResult {
        MatchResult {
            outcome: Outcome::Defeat,
            tick_ended: 500,
            final_state_snapshot: FinalSnapshot {
                player_bases: 0,
                opponent_bases: 1,
                player_workers: 0,
                player_army_power: 0.0,
                opponent_army_power: 30.0,
                minerals_collected: 2000,
                gas_collected: 100,
            },
        }
    }

    #[test]
    fn accepts_the_timeline_example() {
        let e = parse_reflection(&doc(8, &FIVE), ExperienceOrigin::SelfReflection(1)).unwrap();
        assert_eq!(e.strategic_points.len(), 8);
        assert_eq!(e.key_timepoints[0].0, GameClock(96));
        assert_eq!(e.key_timepoints[4].0, GameClock(12 * 60 + 12));
    }

    #[test]
    fn names_each_violation() {
        let o = ExperienceOrigin::Expert;
        let err = parse_reflection(&doc(9, &FIVE), o).unwrap_err();
        assert!(err.to_string().contains("expected exactly 8 strategic points"));
        let err = parse_reflection(&doc(8, &FIVE[..4]), o).unwrap_err();
        assert_eq!(err, FormatError::TooFewTimepoints { found: 4 });
        let mut times = FIVE.to_vec();
        times.push("25:99");
        let err = parse_reflection(&doc(8, &times), o).unwrap_err();
        assert!(err.to_string().contains("timestamp out of range"));
        times.pop();
        times.push("1:3x");
        let err = parse_reflection(&doc(8, &times), o).unwrap_err();
        assert!(err.to_string().contains("unparseable timestamp"));
    }

    #[test]
    fn clock_bounds() {
        assert_eq!(GameClock::parse("20:00"), Ok(GameClock(1200)));
        assert_eq!(GameClock::parse("0:05"), Ok(GameClock(5)));
        assert!(matches!(GameClock::parse("20:01"), Err(FormatError::TimestampOutOfRange(_))));
        assert!(matches!(GameClock::parse("07:60"), Err(FormatError::TimestampOutOfRange(_))));
        assert!(matches!(GameClock::parse("7:5"), Err(FormatError::UnparseableTimestamp(_))));
    }

    #[test]
    fn analysis_before_the_plan_is_ignored() {
        let text = format!("1) Review: the opening was slow.\n2) Mistakes: no scouting.\n\n{}", doc(8, &FIVE));
        let e = parse_reflection(&text, ExperienceOrigin::SelfReflection(2)).unwrap();
        assert_eq!(e.strategic_points[0], "point number 1");
    }

    #[test]
    fn expert_document_is_valid() {
        let e = expert_experience(&PromptCatalog::builtin()).unwrap();
        assert_eq!(e.origin, ExperienceOrigin::Expert);
        assert_eq!(e.key_timepoints.len(), 6);
        let again = parse_reflection(&e.render(), ExperienceOrigin::Expert).unwrap();
        assert_eq!(again.strategic_points, e.strategic_points);
    }

    #[test]
    fn prompt_sections() {
        let cat = PromptCatalog::builtin();
        let expert = expert_experience(&cat).unwrap();
        let p = build_reflection_prompt(&cat, "=== Frame 0 | Time 00:00 ===", &expert, &defeat());
        assert!(p.match_result.contains("Defeat"));
        assert_eq!(p, build_reflection_prompt(&cat, "=== Frame 0 | Time 00:00 ===", &expert, &defeat()));
        let text = p.user_text();
        for aspect in ["Opening Build Order", "Economy Management", "Scouting"] {
            assert!(text.contains(aspect));
        }
        let order: Vec<usize> = [HEADER_ASPECTS, HEADER_TASK, HEADER_FORMAT, HEADER_FRAMES, HEADER_PREVIOUS, HEADER_RESULT]
            .iter()
            .map(|h| text.find(h).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn retry_after_a_bad_first_answer() {
        let cat = PromptCatalog::builtin();
        let expert = expert_experience(&cat).unwrap();
        let prompt = build_reflection_prompt(&cat, "frames", &expert, &defeat());
        let table = ScriptTable::new(doc(7, &FIVE)).rule(Rule::contains("could not be used", doc(8, &FIVE)));
        let backend = ScriptedBackend::new(table);
        let e = generate_reflection(&backend, &cat, &prompt, 1, RetryPolicy::immediate(1)).unwrap();
        assert_eq!(e.origin, ExperienceOrigin::SelfReflection(1));
        let log = backend.call_log();
        assert_eq!(log.len(), 2);
        assert!(log.iter().all(|c| c.temperature == 1.0));
        assert!(log[1].messages.last().unwrap().content.contains("expected exactly 8 strategic points"));
    }

    #[test]
    fn two_bad_answers_are_a_validation_error() {
        let cat = PromptCatalog::builtin();
        let expert = expert_experience(&cat).unwrap();
        let prompt = build_reflection_prompt(&cat, "frames", &expert, &defeat());
        let backend = ScriptedBackend::new(ScriptTable::new("no plan today"));
        let err = generate_reflection(&backend, &cat, &prompt, 1, RetryPolicy::immediate(1)).unwrap_err();
        assert!(matches!(err, ReflectionError::Format { .. }));
        assert!(!err.is_retryable());
        assert_eq!(backend.call_count(), 2);
    }

    #[test]
    fn iterate_replaces_only_experience() {
        let cat = PromptCatalog::builtin();
        let expert = expert_experience(&cat).unwrap();
        let sp0 = SystemPrompt::new(&cat, &expert);
        let r1 = parse_reflection(&doc(8, &FIVE), ExperienceOrigin::SelfReflection(1)).unwrap();
        let sp1 = iterate_strategy(&sp0, &r1);
        assert_eq!(sp0.diff_sections(&sp1), vec!["experience"]);
        assert_eq!(iterate_strategy(&sp1, &r1), sp1);
    }
}
