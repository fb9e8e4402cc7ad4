//! Per-decision loop: system prompt assembly, the temperature-0 query and
//! action parsing.

use serde::{Deserialize, Serialize};

use crate::llm::{query_with_retry, ChatBackend, ChatMessage, LlmError, RetryPolicy};
use crate::prompts::{fill, PromptCatalog};
use crate::reflection::Experience;
use crate::sim::Action;
use crate::summarizer::L2Summary;

pub const DEFAULT_MAX_ACTIONS: usize = 5;
pub const DECISION_TEMPERATURE: f64 = 0.0;

pub const SECTION_EXPERIENCE: &str = "## Experience";
pub const SECTION_ACTIONS: &str = "## Legal Actions";
pub const SECTION_PHASES: &str = "## Game Phase Division";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemPrompt {
    pub role_section: String,
    pub experience_section: String,
    pub action_library_section: String,
    pub phase_rules_section: String,
}

pub fn action_library_text() -> String {
    Action::LIBRARY
        .iter()
        .map(|a| format!("- {}: {}", a.display_name(), a.description()))
        .collect::<Vec<_>>()
        .join("\n")
}

impl SystemPrompt {
    pub fn new(catalog: &PromptCatalog, experience: &Experience) -> SystemPrompt {
        SystemPrompt {
            role_section: catalog.system_role.trim_end().to_string(),
            experience_section: experience.raw_text.trim_end().to_string(),
            action_library_section: action_library_text(),
            phase_rules_section: catalog.phase_rules.trim_end().to_string(),
        }
    }

    /// `(header, body)` pairs in render order; the role section has no header.
    pub fn sections(&self) -> [(&'static str, &str); 4] {
        [
            ("", &self.role_section),
            (SECTION_EXPERIENCE, &self.experience_section),
            (SECTION_ACTIONS, &self.action_library_section),
            (SECTION_PHASES, &self.phase_rules_section),
        ]
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (header, body) in self.sections() {
            if !out.is_empty() {
                out.push('\n');
            }
            if !header.is_empty() {
                out.push_str(header);
                out.push('\n');
            }
            out.push_str(body);
            out.push('\n');
        }
        out
    }

    /// Names of the sections whose bodies differ between `self` and `other`.
    pub fn diff_sections(&self, other: &SystemPrompt) -> Vec<&'static str> {
        let names = ["role", "experience", "action_library", "phase_rules"];
        self.sections()
            .iter()
            .zip(other.sections().iter())
            .zip(names)
            .filter(|((a, b), _)| a.1 != b.1)
            .map(|(_, n)| n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageBundle {
    pub system: String,
    pub user: String,
    pub temperature: f64,
}

impl MessageBundle {
    pub fn messages(&self) -> [ChatMessage; 2] {
        [ChatMessage::system(self.system.clone()), ChatMessage::user(self.user.clone())]
    }
}

pub fn build_decision_messages(
    sp: &SystemPrompt,
    l2: &L2Summary,
    catalog: &PromptCatalog,
    max_actions: usize,
) -> MessageBundle {
    let k = max_actions.to_string();
    let mut user = l2.situation_text.clone();
    if !user.ends_with('\n') {
        user.push('\n');
    }
    user.push('\n');
    user.push_str(fill(&catalog.decision_instruction, &[("max_actions", &k)]).trim_end());
    MessageBundle {
        system: sp.render(),
        user,
        temperature: DECISION_TEMPERATURE,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionQueue {
    pub actions: Vec<Action>,
    pub warnings: Vec<String>,
}

fn strip_decoration(line: &str) -> &str {
    let mut s = line.trim();
    s = s.trim_start_matches(['-', '*', '+', '>', '•']).trim_start();
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && s[digits..].starts_with(['.', ')', ':']) {
        s = s[digits + 1..].trim_start();
    }
    s.trim_matches(|c: char| c == '`' || c == '*' || c == '"' || c == '\'')
        .trim_end_matches(['.', ',', ';'])
        .trim()
}

/// Line-wise, case-insensitive match of action names; a line may also hold a
/// comma-separated list. Never fails: an answer with no usable line becomes
/// `[NO_OP]`.
pub fn parse_actions(text: &str, max_actions: usize) -> ActionQueue {
    let mut actions = Vec::new();
    let mut warnings = Vec::new();
    for raw in text.lines() {
        let line = strip_decoration(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(a) = Action::parse_loose(line) {
            actions.push(a);
            continue;
        }
        let parts: Option<Vec<Action>> = line
            .split(',')
            .map(|p| Action::parse_loose(strip_decoration(p)))
            .collect();
        match parts {
            Some(list) if line.contains(',') => actions.extend(list),
            _ => warnings.push(format!("ignored line {:?}", raw.trim())),
        }
    }
    let limit = max_actions.max(1);
    if actions.len() > limit {
        warnings.push(format!("kept the first {limit} of {} actions", actions.len()));
        actions.truncate(limit);
    }
    if actions.is_empty() {
        warnings.push("no recognizable action; using NO_OP".into());
        actions.push(Action::NoOp);
    }
    ActionQueue { actions, warnings }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub queue: ActionQueue,
    pub raw_text: String,
    /// Set when the backend failed every attempt and the decision fell back to NO_OP.
    pub incident: Option<String>,
}

pub fn decide(
    backend: &dyn ChatBackend,
    bundle: &MessageBundle,
    max_actions: usize,
    retry: RetryPolicy,
) -> Decision {
    match query_with_retry(backend, &bundle.messages(), bundle.temperature, retry) {
        Ok(raw_text) => Decision {
            queue: parse_actions(&raw_text, max_actions),
            raw_text,
            incident: None,
        },
        Err(e) => {
            let incident = incident_text(&e, retry);
            log::error!("{incident}");
            Decision {
                queue: ActionQueue {
                    actions: vec![Action::NoOp],
                    warnings: Vec::new(),
                },
                raw_text: String::new(),
                incident: Some(incident),
            }
        }
    }
}

fn incident_text(e: &LlmError, retry: RetryPolicy) -> String {
    if e.is_retryable() {
        format!("decision query failed after {} attempts: {e}", retry.attempts.max(1))
    } else {
        format!("decision query failed: {e}")
    }
}
