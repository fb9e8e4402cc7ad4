use std::sync::Mutex;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{render_transcript, ChatBackend, ChatMessage, LlmError};

/// One clause of a rule; a rule fires when all of its clauses hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Contains(String),
    Absent(String),
    Regex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Vec<Condition>,
    pub response: String,
}

impl Rule {
    pub fn new(when: Vec<Condition>, response: impl Into<String>) -> Self {
        Rule {
            when,
            response: response.into(),
        }
    }

    pub fn contains(needle: impl Into<String>, response: impl Into<String>) -> Self {
        Rule::new(vec![Condition::Contains(needle.into())], response)
    }
}

/// Ordered response table; the first matching rule wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptTable {
    pub rules: Vec<Rule>,
    pub default_response: String,
}

impl ScriptTable {
    pub fn new(default_response: impl Into<String>) -> Self {
        ScriptTable {
            rules: Vec::new(),
            default_response: default_response.into(),
        }
    }

    pub fn rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn extend(mut self, rules: impl IntoIterator<Item = Rule>) -> Self {
        self.rules.extend(rules);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub response: String,
}

enum Compiled {
    Contains(String),
    Absent(String),
    Regex(Regex),
}

impl Compiled {
    fn holds(&self, text: &str) -> bool {
        match self {
            Compiled::Contains(n) => text.contains(n.as_str()),
            Compiled::Absent(n) => !text.contains(n.as_str()),
            Compiled::Regex(r) => r.is_match(text),
        }
    }
}

/// Deterministic offline backend driven by a [`ScriptTable`].
pub struct ScriptedBackend {
    table: ScriptTable,
    compiled: Vec<(Vec<Compiled>, String)>,
    call_log: Mutex<Vec<CallRecord>>,
}

impl ScriptedBackend {
    /// Panics on an invalid regex; use [`ScriptedBackend::try_new`] for
    /// tables loaded from disk.
    pub fn new(table: ScriptTable) -> Self {
        ScriptedBackend::try_new(table).expect("script table regexes compile")
    }

    pub fn try_new(table: ScriptTable) -> Result<Self, LlmError> {
        let mut compiled = Vec::with_capacity(table.rules.len());
        for rule in &table.rules {
            let mut conds = Vec::with_capacity(rule.when.len());
            for c in &rule.when {
                conds.push(match c {
                    Condition::Contains(s) => Compiled::Contains(s.clone()),
                    Condition::Absent(s) => Compiled::Absent(s.clone()),
                    Condition::Regex(p) => Compiled::Regex(
                        Regex::new(p).map_err(|e| LlmError::Config(format!("bad rule regex {p:?}: {e}")))?,
                    ),
                });
            }
            compiled.push((conds, rule.response.clone()));
        }
        Ok(ScriptedBackend {
            table,
            compiled,
            call_log: Mutex::new(Vec::new()),
        })
    }

    pub fn table(&self) -> &ScriptTable {
        &self.table
    }

    /// Response for `messages`, without recording the call.
    pub fn respond(&self, messages: &[ChatMessage]) -> String {
        let transcript = render_transcript(messages);
        self.compiled
            .iter()
            .find(|(conds, _)| conds.iter().all(|c| c.holds(&transcript)))
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| self.table.default_response.clone())
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        self.call_log.lock().expect("call log lock").clone()
    }

    pub fn call_count(&self) -> usize {
        self.call_log.lock().expect("call log lock").len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        let response = self.respond(messages);
        self.call_log.lock().expect("call log lock").push(CallRecord {
            messages: messages.to_vec(),
            temperature,
            response: response.clone(),
        });
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_matching_rule_wins() {
        let backend = ScriptedBackend::new(
            ScriptTable::new("NO_OP")
                .rule(Rule::contains("Enemy: no information", "SCOUT"))
                .rule(Rule::contains("Enemy", "ATTACK")),
        );
        let msg = [ChatMessage::user("Time 00:00\nEnemy: no information")];
        assert_eq!(backend.query(&msg, 0.0).unwrap(), "SCOUT");
        let msg = [ChatMessage::user("Enemy (scouted as of 01:36)")];
        assert_eq!(backend.query(&msg, 0.0).unwrap(), "ATTACK");
    }

    #[test]
    fn default_when_nothing_matches() {
        let backend = ScriptedBackend::new(ScriptTable::new("NO_OP").rule(Rule::contains("zzz", "SCOUT")));
        assert_eq!(backend.query(&[ChatMessage::user("hello")], 0.0).unwrap(), "NO_OP");
        assert_eq!(backend.call_count(), 1);
    }

    #[test]
    fn all_conditions_must_hold() {
        let rule = Rule::new(
            vec![
                Condition::Contains("Phase: Mid Game".into()),
                Condition::Absent("UNDER_ATTACK".into()),
                Condition::Regex(r"Workers: (2\d|[3-9]\d)\b".into()),
            ],
            "ATTACK",
        );
        let backend = ScriptedBackend::new(ScriptTable::new("NO_OP").rule(rule));
        let hit = [ChatMessage::user("Phase: Mid Game\nWorkers: 34 | Bases: 2")];
        let miss = [ChatMessage::user("Phase: Mid Game\nWorkers: 14 | Bases: 2")];
        let attacked = [ChatMessage::user("Phase: Mid Game\nWorkers: 34\nAlerts: UNDER_ATTACK")];
        assert_eq!(backend.respond(&hit), "ATTACK");
        assert_eq!(backend.respond(&miss), "NO_OP");
        assert_eq!(backend.respond(&attacked), "NO_OP");
    }

    #[test]
    fn bad_regex_is_a_config_error() {
        let table = ScriptTable::new("x").rule(Rule::new(vec![Condition::Regex("(".into())], "y"));
        assert!(matches!(ScriptedBackend::try_new(table), Err(LlmError::Config(_))));
    }

    #[test]
    fn call_log_records_temperature() {
        let backend = ScriptedBackend::new(ScriptTable::new("ok"));
        backend.query(&[ChatMessage::user("a")], 0.0).unwrap();
        backend.query(&[ChatMessage::user("b")], 1.0).unwrap();
        let temps: Vec<f64> = backend.call_log().iter().map(|c| c.temperature).collect();
        assert_eq!(temps, vec![0.0, 1.0]);
    }
}
