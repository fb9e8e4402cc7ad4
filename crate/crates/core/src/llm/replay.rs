//! Session recording and exact-match replay.
//!
//! A session file holds one JSON object per line:
//! `{"messages": [...], "temperature": 0.0, "response": "..."}`.

use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub response: String,
}

impl SessionRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("session record serializes")
    }

    pub fn from_line(line: &str) -> Result<SessionRecord, LlmError> {
        serde_json::from_str(line).map_err(|e| LlmError::Session(e.to_string()))
    }
}

/// Wraps any backend and appends every successful call to a session file.
pub struct RecordingBackend<B> {
    inner: B,
    file: Mutex<File>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn create(inner: B, path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Session(format!("{}: {e}", path.display())))?;
        Ok(RecordingBackend {
            inner,
            file: Mutex::new(file),
        })
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        let response = self.inner.query(messages, temperature)?;
        let record = SessionRecord {
            messages: messages.to_vec(),
            temperature,
            response: response.clone(),
        };
        let mut file = self.file.lock().expect("session file lock");
        writeln!(file, "{}", record.to_line()).map_err(|e| LlmError::Session(e.to_string()))?;
        Ok(response)
    }
}

type ReplayKey = (Vec<ChatMessage>, u64);

/// Serves recorded responses by exact match on `(messages, temperature)`.
///
/// Repeated identical requests are answered in recorded order; once a key's
/// queue is down to its last response, that response keeps being served.
pub struct ReplayBackend {
    sessions: Mutex<HashMap<ReplayKey, VecDeque<String>>>,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = SessionRecord>) -> Self {
        let mut sessions: HashMap<ReplayKey, VecDeque<String>> = HashMap::new();
        for r in records {
            sessions
                .entry((r.messages, r.temperature.to_bits()))
                .or_default()
                .push_back(r.response);
        }
        ReplayBackend {
            sessions: Mutex::new(sessions),
        }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let file = File::open(path).map_err(|e| LlmError::Session(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| LlmError::Session(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(SessionRecord::from_line(&line)?);
        }
        Ok(ReplayBackend::from_records(records))
    }
}

impl ChatBackend for ReplayBackend {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        let mut sessions = self.sessions.lock().expect("replay lock");
        let queue = sessions
            .get_mut(&(messages.to_vec(), temperature.to_bits()))
            .ok_or(LlmError::ReplayMiss)?;
        if queue.len() > 1 {
            Ok(queue.pop_front().expect("non-empty"))
        } else {
            queue.front().cloned().ok_or(LlmError::ReplayMiss)
        }
    }
}
