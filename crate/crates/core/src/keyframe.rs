//! Key-frame selection at game-phase transitions.
//!
//! Transitions are found by keyword search over each frame's L2 text (not the
//! structured phase field). Frames within `window` of a transition are kept,
//! and `n_average` evenly spaced frames are added so the opening and the
//! final state are always present.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::clock;
use crate::summarizer::{find_phase_keywords, FrameRecord, GamePhase};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeyframeError {
    #[error("episode has no frames")]
    EmptyEpisode,
    #[error("malformed log at frame {index}: {reason}")]
    MalformedLog { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFrameParams {
    /// Frames kept on each side of a transition.
    pub window: usize,
    /// Evenly spaced frames added over the whole episode.
    pub n_average: usize,
}

impl Default for KeyFrameParams {
    fn default() -> Self {
        KeyFrameParams { window: 1, n_average: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFrameSet {
    pub transition_frames: Vec<usize>,
    pub average_frames: Vec<usize>,
    pub merged: Vec<usize>,
    pub params: KeyFrameParams,
}

/// Phase keyword of every frame, read from its L2 text.
pub fn frame_phases(episode: &[FrameRecord]) -> Result<Vec<GamePhase>, KeyframeError> {
    episode
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let found = find_phase_keywords(&f.l2.situation_text);
            match found.first() {
                None => Err(KeyframeError::MalformedLog {
                    index,
                    reason: "no game phase keyword".into(),
                }),
                Some(&p) if found.iter().all(|&q| q == p) => Ok(p),
                Some(_) => Err(KeyframeError::MalformedLog {
                    index,
                    reason: format!("conflicting phase keywords {found:?}"),
                }),
            }
        })
        .collect()
}

/// Indices `i >= 1` whose phase keyword differs from frame `i - 1`.
pub fn detect_transitions(episode: &[FrameRecord]) -> Result<Vec<usize>, KeyframeError> {
    if episode.is_empty() {
        return Err(KeyframeError::EmptyEpisode);
    }
    let phases = frame_phases(episode)?;
    Ok(transitions_of(&phases))
}

fn transitions_of(phases: &[GamePhase]) -> Vec<usize> {
    phases
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, _)| i + 1)
        .collect()
}

/// `n` indices spread over `[0, len - 1]`, both ends included, rounded half up.
pub fn average_indices(len: usize, n: usize) -> Vec<usize> {
    if len == 0 || n == 0 {
        return Vec::new();
    }
    if n == 1 || len == 1 {
        return vec![0];
    }
    let span = len - 1;
    let steps = n - 1;
    let picked: BTreeSet<usize> = (0..n)
        .map(|k| (2 * k * span + steps) / (2 * steps))
        .collect();
    picked.into_iter().collect()
}

/// Key-frame selection over an already-extracted phase sequence.
pub fn select_from_phases(phases: &[GamePhase], params: KeyFrameParams) -> KeyFrameSet {
    let len = phases.len();
    let mut around = BTreeSet::new();
    for t in transitions_of(phases) {
        let lo = t.saturating_sub(params.window);
        let hi = (t + params.window).min(len - 1);
        around.extend(lo..=hi);
    }
    let transition_frames: Vec<usize> = around.into_iter().collect();
    let average_frames = average_indices(len, params.n_average);
    let merged: BTreeSet<usize> = transition_frames.iter().chain(&average_frames).copied().collect();
    KeyFrameSet {
        transition_frames,
        average_frames,
        merged: merged.into_iter().collect(),
        params,
    }
}

pub fn select_key_frames(episode: &[FrameRecord], params: KeyFrameParams) -> Result<KeyFrameSet, KeyframeError> {
    if episode.is_empty() {
        return Err(KeyframeError::EmptyEpisode);
    }
    let phases = frame_phases(episode)?;
    Ok(select_from_phases(&phases, params))
}

/// Uniform selection only; used by the no-keyframe ablation.
pub fn select_uniform(episode: &[FrameRecord], n_average: usize) -> KeyFrameSet {
    let average_frames = average_indices(episode.len(), n_average);
    KeyFrameSet {
        transition_frames: Vec::new(),
        merged: average_frames.clone(),
        average_frames,
        params: KeyFrameParams { window: 0, n_average },
    }
}

pub fn render_frame(frame: &FrameRecord) -> String {
    let mut out = format!("=== Frame {} | Time {} ===\n", frame.index, clock(frame.l2.tick));
    out.push_str(&frame.l2.situation_text);
    if !out.ends_with('\n') {
        out.push('\n');
    }
    let actions: Vec<&str> = frame.action_taken.iter().map(|a| a.display_name()).collect();
    out.push_str(&format!("Actions: {}\n", actions.join(", ")));
    if !frame.rejected.is_empty() {
        let rejected: Vec<String> = frame
            .rejected
            .iter()
            .map(|r| format!("{} ({})", r.action, r.reason))
            .collect();
        out.push_str(&format!("Rejected: {}\n", rejected.join(", ")));
    }
    out
}

/// Selected frames in episode order, each under an index/time header.
pub fn render_key_frames(set: &KeyFrameSet, episode: &[FrameRecord]) -> String {
    set.merged
        .iter()
        .filter_map(|&i| episode.get(i))
        .map(render_frame)
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::summarizer::{L2Metrics, L2Summary};

    pub fn frame(index: usize, text: &str) -> FrameRecord {
        FrameRecord {
            index,
            l2: L2Summary {
                tick: index as u32 * 10,
                situation_text: text.to_string(),
                phase: GamePhase::EarlyGame,
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
            action_taken: vec![crate::sim::Action::NoOp],
            rejected: Vec::new(),
            raw_response: "NO_OP".into(),
            events: Vec::new(),
            warnings: Vec::new(),
            incident: None,
        }
    }

    pub fn episode(phases: &[GamePhase]) -> Vec<FrameRecord> {
        phases
            .iter()
            .enumerate()
            .map(|(i, p)| frame(i, &format!("Phase: {}\nTime ...\n", p.label())))
            .collect()
    }
}
