//! Deterministic, seedable text RTS macro simulator.
//!
//! One tick is one in-game second. The player and a scripted opponent share
//! the same economy and combat rules; the opponent's strength comes from its
//! difficulty level (income multiplier, wave schedule and wave growth).

mod action;
pub mod combat;
mod config;
mod engine;
mod observe;
mod opponent;
mod state;

pub use action::Action;
pub use combat::{resolve_combat, CombatOutcome, Side};
pub use config::{
    CombatConfig, Cost, CostTable, Difficulty, DifficultyLevel, DifficultyTable, EconomyConfig,
    OpponentScript, Rational, SimConfig, UnitSpec, UnitTable, DEFAULT_SIM_TOML,
};
pub use engine::{
    is_terminal, legal_actions, new_game, step, RejectReason, Rejection, SideSample, StepOutcome,
    TickSample,
};
pub use observe::{alerts, clock, observe_text, observed_metrics, ObservedMetrics, TextObservation};
pub use opponent::{opponent_policy, OpponentAction};
pub use state::{
    unit_spec, BuildingKind, FieldArmy, FieldStatus, FinalSnapshot, GameState, MatchResult,
    OpponentProgress, Outcome, PendingItem, PlayerState, QueueItem, ResourceLedger, ScoutReport,
    Stance, UnitKind, Upgrade,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("game is already over")]
    Terminal,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
