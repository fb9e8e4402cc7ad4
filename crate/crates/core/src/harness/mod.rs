//! Episode, test and experiment runners.
//!
//! A test is up to `max_round` games against one difficulty. Round 0 plays
//! with the expert experience; after every non-winning round the key frames
//! of that game are reflected on and the resulting plan replaces the
//! experience for the next round.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{build_decision_messages, decide, SystemPrompt, DEFAULT_MAX_ACTIONS};
use crate::keyframe::{render_frame, select_key_frames, select_uniform, KeyFrameParams};
use crate::llm::{BackendConfig, ChatBackend, LlmError, RetryPolicy};
use crate::prompts::PromptCatalog;
use crate::reflection::{
    build_reflection_prompt, expert_experience, generate_reflection, Experience, ExperienceOrigin, ReflectionPrompt,
};
use crate::sim::{new_game, step, Difficulty, MatchResult, Outcome, SimConfig, SimError};
use crate::summarizer::{EpisodeLog, EpisodeSummarizer, FrameRecord, PhaseSource};

pub use report::{emit_report, format_rate, DifficultyRow, ExperimentReport, Manifest, TimeSeries};

/// Characters of rendered frames a reflection prompt may carry.
pub const DEFAULT_CONTEXT_BUDGET: usize = 16_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    None,
    NoKeyframeFullLog,
    NoKeyframeUniform,
    NoReflection,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::None,
        Ablation::NoKeyframeFullLog,
        Ablation::NoKeyframeUniform,
        Ablation::NoReflection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::NoKeyframeFullLog => "no_keyframe_full_log",
            Ablation::NoKeyframeUniform => "no_keyframe_uniform",
            Ablation::NoReflection => "no_reflection",
        }
    }

    pub fn parse(s: &str) -> Option<Ablation> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ablation::ALL.into_iter().find(|a| a.name() == norm)
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where L2 phase labels come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Rule,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub difficulty: Difficulty,
    pub max_round: u32,
    pub seed: u64,
    pub backend: BackendConfig,
    pub keyframe_params: KeyFrameParams,
    pub ablation: Ablation,
    pub decision_interval: u32,
    pub max_actions: usize,
    pub phase_mode: PhaseMode,
    pub context_budget: usize,
    pub retry: RetryPolicy,
    pub sim: SimConfig,
    /// Episode logs, experiences and prompts are written here when set.
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(difficulty: Difficulty, backend: BackendConfig) -> RunConfig {
        let sim = SimConfig::default();
        RunConfig {
            difficulty,
            max_round: 5,
            seed: 0,
            backend,
            keyframe_params: KeyFrameParams::default(),
            ablation: Ablation::None,
            decision_interval: sim.decision_interval,
            max_actions: DEFAULT_MAX_ACTIONS,
            phase_mode: PhaseMode::Rule,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            retry: RetryPolicy::default(),
            sim,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_round == 0 {
            return Err(HarnessError::Config("max_round must be at least 1".into()));
        }
        if self.decision_interval == 0 {
            return Err(HarnessError::Config("decision_interval must be at least 1".into()));
        }
        if self.max_actions == 0 {
            return Err(HarnessError::Config("max_actions must be at least 1".into()));
        }
        self.sim.validate()?;
        self.backend.validate()?;
        Ok(())
    }

    /// SHA-256 over the serialized config; the output directory is excluded.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("run config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Identifies one game inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeId {
    pub test: usize,
    pub round: u32,
    pub seed: u64,
}

impl EpisodeId {
    pub fn file_stem(&self) -> String {
        format!("test{:03}_round{}", self.test, self.round)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    pub id: EpisodeId,
    pub log: EpisodeLog,
    pub result: MatchResult,
    pub series: TimeSeries,
    pub llm_calls: usize,
}

/// The frames text handed to the reflector, with budget bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionInput {
    pub text: String,
    pub frame_count: usize,
    /// Rendered size before any truncation.
    pub full_chars: usize,
    pub over_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub seed: u64,
    pub result: MatchResult,
    pub experience_origin: ExperienceOrigin,
    pub frames: usize,
    /// Absent after the last round, when no reflection is generated.
    pub reflection_input: Option<ReflectionInput>,
    pub reflection_error: Option<String>,
    pub llm_calls: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestOutcome {
    Victory,
    DefeatAfterCap,
}

impl std::fmt::Display for TestOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestOutcome::Victory => "Victory",
            TestOutcome::DefeatAfterCap => "Defeat-after-cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: usize,
    pub seed: u64,
    pub difficulty: Difficulty,
    pub rounds: Vec<RoundRecord>,
    pub final_outcome: TestOutcome,
    pub rounds_used: u32,
    /// Plans in force for each round, in order.
    #[serde(skip)]
    pub experiences: Vec<Experience>,
    #[serde(skip)]
    pub series: Vec<(EpisodeId, TimeSeries)>,
}

impl TestResult {
    pub fn outcomes(&self) -> Vec<Outcome> {
        self.rounds.iter().map(|r| r.result.outcome).collect()
    }

    pub fn origins(&self) -> Vec<ExperienceOrigin> {
        self.rounds.iter().map(|r| r.experience_origin).collect()
    }
}

/// Makes a fresh backend per test so call logs stay per test.
pub type BackendFactory = Arc<dyn Fn() -> Result<Arc<dyn ChatBackend>, LlmError> + Send + Sync>;

pub struct Harness {
    factory: BackendFactory,
    catalog: PromptCatalog,
}

impl Harness {
    pub fn new(factory: BackendFactory, catalog: PromptCatalog) -> Harness {
        Harness { factory, catalog }
    }

    /// Builds backends from `backend` with the built-in prompt catalog.
    pub fn from_backend_config(backend: &BackendConfig) -> Harness {
        let backend = backend.clone();
        Harness::new(Arc::new(move || backend.build()), PromptCatalog::builtin())
    }

    /// Every test shares `backend`.
    pub fn with_backend(backend: Arc<dyn ChatBackend>, catalog: PromptCatalog) -> Harness {
        Harness::new(Arc::new(move || Ok(Arc::clone(&backend))), catalog)
    }

    pub fn catalog(&self) -> &PromptCatalog {
        &self.catalog
    }

    pub fn expert(&self) -> Experience {
        expert_experience(&self.catalog).expect("prompt catalog ships a valid expert document")
    }

    pub fn backend(&self) -> Result<Arc<dyn ChatBackend>, LlmError> {
        (self.factory)()
    }

    /// Plays one game to the end. Backend failures degrade to NO_OP decisions.
    pub fn run_episode(
        &self,
        cfg: &RunConfig,
        backend: &dyn ChatBackend,
        experience: &Experience,
        id: EpisodeId,
    ) -> Result<EpisodeOutput, HarnessError> {
        let mut state = new_game(Arc::new(cfg.sim.clone()), id.seed, cfg.difficulty)?;
        let system = SystemPrompt::new(&self.catalog, experience);
        let mut summarizer = EpisodeSummarizer::new();
        let mut log = EpisodeLog::default();
        let mut series = TimeSeries::default();
        let mut llm_calls = 0;
        let source = match cfg.phase_mode {
            PhaseMode::Rule => PhaseSource::Rule,
            PhaseMode::Llm => PhaseSource::Llm {
                backend,
                catalog: &self.catalog,
            },
        };

        while state.terminal.is_none() {
            let l2 = summarizer.summarize(&state, source).map_err(|e| HarnessError::Config(e.to_string()))?;
            if cfg.phase_mode == PhaseMode::Llm {
                llm_calls += 1;
            }
            let bundle = build_decision_messages(&system, &l2, &self.catalog, cfg.max_actions);
            let decision = decide(backend, &bundle, cfg.max_actions, cfg.retry);
            llm_calls += 1;
            let outcome = step(&mut state, &decision.queue.actions, cfg.decision_interval)?;
            series.samples.extend(outcome.samples);
            let mut warnings = std::mem::take(&mut summarizer.warnings);
            warnings.extend(decision.queue.warnings);
            log.frames.push(FrameRecord {
                index: log.frames.len(),
                l2,
                action_taken: decision.queue.actions,
                rejected: outcome.rejected,
                raw_response: decision.raw_text,
                events: outcome.events,
                warnings,
                incident: decision.incident,
            });
        }
        let result = state.terminal.clone().expect("loop ends on a terminal state");
        if let Some(dir) = &cfg.output_dir {
            write_file(&dir.join("episodes").join(format!("{}.jsonl", id.file_stem())), &log.to_jsonl())?;
        }
        Ok(EpisodeOutput {
            id,
            log,
            result,
            series,
            llm_calls,
        })
    }

    /// Frames text for the reflection prompt under the configured ablation.
    pub fn reflection_input(&self, cfg: &RunConfig, log: &EpisodeLog) -> ReflectionInput {
        let frames = &log.frames;
        let indices: Vec<usize> = match cfg.ablation {
            Ablation::NoKeyframeFullLog => (0..frames.len()).collect(),
            Ablation::NoKeyframeUniform => select_uniform(frames, cfg.keyframe_params.n_average).merged,
            Ablation::None | Ablation::NoReflection => match select_key_frames(frames, cfg.keyframe_params) {
                Ok(set) => set.merged,
                Err(e) => {
                    log::warn!("key frame selection failed ({e}); using uniform frames");
                    select_uniform(frames, cfg.keyframe_params.n_average).merged
                }
            },
        };
        let blocks: Vec<String> = indices.iter().map(|&i| render_frame(&frames[i])).collect();
        fit_to_budget(&blocks, cfg.context_budget)
    }

    pub fn run_test(&self, cfg: &RunConfig, test: usize) -> Result<TestResult, HarnessError> {
        cfg.validate()?;
        let backend = self.backend()?;
        self.run_test_with(cfg, backend.as_ref(), test)
    }

    /// Runs a test against an existing backend; `cfg.seed` is the test's seed.
    pub fn run_test_with(&self, cfg: &RunConfig, backend: &dyn ChatBackend, test: usize) -> Result<TestResult, HarnessError> {
        cfg.validate()?;
        let mut experience = self.expert();
        let mut rounds = Vec::new();
        let mut experiences = Vec::new();
        let mut series = Vec::new();
        let mut final_outcome = TestOutcome::DefeatAfterCap;

        for round in 0..cfg.max_round {
            let id = EpisodeId {
                test,
                round,
                seed: cfg.seed.wrapping_add(1000 * u64::from(round)),
            };
            let ep = self.run_episode(cfg, backend, &experience, id)?;
            self.store_experience(cfg, id, &experience)?;
            let mut record = RoundRecord {
                round,
                seed: id.seed,
                result: ep.result.clone(),
                experience_origin: experience.origin,
                frames: ep.log.len(),
                reflection_input: None,
                reflection_error: None,
                llm_calls: ep.llm_calls,
            };
            experiences.push(experience.clone());
            series.push((id, ep.series));
            let won = ep.result.outcome == Outcome::Victory;
            if !won && round + 1 < cfg.max_round && cfg.ablation != Ablation::NoReflection {
                let input = self.reflection_input(cfg, &ep.log);
                let prompt = build_reflection_prompt(&self.catalog, &input.text, &experience, &ep.result);
                self.store_prompt(cfg, id, &prompt)?;
                record.reflection_input = Some(input);
                record.llm_calls += 1;
                match generate_reflection(backend, &self.catalog, &prompt, round + 1, cfg.retry) {
                    Ok(next) => experience = next,
                    Err(e) => {
                        log::warn!("test {test} round {round}: keeping previous experience ({e})");
                        record.reflection_error = Some(e.to_string());
                    }
                }
            }
            rounds.push(record);
            if won {
                final_outcome = TestOutcome::Victory;
                break;
            }
        }
        Ok(TestResult {
            test,
            seed: cfg.seed,
            difficulty: cfg.difficulty,
            rounds_used: rounds.len() as u32,
            rounds,
            final_outcome,
            experiences,
            series,
        })
    }

    /// `n_tests` independent tests per difficulty; test `i` uses seed `cfg.seed + i`.
    pub fn run_experiment(
        &self,
        difficulties: &[Difficulty],
        n_tests: usize,
        cfg: &RunConfig,
    ) -> Result<ExperimentReport, HarnessError> {
        if n_tests == 0 {
            return Err(HarnessError::Config("n_tests must be at least 1".into()));
        }
        cfg.validate()?;
        let mut jobs = Vec::new();
        for &d in difficulties {
            for i in 0..n_tests {
                let mut c = cfg.clone();
                c.difficulty = d;
                c.seed = cfg.seed.wrapping_add(i as u64);
                if let Some(dir) = &cfg.output_dir {
                    c.output_dir = Some(dir.join(d.name()));
                }
                jobs.push((i, c));
            }
        }
        let results = self.run_parallel(&jobs)?;

        let mut rows = Vec::new();
        for &d in difficulties {
            let won = results
                .iter()
                .filter(|t| t.difficulty == d && t.final_outcome == TestOutcome::Victory)
                .count() as u64;
            rows.push(DifficultyRow {
                difficulty: d,
                tests_won: won,
                tests_total: n_tests as u64,
            });
        }
        let manifest = report::build_manifest(cfg, &self.catalog, difficulties, n_tests, &results);
        Ok(ExperimentReport {
            ablation: cfg.ablation,
            base_seed: cfg.seed,
            rows,
            tests: results,
            manifest,
        })
    }

    pub fn run_ablation(
        &self,
        mode: Ablation,
        difficulties: &[Difficulty],
        n_tests: usize,
        cfg: &RunConfig,
    ) -> Result<ExperimentReport, HarnessError> {
        let mut c = cfg.clone();
        c.ablation = mode;
        self.run_experiment(difficulties, n_tests, &c)
    }

    fn run_parallel(&self, jobs: &[(usize, RunConfig)]) -> Result<Vec<TestResult>, HarnessError> {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len()).max(1);
        let next = std::sync::atomic::AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<TestResult, HarnessError>>> = (0..jobs.len()).map(|_| None).collect();
        let slots_lock = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let j = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    let Some((test, c)) = jobs.get(j) else { break };
                    let r = self.run_test(c, *test);
                    slots_lock.lock().expect("result slots")[j] = Some(r);
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every job ran")).collect()
    }

    fn store_experience(&self, cfg: &RunConfig, id: EpisodeId, e: &Experience) -> Result<(), HarnessError> {
        let Some(dir) = &cfg.output_dir else { return Ok(()) };
        let dir = dir.join("experiences");
        write_file(&dir.join(format!("{}.txt", id.file_stem())), &e.raw_text)?;
        let json = serde_json::to_string_pretty(e).expect("experience serializes");
        write_file(&dir.join(format!("{}.json", id.file_stem())), &json)?;
        Ok(())
    }

    fn store_prompt(&self, cfg: &RunConfig, id: EpisodeId, p: &ReflectionPrompt) -> Result<(), HarnessError> {
        let Some(dir) = &cfg.output_dir else { return Ok(()) };
        let text = format!("{}\n\n{}", p.role_introduction, p.user_text());
        write_file(&dir.join("prompts").join(format!("{}_reflection.txt", id.file_stem())), &text)?;
        Ok(())
    }
}

/// Joins blocks; if they exceed `budget` characters the oldest are dropped.
pub fn fit_to_budget(blocks: &[String], budget: usize) -> ReflectionInput {
    let sep = 1;
    let full_chars = blocks.iter().map(|b| b.chars().count()).sum::<usize>() + blocks.len().saturating_sub(1) * sep;
    let mut kept: Vec<&String> = Vec::new();
    let mut used = 0;
    for b in blocks.iter().rev() {
        let len = b.chars().count() + if kept.is_empty() { 0 } else { sep };
        if used + len > budget {
            break;
        }
        used += len;
        kept.push(b);
    }
    kept.reverse();
    ReflectionInput {
        text: kept.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"),
        frame_count: kept.len(),
        full_chars,
        over_budget: full_chars > budget,
    }
}

/// Exact win fraction.
pub fn win_rate(won: u64, total: u64) -> Ratio<u64> {
    Ratio::new(won, total.max(1))
}

fn write_file(path: &Path, body: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_drops_oldest_first() {
        let blocks: Vec<String> = (0..5).map(|i| format!("{i}").repeat(10)).collect();
        let fit = fit_to_budget(&blocks, 31);
        assert_eq!(fit.frame_count, 2);
        assert!(fit.text.starts_with('3'));
        assert!(fit.over_budget);
        assert_eq!(fit.full_chars, 54);
        let all = fit_to_budget(&blocks, 54);
        assert_eq!(all.frame_count, 5);
        assert!(!all.over_budget);
    }

    #[test]
    fn ablation_names_round_trip() {
        for a in Ablation::ALL {
            assert_eq!(Ablation::parse(a.name()), Some(a));
        }
        assert_eq!(Ablation::parse("no-reflection"), Some(Ablation::NoReflection));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = RunConfig::new(Difficulty::Hard, BackendConfig::scripted(crate::llm::ScriptTable::new("NO_OP")));
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.output_dir = Some("/tmp/x".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 9;
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
