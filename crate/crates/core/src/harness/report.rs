use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Ablation, EpisodeId, TestOutcome, TestResult};
use crate::keyframe::KeyFrameParams;
use crate::llm::BackendKind;
use crate::sim::{clock, Difficulty, TickSample};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub samples: Vec<TickSample>,
}

const CSV_HEADER: &str = "tick,player_minerals_collected,player_gas_collected,player_workers,player_army_supply,\
opponent_minerals_collected,opponent_gas_collected,opponent_workers,opponent_army_supply";

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Collected-resource totals never go down.
    pub fn cumulative_is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.player.minerals_collected <= b.player.minerals_collected
                && a.player.gas_collected <= b.player.gas_collected
                && a.opponent.minerals_collected <= b.opponent.minerals_collected
                && a.opponent.gas_collected <= b.opponent.gas_collected
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.tick,
                s.player.minerals_collected,
                s.player.gas_collected,
                s.player.workers,
                s.player.army_supply,
                s.opponent.minerals_collected,
                s.opponent.gas_collected,
                s.opponent.workers,
                s.opponent.army_supply
            );
        }
        out
    }
}

/// Per-tick mean over several episodes; shorter episodes hold their last sample.
pub fn mean_series_csv(series: &[&TimeSeries]) -> String {
    let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let n = series.len().max(1) as f64;
    for t in 0..len {
        let mut acc = [0f64; 8];
        for s in series {
            let Some(x) = s.samples.get(t).or(s.samples.last()) else { continue };
            let v = [
                x.player.minerals_collected as f64,
                x.player.gas_collected as f64,
                f64::from(x.player.workers),
                f64::from(x.player.army_supply),
                x.opponent.minerals_collected as f64,
                x.opponent.gas_collected as f64,
                f64::from(x.opponent.workers),
                f64::from(x.opponent.army_supply),
            ];
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b;
            }
        }
        let cols: Vec<String> = acc.iter().map(|a| format!("{:.2}", a / n)).collect();
        let _ = writeln!(out, "{},{}", t + 1, cols.join(","));
    }
    out
}

/// `k/n (p%)` with `p = 100k/n` written exactly when it has a finite decimal
/// expansion, otherwise rounded half-up to two places.
pub fn format_rate(won: u64, total: u64) -> String {
    format!("{won}/{total} ({}%)", percent_text(won, total))
}

fn percent_text(won: u64, total: u64) -> String {
    if total == 0 {
        return "0".into();
    }
    let p = Ratio::new(u128::from(won) * 100, u128::from(total));
    let (num, den) = (*p.numer(), *p.denom());
    let mut d = den;
    for f in [2, 5] {
        while d % f == 0 {
            d /= f;
        }
    }
    if d == 1 {
        let mut s = (num / den).to_string();
        let mut rem = num % den;
        if rem != 0 {
            s.push('.');
            while rem != 0 {
                rem *= 10;
                s.push(char::from(b'0' + (rem / den) as u8));
                rem %= den;
            }
        }
        s
    } else {
        let hundredths = (num * 100 * 2 + den) / (den * 2);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyRow {
    pub difficulty: Difficulty,
    pub tests_won: u64,
    pub tests_total: u64,
}

impl DifficultyRow {
    pub fn rate(&self) -> Ratio<u64> {
        super::win_rate(self.tests_won, self.tests_total)
    }

    pub fn rate_text(&self) -> String {
        format_rate(self.tests_won, self.tests_total)
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub config_hash: String,
    pub sim_config_hash: String,
    pub prompt_catalog_version: String,
    pub prompt_catalog_hash: String,
    pub ablation: Ablation,
    pub base_seed: u64,
    pub n_tests: usize,
    pub max_round: u32,
    pub keyframe_params: KeyFrameParams,
    pub backend_kind: BackendKind,
    pub model_name: String,
    pub difficulties: Vec<Difficulty>,
    /// Per difficulty: the seed of every round that was played, by test.
    pub seeds: BTreeMap<String, Vec<Vec<u64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub ablation: Ablation,
    pub base_seed: u64,
    pub rows: Vec<DifficultyRow>,
    pub tests: Vec<TestResult>,
    pub manifest: Manifest,
}

impl ExperimentReport {
    pub fn row(&self, d: Difficulty) -> Option<&DifficultyRow> {
        self.rows.iter().find(|r| r.difficulty == d)
    }

    pub fn total_won(&self) -> u64 {
        self.rows.iter().map(|r| r.tests_won).sum()
    }

    pub fn table_text(&self) -> String {
        let mut out = format!("Win rates (ablation: {})\n", self.ablation);
        let width = self.rows.iter().map(|r| r.difficulty.name().len()).max().unwrap_or(0).max(10);
        let _ = writeln!(out, "{:<width$}  won/total (rate)", "difficulty");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {}", r.difficulty.name(), r.rate_text());
        }
        out
    }

    pub fn rounds_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tests {
            let rounds: Vec<String> = t
                .rounds
                .iter()
                .map(|r| format!("{}@{} [{}]", r.result.outcome, clock(r.result.tick_ended), r.experience_origin))
                .collect();
            let _ = writeln!(
                out,
                "{} test {:03} seed {}: {} -> {}",
                t.difficulty.name(),
                t.test,
                t.seed,
                rounds.join(", "),
                t.final_outcome
            );
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "difficulty": r.difficulty.name(),
                    "tests_won": r.tests_won,
                    "tests_total": r.tests_total,
                    "rate": format!("{}/{}", r.rate().numer(), r.rate().denom()),
                    "text": r.rate_text(),
                })
            })
            .collect();
        serde_json::json!({ "ablation": self.ablation, "base_seed": self.base_seed, "rows": rows })
    }
}

pub(super) fn build_manifest(
    cfg: &super::RunConfig,
    catalog: &crate::prompts::PromptCatalog,
    difficulties: &[Difficulty],
    n_tests: usize,
    tests: &[TestResult],
) -> Manifest {
    let mut seeds: BTreeMap<String, Vec<Vec<u64>>> = BTreeMap::new();
    for t in tests {
        seeds
            .entry(t.difficulty.name().to_string())
            .or_default()
            .push(t.rounds.iter().map(|r| r.seed).collect());
    }
    let sim_json = serde_json::to_vec(&cfg.sim).expect("sim config serializes");
    Manifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.config_hash(),
        sim_config_hash: hex::encode(Sha256::digest(sim_json)),
        prompt_catalog_version: catalog.version.clone(),
        prompt_catalog_hash: catalog.content_hash(),
        ablation: cfg.ablation,
        base_seed: cfg.seed,
        n_tests,
        max_round: cfg.max_round,
        keyframe_params: cfg.keyframe_params,
        backend_kind: cfg.backend.kind,
        model_name: cfg.backend.model_name.clone(),
        difficulties: difficulties.to_vec(),
        seeds,
    }
}

fn series_name(d: Difficulty, id: &EpisodeId) -> String {
    format!("{}_{}.csv", d.name(), id.file_stem())
}

/// Writes the win-rate table (text and JSON), round traces, one time-series
/// CSV per episode, a mean series per difficulty, and the manifest.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir.join("timeseries"))?;
    let mut written = Vec::new();
    let mut put = |rel: String, body: String| -> std::io::Result<()> {
        let path = out_dir.join(rel);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("winrates.txt".into(), report.table_text())?;
    put(
        "winrates.json".into(),
        serde_json::to_string_pretty(&report.summary_json()).expect("summary serializes") + "\n",
    )?;
    put("rounds.txt".into(), report.rounds_text())?;
    put(
        "manifest.json".into(),
        serde_json::to_string_pretty(&report.manifest).expect("manifest serializes") + "\n",
    )?;
    for t in &report.tests {
        for (id, s) in &t.series {
            put(format!("timeseries/{}", series_name(t.difficulty, id)), s.to_csv())?;
        }
    }
    for row in &report.rows {
        let all: Vec<&TimeSeries> = report
            .tests
            .iter()
            .filter(|t| t.difficulty == row.difficulty)
            .flat_map(|t| t.series.iter().map(|(_, s)| s))
            .collect();
        put(format!("timeseries/mean_{}.csv", row.difficulty.name()), mean_series_csv(&all))?;
    }
    Ok(written)
}

impl TestResult {
    pub fn won(&self) -> bool {
        self.final_outcome == TestOutcome::Victory
    }
}
