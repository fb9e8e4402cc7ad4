use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use roe::harness::{emit_report, Ablation, EpisodeId, Harness, PhaseMode, RunConfig};
use roe::keyframe::KeyFrameParams;
use roe::llm::{BackendConfig, ChatBackend, RecordingBackend, ReplayBackend, ScriptTable};
use roe::policies;
use roe::prompts::PromptCatalog;
use roe::sim::{clock, Difficulty, SimConfig};

#[derive(Parser)]
#[command(name = "roe", version, about = "Reflective agents for a deterministic text RTS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one episode with the expert experience.
    Play(PlayArgs),
    /// Run one test: up to max-round games with reflection in between.
    Test(TestArgs),
    /// Run tests over several difficulties and write a report.
    Experiment(ExperimentArgs),
    /// Same as experiment under one ablation.
    Ablate(AblateArgs),
    /// Print a written report, optionally re-running it to check it reproduces.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Expert,
    Staged,
    Greedy,
    Passive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Scripted,
    Http,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value = "hard", value_parser = parse_difficulty)]
    difficulty: Difficulty,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "scripted")]
    backend: Kind,
    /// Built-in script for the scripted backend.
    #[arg(long, value_enum, default_value = "staged")]
    policy: Policy,
    /// JSON script table; overrides --policy.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value = "http://127.0.0.1:8000")]
    endpoint: String,
    #[arg(long, default_value = "gpt-3.5-turbo")]
    model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Append every model call to this session file.
    #[arg(long, conflicts_with = "replay")]
    record: Option<PathBuf>,
    /// Answer model calls from a recorded session file.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Simulator config (TOML); defaults to the built-in one.
    #[arg(long)]
    sim_config: Option<PathBuf>,
    /// Directory of prompt templates; defaults to the built-in catalog.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    window: usize,
    #[arg(long, default_value_t = 8)]
    n_average: usize,
    #[arg(long, default_value_t = 5)]
    max_round: u32,
    /// Ask the model for the phase label instead of the rule table.
    #[arg(long)]
    llm_phase: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "none", value_parser = parse_ablation)]
    ablation: Ablation,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10)]
    n_tests: usize,
    /// Comma-separated levels; all four when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_difficulty)]
    difficulties: Vec<Difficulty>,
    #[arg(long, default_value = "none", value_parser = parse_ablation)]
    ablation: Ablation,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_ablation)]
    mode: Ablation,
    #[arg(long, default_value_t = 10)]
    n_tests: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_difficulty)]
    difficulties: Vec<Difficulty>,
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
    /// Re-run from the saved run config and compare the win-rate table.
    #[arg(long)]
    verify: bool,
}

fn parse_difficulty(s: &str) -> Result<Difficulty, String> {
    Difficulty::parse(s).ok_or_else(|| format!("unknown difficulty {s:?} (hard, harder, veryhard, elite)"))
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    Ablation::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Ablation::ALL.iter().map(|a| a.name()).collect();
        format!("unknown ablation {s:?} ({})", names.join(", "))
    })
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn backend_config(c: &Common) -> AnyResult<BackendConfig> {
    Ok(match c.backend {
        Kind::Scripted => {
            let table = match &c.script {
                Some(p) => serde_json::from_str::<ScriptTable>(&std::fs::read_to_string(p)?)?,
                None => match c.policy {
                    Policy::Expert => policies::expert_table(),
                    Policy::Staged => policies::staged_table(),
                    Policy::Greedy => policies::greedy_table(),
                    Policy::Passive => policies::passive_table(),
                },
            };
            BackendConfig::scripted(table)
        }
        Kind::Http => {
            let mut b = BackendConfig::http(&c.endpoint, &c.model);
            b.api_key_env_var = c.api_key_env.clone();
            b.timeout_s = c.timeout;
            b
        }
    })
}

fn run_config(c: &Common) -> AnyResult<RunConfig> {
    let mut cfg = RunConfig::new(c.difficulty, backend_config(c)?);
    cfg.seed = c.seed;
    cfg.max_round = c.max_round;
    cfg.keyframe_params = KeyFrameParams {
        window: c.window,
        n_average: c.n_average,
    };
    if c.llm_phase {
        cfg.phase_mode = PhaseMode::Llm;
    }
    if let Some(p) = &c.sim_config {
        cfg.sim = SimConfig::load(p)?;
        cfg.decision_interval = cfg.sim.decision_interval;
    }
    cfg.output_dir = c.out.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn harness(c: &Common, cfg: &RunConfig) -> AnyResult<Harness> {
    let catalog = match &c.prompts {
        Some(dir) => PromptCatalog::load_dir(dir)?,
        None => PromptCatalog::builtin(),
    };
    if let Some(path) = &c.replay {
        return Ok(Harness::with_backend(Arc::new(ReplayBackend::load(path)?), catalog));
    }
    if let Some(path) = &c.record {
        let inner = cfg.backend.build()?;
        let rec: Arc<dyn ChatBackend> = Arc::new(RecordingBackend::create(inner, path)?);
        return Ok(Harness::with_backend(rec, catalog));
    }
    let backend = cfg.backend.clone();
    Ok(Harness::new(Arc::new(move || backend.build()), catalog))
}

fn play(args: PlayArgs) -> AnyResult<()> {
    let cfg = run_config(&args.common)?;
    let h = harness(&args.common, &cfg)?;
    let backend = h.backend()?;
    let id = EpisodeId {
        test: 0,
        round: 0,
        seed: cfg.seed,
    };
    let ep = h.run_episode(&cfg, backend.as_ref(), &h.expert(), id)?;
    for f in &ep.log.frames {
        let acts: Vec<&str> = f.action_taken.iter().map(|a| a.display_name()).collect();
        println!("{} {:<14} {}", clock(f.l2.tick), f.l2.phase.label(), acts.join(", "));
        for e in &f.events {
            println!("      {e}");
        }
    }
    println!("{} at {}", ep.result.outcome, clock(ep.result.tick_ended));
    Ok(())
}

fn test(args: TestArgs) -> AnyResult<()> {
    let mut cfg = run_config(&args.common)?;
    cfg.ablation = args.ablation;
    let h = harness(&args.common, &cfg)?;
    let t = h.run_test(&cfg, 0)?;
    for r in &t.rounds {
        println!(
            "round {} seed {}: {} at {} [{}]",
            r.round,
            r.seed,
            r.result.outcome,
            clock(r.result.tick_ended),
            r.experience_origin
        );
        if let Some(e) = &r.reflection_error {
            println!("    reflection failed: {e}");
        }
    }
    println!("{} after {} rounds", t.final_outcome, t.rounds_used);
    Ok(())
}

fn experiment(common: &Common, difficulties: Vec<Difficulty>, n_tests: usize, ablation: Ablation) -> AnyResult<()> {
    let mut cfg = run_config(common)?;
    cfg.ablation = ablation;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("roe-out"));
    cfg.output_dir = Some(out.clone());
    let levels = if difficulties.is_empty() { Difficulty::ALL.to_vec() } else { difficulties };
    let h = harness(common, &cfg)?;
    let report = h.run_experiment(&levels, n_tests, &cfg)?;
    emit_report(&report, &out)?;
    let saved = SavedRun {
        config: cfg.clone(),
        difficulties: levels,
        n_tests,
    };
    std::fs::write(out.join("run_config.json"), serde_json::to_string_pretty(&saved)? + "\n")?;
    print!("{}", report.table_text());
    println!("report written to {}", out.display());
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SavedRun {
    config: RunConfig,
    difficulties: Vec<Difficulty>,
    n_tests: usize,
}

fn report(args: ReportArgs) -> AnyResult<bool> {
    let table = std::fs::read_to_string(args.dir.join("winrates.txt"))?;
    print!("{table}");
    if let Ok(rounds) = std::fs::read_to_string(args.dir.join("rounds.txt")) {
        println!();
        print!("{rounds}");
    }
    if !args.verify {
        return Ok(true);
    }
    let saved: SavedRun = serde_json::from_str(&std::fs::read_to_string(args.dir.join("run_config.json"))?)?;
    let h = Harness::from_backend_config(&saved.config.backend);
    let mut cfg = saved.config;
    cfg.output_dir = None;
    let again = h.run_experiment(&saved.difficulties, saved.n_tests, &cfg)?;
    let same = again.table_text() == table;
    println!("\nre-run {}", if same { "reproduces the table" } else { "DIFFERS from the table" });
    if !same {
        print!("{}", again.table_text());
    }
    Ok(same)
}

fn run(cli: Cli) -> AnyResult<bool> {
    match cli.command {
        Command::Play(a) => play(a)?,
        Command::Test(a) => test(a)?,
        Command::Experiment(a) => experiment(&a.common, a.difficulties, a.n_tests, a.ablation)?,
        Command::Ablate(a) => experiment(&a.common, a.difficulties, a.n_tests, a.mode)?,
        Command::Report(a) => return report(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
