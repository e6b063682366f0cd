//! `factful` command line.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use factful_core::curation::{run_pipeline, read_candidates, ExternalAnnotations};
use factful_core::engine::{Engine, EngineConfig};
use factful_core::policy::FactIndex;
use factful_core::sim::{run_ab, run_arm, Arm};
use factful_core::{store_stats, Exec};
use std::sync::Arc;

use crate::config::AppConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "factful", version, about = "Cooking assistant with interleaved trivia")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn candidate facts into a curated store.
    Curate {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Task corpus used for entity matching and step linking.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Relevance scores and labels, one JSON record per line. Repeatable.
        #[arg(long)]
        external: Vec<PathBuf>,
        /// Write each stage's survivors to <dir>/<stage>.jsonl.
        #[arg(long)]
        dump_stages: Option<PathBuf>,
        #[arg(long)]
        quarantine_out: Option<PathBuf>,
    },
    /// Check a fact store; exits 1 if any record is invalid.
    Validate {
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Counts and mean fact length of a store.
    Stats {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Seeded A/B simulation, facts off against facts on.
    Simulate {
        /// Sessions per arm.
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        session_dir: Option<PathBuf>,
    },
    /// Talk to a local engine on stdin/stdout.
    Chat {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

/// Parses the process arguments and runs; returns the exit code. Usage
/// errors exit with 2 inside clap.
pub fn run() -> i32 {
    let cli = Cli::parse();
    init_logging();
    let config = match AppConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match execute(cli.command, config) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(io::stderr)
        .try_init();
}

fn pick<'a>(flag: &'a Option<PathBuf>, configured: &'a Option<PathBuf>) -> Option<&'a Path> {
    flag.as_deref().or(configured.as_deref())
}

fn local_engine(config: &AppConfig, store: Option<&Path>, corpus: Option<&Path>) -> Result<Engine, String> {
    let (store, _) = crate::load_fact_store(store).map_err(|e| e.to_string())?;
    let corpus = crate::load_corpus(corpus).map_err(|e| e.to_string())?;
    Engine::new(
        Arc::new(corpus),
        Arc::new(FactIndex::new(store.facts)),
        EngineConfig {
            policy: config.policy,
            facts_enabled: config.service.facts_enabled,
            ..EngineConfig::default()
        },
    )
    .map_err(|e| e.to_string())
}

pub fn execute(command: Command, mut config: AppConfig) -> Result<i32, String> {
    match command {
        Command::Curate {
            candidates,
            out,
            corpus,
            external,
            dump_stages,
            quarantine_out,
        } => {
            let cands = read_candidates(&candidates).map_err(|e| e.to_string())?;
            let corpus = crate::load_corpus(pick(&corpus, &config.service.corpus_path))
                .map_err(|e| e.to_string())?;
            let mut ext = ExternalAnnotations::default();
            for path in &external {
                ext.extend(ExternalAnnotations::read(path).map_err(|e| e.to_string())?);
            }
            let output = run_pipeline(&cands, &config.curation, &corpus.tasks, &ext, dump_stages.is_some())
                .map_err(|e| e.to_string())?;
            output.store.write(&out).map_err(|e| e.to_string())?;
            if let Some(dir) = dump_stages {
                std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                for dump in &output.dumps {
                    let path = dir.join(format!("{}.jsonl", dump.stage));
                    std::fs::write(&path, jsonl(&dump.records)).map_err(|e| format!("{}: {e}", path.display()))?;
                }
            }
            if let Some(path) = quarantine_out {
                std::fs::write(&path, jsonl(&output.quarantined)).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let r = &output.report;
            println!(
                "stored {} facts from {} candidates ({} sentences) -> {}",
                r.stored,
                r.candidates_in,
                r.sentences_in,
                out.display()
            );
            println!(
                "dropped: relevance {}, entity {}, labels {}, interestingness {}, duplicates {}; quarantined {}; unlinked {}",
                r.relevance_dropped,
                r.entity_dropped,
                r.label_irrelevant_dropped,
                r.interestingness_dropped,
                r.dedup_dropped,
                r.quarantined,
                r.unlinked
            );
            Ok(EXIT_OK)
        }
        Command::Validate { store } => {
            let (store, origin) = crate::load_fact_store(pick(&store, &config.service.fact_store_path))
                .map_err(|e| e.to_string())?;
            let report = store.validate();
            for v in &report.violations {
                println!("{v}");
            }
            println!("{origin}: {} facts, {} violations", report.records, report.violations.len());
            Ok(if report.is_valid() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Stats { store, json } => {
            let (store, origin) = crate::load_fact_store(pick(&store, &config.service.fact_store_path))
                .map_err(|e| e.to_string())?;
            let stats = store_stats(&store.facts).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                println!("store:      {origin}");
                println!("facts:      {}", stats.fact_count);
                println!("entities:   {}", stats.entity_count);
                println!("providers:  {}", stats.provider_count);
                println!("mean words: {:.2}", stats.mean_words);
            }
            Ok(EXIT_OK)
        }
        Command::Simulate {
            n,
            seed,
            store,
            corpus,
            sequential,
            json,
        } => {
            let engine = local_engine(
                &config,
                pick(&store, &config.service.fact_store_path),
                pick(&corpus, &config.service.corpus_path),
            )?;
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            let model = config.simulation;
            if n == 1 {
                let mut text = format!("single-session simulation  seed={seed}\n");
                let mut arms = Vec::new();
                for arm in [Arm::Control, Arm::Treatment] {
                    let report = run_arm(&model, &engine, arm, 1, seed, exec).map_err(|e| e.to_string())?;
                    let o = &report.sessions[0].outcome;
                    writeln!(
                        text,
                        "{:<10} task={} turns={} steps={}/{} completed={} facts_shown={} liked={} rating={}",
                        arm.name(),
                        o.task_id.as_deref().unwrap_or("-"),
                        o.turn_count,
                        o.steps_reached,
                        o.total_steps,
                        o.completed,
                        o.facts_shown,
                        o.facts_liked,
                        o.rating.map_or("-".into(), |r| r.to_string())
                    )
                    .unwrap();
                    arms.push(report);
                }
                text.push_str("significance: n/a for a single session\n");
                if json {
                    println!("{}", serde_json::to_string_pretty(&arms).expect("report serializes"));
                } else {
                    print!("{text}");
                }
                return Ok(EXIT_OK);
            }
            let report = run_ab(&model, &engine, n, seed, exec).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", report.to_table());
            }
            Ok(EXIT_OK)
        }
        Command::Serve { listen, session_dir } => {
            if let Some(l) = listen {
                config.service.listen = l;
            }
            if let Some(d) = session_dir {
                config.service.session_dir = d;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime
                .block_on(crate::serve(
                    config,
                    |addr| {
                        println!("listening on {addr}");
                        let _ = io::stdout().flush();
                    },
                    async {
                        let _ = tokio::signal::ctrl_c().await;
                    },
                ))
                .map_err(|e| e.to_string())?;
            Ok(EXIT_OK)
        }
        Command::Chat { store, corpus } => {
            let engine = local_engine(
                &config,
                pick(&store, &config.service.fact_store_path),
                pick(&corpus, &config.service.corpus_path),
            )?;
            chat(&engine, io::stdin().lock(), io::stdout().lock()).map_err(|e| e.to_string())?;
            Ok(EXIT_OK)
        }
    }
}

fn jsonl<T: serde::Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Read-eval loop: one utterance per line until the session ends or input
/// runs out.
pub fn chat(engine: &Engine, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
    let mut session = engine.new_session("local");
    writeln!(out, "Ask me to find a recipe, for example \"find pancakes\".")?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match engine.handle_turn(&mut session, &line) {
            Ok(turn) => {
                writeln!(out, "{}", turn.text)?;
                if let Some(card) = turn.display_payload.as_ref().and_then(|d| d.fact_card.as_ref()) {
                    writeln!(out, "  (source: {} {})", card.provider, card.source_url)?;
                }
            }
            Err(e) => writeln!(out, "[{e}]")?,
        }
        if session.is_ended() {
            break;
        }
    }
    Ok(())
}
