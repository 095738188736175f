use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use cave_agent::{ChatClient, HttpChatClient};
use cave_harness::agents::{AgentKind, AgentSpec, LlmSpec, Mechanism, ScriptPolicy};
use cave_harness::mock::{load_script, MockServer};
use cave_harness::trials::{Condition, TrialMatrix};
use cave_harness::{append_records, load_records, render_frames, run_trials, summarize, PriceTable, RunConfig};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "cave", version, about = "Wumpus cave benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes and append them to a log.
    Run(RunArgs),
    /// Re-simulate a logged episode and print its frames.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// 0-based index of the episode in the log.
        #[arg(long, default_value_t = 0)]
        episode: usize,
    },
    /// Print metrics over a log.
    Summarize {
        #[arg(long)]
        log: PathBuf,
        /// TOML price table, or a run config with a [pricing] table.
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Serve a scripted chat endpoint.
    MockServe {
        /// JSON array of {content, usage, delay_ms}.
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AgentKind::Oracle)]
    agent: AgentKind,
    #[arg(long, value_enum)]
    mechanism: Option<Mechanism>,
    /// Full chat-completions URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    critic_model: Option<String>,
    /// TOML file with the trial matrix (`step_limit` and `[[conditions]]`).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Base seed of the standard matrix.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Run a single condition instead of the matrix.
    #[arg(long, requires_all = ["pits", "wumpus"])]
    grid: Option<u32>,
    #[arg(long)]
    pits: Option<u32>,
    #[arg(long)]
    wumpus: Option<u32>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long, default_value = "episodes.ndjson")]
    out: PathBuf,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Replay { log, episode } => {
            let records = load_records(&log)?;
            let record = records
                .get(episode)
                .with_context(|| format!("log holds {} episodes", records.len()))?;
            for frame in render_frames(record)? {
                println!("{frame}");
            }
            println!("replay verified: {} with score {}", record.status.as_str(), record.score);
            Ok(())
        }
        Command::Summarize { log, prices, json } => {
            let records = load_records(&log)?;
            let prices = match prices {
                Some(path) => load_prices(&path)?,
                None => PriceTable::default(),
            };
            let summary = summarize(&records, &prices)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                print!("{}", summary.report());
            }
            Ok(())
        }
        Command::MockServe { script, port } => {
            let server = MockServer::start(load_script(&script)?, port)?;
            eprintln!("serving {}", server.url());
            server.wait();
            Ok(())
        }
    }
}

fn load_prices(path: &PathBuf) -> Result<PriceTable> {
    let text = std::fs::read_to_string(path)?;
    let value: toml::Table = toml::from_str(&text)?;
    let table = match value.get("pricing") {
        Some(p) => p.clone().try_into()?,
        None => toml::Value::Table(value).try_into()?,
    };
    Ok(table)
}

#[derive(serde::Deserialize)]
struct MatrixFile {
    step_limit: Option<u32>,
    conditions: Vec<Condition>,
}

fn run(args: RunArgs) -> Result<()> {
    if args.mechanism.is_some() && args.agent != AgentKind::Llm {
        bail!("--mechanism applies to --agent llm only");
    }
    let config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut matrix = match &args.matrix {
        Some(path) => {
            let file: MatrixFile = toml::from_str(&std::fs::read_to_string(path)?)?;
            TrialMatrix { conditions: file.conditions, step_limit: file.step_limit.unwrap_or(config.step_limit) }
        }
        None => {
            let base = args.seed.unwrap_or(config.trials.base_seed);
            let trials = args.trials.unwrap_or(config.trials.trials_per_condition);
            match config.trials.conditions {
                Some(_) => config.matrix(),
                None => TrialMatrix::standard(base, trials).with_step_limit(config.step_limit),
            }
        }
    };
    if let Some(n) = args.grid {
        let base = args.seed.unwrap_or(config.trials.base_seed);
        let trials = args.trials.unwrap_or(config.trials.trials_per_condition) as u64;
        matrix.conditions = vec![Condition {
            grid_size: n,
            num_pits: args.pits.unwrap_or(0),
            num_wumpus: args.wumpus.unwrap_or(0),
            seeds: (base..base + trials).collect(),
        }];
    }

    let spec = match args.agent {
        AgentKind::Oracle => AgentSpec::Oracle,
        AgentKind::Scripted => AgentSpec::Scripted(ScriptPolicy::FirstFrontier),
        AgentKind::Random => AgentSpec::Random { seed: args.seed.unwrap_or(0) },
        AgentKind::Llm => {
            let mut llm = config.llm.clone();
            if let Some(e) = args.endpoint.clone() {
                llm.endpoint = Some(e);
            }
            if let Some(m) = args.model.clone() {
                llm.model = Some(m);
            }
            let critic_model = args.critic_model.clone().or(llm.critic_model.clone());
            let mechanism = args.mechanism.unwrap_or(Mechanism::Cos);
            let planner: Arc<dyn ChatClient> = Arc::new(HttpChatClient::new(llm.endpoint_config(None)?)?);
            let critic: Option<Arc<dyn ChatClient>> = match critic_model {
                Some(m) => Some(Arc::new(HttpChatClient::new(llm.endpoint_config(Some(&m))?)?)),
                None => None,
            };
            AgentSpec::Llm(LlmSpec {
                mechanism,
                planner,
                critic,
                threshold: config.critic.threshold,
                parse_retries: llm.parse_retries,
            })
        }
    };

    let parallelism = args.parallelism.unwrap_or(config.trials.parallelism);
    eprintln!("running {} episodes on {} workers", matrix.len(), parallelism);
    let records = run_trials(&matrix, &spec, parallelism)?;
    append_records(&args.out, &records)?;
    eprintln!("appended {} records to {}", records.len(), args.out.display());
    let summary = summarize(&records, &config.pricing)?;
    print!("{}", summary.report());
    Ok(())
}
