//! `codenames`: run experiments, precompute caches, replay transcripts, and
//! play against agents through the play service.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use codenames_client::{Client, ClientError};
use codenames_core::agents::{AgentSpec, ModelRegistry, Role, CACHE_DIR_ENV};
use codenames_core::embedding::{EmbeddingTable, LoadOptions, Semantics, SyntheticSpec, VoronoiCache, VoronoiKey, DEFAULT_POOL};
use codenames_core::game::{Clue, Transcript};
use codenames_core::harness::{build_registry, render_table, replay, Environment, ExperimentConfig, Harness};
use codenames_core::session::{SessionConfig, SessionView, Status};
use codenames_service::AppState;

#[derive(Parser)]
#[command(name = "codenames", version, about = "Solitaire Codenames with Bayesian partner-modeling agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play every pairing in a config and print the results table.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's worker count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's CSV output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build Voronoi likelihood caches for one embedding.
    Precompute(PrecomputeArgs),
    /// Re-run a transcript and check that every event matches.
    Replay {
        file: PathBuf,
        /// Config declaring the embeddings the transcript's agents use.
        #[arg(long)]
        config: PathBuf,
    },
    /// Write synthetic planted-cluster embeddings as text files.
    Synth(SynthArgs),
    /// Run the HTTP play service.
    Serve {
        /// Config declaring the embeddings agents may use.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Seconds a session may sit idle before it is dropped.
        #[arg(long, default_value_t = 1800)]
        idle_timeout: u64,
    },
    /// Play a game interactively against an agent on a running service.
    Play {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        server: String,
        /// The role you play.
        #[arg(long, value_parser = parse_role)]
        role: Role,
        /// The agent's spec, e.g. `bayes:spymaster:a,b`.
        #[arg(long)]
        agent: AgentSpec,
        #[arg(long)]
        seed: Option<u64>,
        /// `deterministic` or `stochastic:<noise>:<channel>`.
        #[arg(long, default_value = "deterministic")]
        environment: Environment,
    },
    /// Single session requests against a running service; prints JSON.
    Session {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        server: String,
        #[command(subcommand)]
        action: SessionAction,
    },
}

#[derive(Subcommand)]
enum SessionAction {
    Create {
        #[arg(long, value_parser = parse_role)]
        role: Role,
        #[arg(long)]
        agent: AgentSpec,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "deterministic")]
        environment: Environment,
    },
    View { id: String },
    Clue { id: String, word: String, number: u32 },
    Guess { id: String, words: Vec<String> },
    Step { id: String },
    Beliefs { id: String },
    Transcript { id: String },
}

#[derive(Args)]
struct PrecomputeArgs {
    /// Embedding text file.
    #[arg(long)]
    embedding: PathBuf,
    /// Name the experiments use for this embedding; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Neighbors indexed per word.
    #[arg(long, default_value_t = 300)]
    neighbors: usize,
    /// Monte-Carlo samples per likelihood row.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Noise levels to cache; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    voronoi_seed: u64,
    /// Output directory; defaults to the cache directory variable.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only the first N words of the vocabulary get rows.
    #[arg(long)]
    limit: Option<usize>,
    /// Keep vectors unnormalized, matching `normalize = false` configs.
    #[arg(long)]
    raw: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Family,
    Independent,
}

#[derive(Args)]
struct SynthArgs {
    /// Embedding names, one file each.
    #[arg(long, value_delimiter = ',', required = true)]
    names: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "family")]
    mode: Mode,
    #[arg(long, default_value_t = 40)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    words_per_cluster: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    distortion: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_role(s: &str) -> Result<Role, String> {
    s.parse()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .with_writer(std::io::stderr)
        .init();

    match cli.command {
        Command::Simulate { config, workers, output } => simulate(&config, workers, output),
        Command::Precompute(args) => precompute(args),
        Command::Replay { file, config } => replay_file(&file, &config),
        Command::Synth(args) => synth(args),
        Command::Serve {
            config,
            port,
            host,
            idle_timeout,
        } => serve(&config, &host, port, Duration::from_secs(idle_timeout)),
        Command::Play {
            server,
            role,
            agent,
            seed,
            environment,
        } => runtime()?.block_on(play(Client::new(server), session_config(role, agent, seed, environment))),
        Command::Session { server, action } => runtime()?.block_on(session(Client::new(server), action)),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Runtime::new()?)
}

fn simulate(path: &Path, workers: Option<usize>, output: Option<PathBuf>) -> Result<()> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(w) = workers {
        config.workers = w;
    }
    if output.is_some() {
        config.output = output;
    }
    let models = config.models.clone();
    let harness = Harness::new(config)?;
    let report = harness.run_matrix()?;
    print!("{}", render_table(&report.rows, &models));
    if let Some(out) = &harness.config().output {
        eprintln!("results written to {}", out.display());
    }
    let invalid: usize = report.rows.iter().map(|r| r.invalid).sum();
    if invalid > 0 {
        eprintln!("warning: {invalid} games were aborted by illegal agent actions");
    }
    Ok(())
}

fn precompute(args: PrecomputeArgs) -> Result<()> {
    let name = match args.name {
        Some(n) => n,
        None => args
            .embedding
            .file_stem()
            .and_then(|s| s.to_str())
            .context("cannot derive a name from the embedding path; pass --name")?
            .to_owned(),
    };
    let out = args
        .out
        .or_else(ModelRegistry::cache_dir_from_env)
        .with_context(|| format!("pass --out or set {CACHE_DIR_ENV}"))?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let options = if args.raw { LoadOptions::raw() } else { LoadOptions::default() };
    let table = EmbeddingTable::load(&args.embedding, name.clone(), options)?;
    eprintln!("{name}: {} words, dimension {}", table.len(), table.dim());
    let semantics = Arc::new(Semantics::index_all(table, args.neighbors));
    let words: Vec<usize> = (0..semantics.table.len()).take(args.limit.unwrap_or(usize::MAX)).collect();
    for sigma in args.sigma {
        let key = VoronoiKey {
            sigma,
            samples: args.samples,
            seed: args.voronoi_seed,
        };
        let cache = VoronoiCache::new(semantics.clone(), key, DEFAULT_POOL);
        cache.precompute(&words);
        let path = cache.path_in(&out);
        cache.save(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn replay_file(file: &Path, config: &Path) -> Result<()> {
    let config = ExperimentConfig::load(config)?;
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let transcript: Transcript = text.parse()?;
    let registry = build_registry(&config)?;
    let record = replay(&registry, &transcript, config.turn_limit)?;
    match record.outcome {
        Some(o) => println!("replay matches: {} with score {} in {} turns", o.result, o.score, o.turns),
        None => println!("replay matches: game aborted by an illegal action"),
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        clusters: args.clusters,
        words_per_cluster: args.words_per_cluster,
        dim: args.dim,
        distortion: args.distortion,
        seed: args.seed,
        ..SyntheticSpec::default()
    };
    let names: Vec<&str> = args.names.iter().map(String::as_str).collect();
    let tables = match args.mode {
        Mode::Family => spec.family(&names),
        Mode::Independent => spec.independent(&names),
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for table in tables {
        let path = args.out.join(format!("{}.txt", table.name()));
        table.write_text(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn serve(config: &Path, host: &str, port: u16, idle_timeout: Duration) -> Result<()> {
    let config = ExperimentConfig::load(config)?;
    let registry = build_registry(&config)?;
    // boards come from words every embedding the config mentions knows
    let mut names = config.used_embeddings();
    names.extend(config.models.iter().cloned());
    names.sort();
    names.dedup();
    let pool = registry.word_pool(&names)?;
    let state = AppState::new(Arc::new(registry), pool, idle_timeout);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        codenames_service::serve(listener, state, shutdown).await?;
        Ok(())
    })
}

fn session_config(role: Role, agent: AgentSpec, seed: Option<u64>, environment: Environment) -> SessionConfig {
    SessionConfig {
        seed,
        environment,
        ..Client::config(role, agent)
    }
}

async fn session(client: Client, action: SessionAction) -> Result<()> {
    let json = match action {
        SessionAction::Create {
            role,
            agent,
            seed,
            environment,
        } => to_json(&client.create(&session_config(role, agent, seed, environment)).await?),
        SessionAction::View { id } => to_json(&client.view(&id).await?),
        SessionAction::Clue { id, word, number } => to_json(&client.clue(&id, &Clue::new(word, number)).await?),
        SessionAction::Guess { id, words } => to_json(&client.guess(&id, &words).await?),
        SessionAction::Step { id } => to_json(&client.agent_step(&id).await?),
        SessionAction::Beliefs { id } => to_json(&client.beliefs(&id).await?),
        SessionAction::Transcript { id } => {
            print!("{}", client.transcript(&id).await?);
            return Ok(());
        }
    };
    println!("{json}");
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("wire types serialize")
}

fn print_board(view: &SessionView) {
    println!();
    for row in view.cards.chunks(5) {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match (c.revealed, c.category) {
                (Some(cat), _) => format!("[{}:{}]", c.word, cat),
                (None, Some(cat)) => format!("{}({})", c.word, cat),
                (None, None) => c.word.clone(),
            })
            .collect();
        println!("  {}", cells.join("  "));
    }
    let r = view.remaining;
    println!(
        "turn {}/{}; unrevealed: {} red, {} blue, {} bystander, {} assassin",
        view.turn, view.turn_limit, r.red, r.blue, r.bystander, r.assassin
    );
}

fn prompt(text: &str) -> Result<String> {
    print!("{text}");
    std::io::stdout().flush()?;
    let mut line = String::new();
    if std::io::stdin().lock().read_line(&mut line)? == 0 {
        bail!("input closed");
    }
    Ok(line.trim().to_owned())
}

async fn play(client: Client, config: SessionConfig) -> Result<()> {
    let role = config.role;
    let created = client.create(&config).await?;
    let id = created.id;
    let mut view = created.view;
    println!("session {id}");
    while view.status != Status::Finished {
        let human_turn = matches!(
            (view.status, role),
            (Status::AwaitingClue, Role::Spymaster) | (Status::AwaitingGuess, Role::Guesser)
        );
        if !human_turn {
            let step = client.agent_step(&id).await?;
            if let Some(c) = &step.clue {
                println!("agent clue: {} {}", c.word, c.number);
            }
            for r in &step.revealed {
                println!("agent revealed {} ({})", r.word, r.category);
            }
            view = step.view;
            continue;
        }
        print_board(&view);
        let result = match role {
            Role::Spymaster => {
                let line = prompt("clue (word number): ")?;
                let mut parts = line.split_whitespace();
                let (Some(word), Some(Ok(number)), None) = (parts.next(), parts.next().map(str::parse), parts.next())
                else {
                    println!("enter a word and a number");
                    continue;
                };
                client.clue(&id, &Clue::new(word, number)).await
            }
            Role::Guesser => {
                let clue = view.pending_clue.clone().context("no pending clue")?;
                let line = prompt(&format!("clue is `{} {}`; your guesses in order: ", clue.word, clue.number))?;
                let words: Vec<&str> = line.split_whitespace().collect();
                client.guess(&id, &words).await
            }
        };
        match result {
            Ok(step) => {
                for r in &step.revealed {
                    println!("revealed {} ({})", r.word, r.category);
                }
                view = step.view;
            }
            Err(ClientError::Api { error, .. }) if error.code == "illegal_action" => {
                println!("illegal: {} [{}]", error.message, error.rule.unwrap_or_default());
            }
            Err(e) => return Err(e.into()),
        }
    }
    print_board(&view);
    if let Some(o) = view.outcome {
        println!("{} with score {} after {} turns", o.result, o.score, o.turns);
    }
    let beliefs = client.beliefs(&id).await?;
    if let Some(s) = beliefs.snapshot {
        let parts: Vec<String> = s.models.iter().map(|m| format!("{} {:.3}", m.id, m.posterior)).collect();
        println!("agent beliefs: {}", parts.join(", "));
    }
    Ok(())
}
