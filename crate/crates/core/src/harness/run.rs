use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Environment, ExperimentConfig, SyntheticMode};
use super::play::{play_game, GameRecord};
use crate::agents::{index_subset, AgentSpec, ModelRegistry};
use crate::embedding::{EmbeddingTable, LoadOptions, Semantics};
use crate::error::{Error, Result};
use crate::game::{new_game, BoardView, GameResult, WorldState};
use crate::seed;

/// Vocabularies above this size only get neighbor lists for board words.
const FULL_INDEX_LIMIT: usize = 50_000;

/// One pairing × environment, aggregated over its games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub spymaster: String,
    pub guesser: String,
    pub environment: String,
    /// Valid games; aborted ones are only counted in `invalid`.
    pub games: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub mean_score: f64,
    pub mean_turns: f64,
    pub invalid: usize,
    /// Summed game time, when timing is enabled.
    pub seconds: Option<f64>,
}

impl ResultRow {
    pub fn aggregate(
        spymaster: &AgentSpec,
        guesser: &AgentSpec,
        env: Environment,
        records: &[GameRecord],
        timing: bool,
    ) -> Self {
        let valid: Vec<_> = records.iter().filter_map(|r| r.outcome).collect();
        let games = valid.len();
        let wins = valid.iter().filter(|o| o.result == GameResult::Win).count();
        let mean = |f: &dyn Fn(&crate::game::Outcome) -> f64| {
            if games == 0 {
                0.0
            } else {
                valid.iter().map(f).sum::<f64>() / games as f64
            }
        };
        Self {
            spymaster: spymaster.to_string(),
            guesser: guesser.to_string(),
            environment: env.to_string(),
            games,
            wins,
            win_rate: if games == 0 { 0.0 } else { wins as f64 / games as f64 },
            mean_score: mean(&|o| o.score as f64),
            mean_turns: mean(&|o| f64::from(o.turns)),
            invalid: records.len() - games,
            seconds: timing.then(|| records.iter().map(|r| r.seconds).sum()),
        }
    }
}

/// Loads (or generates) every embedding the config uses and indexes them.
pub fn build_registry(config: &ExperimentConfig) -> Result<ModelRegistry> {
    let mut registry = ModelRegistry::new(config.voronoi_seed).with_cache_dir(ModelRegistry::cache_dir_from_env());
    let mut tables: Vec<EmbeddingTable> = Vec::new();
    if let Some(synthetic) = &config.synthetic {
        let names: Vec<&str> = synthetic.names.iter().map(String::as_str).collect();
        tables.extend(match synthetic.mode {
            SyntheticMode::Family => synthetic.spec.family(&names),
            SyntheticMode::Independent => synthetic.spec.independent(&names),
        });
    }
    let options = if config.normalize {
        LoadOptions::default()
    } else {
        LoadOptions::raw()
    };
    let mut needed: BTreeSet<String> = config.used_embeddings().into_iter().collect();
    needed.extend(config.models.iter().cloned());
    for (name, path) in &config.embeddings {
        if needed.contains(name) {
            tracing::info!(embedding = %name, path = %path.display(), "loading");
            let table = EmbeddingTable::load(path, name.clone(), options)?;
            if table.duplicates() > 0 {
                tracing::warn!(embedding = %name, duplicates = table.duplicates(), "duplicate words ignored");
            }
            tables.push(table);
        }
    }
    // the board pool is only known once every vocabulary is in
    let vocabularies: Vec<BTreeSet<&str>> = tables
        .iter()
        .filter(|t| needed.contains(t.name()))
        .map(|t| t.words().iter().map(String::as_str).collect())
        .collect();
    let pool: Vec<String> = vocabularies
        .split_first()
        .map(|(first, rest)| {
            first
                .iter()
                .filter(|w| rest.iter().all(|v| v.contains(*w)))
                .map(|w| (*w).to_owned())
                .collect()
        })
        .unwrap_or_default();
    for table in tables {
        let semantics = if table.len() > FULL_INDEX_LIMIT {
            index_subset(table, config.neighbors, &pool)
        } else {
            Semantics::index_all(table, config.neighbors)
        };
        registry.insert(Arc::new(semantics));
    }
    Ok(registry)
}

/// Everything needed to play the games of one config.
pub struct Harness {
    config: ExperimentConfig,
    registry: ModelRegistry,
    pool: Vec<String>,
    threads: rayon::ThreadPool,
}

impl std::fmt::Debug for Harness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Harness")
            .field("config", &self.config)
            .field("pool", &self.pool.len())
            .finish_non_exhaustive()
    }
}

/// Rows of a matrix run plus the games behind them, in row order.
#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub rows: Vec<ResultRow>,
    pub records: Vec<Vec<GameRecord>>,
}

impl Harness {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let registry = build_registry(&config)?;
        Self::with_registry(config, registry)
    }

    /// Uses an already populated registry, e.g. one shared between runs.
    pub fn with_registry(config: ExperimentConfig, registry: ModelRegistry) -> Result<Self> {
        config.validate()?;
        let pool = registry.word_pool(&config.used_embeddings())?;
        let threads = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start workers: {e}")))?;
        Ok(Self {
            config,
            registry,
            pool,
            threads,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn registry(&self) -> &ModelRegistry {
        &self.registry
    }

    pub fn word_pool(&self) -> &[String] {
        &self.pool
    }

    /// Seed of game `index` of a pairing; a pure function of the master
    /// seed, the pairing and the index.
    pub fn game_seed(&self, spymaster: &AgentSpec, guesser: &AgentSpec, env: Environment, index: usize) -> u64 {
        seed::derive(
            self.config.seed,
            &[
                seed::hash_str(&spymaster.to_string()),
                seed::hash_str(&guesser.to_string()),
                seed::hash_str(&env.to_string()),
                index as u64,
            ],
        )
    }

    /// The board of a game. With shared boards it depends on the index alone.
    pub fn deal(&self, game_seed: u64, index: usize) -> Result<(WorldState, BoardView)> {
        let board_seed = if self.config.shared_boards {
            seed::derive(self.config.seed, &[seed::hash_str("board"), index as u64])
        } else {
            seed::derive(game_seed, &[seed::hash_str("board")])
        };
        Ok(new_game(
            &self.pool,
            self.config.composition,
            self.config.turn_limit,
            &mut seed::rng(board_seed),
        )?)
    }

    pub fn play(&self, spymaster: &AgentSpec, guesser: &AgentSpec, env: Environment, index: usize) -> Result<GameRecord> {
        let game_seed = self.game_seed(spymaster, guesser, env, index);
        let (world, view) = self.deal(game_seed, index)?;
        play_game(&self.registry, spymaster, guesser, env, world, view, game_seed)
    }

    pub fn run_pairing(
        &self,
        spymaster: &AgentSpec,
        guesser: &AgentSpec,
        env: Environment,
    ) -> Result<(ResultRow, Vec<GameRecord>)> {
        let mut report = self.run(&[(spymaster.clone(), guesser.clone(), env)])?;
        Ok((report.rows.remove(0), report.records.remove(0)))
    }

    /// Every environment × spymaster × guesser row, in that nesting order.
    pub fn run_matrix(&self) -> Result<MatrixReport> {
        let mut pairings = Vec::new();
        for &env in &self.config.environments {
            for s in &self.config.spymasters {
                for g in &self.config.guessers {
                    pairings.push((s.clone(), g.clone(), env));
                }
            }
        }
        let report = self.run(&pairings)?;
        if let Some(dir) = &self.config.transcripts {
            write_transcripts(dir, &report)?;
        }
        if let Some(path) = &self.config.output {
            write_csv(path, &report.rows)?;
            let table = render_table(&report.rows, &self.config.models);
            std::fs::write(path.with_extension("txt"), table).map_err(|source| Error::Io {
                path: path.with_extension("txt"),
                source,
            })?;
        }
        Ok(report)
    }

    fn run(&self, pairings: &[(AgentSpec, AgentSpec, Environment)]) -> Result<MatrixReport> {
        let games = self.config.games;
        let tasks: Vec<(usize, usize)> = (0..pairings.len())
            .flat_map(|p| (0..games).map(move |i| (p, i)))
            .collect();
        let played: Vec<GameRecord> = self.threads.install(|| {
            tasks
                .par_iter()
                .map(|&(p, i)| {
                    let (s, g, env) = &pairings[p];
                    self.play(s, g, *env, i)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut records: Vec<Vec<GameRecord>> = Vec::with_capacity(pairings.len());
        let mut rows = Vec::with_capacity(pairings.len());
        let mut it = played.into_iter();
        for (s, g, env) in pairings {
            let chunk: Vec<GameRecord> = it.by_ref().take(games).collect();
            let row = ResultRow::aggregate(s, g, *env, &chunk, self.config.timing);
            tracing::info!(spymaster = %row.spymaster, guesser = %row.guesser, env = %row.environment,
                win_rate = row.win_rate, invalid = row.invalid, "pairing done");
            rows.push(row);
            records.push(chunk);
        }
        Ok(MatrixReport { rows, records })
    }
}

fn write_transcripts(dir: &Path, report: &MatrixReport) -> Result<()> {
    let io = |source| Error::Io {
        path: dir.to_owned(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    for (p, games) in report.records.iter().enumerate() {
        for (i, g) in games.iter().enumerate() {
            let path = dir.join(format!("pairing{p:03}-game{i:04}.txt"));
            std::fs::write(&path, g.transcript.to_string()).map_err(|source| Error::Io { path, source })?;
        }
    }
    Ok(())
}

/// CSV with the columns
/// `spymaster,guesser,environment,games,wins,win_rate,mean_score,mean_turns,invalid,seconds`.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("writing to memory");
    }
    if rows.is_empty() {
        w.write_record([
            "spymaster",
            "guesser",
            "environment",
            "games",
            "wins",
            "win_rate",
            "mean_score",
            "mean_turns",
            "invalid",
            "seconds",
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, csv_string(rows)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_csv(text: &str) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| Error::Config(format!("bad results CSV: {e}")))
}

fn short_label(spec: &str) -> String {
    match spec.parse::<AgentSpec>() {
        Ok(AgentSpec::StaticGuesser { embedding } | AgentSpec::StaticSpymaster { embedding }) => embedding,
        _ => spec.to_owned(),
    }
}

/// Aligned text table per environment: spymasters down, guessers across,
/// grouped into in-distribution (guesser embedding in `models`) and
/// out-of-distribution columns, each group followed by its average.
pub fn render_table(rows: &[ResultRow], models: &[String]) -> String {
    let mut out = String::new();
    let mut envs: Vec<&str> = Vec::new();
    for r in rows {
        if !envs.contains(&r.environment.as_str()) {
            envs.push(&r.environment);
        }
    }
    for env in envs {
        let env_rows: Vec<&ResultRow> = rows.iter().filter(|r| r.environment == env).collect();
        let mut spymasters: Vec<&str> = Vec::new();
        let mut guessers: Vec<&str> = Vec::new();
        for r in &env_rows {
            if !spymasters.contains(&r.spymaster.as_str()) {
                spymasters.push(&r.spymaster);
            }
            if !guessers.contains(&r.guesser.as_str()) {
                guessers.push(&r.guesser);
            }
        }
        let in_dist = |g: &str| {
            g.parse::<AgentSpec>()
                .map(|s| !models.is_empty() && s.embeddings().iter().all(|e| models.iter().any(|m| m == e)))
                .unwrap_or(false)
        };
        let groups: Vec<(&str, Vec<&str>)> = [
            ("in-distribution", guessers.iter().copied().filter(|g| in_dist(g)).collect::<Vec<_>>()),
            ("out-of-distribution", guessers.iter().copied().filter(|g| !in_dist(g)).collect()),
        ]
        .into_iter()
        .filter(|(_, gs)| !gs.is_empty())
        .collect();

        let mut header = vec!["spymaster".to_owned()];
        let mut group_line = vec![String::new()];
        for (name, gs) in &groups {
            for (i, g) in gs.iter().enumerate() {
                header.push(short_label(g));
                group_line.push(if i == 0 { (*name).to_owned() } else { String::new() });
            }
            header.push("Avg".to_owned());
            group_line.push(String::new());
        }
        let mut body: Vec<Vec<String>> = Vec::new();
        for s in &spymasters {
            let mut line = vec![short_label(s)];
            for (_, gs) in &groups {
                let mut rates = Vec::new();
                for g in gs {
                    let rate = env_rows
                        .iter()
                        .find(|r| r.spymaster == *s && r.guesser == *g)
                        .map(|r| r.win_rate);
                    line.push(rate.map_or_else(|| "-".to_owned(), |x| format!("{x:.3}")));
                    rates.extend(rate);
                }
                let avg = rates.iter().sum::<f64>() / rates.len().max(1) as f64;
                line.push(format!("{avg:.3}"));
            }
            body.push(line);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                std::iter::once(&header[c])
                    .chain(std::iter::once(&group_line[c]))
                    .chain(body.iter().map(|l| &l[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let fmt_line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_owned()
        };
        let _ = writeln!(out, "environment: {env}");
        let _ = writeln!(out, "{}", fmt_line(&group_line));
        let _ = writeln!(out, "{}", fmt_line(&header));
        for l in &body {
            let _ = writeln!(out, "{}", fmt_line(l));
        }
        out.push('\n');
    }
    out
}

/// Percentile bootstrap confidence interval of a paired mean difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCi {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// 95% interval for `mean(a − b)` over paired samples (same boards).
pub fn paired_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> BootstrapCi {
    use rand::Rng;
    assert_eq!(a.len(), b.len(), "paired samples");
    assert!(!a.is_empty(), "at least one pair");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let mut rng = seed::rng(seed);
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1)];
    BootstrapCi {
        mean,
        lower: at(0.025),
        upper: at(0.975),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str, g: &str, wins: usize, games: usize) -> ResultRow {
        ResultRow {
            spymaster: s.into(),
            guesser: g.into(),
            environment: "deterministic".into(),
            games,
            wins,
            win_rate: wins as f64 / games as f64,
            mean_score: 1.5,
            mean_turns: 6.0,
            invalid: 0,
            seconds: None,
        }
    }

    #[test]
    fn win_rate_is_a_ratio() {
        assert_eq!(row("s", "g", 37, 50).win_rate, 0.74);
    }

    #[test]
    fn csv_columns_and_round_trip() {
        let rows = vec![row("bayes:spymaster:a,b:noise=1:samples=10", "static:guesser:a", 3, 4)];
        let text = csv_string(&rows);
        assert_eq!(
            text.lines().next().unwrap(),
            "spymaster,guesser,environment,games,wins,win_rate,mean_score,mean_turns,invalid,seconds"
        );
        assert_eq!(read_csv(&text).unwrap(), rows);
        assert_eq!(csv_string(&[]).lines().count(), 1);
    }

    #[test]
    fn table_groups_and_averages() {
        let rows = vec![
            row("static:spymaster:a", "static:guesser:a", 9, 10),
            row("static:spymaster:a", "static:guesser:b", 5, 10),
            row("static:spymaster:a", "static:guesser:c", 2, 10),
        ];
        let table = render_table(&rows, &["a".into(), "b".into()]);
        assert!(table.contains("in-distribution"));
        assert!(table.contains("out-of-distribution"));
        let line = table.lines().find(|l| l.starts_with('a')).unwrap();
        let cells: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cells, vec!["a", "0.900", "0.500", "0.700", "0.200", "0.200"]);
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let a: Vec<f64> = (0..200).map(|i| f64::from(i % 3 == 0)).collect();
        let b: Vec<f64> = (0..200).map(|i| f64::from(i % 5 == 0)).collect();
        let ci = paired_bootstrap(&a, &b, 2000, 1);
        assert!(ci.lower <= ci.mean && ci.mean <= ci.upper);
        assert!(ci.lower > -0.1 && ci.upper < 0.35);
        let same = paired_bootstrap(&a, &a, 100, 1);
        assert_eq!((same.lower, same.upper), (0.0, 0.0));
    }
}
