use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::AgentSpec;
use crate::embedding::synthetic::SyntheticSpec;
use crate::embedding::DEFAULT_NEIGHBORS;
use crate::error::{Error, Result};
use crate::game::{Composition, DEFAULT_TURN_LIMIT};

/// How a stochastic environment corrupts clues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// The guesser reads the clue's vector plus Gaussian noise.
    ClueVectorNoise,
    /// The clue vector is perturbed in the spymaster's space and snapped to
    /// the nearest legal word before the guesser sees it.
    SnapNoise,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::ClueVectorNoise => "clue_vector_noise",
            Channel::SnapNoise => "snap_noise",
        })
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clue_vector_noise" => Ok(Channel::ClueVectorNoise),
            "snap_noise" => Ok(Channel::SnapNoise),
            _ => Err(format!("unknown channel `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Environment {
    Deterministic,
    Stochastic { noise: f64, channel: Channel },
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Environment::Deterministic => f.write_str("deterministic"),
            Environment::Stochastic { noise, channel } => write!(f, "stochastic:{noise}:{channel}"),
        }
    }
}

impl FromStr for Environment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "deterministic" {
            return Ok(Environment::Deterministic);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["stochastic", noise, channel] => {
                let noise: f64 = noise.parse().map_err(|_| format!("bad noise in `{s}`"))?;
                if !noise.is_finite() || noise < 0.0 {
                    return Err(format!("noise must be non-negative in `{s}`"));
                }
                Ok(Environment::Stochastic {
                    noise,
                    channel: channel.parse()?,
                })
            }
            _ => Err(format!("unknown environment `{s}`")),
        }
    }
}

/// How synthetic embeddings relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticMode {
    /// One shared topic structure, per-embedding jitter.
    #[default]
    Family,
    /// Each embedding draws its own topic structure.
    Independent,
}

/// Generated embeddings, used instead of (or next to) files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub names: Vec<String>,
    #[serde(default)]
    pub mode: SyntheticMode,
    #[serde(flatten)]
    pub spec: SyntheticSpec,
}

fn default_games() -> usize {
    100
}
fn default_workers() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_turn_limit() -> u32 {
    DEFAULT_TURN_LIMIT
}
fn default_neighbors() -> usize {
    DEFAULT_NEIGHBORS
}
fn default_environments() -> Vec<Environment> {
    vec![Environment::Deterministic]
}

/// One experiment: every spymaster × guesser × environment pairing, each
/// played for `games` seeded games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_games")]
    pub games: usize,
    /// Worker threads; 0 uses every core.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Results CSV. The aligned text table goes next to it with a `.txt`
    /// extension.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory receiving one transcript per game.
    #[serde(default)]
    pub transcripts: Option<PathBuf>,
    #[serde(default)]
    pub composition: Composition,
    #[serde(default = "default_turn_limit")]
    pub turn_limit: u32,
    /// Play every pairing on the same boards, for paired comparisons.
    #[serde(default = "default_true")]
    pub shared_boards: bool,
    /// Fill the `seconds` column. Off by default so that results files are
    /// byte-identical across runs.
    #[serde(default)]
    pub timing: bool,
    /// Unit-normalize loaded embeddings.
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    /// Seed of the Voronoi sample sets, kept apart from `seed` so that
    /// precomputed caches stay valid across experiments.
    #[serde(default)]
    pub voronoi_seed: u64,
    /// Embedding name → file path, relative to the config file.
    #[serde(default)]
    pub embeddings: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    /// The Bayesian agents' model set; guessers built on these embeddings
    /// are in-distribution.
    #[serde(default)]
    pub models: Vec<String>,
    pub spymasters: Vec<AgentSpec>,
    pub guessers: Vec<AgentSpec>,
    #[serde(default = "default_environments")]
    pub environments: Vec<Environment>,
}

impl ExperimentConfig {
    /// Parses a config and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config: Self = text.parse()?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in config.embeddings.values_mut() {
            *p = base.join(&*p);
        }
        config.output = config.output.map(|p| base.join(p));
        config.transcripts = config.transcripts.map(|p| base.join(p));
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.games == 0 {
            return bad("games must be at least 1".into());
        }
        self.composition.validate()?;
        if self.turn_limit == 0 {
            return bad("turn_limit must be at least 1".into());
        }
        for (role, specs, want) in [
            ("spymasters", &self.spymasters, crate::agents::Role::Spymaster),
            ("guessers", &self.guessers, crate::agents::Role::Guesser),
        ] {
            if specs.is_empty() {
                return bad(format!("no {role} listed"));
            }
            if let Some(s) = specs.iter().find(|s| s.role() != want) {
                return bad(format!("`{s}` listed under {role}"));
            }
        }
        let known = |n: &str| {
            self.embeddings.contains_key(n) || self.synthetic.as_ref().is_some_and(|s| s.names.iter().any(|x| x == n))
        };
        for spec in self.spymasters.iter().chain(&self.guessers) {
            if let Some(n) = spec.embeddings().into_iter().find(|n| !known(n)) {
                return bad(format!("`{spec}` uses undeclared embedding `{n}`"));
            }
        }
        if let Some(n) = self.models.iter().find(|n| !known(n)) {
            return bad(format!("model set names undeclared embedding `{n}`"));
        }
        if self.environments.is_empty() {
            return bad("no environments listed".into());
        }
        Ok(())
    }

    /// Embedding names referenced by any agent, sorted.
    pub fn used_embeddings(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .spymasters
            .iter()
            .chain(&self.guessers)
            .flat_map(|s| s.embeddings())
            .map(str::to_owned)
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let config: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 3
        spymasters = ["static:spymaster:a"]
        guessers = ["static:guesser:a", "bayes:guesser:a,b:skip=0.5"]

        [embeddings]
        a = "a.txt"
        b = "b.txt"
    "#;

    #[test]
    fn defaults() {
        let c: ExperimentConfig = MINIMAL.parse().unwrap();
        assert_eq!(c.games, 100);
        assert_eq!(c.workers, 1);
        assert!(c.shared_boards);
        assert!(!c.timing);
        assert_eq!(c.environments, vec![Environment::Deterministic]);
        assert_eq!(c.composition, Composition::default());
        assert_eq!(c.used_embeddings(), vec!["a", "b"]);
    }

    #[test]
    fn environments_and_synthetic() {
        let text = r#"
            seed = 1
            spymasters = ["static:spymaster:x"]
            guessers = ["static:guesser:y"]
            environments = [
                { kind = "deterministic" },
                { kind = "stochastic", noise = 1.0, channel = "snap_noise" },
            ]
            [synthetic]
            names = ["x", "y"]
            mode = "independent"
            clusters = 20
        "#;
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.environments[1].to_string(), "stochastic:1:snap_noise");
        let s = c.synthetic.unwrap();
        assert_eq!(s.mode, SyntheticMode::Independent);
        assert_eq!(s.spec.clusters, 20);
        assert_eq!(s.spec.dim, SyntheticSpec::default().dim);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        for bad in [
            MINIMAL.replace("seed = 3", "seed = 3\ngames = 0"),
            MINIMAL.replace("static:guesser:a\", ", ""),
            MINIMAL.replace("static:spymaster:a", "static:guesser:a"),
            MINIMAL.replace("static:spymaster:a", "static:spymaster:zz"),
            MINIMAL.replace("seed = 3", "seed = 3\nunknown = 1"),
        ] {
            assert!(bad.parse::<ExperimentConfig>().is_err(), "{bad}");
        }
    }

    #[test]
    fn environment_strings_round_trip() {
        for e in ["deterministic", "stochastic:1:clue_vector_noise", "stochastic:0.5:snap_noise"] {
            assert_eq!(e.parse::<Environment>().unwrap().to_string(), e);
        }
        assert!("stochastic:-1:snap_noise".parse::<Environment>().is_err());
    }
}
