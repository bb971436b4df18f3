//! Agent spec strings as used in configs, transcripts and the play service.
//!
//! ```text
//! static:spymaster:<embedding>
//! static:guesser:<embedding>
//! bayes:spymaster:<m1,m2,…>:noise=<σ̂>:samples=<s>[:counts=game|turn]
//! bayes:guesser:<m1,m2,…>:skip=<x>:belief=<y>:noise=<σ>:worlds=<n>:vsamples=<n>[:weighting=uniform|posterior]
//! ```
//!
//! Options may be omitted or reordered; `Display` always writes the full
//! canonical form, so a parsed-then-printed spec round-trips.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GuesserConfig, SpymasterConfig};
use crate::error::SpecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Spymaster,
    Guesser,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Spymaster => "spymaster",
            Role::Guesser => "guesser",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spymaster" => Ok(Role::Spymaster),
            "guesser" => Ok(Role::Guesser),
            _ => Err(format!("unknown role `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    StaticSpymaster {
        embedding: String,
    },
    StaticGuesser {
        embedding: String,
    },
    BayesSpymaster {
        models: Vec<String>,
        config: SpymasterConfig,
    },
    BayesGuesser {
        models: Vec<String>,
        config: GuesserConfig,
    },
}

impl AgentSpec {
    pub fn role(&self) -> Role {
        match self {
            AgentSpec::StaticSpymaster { .. } | AgentSpec::BayesSpymaster { .. } => Role::Spymaster,
            AgentSpec::StaticGuesser { .. } | AgentSpec::BayesGuesser { .. } => Role::Guesser,
        }
    }

    pub fn is_bayesian(&self) -> bool {
        matches!(self, AgentSpec::BayesSpymaster { .. } | AgentSpec::BayesGuesser { .. })
    }

    /// Every embedding the agent needs.
    pub fn embeddings(&self) -> Vec<&str> {
        match self {
            AgentSpec::StaticSpymaster { embedding } | AgentSpec::StaticGuesser { embedding } => vec![embedding],
            AgentSpec::BayesSpymaster { models, .. } | AgentSpec::BayesGuesser { models, .. } => {
                models.iter().map(String::as_str).collect()
            }
        }
    }
}

fn malformed(spec: &str, reason: impl Into<String>) -> SpecError {
    SpecError::Malformed {
        spec: spec.to_owned(),
        reason: reason.into(),
    }
}

fn number<T: FromStr>(spec: &str, key: &str, value: &str) -> Result<T, SpecError> {
    value
        .parse()
        .map_err(|_| malformed(spec, format!("bad value `{value}` for `{key}`")))
}

fn fraction(spec: &str, key: &str, value: &str) -> Result<f64, SpecError> {
    let v: f64 = number(spec, key, value)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(malformed(spec, format!("`{key}` must lie in [0, 1]")));
    }
    Ok(v)
}

fn noise(spec: &str, value: &str) -> Result<f64, SpecError> {
    let v: f64 = number(spec, "noise", value)?;
    if !v.is_finite() || v < 0.0 {
        return Err(malformed(spec, "`noise` must be a non-negative number"));
    }
    Ok(v)
}

fn count(spec: &str, key: &str, value: &str) -> Result<usize, SpecError> {
    let v: usize = number(spec, key, value)?;
    if v == 0 {
        return Err(malformed(spec, format!("`{key}` must be at least 1")));
    }
    Ok(v)
}

impl FromStr for AgentSpec {
    type Err = SpecError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let [kind, role, models, options @ ..] = parts.as_slice() else {
            return Err(malformed(spec, "expected <kind>:<role>:<embeddings>"));
        };
        let role: Role = role.parse().map_err(|e: String| malformed(spec, e))?;
        let models: Vec<String> = models.split(',').map(|m| m.trim().to_owned()).collect();
        if models.iter().any(String::is_empty) {
            return Err(malformed(spec, "empty embedding name"));
        }
        let options = options
            .iter()
            .map(|o| o.split_once('=').ok_or_else(|| malformed(spec, format!("option `{o}` lacks `=`"))))
            .collect::<Result<Vec<_>, _>>()?;

        match (*kind, role) {
            ("static", _) => {
                if models.len() != 1 {
                    return Err(malformed(spec, "static agents take exactly one embedding"));
                }
                if let Some((k, _)) = options.first() {
                    return Err(malformed(spec, format!("static agents take no options (got `{k}`)")));
                }
                let embedding = models.into_iter().next().expect("checked length");
                Ok(match role {
                    Role::Spymaster => AgentSpec::StaticSpymaster { embedding },
                    Role::Guesser => AgentSpec::StaticGuesser { embedding },
                })
            }
            ("bayes", Role::Spymaster) => {
                let mut config = SpymasterConfig::default();
                for (k, v) in options {
                    match k {
                        "noise" => config.assumed_noise = noise(spec, v)?,
                        "samples" => config.samples = count(spec, k, v)?,
                        "counts" => {
                            config.per_turn_counts = match v {
                                "game" => false,
                                "turn" => true,
                                _ => return Err(malformed(spec, "`counts` is `game` or `turn`")),
                            }
                        }
                        _ => return Err(malformed(spec, format!("unknown spymaster option `{k}`"))),
                    }
                }
                Ok(AgentSpec::BayesSpymaster { models, config })
            }
            ("bayes", Role::Guesser) => {
                let mut config = GuesserConfig::default();
                for (k, v) in options {
                    match k {
                        "skip" => config.skip = fraction(spec, k, v)?,
                        "belief" => config.belief = fraction(spec, k, v)?,
                        "noise" => config.noise = noise(spec, v)?,
                        "worlds" => config.worlds = count(spec, k, v)?,
                        "vsamples" => config.voronoi_samples = count(spec, k, v)?,
                        "weighting" => {
                            config.weight_by_posterior = match v {
                                "uniform" => false,
                                "posterior" => true,
                                _ => return Err(malformed(spec, "`weighting` is `uniform` or `posterior`")),
                            }
                        }
                        _ => return Err(malformed(spec, format!("unknown guesser option `{k}`"))),
                    }
                }
                Ok(AgentSpec::BayesGuesser { models, config })
            }
            _ => Err(malformed(spec, format!("unknown agent kind `{kind}`"))),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::StaticSpymaster { embedding } => write!(f, "static:spymaster:{embedding}"),
            AgentSpec::StaticGuesser { embedding } => write!(f, "static:guesser:{embedding}"),
            AgentSpec::BayesSpymaster { models, config } => {
                write!(
                    f,
                    "bayes:spymaster:{}:noise={}:samples={}",
                    models.join(","),
                    config.assumed_noise,
                    config.samples
                )?;
                if config.per_turn_counts {
                    f.write_str(":counts=turn")?;
                }
                Ok(())
            }
            AgentSpec::BayesGuesser { models, config } => {
                write!(
                    f,
                    "bayes:guesser:{}:skip={}:belief={}:noise={}:worlds={}:vsamples={}",
                    models.join(","),
                    config.skip,
                    config.belief,
                    config.noise,
                    config.worlds,
                    config.voronoi_samples
                )?;
                if config.weight_by_posterior {
                    f.write_str(":weighting=posterior")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for AgentSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
