//! Spymaster and guesser agents.

mod guesser;
mod level0;
mod registry;
mod spec;
mod spymaster;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingTable, Semantics};
use crate::game::{BoardView, Category, Clue, GuessSequence, WorldState};
use crate::seed;

pub use guesser::{
    card_probabilities, history_likelihood, sample_world_states, BayesianGuesser, CardProbabilities, GuesserConfig,
    GuesserState, HistoryEntry, WorldSample,
};
pub use level0::{
    level0_clue, level0_guess, level0_guess_vector, ClueChoice, ClueTable, Level0Guess, Level0Guesser,
    Level0Spymaster,
};
pub use registry::{index_subset, ModelRegistry, CACHE_DIR_ENV};
pub use spec::{AgentSpec, Role};
pub use spymaster::{
    candidate_clues, get_sum_distance, BayesianSpymaster, ClueEvaluation, SpymasterBeliefs, SpymasterConfig,
};

/// A hypothesized teammate: whose semantics, at which hierarchy level, with
/// how much assumed channel noise.
#[derive(Debug, Clone)]
pub struct PartnerModel {
    pub id: String,
    pub semantics: Arc<Semantics>,
    pub level: u32,
    pub assumed_noise: f64,
    /// Lower ranks win posterior ties.
    pub tie_rank: usize,
}

impl PartnerModel {
    pub fn level0(semantics: Arc<Semantics>, assumed_noise: f64, tie_rank: usize) -> Self {
        Self {
            id: semantics.name().to_owned(),
            semantics,
            level: 0,
            assumed_noise,
            tie_rank,
        }
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.semantics.table
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AgentError {
    #[error("no unrevealed team cards to clue")]
    NoTeamCards,
    #[error("no legal clue word in the vocabulary")]
    NoClue,
}

/// Gaussian noise the channel adds to a clue's embedding before the guesser
/// reads it. The noise is drawn in the guesser's own embedding space from
/// `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClueNoise {
    pub sigma: f64,
    pub seed: u64,
}

/// A clue as it reaches the guesser.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedClue {
    pub clue: Clue,
    pub noise: Option<ClueNoise>,
}

impl ReceivedClue {
    pub fn exact(clue: Clue) -> Self {
        Self { clue, noise: None }
    }

    /// The clue vector as seen through `table`, or `None` if the word is
    /// unknown to it.
    pub fn vector_in(&self, table: &EmbeddingTable) -> Option<Vec<f64>> {
        let id = table.id(&self.clue.word)?;
        Some(match self.noise {
            None => table.vector(id).to_vec(),
            Some(n) => table.perturb_word(id, n.sigma, &mut seed::rng(n.seed)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBelief {
    pub id: String,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardBelief {
    pub word: String,
    pub red: f64,
    pub blue: f64,
    pub bystander: f64,
    pub assassin: f64,
}

/// Posterior over partner models at one point in a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub turn: u32,
    pub models: Vec<ModelBelief>,
    pub leading: String,
    /// Category probabilities of the cards the guesser last considered;
    /// empty for spymasters.
    #[serde(default)]
    pub cards: Vec<CardBelief>,
}

pub trait Spymaster: Send {
    fn give_clue(&mut self, world: &WorldState, view: &BoardView) -> Result<Clue, AgentError>;

    /// Called after the guesser's turn with the cards that were revealed.
    fn observe(&mut self, clue: &Clue, observed: &[(usize, Category)]);

    /// The semantics the spymaster currently speaks with (its leading model
    /// for Bayesian agents).
    fn semantics(&self) -> &Arc<Semantics>;

    fn beliefs(&self) -> Option<BeliefSnapshot>;
}

pub trait Guesser: Send {
    fn guess(&mut self, view: &BoardView, clue: &ReceivedClue) -> GuessSequence;

    /// Called with the revealed prefix of the last guess, in order.
    fn observe(&mut self, view: &BoardView, observed: &[(usize, Category)]);

    fn beliefs(&self) -> Option<BeliefSnapshot>;
}

/// Index of the highest posterior, ties to the lowest tie rank.
pub(crate) fn leading_index(posterior: &[f64], models: &[PartnerModel]) -> usize {
    (0..models.len())
        .max_by(|&a, &b| {
            posterior[a]
                .total_cmp(&posterior[b])
                .then_with(|| models[b].tie_rank.cmp(&models[a].tie_rank))
        })
        .expect("model set is never empty")
}

/// Validates a prior, or builds the uniform one.
pub(crate) fn check_prior(n: usize, prior: Option<Vec<f64>>) -> crate::Result<Vec<f64>> {
    if n == 0 {
        return Err(crate::Error::Prior("empty model set".into()));
    }
    let prior = prior.unwrap_or_else(|| vec![1.0 / n as f64; n]);
    if prior.len() != n {
        return Err(crate::Error::Prior(format!("{} weights for {n} models", prior.len())));
    }
    if prior.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(crate::Error::Prior("weights must be positive".into()));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(crate::Error::Prior(format!("weights sum to {total}")));
    }
    Ok(prior)
}

pub(crate) fn normalize(weights: &mut [f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    total
}
