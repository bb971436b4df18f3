//! Bayesian spymaster.
//!
//! Keeps a posterior over guesser models. Clues are scored by simulating each
//! model guesser on noisy copies of the clue and averaging the turn utility of
//! what would actually be revealed, weighted by the posterior. The same
//! simulations fill a table of pseudo-counts per `(model, clue, number)`
//! which later serves as the likelihood of the guess that is observed.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use super::level0::BoardGeometry;
use super::{check_prior, leading_index, normalize, AgentError, BeliefSnapshot, ModelBelief, PartnerModel, Spymaster};
use crate::embedding::{euclidean, EmbeddingTable, Semantics};
use crate::game::{observed_action, turn_utility, BoardView, Category, Clue, WorldState};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpymasterConfig {
    /// Standard deviation of the noise assumed on the clue channel.
    pub assumed_noise: f64,
    /// Simulations per model and candidate clue.
    pub samples: usize,
    /// Start every turn with an empty pseudo-count table instead of
    /// accumulating over the game.
    pub per_turn_counts: bool,
}

impl Default for SpymasterConfig {
    fn default() -> Self {
        Self {
            assumed_noise: 0.0,
            samples: 10,
            per_turn_counts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CountKey {
    model: usize,
    word: String,
    number: u32,
}

/// Posterior over guesser models plus the pseudo-count likelihood table.
#[derive(Debug, Clone)]
pub struct SpymasterBeliefs {
    models: Vec<PartnerModel>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
    counts: HashMap<CountKey, HashMap<Vec<usize>, u64>>,
}

impl SpymasterBeliefs {
    /// Uniform prior when `prior` is `None`.
    pub fn new(models: Vec<PartnerModel>, prior: Option<Vec<f64>>) -> crate::Result<Self> {
        let prior = check_prior(models.len(), prior)?;
        Ok(Self {
            posterior: prior.clone(),
            prior,
            models,
            counts: HashMap::new(),
        })
    }

    pub fn models(&self) -> &[PartnerModel] {
        &self.models
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn leading(&self) -> &PartnerModel {
        &self.models[leading_index(&self.posterior, &self.models)]
    }

    /// Stored pseudo-count for an observed guess, if any simulation produced it.
    pub fn pseudo_count(&self, model: usize, clue: &Clue, observed: &[usize]) -> Option<u64> {
        let key = CountKey {
            model,
            word: clue.word.clone(),
            number: clue.number,
        };
        self.counts.get(&key)?.get(observed).copied()
    }

    /// Unnormalized likelihood of `observed` under `model`: its pseudo-count,
    /// or 1 when the guess was never simulated.
    pub fn likelihood(&self, model: usize, clue: &Clue, observed: &[usize]) -> f64 {
        self.pseudo_count(model, clue, observed).unwrap_or(1) as f64
    }

    /// Adds `times` simulated occurrences of `observed`. Absent entries start
    /// from the Laplace count of 1.
    pub fn record(&mut self, model: usize, clue: &Clue, observed: Vec<usize>, times: u64) {
        let key = CountKey {
            model,
            word: clue.word.clone(),
            number: clue.number,
        };
        *self.counts.entry(key).or_default().entry(observed).or_insert(1) += times;
    }

    pub fn clear_counts(&mut self) {
        self.counts.clear();
    }

    /// Bayes update on the cards revealed after `clue`.
    pub fn observe_guess(&mut self, clue: &Clue, observed: &[usize]) {
        for g in 0..self.models.len() {
            self.posterior[g] *= self.likelihood(g, clue, observed);
        }
        normalize(&mut self.posterior);
    }

    pub fn snapshot(&self, turn: u32) -> BeliefSnapshot {
        BeliefSnapshot {
            turn,
            models: self
                .models
                .iter()
                .zip(&self.posterior)
                .map(|(m, p)| ModelBelief {
                    id: m.id.clone(),
                    posterior: *p,
                })
                .collect(),
            leading: self.leading().id.clone(),
            cards: Vec::new(),
        }
    }
}

/// Summed distance from the clue to the leading run of team cards in `guess`.
pub fn get_sum_distance(
    table: &EmbeddingTable,
    clue: &[f64],
    guess: &[usize],
    view: &BoardView,
    world: &WorldState,
) -> f64 {
    let mut total = 0.0;
    for &card in guess {
        if world.category(card) != Category::Red {
            break;
        }
        if let Some(id) = table.id(view.word(card)) {
            total += euclidean(table.vector(id), clue);
        }
    }
    total
}

/// Union over models of the indexed neighbors of every unrevealed team card,
/// minus board words, in word order.
pub fn candidate_clues(models: &[PartnerModel], world: &WorldState, view: &BoardView) -> Vec<String> {
    let mut out = BTreeSet::new();
    for m in models {
        let table = m.table();
        for card in view.unrevealed().filter(|&c| world.category(c) == Category::Red) {
            let Some(id) = table.id(view.word(card)) else { continue };
            for &(nb, _) in m.semantics.neighbors.neighbors(table, id).iter() {
                let w = table.word(nb);
                if !view.is_board_word(w) {
                    out.insert(w.to_owned());
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Score of one `(word, number)` candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClueEvaluation {
    pub clue: Clue,
    pub expected_utility: f64,
    /// Summed distance to the team cards the leading model would reveal.
    pub spread: f64,
}

struct TurnContext<'a> {
    world: &'a WorldState,
    view: &'a BoardView,
    geometries: Vec<BoardGeometry>,
    posterior: &'a [f64],
    leading: usize,
    red_total: usize,
    remaining_red: usize,
    turn_seed: u64,
}

/// One model's simulated rankings for one candidate word.
struct Simulation {
    noiseless: Vec<usize>,
    /// Distinct noisy rankings and how many samples produced each.
    noisy: Vec<(Vec<usize>, u64)>,
    samples: u64,
}

type CountUpdate = (usize, Clue, Vec<usize>, u64);

impl SpymasterBeliefs {
    fn simulate(&self, config: &SpymasterConfig, ctx: &TurnContext<'_>, word: &str, model: usize) -> Simulation {
        let table = self.models[model].table();
        let geometry = &ctx.geometries[model];
        let samples = config.samples.max(1) as u64;
        let Some(id) = table.id(word) else {
            let fallback = geometry.lexicographic().to_vec();
            return Simulation {
                noisy: vec![(fallback.clone(), samples)],
                noiseless: fallback,
                samples,
            };
        };
        let noiseless: Vec<usize> = geometry.rank(table, table.vector(id)).into_iter().map(|e| e.0).collect();
        if config.assumed_noise == 0.0 {
            return Simulation {
                noisy: vec![(noiseless.clone(), samples)],
                noiseless,
                samples,
            };
        }
        let mut rng = seed::rng(seed::derive(ctx.turn_seed, &[seed::hash_str(word), model as u64]));
        let mut noisy: Vec<(Vec<usize>, u64)> = Vec::new();
        for _ in 0..samples {
            let v = table.perturb_word(id, config.assumed_noise, &mut rng);
            let ranking: Vec<usize> = geometry.rank(table, &v).into_iter().map(|e| e.0).collect();
            match noisy.iter_mut().find(|(r, _)| *r == ranking) {
                Some(entry) => entry.1 += 1,
                None => noisy.push((ranking, 1)),
            }
        }
        Simulation {
            noiseless,
            noisy,
            samples,
        }
    }

    /// Scores every viable number for one candidate word. With `gate` set, a
    /// number is dropped (along with every larger one) once no model's
    /// noiseless guess stays on the team.
    fn evaluate_word(
        &self,
        config: &SpymasterConfig,
        ctx: &TurnContext<'_>,
        word: &str,
        max_number: usize,
        gate: bool,
    ) -> (Vec<ClueEvaluation>, Vec<CountUpdate>) {
        let sims: Vec<Simulation> = (0..self.models.len())
            .map(|g| self.simulate(config, ctx, word, g))
            .collect();
        let mut evaluations = Vec::new();
        let mut updates = Vec::new();
        let all_red = |cards: &[usize]| cards.iter().all(|&c| ctx.world.category(c) == Category::Red);

        for n in 1..=max_number {
            if gate && !sims.iter().any(|s| all_red(&s.noiseless[..n.min(s.noiseless.len())])) {
                break;
            }
            let clue = Clue::new(word, n as u32);
            let mut expected = 0.0;
            for (g, sim) in sims.iter().enumerate() {
                let mut observed_counts: Vec<(Vec<usize>, u64)> = Vec::new();
                let mut sum = 0.0;
                for (ranking, times) in &sim.noisy {
                    let observed = observed_action(&ranking[..n.min(ranking.len())], ctx.world);
                    let cats: Vec<Category> = observed.iter().map(|o| o.1).collect();
                    sum += turn_utility(&cats, ctx.red_total) as f64 * *times as f64;
                    let cards: Vec<usize> = observed.into_iter().map(|o| o.0).collect();
                    match observed_counts.iter_mut().find(|(c, _)| *c == cards) {
                        Some(e) => e.1 += times,
                        None => observed_counts.push((cards, *times)),
                    }
                }
                expected += ctx.posterior[g] * sum / sim.samples as f64;
                updates.extend(observed_counts.into_iter().map(|(cards, t)| (g, clue.clone(), cards, t)));
            }
            let lead = &sims[ctx.leading];
            let lead_table = self.models[ctx.leading].table();
            let spread = match lead_table.id(word) {
                Some(id) => get_sum_distance(
                    lead_table,
                    lead_table.vector(id),
                    &lead.noiseless[..n.min(lead.noiseless.len())],
                    ctx.view,
                    ctx.world,
                ),
                None => f64::INFINITY,
            };
            evaluations.push(ClueEvaluation {
                clue,
                expected_utility: expected,
                spread,
            });
        }
        (evaluations, updates)
    }

    /// Scores the candidate clues for this board, recording the simulated
    /// guesses as pseudo-counts. Falls back to an ungated single-card pass
    /// when every candidate is pruned.
    pub fn evaluate(
        &mut self,
        config: &SpymasterConfig,
        world: &WorldState,
        view: &BoardView,
        candidates: &[String],
        turn_seed: u64,
    ) -> Vec<ClueEvaluation> {
        if config.per_turn_counts {
            self.clear_counts();
        }
        let ctx = TurnContext {
            world,
            view,
            geometries: self
                .models
                .iter()
                .map(|m| BoardGeometry::of_view(m.table(), view))
                .collect(),
            posterior: &self.posterior,
            leading: leading_index(&self.posterior, &self.models),
            red_total: view.composition().red,
            remaining_red: view.remaining(Category::Red),
            turn_seed,
        };
        let run = |max_number: usize, gate: bool| -> Vec<(Vec<ClueEvaluation>, Vec<CountUpdate>)> {
            candidates
                .par_iter()
                .map(|w| self.evaluate_word(config, &ctx, w, max_number, gate))
                .collect()
        };
        let mut results = run(ctx.remaining_red, true);
        if results.iter().all(|(e, _)| e.is_empty()) {
            results = run(1, false);
        }
        drop(ctx);
        let mut evaluations = Vec::new();
        for (evals, updates) in results {
            evaluations.extend(evals);
            for (g, clue, cards, times) in updates {
                self.record(g, &clue, cards, times);
            }
        }
        evaluations
    }
}

/// Highest expected utility, then smallest spread; `evaluations` must be in
/// word order with numbers ascending so that the first of equals wins.
fn select(evaluations: &[ClueEvaluation]) -> Option<&ClueEvaluation> {
    let mut best: Option<&ClueEvaluation> = None;
    for e in evaluations {
        let better = match best {
            None => true,
            Some(b) => {
                e.expected_utility > b.expected_utility
                    || (e.expected_utility == b.expected_utility && e.spread < b.spread)
            }
        };
        if better {
            best = Some(e);
        }
    }
    best
}

/// `bayes:spymaster:<models>:noise=<σ̂>:samples=<s>`
#[derive(Debug)]
pub struct BayesianSpymaster {
    beliefs: SpymasterBeliefs,
    config: SpymasterConfig,
    seed: u64,
    turn: u32,
    last_evaluations: usize,
}

impl BayesianSpymaster {
    pub fn new(beliefs: SpymasterBeliefs, config: SpymasterConfig, seed: u64) -> Self {
        Self {
            beliefs,
            config,
            seed,
            turn: 0,
            last_evaluations: 0,
        }
    }

    pub fn beliefs_state(&self) -> &SpymasterBeliefs {
        &self.beliefs
    }

    pub fn config(&self) -> &SpymasterConfig {
        &self.config
    }

    /// Number of `(word, number)` pairs scored on the last turn.
    pub fn last_evaluations(&self) -> usize {
        self.last_evaluations
    }

    /// Best clue among `candidates`.
    pub fn get_clue(&mut self, world: &WorldState, view: &BoardView, candidates: &[String]) -> Result<Clue, AgentError> {
        if view.remaining(Category::Red) == 0 {
            return Err(AgentError::NoTeamCards);
        }
        let turn_seed = seed::derive(self.seed, &[u64::from(self.turn)]);
        let evaluations = self.beliefs.evaluate(&self.config, world, view, candidates, turn_seed);
        self.last_evaluations = evaluations.len();
        let best = select(&evaluations).ok_or(AgentError::NoClue)?;
        debug_assert!(evaluations.iter().all(|e| e.expected_utility <= best.expected_utility));
        Ok(best.clue.clone())
    }
}

impl Spymaster for BayesianSpymaster {
    fn give_clue(&mut self, world: &WorldState, view: &BoardView) -> Result<Clue, AgentError> {
        let candidates = candidate_clues(self.beliefs.models(), world, view);
        self.get_clue(world, view, &candidates)
    }

    fn observe(&mut self, clue: &Clue, observed: &[(usize, Category)]) {
        let cards: Vec<usize> = observed.iter().map(|o| o.0).collect();
        self.beliefs.observe_guess(clue, &cards);
        self.turn += 1;
    }

    fn semantics(&self) -> &Arc<Semantics> {
        &self.beliefs.leading().semantics
    }

    fn beliefs(&self) -> Option<BeliefSnapshot> {
        Some(self.beliefs.snapshot(self.turn))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingTable, LoadOptions};
    use crate::game::Composition;

    fn toy_models(n: usize) -> Vec<PartnerModel> {
        (0..n)
            .map(|i| {
                let t = EmbeddingTable::from_entries(
                    format!("m{i}"),
                    vec![("a".to_string(), vec![i as f64])],
                    LoadOptions::raw(),
                )
                .unwrap();
                PartnerModel::level0(Arc::new(Semantics::index_all(t, 1)), 0.0, i)
            })
            .collect()
    }

    #[test]
    fn uniform_and_explicit_priors() {
        let b = SpymasterBeliefs::new(toy_models(4), None).unwrap();
        assert_eq!(b.posterior(), &[0.25; 4]);
        let b = SpymasterBeliefs::new(toy_models(2), Some(vec![0.7, 0.3])).unwrap();
        assert_eq!(b.posterior(), &[0.7, 0.3]);
        assert!(SpymasterBeliefs::new(toy_models(2), Some(vec![0.5, 0.6])).is_err());
        assert!(SpymasterBeliefs::new(Vec::new(), None).is_err());
    }

    #[test]
    fn pseudo_counts_act_as_likelihoods() {
        let mut b = SpymasterBeliefs::new(toy_models(2), None).unwrap();
        let clue = Clue::new("x", 2);
        // absent key starts at one: two hits give a count of 3
        b.record(0, &clue, vec![4, 5], 2);
        assert_eq!(b.pseudo_count(0, &clue, &[4, 5]), Some(3));
        b.observe_guess(&clue, &[4, 5]);
        assert!((b.posterior()[0] - 0.75).abs() < 1e-12);
        assert!((b.posterior()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unseen_guess_leaves_posterior_unchanged() {
        let mut b = SpymasterBeliefs::new(toy_models(3), Some(vec![0.5, 0.3, 0.2])).unwrap();
        b.record(1, &Clue::new("x", 1), vec![0], 5);
        b.observe_guess(&Clue::new("x", 1), &[7]);
        assert_eq!(b.posterior(), &[0.5, 0.3, 0.2]);
    }

    #[test]
    fn sum_distance_stops_at_first_non_team_card() {
        let entries = vec![
            ("r1".to_string(), vec![1.0]),
            ("r2".to_string(), vec![2.5]),
            ("b1".to_string(), vec![4.0]),
            ("r3".to_string(), vec![9.0]),
        ];
        let t = EmbeddingTable::from_entries("t", entries, LoadOptions::raw()).unwrap();
        let view = BoardView::new(
            vec!["r1".into(), "r2".into(), "b1".into(), "r3".into()],
            Composition::default(),
            25,
        );
        use Category::*;
        let world = WorldState::new(vec![Red, Red, Blue, Red]);
        assert_eq!(get_sum_distance(&t, &[0.0], &[0, 1, 2, 3], &view, &world), 3.5);
        assert_eq!(get_sum_distance(&t, &[0.0], &[2, 0], &view, &world), 0.0);
        assert_eq!(get_sum_distance(&t, &[0.0], &[0, 1, 3], &view, &world), 12.5);
    }

    #[test]
    fn ties_go_to_the_tighter_clue() {
        let evals = vec![
            ClueEvaluation {
                clue: Clue::new("a", 2),
                expected_utility: 1.0,
                spread: 1.2,
            },
            ClueEvaluation {
                clue: Clue::new("b", 2),
                expected_utility: 1.0,
                spread: 0.8,
            },
        ];
        assert_eq!(select(&evals).unwrap().clue, Clue::new("b", 2));
    }
}
