//! Bayesian guesser.
//!
//! Every turn the guesser samples hidden assignments consistent with the
//! board, weights them by how well they explain the clue history under each
//! spymaster model (Voronoi likelihoods of the clue the model would have given
//! in that world), and then guesses by thresholded expected utility. Skip and
//! belief thresholds interpolate between plain Bayesian reasoning and the
//! deductive level-k guesser.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::level0::{choose_clue, BoardGeometry, ClueTable};
use super::{
    check_prior, leading_index, normalize, BeliefSnapshot, CardBelief, Guesser, ModelBelief, PartnerModel,
    ReceivedClue,
};
use crate::embedding::{snap_to_vocab, VoronoiCache};
use crate::error::GameError;
use crate::game::{BoardView, Category, Clue, GuessSequence, WorldState};
use crate::seed;

/// Slack on probability thresholds: a card red in every sampled world must
/// clear a belief threshold of 1 despite rounding in the weight sums.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuesserConfig {
    /// Cards whose red probability is at or below this are never boosted.
    pub skip: f64,
    /// Red probability a card needs to be guessed voluntarily.
    pub belief: f64,
    /// Standard deviation of the noise assumed on the clue channel.
    pub noise: f64,
    /// Cap on sampled worlds per turn.
    pub worlds: usize,
    /// Monte-Carlo samples per Voronoi estimate.
    pub voronoi_samples: usize,
    /// Weight each model's clue likelihood by its posterior when scoring
    /// worlds, instead of summing over models unweighted.
    pub weight_by_posterior: bool,
}

impl Default for GuesserConfig {
    fn default() -> Self {
        Self {
            skip: 0.0,
            belief: 1.0,
            noise: 0.0,
            worlds: 1000,
            voronoi_samples: 1000,
            weight_by_posterior: false,
        }
    }
}

/// Hidden assignments consistent with a board view, with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSample {
    pub worlds: Vec<WorldState>,
    pub weights: Vec<f64>,
}

impl WorldSample {
    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// Keeps the worlds where `card` is on the team.
    pub fn condition_red(&mut self, card: usize) {
        let mut worlds = Vec::new();
        let mut weights = Vec::new();
        for (w, p) in self.worlds.drain(..).zip(self.weights.drain(..)) {
            if w.category(card) == Category::Red {
                worlds.push(w);
                weights.push(p);
            }
        }
        self.worlds = worlds;
        self.weights = weights;
    }
}

fn count_assignments(counts: &[usize; 4]) -> u128 {
    // product of binomials; exact for 25 cards
    let mut total: u128 = 1;
    let mut placed: u128 = 0;
    for &k in counts {
        for i in 1..=k as u128 {
            placed += 1;
            total = total * placed / i;
        }
    }
    total
}

fn enumerate(
    base: &mut Vec<Category>,
    slots: &[usize],
    counts: &mut [usize; 4],
    out: &mut Vec<WorldState>,
) {
    let Some((&slot, rest)) = slots.split_first() else {
        out.push(WorldState::new(base.clone()));
        return;
    };
    for c in Category::ALL {
        if counts[c.index()] == 0 {
            continue;
        }
        counts[c.index()] -= 1;
        base[slot] = c;
        enumerate(base, rest, counts, out);
        counts[c.index()] += 1;
    }
}

/// Up to `n_w` distinct assignments of the unrevealed cards matching the
/// remaining category counts. Every assignment is listed when there are at
/// most `n_w` of them; otherwise they are drawn by uniform shuffles and
/// deduplicated. Weights start at 1.
pub fn sample_world_states<R: rand::Rng + ?Sized>(
    view: &BoardView,
    n_w: usize,
    rng: &mut R,
) -> Result<WorldSample, GameError> {
    let slots: Vec<usize> = view.unrevealed().collect();
    let remaining = view.remaining_composition();
    let mut counts = [0usize; 4];
    for c in Category::ALL {
        counts[c.index()] = remaining.count(c);
    }
    if counts.iter().sum::<usize>() != slots.len() {
        return Err(GameError::Inconsistent);
    }
    let mut base: Vec<Category> = (0..view.len())
        .map(|c| view.revealed(c).unwrap_or(Category::Bystander))
        .collect();
    let n_w = n_w.max(1);

    let mut worlds = Vec::new();
    if count_assignments(&counts) <= n_w as u128 {
        enumerate(&mut base, &slots, &mut counts, &mut worlds);
    } else {
        let mut bag: Vec<Category> = Vec::with_capacity(slots.len());
        for c in Category::ALL {
            bag.extend(std::iter::repeat_n(c, counts[c.index()]));
        }
        let mut seen = HashSet::new();
        for _ in 0..n_w.saturating_mul(20) {
            bag.shuffle(rng);
            if seen.insert(bag.clone()) {
                for (&slot, &c) in slots.iter().zip(&bag) {
                    base[slot] = c;
                }
                worlds.push(WorldState::new(base.clone()));
                if worlds.len() == n_w {
                    break;
                }
            }
        }
    }
    let weights = vec![1.0; worlds.len()];
    Ok(WorldSample { worlds, weights })
}

/// Per-card category distribution, plus the cards whose distribution was
/// boosted to certain-red.
#[derive(Debug, Clone, PartialEq)]
pub struct CardProbabilities {
    /// Indexed by card, then by [`Category::index`]. Revealed cards are all
    /// zero.
    pub probs: Vec<[f64; 4]>,
    pub boosted: Vec<usize>,
}

impl CardProbabilities {
    pub fn red(&self, card: usize) -> f64 {
        self.probs[card][Category::Red.index()]
    }

    /// Expected heuristic value of revealing `card`.
    pub fn value(&self, card: usize, red_total: usize) -> f64 {
        Category::ALL
            .iter()
            .map(|c| self.probs[card][c.index()] * c.value(red_total) as f64)
            .sum()
    }
}

/// Weighted category frequencies over `sample`, with the first `k` cards of
/// `order` that clear the skip threshold boosted to certain-red. All-zero
/// weights are treated as uniform.
pub fn card_probabilities(sample: &WorldSample, cards: usize, order: &[usize], k: usize, skip: f64) -> CardProbabilities {
    let mut total: f64 = sample.weights.iter().sum();
    let uniform = total <= 0.0;
    if uniform {
        total = sample.len() as f64;
    }
    // sum raw weights in world order and divide once, so that a card with
    // the same category in every world gets exactly 1
    let mut probs = vec![[0.0; 4]; cards];
    for (w, &p) in sample.worlds.iter().zip(&sample.weights) {
        let p = if uniform { 1.0 } else { p };
        for &card in order {
            probs[card][w.category(card).index()] += p;
        }
    }
    for &card in order {
        probs[card].iter_mut().for_each(|x| *x /= total);
    }
    let boosted: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&c| probs[c][Category::Red.index()] > skip + EPS)
        .take(k)
        .collect();
    for &c in &boosted {
        probs[c] = [1.0, 0.0, 0.0, 0.0];
    }
    CardProbabilities { probs, boosted }
}

/// One clue in the guesser's history: `None` when no model could explain it.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub clue: Option<Clue>,
    /// Cards unrevealed when the clue was given.
    pub unrevealed: u32,
}

/// Everything the Bayesian guesser carries between turns.
#[derive(Debug)]
pub struct GuesserState {
    models: Vec<PartnerModel>,
    voronoi: Vec<Arc<VoronoiCache>>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
    history: Vec<HistoryEntry>,
    config: GuesserConfig,
    /// Category probabilities of each pick of the current guess at the time
    /// it was chosen.
    pick_probs: Vec<[f64; 4]>,
    tables: HashMap<(usize, u32), Arc<ClueTable>>,
    resets: usize,
}

fn red_mask(world: &WorldState, unrevealed: u32) -> u32 {
    (0..world.categories().len())
        .filter(|&c| unrevealed & (1 << c) != 0 && world.category(c) == Category::Red)
        .fold(0, |m, c| m | (1 << c))
}

impl GuesserState {
    /// `voronoi[i]` must be built over `models[i]`'s semantics with the
    /// configured noise.
    pub fn new(
        models: Vec<PartnerModel>,
        voronoi: Vec<Arc<VoronoiCache>>,
        prior: Option<Vec<f64>>,
        config: GuesserConfig,
    ) -> crate::Result<Self> {
        let prior = check_prior(models.len(), prior)?;
        if voronoi.len() != models.len() {
            return Err(crate::Error::Config(format!(
                "{} Voronoi caches for {} models",
                voronoi.len(),
                models.len()
            )));
        }
        for (m, v) in models.iter().zip(&voronoi) {
            if m.semantics.name() != v.embedding() {
                return Err(crate::Error::Config(format!(
                    "Voronoi cache for `{}` attached to model `{}`",
                    v.embedding(),
                    m.id
                )));
            }
        }
        if !(0.0..=1.0).contains(&config.skip) || !(0.0..=1.0).contains(&config.belief) {
            return Err(crate::Error::Config("thresholds must lie in [0, 1]".into()));
        }
        Ok(Self {
            posterior: prior.clone(),
            prior,
            models,
            voronoi,
            history: Vec::new(),
            config,
            pick_probs: Vec::new(),
            tables: HashMap::new(),
            resets: 0,
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

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn config(&self) -> &GuesserConfig {
        &self.config
    }

    pub fn pick_probabilities(&self) -> &[[f64; 4]] {
        &self.pick_probs
    }

    /// How many times a zero-probability observation forced a reset.
    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn leading_model(&self) -> &PartnerModel {
        &self.models[leading_index(&self.posterior, &self.models)]
    }

    /// Back to the prior, forgetting the clue history.
    pub fn reset(&mut self) {
        self.posterior = self.prior.clone();
        self.history.clear();
        self.tables.clear();
        self.resets += 1;
    }

    fn ensure_tables(&mut self, words: &[String], masks: impl IntoIterator<Item = u32>) {
        for mask in masks {
            for m in 0..self.models.len() {
                if !self.tables.contains_key(&(m, mask)) {
                    let table = ClueTable::build(&self.models[m].semantics, words, mask, mask);
                    self.tables.insert((m, mask), Arc::new(table));
                }
            }
        }
    }

    /// `P(clue | model, world)` for every model, where the intended clue is
    /// the one the model's level-0 spymaster would give in `world` with
    /// `unrevealed` cards left.
    fn clue_likelihoods(&self, words: &[String], world: &WorldState, clue: &str, unrevealed: u32) -> Vec<f64> {
        let reds = red_mask(world, unrevealed);
        self.models
            .iter()
            .enumerate()
            .map(|(m, model)| {
                let table = model.table();
                let Some(observed) = table.id(clue) else { return 0.0 };
                if reds == 0 {
                    return 0.0;
                }
                let clues = &self.tables[&(m, unrevealed)];
                match choose_clue(&model.semantics, clues, words, reds) {
                    Some(choice) => self.voronoi[m].probability(choice.word, observed),
                    None => 0.0,
                }
            })
            .collect()
    }

    fn world_factor(&self, likelihoods: &[f64]) -> f64 {
        if self.config.weight_by_posterior {
            likelihoods.iter().zip(&self.posterior).map(|(l, p)| l * p).sum()
        } else {
            likelihoods.iter().sum()
        }
    }

    /// Product over the non-null history entries of each world's summed clue
    /// likelihood. An empty history weighs every world 1.
    pub fn history_likelihood(&mut self, words: &[String], worlds: &[WorldState]) -> Vec<f64> {
        let masks: Vec<u32> = self.history.iter().filter(|e| e.clue.is_some()).map(|e| e.unrevealed).collect();
        self.ensure_tables(words, masks);
        let this = &*self;
        worlds
            .par_iter()
            .map(|w| {
                this.history
                    .iter()
                    .filter_map(|e| e.clue.as_ref().map(|c| (c, e.unrevealed)))
                    .map(|(c, mask)| this.world_factor(&this.clue_likelihoods(words, w, &c.word, mask)))
                    .product()
            })
            .collect()
    }

    /// Folds this turn's clue into the model posterior and the world weights.
    /// When no model explains the clue in any sampled world the clue is
    /// recorded as null and nothing else changes. Returns whether the update
    /// was applied.
    pub fn update_model_probabilities(
        &mut self,
        words: &[String],
        sample: &mut WorldSample,
        clue: &Clue,
        unrevealed: u32,
    ) -> bool {
        self.ensure_tables(words, [unrevealed]);
        let this = &*self;
        let per_world: Vec<Vec<f64>> = sample
            .worlds
            .par_iter()
            .map(|w| this.clue_likelihoods(words, w, &clue.word, unrevealed))
            .collect();
        let mut per_model = vec![0.0; self.models.len()];
        for row in &per_world {
            for (acc, l) in per_model.iter_mut().zip(row) {
                *acc += l;
            }
        }
        let total: f64 = per_model.iter().sum();
        if total <= 0.0 {
            self.history.push(HistoryEntry { clue: None, unrevealed });
            return false;
        }
        let factors: Vec<f64> = per_world.iter().map(|row| self.world_factor(row)).collect();
        for (p, l) in self.posterior.iter_mut().zip(&per_model) {
            *p *= l;
        }
        if normalize(&mut self.posterior) <= 0.0 {
            // every model with mass had zero likelihood; keep the evidence
            self.posterior = per_model;
            normalize(&mut self.posterior);
        }
        let before = sample.weights.clone();
        for (w, f) in sample.weights.iter_mut().zip(&factors) {
            *w *= f;
        }
        if sample.weights.iter().all(|&w| w <= 0.0) {
            // history and clue disagree on every world: trust the clue, then
            // the history, then nothing
            sample.weights = if factors.iter().any(|&f| f > 0.0) { factors } else { before };
        }
        self.history.push(HistoryEntry {
            clue: Some(clue.clone()),
            unrevealed,
        });
        true
    }

    /// Cards ordered by distance to the clue under the leading model; word
    /// order when the leading model does not know the clue.
    pub fn ordering(&self, view: &BoardView, clue: &str) -> Vec<usize> {
        let table = self.leading_model().table();
        let geometry = BoardGeometry::of_view(table, view);
        match table.id(clue) {
            Some(id) => geometry.rank(table, table.vector(id)).into_iter().map(|e| e.0).collect(),
            None => geometry.lexicographic().to_vec(),
        }
    }

    /// Picks the guess for clue number `number` from the weighted sample and
    /// records each pick's category probabilities. Returns the first-pick
    /// probabilities alongside.
    pub fn select_guess(
        &mut self,
        view: &BoardView,
        mut sample: WorldSample,
        mut order: Vec<usize>,
        number: usize,
    ) -> (GuessSequence, CardProbabilities) {
        let red_total = view.composition().red;
        let belief = self.config.belief;
        let skip = self.config.skip;
        let cards = view.len();
        self.pick_probs.clear();

        let first = card_probabilities(&sample, cards, &order, number, skip);
        let qualifies = |p: &CardProbabilities, c: usize| p.red(c) >= belief - EPS;
        let argmax = |p: &CardProbabilities, cands: &mut dyn Iterator<Item = usize>| {
            let mut best: Option<(usize, f64)> = None;
            for c in cands {
                let v = p.value(c, red_total);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((c, v));
                }
            }
            best
        };
        let pick = argmax(&first, &mut order.iter().copied().filter(|&c| qualifies(&first, c)))
            .or_else(|| argmax(&first, &mut order.iter().copied()))
            .map(|e| e.0)
            .expect("an unrevealed card exists while the game runs");
        let mut guess = vec![pick];
        self.pick_probs.push(first.probs[pick]);

        let mut last = pick;
        for k in (0..number).rev() {
            order.retain(|&c| c != last);
            sample.condition_red(last);
            if sample.is_empty() || order.is_empty() {
                break;
            }
            let p = card_probabilities(&sample, cards, &order, k, skip);
            let next = argmax(
                &p,
                &mut order.iter().copied().filter(|&c| qualifies(&p, c) && p.value(c, red_total) > 0.0),
            );
            let Some((c, _)) = next else { break };
            guess.push(c);
            self.pick_probs.push(p.probs[c]);
            last = c;
        }
        (GuessSequence(guess), first)
    }

    /// Resets when pick `index` turned out to be a category it had ruled out.
    pub fn update_on_reveal(&mut self, index: usize, category: Category) -> bool {
        match self.pick_probs.get(index) {
            Some(p) if p[category.index()] == 0.0 => {
                self.reset();
                true
            }
            _ => false,
        }
    }
}

/// `bayes:guesser:<models>:skip=<x>:belief=<y>:noise=<σ>:worlds=<n>:vsamples=<n>`
#[derive(Debug)]
pub struct BayesianGuesser {
    state: GuesserState,
    seed: u64,
    turn: u32,
    top_cards: Vec<CardBelief>,
}

impl BayesianGuesser {
    pub fn new(state: GuesserState, seed: u64) -> Self {
        Self {
            state,
            seed,
            turn: 0,
            top_cards: Vec::new(),
        }
    }

    pub fn state(&self) -> &GuesserState {
        &self.state
    }

    /// The clue word as observed: under channel noise, the perturbed clue
    /// vector snapped to the nearest non-board word near the clue in the
    /// leading model's space.
    fn observed_word(&self, view: &BoardView, received: &ReceivedClue) -> String {
        let lead = self.state.leading_model();
        let table = lead.table();
        if received.noise.is_none() {
            return received.clue.word.clone();
        }
        let (Some(id), Some(vector)) = (table.id(&received.clue.word), received.vector_in(table)) else {
            return received.clue.word.clone();
        };
        let mut pool: Vec<usize> = vec![id];
        pool.extend(lead.semantics.neighbors.neighbors(table, id).iter().map(|e| e.0));
        pool.retain(|&w| !view.is_board_word(table.word(w)));
        snap_to_vocab(table, &vector, &pool).map_or_else(|| received.clue.word.clone(), |w| table.word(w).to_owned())
    }
}

impl Guesser for BayesianGuesser {
    fn guess(&mut self, view: &BoardView, received: &ReceivedClue) -> GuessSequence {
        let word = self.observed_word(view, received);
        let clue = Clue::new(word, received.clue.number);
        let mut rng = seed::rng(seed::derive(self.seed, &[u64::from(self.turn)]));
        let mut sample = sample_world_states(view, self.state.config.worlds, &mut rng)
            .expect("the engine keeps the view consistent with its composition");
        let history = self.state.history_likelihood(view.words(), &sample.worlds);
        sample.weights = history;
        self.state
            .update_model_probabilities(view.words(), &mut sample, &clue, view.unrevealed_mask());
        let order = self.state.ordering(view, &clue.word);
        let (guess, first) = self.state.select_guess(view, sample, order.clone(), clue.number as usize);

        let mut top: Vec<usize> = order;
        top.sort_by(|&a, &b| first.red(b).total_cmp(&first.red(a)));
        self.top_cards = top
            .into_iter()
            .take(5)
            .map(|c| CardBelief {
                word: view.word(c).to_owned(),
                red: first.probs[c][0],
                blue: first.probs[c][1],
                bystander: first.probs[c][2],
                assassin: first.probs[c][3],
            })
            .collect();
        guess
    }

    fn observe(&mut self, _view: &BoardView, observed: &[(usize, Category)]) {
        for (i, &(_, category)) in observed.iter().enumerate() {
            if self.state.update_on_reveal(i, category) {
                break;
            }
        }
        self.turn += 1;
    }

    fn beliefs(&self) -> Option<BeliefSnapshot> {
        Some(BeliefSnapshot {
            turn: self.turn,
            models: self
                .state
                .models
                .iter()
                .zip(&self.state.posterior)
                .map(|(m, p)| ModelBelief {
                    id: m.id.clone(),
                    posterior: *p,
                })
                .collect(),
            leading: self.state.leading_model().id.clone(),
            cards: self.top_cards.clone(),
        })
    }
}

/// Free-function form of [`GuesserState::history_likelihood`].
pub fn history_likelihood(state: &mut GuesserState, words: &[String], worlds: &[WorldState]) -> Vec<f64> {
    state.history_likelihood(words, worlds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Composition;
    use rand::SeedableRng;

    fn small_view(unrevealed: &[Category]) -> (WorldState, BoardView) {
        // 25 cards, all but the first `unrevealed.len()` preset as revealed
        let mut cats: Vec<Category> = Composition::default().multiset();
        let mut rest = cats.clone();
        for c in unrevealed {
            let i = rest.iter().position(|x| x == c).unwrap();
            rest.remove(i);
        }
        cats = unrevealed.iter().copied().chain(rest).collect();
        let world = WorldState::new(cats);
        let words = (0..25).map(|i| format!("w{i:02}")).collect();
        let mut view = BoardView::new(words, Composition::default(), 25);
        for c in unrevealed.len()..25 {
            view.preset_reveal(&world, c);
        }
        (world, view)
    }

    #[test]
    fn two_cards_two_worlds() {
        use Category::*;
        let (_, view) = small_view(&[Red, Blue]);
        let s = sample_world_states(&view, 10, &mut seed::Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn single_world_when_only_red_remains() {
        use Category::*;
        let (_, view) = small_view(&[Red, Red, Red]);
        let s = sample_world_states(&view, 10, &mut seed::Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn thirty_worlds_and_sampled_marginals() {
        use Category::*;
        let (_, view) = small_view(&[Red, Red, Blue, Blue, Bystander]);
        let s = sample_world_states(&view, 10_000, &mut seed::Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.len(), 30);
        let p = card_probabilities(&s, 25, &[0, 1, 2, 3, 4], 0, 1.0);
        for c in 0..5 {
            assert!((p.red(c) - 0.4).abs() < 1e-12);
        }
        // large space: shuffled draws, still uniform
        let (_, view) = small_view(&[Red, Red, Red, Blue, Blue, Blue, Bystander, Bystander, Assassin]);
        let s = sample_world_states(&view, 2000, &mut seed::Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.len(), 2000);
        let p = card_probabilities(&s, 25, &(0..9).collect::<Vec<_>>(), 0, 1.0);
        for c in 0..9 {
            assert!((p.red(c) - 1.0 / 3.0).abs() < 0.05, "{}", p.red(c));
        }
    }

    #[test]
    fn assignment_counts() {
        assert_eq!(count_assignments(&[2, 2, 1, 0]), 30);
        assert_eq!(count_assignments(&[9, 8, 7, 1]), 210_344_706_000);
    }

    #[test]
    fn boosting_respects_skip() {
        use Category::*;
        let sample = WorldSample {
            worlds: vec![
                WorldState::new(vec![Red, Blue, Red]),
                WorldState::new(vec![Blue, Red, Red]),
            ],
            weights: vec![1.0, 1.0],
        };
        let p = card_probabilities(&sample, 3, &[0, 1, 2], 0, 0.0);
        assert_eq!(p.red(0), 0.5);
        let p = card_probabilities(&sample, 3, &[0, 1, 2], 1, 0.5);
        // p(red) = 0.5 is not above the skip threshold
        assert_eq!(p.boosted, vec![2]);
        assert_eq!(p.red(0), 0.5);
        let p = card_probabilities(&sample, 3, &[1, 0, 2], 1, 0.0);
        assert_eq!(p.boosted, vec![1]);
        assert_eq!(p.probs[1], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.probs[0], [0.5, 0.5, 0.0, 0.0]);
        // fewer survivors than k: boost them all
        let p = card_probabilities(&sample, 3, &[0, 1, 2], 5, 0.9);
        assert_eq!(p.boosted, vec![2]);
    }

    #[test]
    fn expected_value_with_assassin_mass() {
        let p = CardProbabilities {
            probs: vec![[0.8, 0.0, 0.0, 0.2]],
            boosted: vec![],
        };
        assert!((p.value(0, 9) - (0.8 - 1.8)).abs() < 1e-12);
    }
}
