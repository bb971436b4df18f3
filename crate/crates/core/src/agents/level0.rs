//! Level-0 agents: the similarity guesser and the spymaster that best
//! responds to it. Both are also the partner models inside the Bayesian
//! agents.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{AgentError, BeliefSnapshot, Guesser, ReceivedClue, Spymaster};
use crate::embedding::{euclidean, nearest_in, EmbeddingTable, Semantics};
use crate::game::{BoardView, Category, Clue, GuessSequence, WorldState};

/// Unrevealed board cards and their ids in one embedding, pre-sorted by word
/// so that a stable sort by distance breaks ties lexicographically.
#[derive(Debug, Clone)]
pub(crate) struct BoardGeometry {
    cards: Vec<usize>,
    ids: Vec<Option<usize>>,
}

impl BoardGeometry {
    pub(crate) fn new(table: &EmbeddingTable, words: &[String], unrevealed_mask: u32) -> Self {
        let mut cards: Vec<usize> = (0..words.len()).filter(|i| unrevealed_mask & (1 << i) != 0).collect();
        cards.sort_by(|a, b| words[*a].cmp(&words[*b]));
        let ids = cards.iter().map(|&c| table.id(&words[c])).collect();
        Self { cards, ids }
    }

    pub(crate) fn of_view(table: &EmbeddingTable, view: &BoardView) -> Self {
        Self::new(table, view.words(), view.unrevealed_mask())
    }

    /// Unrevealed cards ascending by distance from `query`. Cards missing
    /// from the vocabulary sort last.
    pub(crate) fn rank(&self, table: &EmbeddingTable, query: &[f64]) -> Vec<(usize, f64)> {
        let mut scored: Vec<(usize, f64)> = self
            .cards
            .iter()
            .zip(&self.ids)
            .map(|(&card, id)| {
                let d = id.map_or(f64::INFINITY, |id| euclidean(table.vector(id), query));
                (card, d)
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        scored
    }

    /// Unrevealed cards in word order; the fallback when a clue cannot be
    /// embedded.
    pub(crate) fn lexicographic(&self) -> &[usize] {
        &self.cards
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level0Guess {
    pub guess: GuessSequence,
    /// The clue word was not in the guesser's vocabulary; the guess is the
    /// first cards in word order.
    pub out_of_vocabulary: bool,
}

/// The `clue.number` unrevealed cards closest to the clue word.
pub fn level0_guess(table: &EmbeddingTable, view: &BoardView, clue: &Clue) -> Level0Guess {
    let geometry = BoardGeometry::of_view(table, view);
    let n = clue.number as usize;
    match table.id(&clue.word) {
        Some(id) => Level0Guess {
            guess: GuessSequence(geometry.rank(table, table.vector(id)).into_iter().take(n).map(|e| e.0).collect()),
            out_of_vocabulary: false,
        },
        None => Level0Guess {
            guess: GuessSequence(geometry.lexicographic().iter().take(n).copied().collect()),
            out_of_vocabulary: true,
        },
    }
}

/// Level-0 guess for a raw clue vector, as used when simulating guessers on
/// perturbed clues.
pub fn level0_guess_vector(table: &EmbeddingTable, view: &BoardView, query: &[f64], n: usize) -> GuessSequence {
    let geometry = BoardGeometry::of_view(table, view);
    GuessSequence(geometry.rank(table, query).into_iter().take(n).map(|e| e.0).collect())
}

#[derive(Debug, Clone)]
struct Candidate {
    word: usize,
    /// Cards whose neighbor list contains this word.
    sources: u32,
    /// Unrevealed cards ascending by distance.
    order: Vec<u8>,
    /// Running sum of distances along `order`.
    cumulative: Vec<f64>,
}

/// Precomputed clue geometry for one embedding and one set of unrevealed
/// cards. Answers "which clue would a level-0 spymaster give if these cards
/// were the team's" without touching vectors again, which is what replaying a
/// spymaster over thousands of hypothetical worlds needs.
#[derive(Debug, Clone)]
pub struct ClueTable {
    candidates: Vec<Candidate>,
}

/// A level-0 clue choice before it is turned into a [`Clue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClueChoice {
    pub word: usize,
    pub number: u32,
    /// Sum of distances to the cards the clue is meant to reveal.
    pub spread: f64,
}

impl ClueTable {
    /// Candidates are the indexed neighbors of every card in `sources_mask`,
    /// minus every board word.
    pub fn build(semantics: &Semantics, words: &[String], unrevealed_mask: u32, sources_mask: u32) -> Self {
        let table = &semantics.table;
        let board: BTreeSet<usize> = words.iter().filter_map(|w| table.id(w)).collect();
        let geometry = BoardGeometry::new(table, words, unrevealed_mask);

        let mut sources: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
        for (card, word) in words.iter().enumerate() {
            if sources_mask & (1 << card) == 0 {
                continue;
            }
            let Some(id) = table.id(word) else { continue };
            for &(nb, _) in semantics.neighbors.neighbors(table, id).iter() {
                if !board.contains(&nb) {
                    *sources.entry(nb).or_default() |= 1 << card;
                }
            }
        }

        let mut candidates: Vec<Candidate> = sources
            .into_iter()
            .map(|(word, sources)| {
                let ranked = geometry.rank(table, table.vector(word));
                let mut acc = 0.0;
                let cumulative = ranked
                    .iter()
                    .map(|e| {
                        acc += e.1;
                        acc
                    })
                    .collect();
                Candidate {
                    word,
                    sources,
                    order: ranked.iter().map(|e| e.0 as u8).collect(),
                    cumulative,
                }
            })
            .collect();
        candidates.sort_by(|a, b| table.word(a.word).cmp(table.word(b.word)));
        Self { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The level-0 best response when `red_mask` holds the team's unrevealed
    /// cards: the candidate whose nearest run of team cards is longest, then
    /// tightest, then first by word. `None` when no candidate is a neighbor of
    /// a team card.
    pub fn best(&self, red_mask: u32) -> Option<ClueChoice> {
        let mut best: Option<(usize, f64, usize)> = None;
        for cand in &self.candidates {
            if cand.sources & red_mask == 0 {
                continue;
            }
            let run = cand.order.iter().take_while(|&&c| red_mask & (1 << c) != 0).count();
            let spread = if run == 0 { 0.0 } else { cand.cumulative[run - 1] };
            let better = match best {
                None => true,
                Some((r, q, _)) => run > r || (run == r && spread < q),
            };
            if better {
                best = Some((run, spread, cand.word));
            }
        }
        best.map(|(run, spread, word)| ClueChoice {
            word,
            number: run.max(1) as u32,
            spread,
        })
    }
}

fn red_mask(world: &WorldState, view: &BoardView) -> u32 {
    view.unrevealed()
        .filter(|&c| world.category(c) == Category::Red)
        .fold(0, |m, c| m | (1 << c))
}

/// Nearest non-board word to any team card, with number 1.
fn fallback_clue(table: &EmbeddingTable, words: &[String], red_mask: u32) -> Option<(usize, f64)> {
    let board: BTreeSet<usize> = words.iter().filter_map(|w| table.id(w)).collect();
    (0..words.len())
        .filter(|c| red_mask & (1 << c) != 0)
        .filter_map(|c| table.id(&words[c]))
        .filter_map(|id| nearest_in(table, table.vector(id), 0..table.len(), 1, |i| board.contains(&i)).pop())
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| table.word(a.0).cmp(table.word(b.0))))
}

/// Level-0 clue for `red_mask` over a prebuilt table, with the empty-candidate
/// fallback.
pub(crate) fn choose_clue(
    semantics: &Semantics,
    table: &ClueTable,
    words: &[String],
    red_mask: u32,
) -> Option<ClueChoice> {
    table.best(red_mask).or_else(|| {
        fallback_clue(&semantics.table, words, red_mask).map(|(word, d)| ClueChoice {
            word,
            number: 1,
            spread: d,
        })
    })
}

/// The clue maximizing the number of team cards a same-embedding level-0
/// guesser reveals, ties broken by the summed distance then by word.
pub fn level0_clue(semantics: &Semantics, world: &WorldState, view: &BoardView) -> Result<Clue, AgentError> {
    let reds = red_mask(world, view);
    if reds == 0 {
        return Err(AgentError::NoTeamCards);
    }
    let table = ClueTable::build(semantics, view.words(), view.unrevealed_mask(), reds);
    let choice = choose_clue(semantics, &table, view.words(), reds).ok_or(AgentError::NoClue)?;
    Ok(Clue::new(semantics.table.word(choice.word), choice.number))
}

/// `static:spymaster:<embedding>`
#[derive(Debug)]
pub struct Level0Spymaster {
    semantics: Arc<Semantics>,
}

impl Level0Spymaster {
    pub fn new(semantics: Arc<Semantics>) -> Self {
        Self { semantics }
    }
}

impl Spymaster for Level0Spymaster {
    fn give_clue(&mut self, world: &WorldState, view: &BoardView) -> Result<Clue, AgentError> {
        level0_clue(&self.semantics, world, view)
    }

    fn observe(&mut self, _clue: &Clue, _observed: &[(usize, Category)]) {}

    fn semantics(&self) -> &Arc<Semantics> {
        &self.semantics
    }

    fn beliefs(&self) -> Option<BeliefSnapshot> {
        None
    }
}

/// `static:guesser:<embedding>`
#[derive(Debug)]
pub struct Level0Guesser {
    semantics: Arc<Semantics>,
    vocabulary_misses: usize,
}

impl Level0Guesser {
    pub fn new(semantics: Arc<Semantics>) -> Self {
        Self {
            semantics,
            vocabulary_misses: 0,
        }
    }

    /// Clues that fell back to word order because the clue was unknown.
    pub fn vocabulary_misses(&self) -> usize {
        self.vocabulary_misses
    }
}

impl Guesser for Level0Guesser {
    fn guess(&mut self, view: &BoardView, clue: &ReceivedClue) -> GuessSequence {
        let table = &self.semantics.table;
        match clue.vector_in(table) {
            Some(v) => level0_guess_vector(table, view, &v, clue.clue.number as usize),
            None => {
                self.vocabulary_misses += 1;
                level0_guess(table, view, &clue.clue).guess
            }
        }
    }

    fn observe(&mut self, _view: &BoardView, _observed: &[(usize, Category)]) {}

    fn beliefs(&self) -> Option<BeliefSnapshot> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{LoadOptions, NeighborIndex};
    use crate::game::{Composition, DEFAULT_TURN_LIMIT};

    /// 25 board words on a line at 10, 20, …, plus free clue words.
    fn line_semantics(extra: &[(&str, f64)]) -> (Arc<Semantics>, BoardView) {
        let mut entries: Vec<(String, Vec<f64>)> = (0..25).map(|i| (format!("b{i:02}"), vec![10.0 * (i + 1) as f64])).collect();
        entries.extend(extra.iter().map(|(w, x)| (w.to_string(), vec![*x])));
        let table = EmbeddingTable::from_entries("line", entries, LoadOptions::raw()).unwrap();
        let sem = Arc::new(Semantics::index_all(table, 40));
        let words = (0..25).map(|i| format!("b{i:02}")).collect();
        (sem, BoardView::new(words, Composition::default(), DEFAULT_TURN_LIMIT))
    }

    #[test]
    fn guesses_by_distance() {
        let entries = vec![
            ("x".to_string(), vec![1.0]),
            ("y".to_string(), vec![2.0]),
            ("z".to_string(), vec![5.0]),
            ("clue".to_string(), vec![0.0]),
        ];
        let table = EmbeddingTable::from_entries("t", entries, LoadOptions::raw()).unwrap();
        let view = BoardView::new(vec!["z".into(), "y".into(), "x".into()], Composition::default(), 25);
        let g = level0_guess(&table, &view, &Clue::new("clue", 2));
        assert_eq!(g.guess.0, vec![2, 1]);
        assert!(!g.out_of_vocabulary);
        let g = level0_guess(&table, &view, &Clue::new("clue", 1));
        assert_eq!(g.guess.0, vec![2]);
    }

    #[test]
    fn equidistant_cards_go_in_word_order() {
        let entries = vec![
            ("m".to_string(), vec![-1.0]),
            ("k".to_string(), vec![1.0]),
            ("clue".to_string(), vec![0.0]),
        ];
        let table = EmbeddingTable::from_entries("t", entries, LoadOptions::raw()).unwrap();
        let view = BoardView::new(vec!["m".into(), "k".into()], Composition::default(), 25);
        assert_eq!(level0_guess(&table, &view, &Clue::new("clue", 2)).guess.0, vec![1, 0]);
    }

    #[test]
    fn unknown_clue_falls_back_to_word_order() {
        let (sem, view) = line_semantics(&[]);
        let g = level0_guess(&sem.table, &view, &Clue::new("nowhere", 3));
        assert!(g.out_of_vocabulary);
        assert_eq!(g.guess.0, vec![0, 1, 2]);
    }

    #[test]
    fn single_red_gets_its_nearest_neighbor() {
        // only b00 (at 10) is red; clue words at 8 and 3
        let (sem, view) = line_semantics(&[("near", 8.0), ("far", 3.0)]);
        let mut cats = vec![Category::Blue; 25];
        cats[0] = Category::Red;
        let world = WorldState::new(cats);
        let clue = level0_clue(&sem, &world, &view).unwrap();
        assert_eq!(clue, Clue::new("near", 1));
    }

    #[test]
    fn clue_between_two_reds_covers_both() {
        // reds at 10 and 20; blues elsewhere; "mid" at 15 reaches both
        let (sem, view) = line_semantics(&[("mid", 15.0), ("low", 9.0)]);
        let mut cats = vec![Category::Blue; 25];
        cats[0] = Category::Red;
        cats[1] = Category::Red;
        let world = WorldState::new(cats);
        assert_eq!(level0_clue(&sem, &world, &view).unwrap(), Clue::new("mid", 2));
    }

    #[test]
    fn tighter_clue_wins_a_tie() {
        // reds at 10 and 20: "a" at 5 covers both with sum 5 + 15, "s" at 15 with 5 + 5
        let (sem, view) = line_semantics(&[("a", 5.0), ("s", 15.0)]);
        let mut cats = vec![Category::Blue; 25];
        cats[0] = Category::Red;
        cats[1] = Category::Red;
        let world = WorldState::new(cats);
        assert_eq!(level0_clue(&sem, &world, &view).unwrap(), Clue::new("s", 2));
    }

    #[test]
    fn equal_spread_breaks_by_word() {
        let (sem, view) = line_semantics(&[("q", 16.0), ("p", 14.0)]);
        let mut cats = vec![Category::Blue; 25];
        cats[0] = Category::Red;
        cats[1] = Category::Red;
        let world = WorldState::new(cats);
        assert_eq!(level0_clue(&sem, &world, &view).unwrap(), Clue::new("p", 2));
    }

    #[test]
    fn clue_table_matches_direct_scan() {
        let (sem, view) = line_semantics(&[("a", 12.0), ("b", 27.0), ("c", 55.0), ("d", 101.0)]);
        let table = ClueTable::build(&sem, view.words(), view.unrevealed_mask(), view.unrevealed_mask());
        for reds in [0b11u32, 0b101, 1 << 9 | 1 << 10, 0b1_0000_0000] {
            let best = table.best(reds).unwrap();
            // brute force over every non-board word
            let t = &sem.table;
            let mut oracle: Option<(usize, f64, String)> = None;
            for id in 0..t.len() {
                if view.is_board_word(t.word(id)) {
                    continue;
                }
                let mut ranked: Vec<(usize, f64)> = (0..25).map(|c| (c, t.distance(t.word(id), view.word(c)).unwrap())).collect();
                ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(view.word(a.0).cmp(view.word(b.0))));
                let run = ranked.iter().take_while(|e| reds & (1 << e.0) != 0).count();
                let q: f64 = ranked.iter().take(run).map(|e| e.1).sum();
                let w = t.word(id).to_owned();
                let better = match &oracle {
                    None => true,
                    Some((r, bq, bw)) => run > *r || (run == *r && (q < *bq || (q == *bq && w < *bw))),
                };
                if better {
                    oracle = Some((run, q, w));
                }
            }
            let (run, _, word) = oracle.unwrap();
            assert_eq!(sem.table.word(best.word), word, "reds {reds:b}");
            assert_eq!(best.number as usize, run.max(1));
        }
    }

    #[test]
    fn empty_candidate_set_falls_back() {
        let entries: Vec<(String, Vec<f64>)> = (0..25)
            .map(|i| (format!("b{i:02}"), vec![i as f64]))
            .chain([("free".to_string(), vec![100.0])])
            .collect();
        let table = EmbeddingTable::from_entries("t", entries, LoadOptions::raw()).unwrap();
        let table = Arc::new(table);
        // neighbor lists of size 1 only ever reach other board words
        let index = Arc::new(NeighborIndex::build(&table, 1, None));
        let sem = Semantics::new(table, index);
        let words: Vec<String> = (0..25).map(|i| format!("b{i:02}")).collect();
        let view = BoardView::new(words, Composition::default(), 25);
        let mut cats = vec![Category::Blue; 25];
        cats[3] = Category::Red;
        let world = WorldState::new(cats);
        assert_eq!(level0_clue(&sem, &world, &view).unwrap(), Clue::new("free", 1));
    }
}
