//! Solitaire Codenames: one team, one spymaster, one guesser.

mod transcript;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::GameError;

pub use transcript::{Event, Transcript};

pub const BOARD_SIZE: usize = 25;
pub const DEFAULT_TURN_LIMIT: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Red,
    Blue,
    Bystander,
    Assassin,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Red, Category::Blue, Category::Bystander, Category::Assassin];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Per-card value in the turn utility.
    pub fn value(self, red_total: usize) -> i64 {
        match self {
            Category::Red => 1,
            Category::Blue => -1,
            Category::Bystander => 0,
            Category::Assassin => -(red_total as i64),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Red => "red",
            Category::Blue => "blue",
            Category::Bystander => "bystander",
            Category::Assassin => "assassin",
        })
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "red" => Ok(Category::Red),
            "blue" => Ok(Category::Blue),
            "bystander" => Ok(Category::Bystander),
            "assassin" => Ok(Category::Assassin),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

/// Number of cards of each category on the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    pub red: usize,
    pub blue: usize,
    pub bystander: usize,
    pub assassin: usize,
}

impl Default for Composition {
    fn default() -> Self {
        Self {
            red: 9,
            blue: 8,
            bystander: 7,
            assassin: 1,
        }
    }
}

impl Composition {
    pub fn new(red: usize, blue: usize, bystander: usize, assassin: usize) -> Self {
        Self {
            red,
            blue,
            bystander,
            assassin,
        }
    }

    pub fn count(&self, c: Category) -> usize {
        match c {
            Category::Red => self.red,
            Category::Blue => self.blue,
            Category::Bystander => self.bystander,
            Category::Assassin => self.assassin,
        }
    }

    pub fn total(&self) -> usize {
        self.red + self.blue + self.bystander + self.assassin
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.total() != BOARD_SIZE || self.red == 0 {
            return Err(GameError::BadComposition(self.total()));
        }
        Ok(())
    }

    /// One category per card, in canonical order.
    pub fn multiset(&self) -> Vec<Category> {
        Category::ALL
            .iter()
            .flat_map(|&c| std::iter::repeat_n(c, self.count(c)))
            .collect()
    }
}

/// The hidden assignment of categories to board positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    categories: Vec<Category>,
}

impl WorldState {
    pub fn new(categories: Vec<Category>) -> Self {
        Self { categories }
    }

    pub fn category(&self, card: usize) -> Category {
        self.categories[card]
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn histogram(&self) -> [usize; 4] {
        let mut h = [0; 4];
        for c in &self.categories {
            h[c.index()] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clue {
    pub word: String,
    pub number: u32,
}

impl Clue {
    pub fn new(word: impl Into<String>, number: u32) -> Self {
        Self {
            word: word.into(),
            number,
        }
    }
}

impl fmt::Display for Clue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.word, self.number)
    }
}

/// An intended guess: board positions in the order the guesser will touch
/// them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GuessSequence(pub Vec<usize>);

impl std::ops::Deref for GuessSequence {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub card: usize,
    pub category: Category,
    pub turn: u32,
}

/// A broken game rule. Agents that trigger one invalidate their game.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuleViolation {
    #[error("clue word `{0}` is on the board")]
    ClueOnBoard(String),
    #[error("clue word is empty or not a single token")]
    MalformedClue,
    #[error("clue number {number} is outside 1..={max}")]
    ClueNumber { number: u32, max: usize },
    #[error("a guess must touch at least one card")]
    EmptyGuess,
    #[error("guess has {len} cards, at most {max} allowed")]
    GuessTooLong { len: usize, max: usize },
    #[error("card `{0}` is guessed twice")]
    DuplicateGuess(String),
    #[error("card `{0}` is already revealed")]
    AlreadyRevealed(String),
    #[error("`{0}` is not on the board")]
    NotOnBoard(String),
    #[error("the game is over")]
    GameOver,
}

impl RuleViolation {
    /// The rule being cited, for human-facing rejections.
    pub fn rule(&self) -> &'static str {
        match self {
            RuleViolation::ClueOnBoard(_) => "a clue may not be any word on the board",
            RuleViolation::MalformedClue => "a clue is a single word and a number",
            RuleViolation::ClueNumber { .. } => "the clue number is between 1 and the number of unrevealed team cards",
            RuleViolation::EmptyGuess => "the guesser must guess at least one card",
            RuleViolation::GuessTooLong { .. } => "the guesser may guess at most one card more than the clue number",
            RuleViolation::DuplicateGuess(_) | RuleViolation::AlreadyRevealed(_) => {
                "only unrevealed cards may be guessed, each once"
            }
            RuleViolation::NotOnBoard(_) => "guesses must name cards on the board",
            RuleViolation::GameOver => "no actions are allowed after the game ends",
        }
    }
}

/// What the guesser can see: the grid, revealed cards and history.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardView {
    words: Vec<String>,
    composition: Composition,
    revealed: Vec<Option<Category>>,
    turn: u32,
    turn_limit: u32,
    clue_log: Vec<Clue>,
    reveal_log: Vec<Reveal>,
}

impl BoardView {
    pub fn new(words: Vec<String>, composition: Composition, turn_limit: u32) -> Self {
        let n = words.len();
        Self {
            words,
            composition,
            revealed: vec![None; n],
            turn: 0,
            turn_limit,
            clue_log: Vec::new(),
            reveal_log: Vec::new(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, card: usize) -> &str {
        &self.words[card]
    }

    pub fn card(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    pub fn revealed(&self, card: usize) -> Option<Category> {
        self.revealed[card]
    }

    pub fn is_revealed(&self, card: usize) -> bool {
        self.revealed[card].is_some()
    }

    pub fn unrevealed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.words.len()).filter(|&i| self.revealed[i].is_none())
    }

    /// Bit `i` set iff card `i` is unrevealed.
    pub fn unrevealed_mask(&self) -> u32 {
        self.unrevealed().fold(0, |m, i| m | (1 << i))
    }

    pub fn revealed_count(&self, c: Category) -> usize {
        self.revealed.iter().filter(|r| **r == Some(c)).count()
    }

    /// Unrevealed cards of category `c`.
    pub fn remaining(&self, c: Category) -> usize {
        self.composition.count(c) - self.revealed_count(c)
    }

    pub fn remaining_composition(&self) -> Composition {
        Composition::new(
            self.remaining(Category::Red),
            self.remaining(Category::Blue),
            self.remaining(Category::Bystander),
            self.remaining(Category::Assassin),
        )
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn turn_limit(&self) -> u32 {
        self.turn_limit
    }

    pub fn clue_log(&self) -> &[Clue] {
        &self.clue_log
    }

    pub fn reveal_log(&self) -> &[Reveal] {
        &self.reveal_log
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining(Category::Red) == 0 || self.revealed_count(Category::Assassin) > 0 || self.turn >= self.turn_limit
    }

    pub fn is_board_word(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }

    pub fn validate_clue(&self, clue: &Clue) -> Result<(), RuleViolation> {
        if self.is_terminal() {
            return Err(RuleViolation::GameOver);
        }
        if clue.word.is_empty() || clue.word.chars().any(char::is_whitespace) {
            return Err(RuleViolation::MalformedClue);
        }
        if self.is_board_word(&clue.word) {
            return Err(RuleViolation::ClueOnBoard(clue.word.clone()));
        }
        let max = self.remaining(Category::Red);
        if clue.number == 0 || clue.number as usize > max {
            return Err(RuleViolation::ClueNumber {
                number: clue.number,
                max,
            });
        }
        Ok(())
    }

    pub fn validate_guess(&self, clue: &Clue, guess: &GuessSequence) -> Result<(), RuleViolation> {
        if guess.is_empty() {
            return Err(RuleViolation::EmptyGuess);
        }
        let max = clue.number as usize + 1;
        if guess.len() > max {
            return Err(RuleViolation::GuessTooLong { len: guess.len(), max });
        }
        let mut seen = HashSet::new();
        for &card in guess.iter() {
            if card >= self.words.len() {
                return Err(RuleViolation::NotOnBoard(format!("#{card}")));
            }
            if !seen.insert(card) {
                return Err(RuleViolation::DuplicateGuess(self.words[card].clone()));
            }
            if self.is_revealed(card) {
                return Err(RuleViolation::AlreadyRevealed(self.words[card].clone()));
            }
        }
        Ok(())
    }

    /// Reveals a card outside of any turn, for setting up scenarios.
    pub fn preset_reveal(&mut self, world: &WorldState, card: usize) {
        let category = world.category(card);
        self.revealed[card] = Some(category);
        self.reveal_log.push(Reveal {
            card,
            category,
            turn: self.turn,
        });
    }
}

/// Deals a board: 25 distinct words drawn uniformly from `pool` and a uniform
/// category assignment with the given counts.
pub fn new_game<R: rand::Rng + ?Sized>(
    pool: &[String],
    composition: Composition,
    turn_limit: u32,
    rng: &mut R,
) -> Result<(WorldState, BoardView), GameError> {
    composition.validate()?;
    let mut distinct: Vec<&String> = pool.iter().collect::<HashSet<_>>().into_iter().collect();
    if distinct.len() < BOARD_SIZE {
        return Err(GameError::PoolTooSmall {
            available: distinct.len(),
            needed: BOARD_SIZE,
        });
    }
    // HashSet order is not deterministic
    distinct.sort();
    let words: Vec<String> = distinct
        .choose_multiple(rng, BOARD_SIZE)
        .map(|w| (*w).clone())
        .collect();
    let mut categories = composition.multiset();
    categories.shuffle(rng);
    Ok((WorldState::new(categories), BoardView::new(words, composition, turn_limit)))
}

/// The realizable prefix of an intended guess: everything up to and including
/// the first non-team card.
pub fn observed_action(guess: &[usize], world: &WorldState) -> Vec<(usize, Category)> {
    let mut out = Vec::with_capacity(guess.len());
    for &card in guess {
        let c = world.category(card);
        out.push((card, c));
        if c != Category::Red {
            break;
        }
    }
    out
}

/// Plays one turn: validates the clue and guess, reveals the observed prefix
/// and advances the turn counter.
pub fn resolve_turn(
    world: &WorldState,
    view: &mut BoardView,
    clue: &Clue,
    guess: &GuessSequence,
) -> Result<Vec<(usize, Category)>, RuleViolation> {
    view.validate_clue(clue)?;
    view.validate_guess(clue, guess)?;
    view.clue_log.push(clue.clone());
    let observed = observed_action(guess, world);
    for &(card, category) in &observed {
        view.revealed[card] = Some(category);
        view.reveal_log.push(Reveal {
            card,
            category,
            turn: view.turn,
        });
    }
    view.turn += 1;
    Ok(observed)
}

/// Heuristic value of one turn: the values of the revealed cards, minus one
/// for the turn itself.
pub fn turn_utility(observed: &[Category], red_total: usize) -> i64 {
    observed.iter().map(|c| c.value(red_total)).sum::<i64>() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameResult {
    Win,
    Loss,
}

impl fmt::Display for GameResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameResult::Win => "win",
            GameResult::Loss => "loss",
        })
    }
}

impl FromStr for GameResult {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "win" => Ok(GameResult::Win),
            "loss" => Ok(GameResult::Loss),
            other => Err(format!("unknown result `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub result: GameResult,
    pub score: i64,
    pub turns: u32,
}

/// Scores a finished game: team cards revealed, minus opposing cards, minus
/// the team size if the assassin was hit, minus one per turn. Only a positive
/// score with every team card revealed wins.
pub fn game_outcome(view: &BoardView) -> Result<Outcome, GameError> {
    if !view.is_terminal() {
        return Err(GameError::NotTerminal);
    }
    let red_total = view.composition.red as i64;
    let assassin = view.revealed_count(Category::Assassin) > 0;
    let score = view.revealed_count(Category::Red) as i64
        - view.revealed_count(Category::Blue) as i64
        - if assassin { red_total } else { 0 }
        - i64::from(view.turn);
    let won = score > 0 && view.remaining(Category::Red) == 0;
    Ok(Outcome {
        result: if won { GameResult::Win } else { GameResult::Loss },
        score,
        turns: view.turn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn pool(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i:02}")).collect()
    }

    /// Board whose categories follow `Composition::multiset` order: cards
    /// 0..9 red, 9..17 blue, 17..24 bystander, 24 assassin.
    fn fixed_board() -> (WorldState, BoardView) {
        let c = Composition::default();
        (
            WorldState::new(c.multiset()),
            BoardView::new(pool(25), c, DEFAULT_TURN_LIMIT),
        )
    }

    #[test]
    fn composition_histogram_matches() {
        let (world, view) = new_game(&pool(40), Composition::default(), 25, &mut seed::rng(1)).unwrap();
        assert_eq!(world.histogram(), [9, 8, 7, 1]);
        assert_eq!(view.len(), 25);
        let distinct: HashSet<_> = view.words().iter().collect();
        assert_eq!(distinct.len(), 25);
    }

    #[test]
    fn same_seed_same_board() {
        let a = new_game(&pool(40), Composition::default(), 25, &mut seed::rng(9)).unwrap();
        let b = new_game(&pool(40), Composition::default(), 25, &mut seed::rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_setup() {
        let bad = Composition::new(10, 10, 10, 10);
        assert_eq!(
            new_game(&pool(40), bad, 25, &mut seed::rng(0)).unwrap_err(),
            GameError::BadComposition(40)
        );
        assert!(matches!(
            new_game(&pool(24), Composition::default(), 25, &mut seed::rng(0)),
            Err(GameError::PoolTooSmall { available: 24, .. })
        ));
    }

    #[test]
    fn reveal_stops_after_first_non_team_card() {
        let (world, mut view) = fixed_board();
        let clue = Clue::new("hint", 3);
        let observed = resolve_turn(&world, &mut view, &clue, &GuessSequence(vec![0, 1, 9, 2])).unwrap();
        assert_eq!(observed, vec![(0, Category::Red), (1, Category::Red), (9, Category::Blue)]);
        assert!(!view.is_revealed(2));
        assert_eq!(view.turn(), 1);
    }

    #[test]
    fn all_red_guess_continues_the_game() {
        let (world, mut view) = fixed_board();
        let observed = resolve_turn(&world, &mut view, &Clue::new("hint", 1), &GuessSequence(vec![0])).unwrap();
        assert_eq!(observed, vec![(0, Category::Red)]);
        assert!(!view.is_terminal());
    }

    #[test]
    fn assassin_ends_the_game_as_a_loss() {
        let (world, mut view) = fixed_board();
        let observed = resolve_turn(&world, &mut view, &Clue::new("hint", 1), &GuessSequence(vec![24])).unwrap();
        assert_eq!(observed, vec![(24, Category::Assassin)]);
        assert!(view.is_terminal());
        assert_eq!(game_outcome(&view).unwrap().result, GameResult::Loss);
    }

    #[test]
    fn turn_utility_examples() {
        use Category::*;
        assert_eq!(turn_utility(&[Red, Red, Red], 9), 2);
        assert_eq!(turn_utility(&[Red, Assassin], 9), -9);
        assert_eq!(turn_utility(&[Bystander], 9), -1);
    }

    fn play(world: &WorldState, view: &mut BoardView, guesses: &[&[usize]]) {
        for g in guesses {
            let n = (g.len() as u32).min(view.remaining(Category::Red) as u32).max(1);
            resolve_turn(world, view, &Clue::new("hint", n), &GuessSequence(g.to_vec())).unwrap();
        }
    }

    #[test]
    fn nine_red_in_eight_turns_wins() {
        let (world, mut view) = fixed_board();
        play(&world, &mut view, &[&[0, 1], &[2], &[3], &[4], &[5], &[6], &[7], &[8]]);
        let out = game_outcome(&view).unwrap();
        assert_eq!((out.score, out.result), (1, GameResult::Win));
    }

    #[test]
    fn nine_red_in_nine_turns_is_a_loss() {
        let (world, mut view) = fixed_board();
        play(&world, &mut view, &[&[0], &[1], &[2], &[3], &[4], &[5], &[6], &[7], &[8]]);
        let out = game_outcome(&view).unwrap();
        assert_eq!((out.score, out.result), (0, GameResult::Loss));
    }

    #[test]
    fn assassin_score_counts_revealed_team_cards() {
        // 9 red revealed before the assassin would need 9 reds; here 4 reds,
        // 2 blues and the assassin over 3 turns: 4 − 2 − 9 − 3.
        let (world, mut view) = fixed_board();
        play(&world, &mut view, &[&[0, 1, 9], &[2, 3, 10], &[24]]);
        let out = game_outcome(&view).unwrap();
        assert_eq!((out.score, out.result), (-10, GameResult::Loss));
    }

    #[test]
    fn outcome_requires_terminal_state() {
        let (_, view) = fixed_board();
        assert_eq!(game_outcome(&view), Err(GameError::NotTerminal));
    }

    #[test]
    fn clue_rules() {
        let (_, view) = fixed_board();
        assert_eq!(
            view.validate_clue(&Clue::new("w03", 1)),
            Err(RuleViolation::ClueOnBoard("w03".into()))
        );
        assert!(matches!(
            view.validate_clue(&Clue::new("hint", 10)),
            Err(RuleViolation::ClueNumber { max: 9, .. })
        ));
        assert!(matches!(view.validate_clue(&Clue::new("hint", 0)), Err(RuleViolation::ClueNumber { .. })));
        assert_eq!(view.validate_clue(&Clue::new("two words", 1)), Err(RuleViolation::MalformedClue));
        assert_eq!(view.validate_clue(&Clue::new("hint", 9)), Ok(()));
    }

    #[test]
    fn guess_rules() {
        let (world, mut view) = fixed_board();
        let clue = Clue::new("hint", 1);
        assert_eq!(view.validate_guess(&clue, &GuessSequence(vec![])), Err(RuleViolation::EmptyGuess));
        assert!(matches!(
            view.validate_guess(&clue, &GuessSequence(vec![0, 1, 2])),
            Err(RuleViolation::GuessTooLong { len: 3, max: 2 })
        ));
        assert!(matches!(
            view.validate_guess(&clue, &GuessSequence(vec![3, 3])),
            Err(RuleViolation::DuplicateGuess(_))
        ));
        resolve_turn(&world, &mut view, &clue, &GuessSequence(vec![0])).unwrap();
        assert!(matches!(
            view.validate_guess(&clue, &GuessSequence(vec![0])),
            Err(RuleViolation::AlreadyRevealed(_))
        ));
    }

    #[test]
    fn turn_limit_terminates() {
        let (world, mut view) = fixed_board();
        view.turn_limit = 2;
        play(&world, &mut view, &[&[0], &[1]]);
        assert!(view.is_terminal());
        assert_eq!(
            resolve_turn(&world, &mut view, &Clue::new("hint", 1), &GuessSequence(vec![2])),
            Err(RuleViolation::GameOver)
        );
        assert_eq!(game_outcome(&view).unwrap().result, GameResult::Loss);
    }

    proptest! {
        #[test]
        fn random_games_respect_invariants(seed_value in any::<u64>()) {
            let mut rng = seed::rng(seed_value);
            let (world, mut view) = new_game(&pool(30), Composition::default(), 25, &mut rng).unwrap();
            let mut utility = 0;
            let mut revealed_before = 0;
            while !view.is_terminal() {
                let n = rng.random_range(1..=view.remaining(Category::Red)) as u32;
                let mut cards: Vec<usize> = view.unrevealed().collect();
                cards.shuffle(&mut rng);
                cards.truncate(rng.random_range(1..=(n as usize + 1)).min(cards.len()));
                let observed = resolve_turn(&world, &mut view, &Clue::new("hint", n), &GuessSequence(cards)).unwrap();
                prop_assert!(!observed.is_empty() && observed.len() <= n as usize + 1);
                let non_red: Vec<_> = observed.iter().filter(|o| o.1 != Category::Red).collect();
                prop_assert!(non_red.len() <= 1);
                if non_red.len() == 1 {
                    prop_assert_eq!(observed.last().unwrap().1, non_red[0].1);
                }
                let cats: Vec<_> = observed.iter().map(|o| o.1).collect();
                utility += turn_utility(&cats, 9);
                let now = view.reveal_log().len();
                prop_assert_eq!(now, revealed_before + observed.len());
                revealed_before = now;
            }
            let out = game_outcome(&view).unwrap();
            prop_assert_eq!(utility, out.score);
            if out.result == GameResult::Win {
                prop_assert_eq!(view.revealed_count(Category::Assassin), 0);
            }
        }
    }
}
