use std::time::Instant;

use super::config::{Channel, Environment};
use crate::agents::{AgentSpec, ClueNoise, Guesser, ModelRegistry, ReceivedClue, Spymaster};
use crate::embedding::{snap_to_vocab, Semantics};
use crate::error::{Error, Result};
use crate::game::{
    game_outcome, resolve_turn, BoardView, Category, Clue, Composition, Event, Outcome, Transcript, WorldState,
};
use crate::seed;

pub(crate) const SPYMASTER_STREAM: u64 = 1;
pub(crate) const GUESSER_STREAM: u64 = 2;
const CHANNEL_STREAM: u64 = 3;

/// One finished (or aborted) game.
#[derive(Debug, Clone)]
pub struct GameRecord {
    pub transcript: Transcript,
    /// `None` when an agent broke a rule and the game was aborted.
    pub outcome: Option<Outcome>,
    pub seconds: f64,
}

/// The clue as it reaches the guesser through `env`. Snapping happens in
/// `snap_space`, the spymaster's semantics; without one the snap channel
/// passes the clue through unchanged.
pub fn transmit(
    env: Environment,
    snap_space: Option<&Semantics>,
    view: &BoardView,
    clue: &Clue,
    game_seed: u64,
) -> ReceivedClue {
    let Environment::Stochastic { noise, channel } = env else {
        return ReceivedClue::exact(clue.clone());
    };
    let noise_seed = seed::derive(game_seed, &[CHANNEL_STREAM, u64::from(view.turn())]);
    match channel {
        Channel::ClueVectorNoise => ReceivedClue {
            clue: clue.clone(),
            noise: Some(ClueNoise {
                sigma: noise,
                seed: noise_seed,
            }),
        },
        Channel::SnapNoise => {
            let Some(semantics) = snap_space else {
                return ReceivedClue::exact(clue.clone());
            };
            let table = &semantics.table;
            let Some(id) = table.id(&clue.word) else {
                return ReceivedClue::exact(clue.clone());
            };
            let v = table.perturb_word(id, noise, &mut seed::rng(noise_seed));
            let mut pool = vec![id];
            pool.extend(semantics.neighbors.neighbors(table, id).iter().map(|e| e.0));
            pool.retain(|&w| !view.is_board_word(table.word(w)));
            let word = snap_to_vocab(table, &v, &pool).unwrap_or(id);
            ReceivedClue::exact(Clue::new(table.word(word), clue.number))
        }
    }
}

/// Plays one game to the end with freshly built agents. Agent seeds come
/// from `game_seed`, so the transcript alone is enough to replay it.
pub fn play_game(
    registry: &ModelRegistry,
    spymaster_spec: &AgentSpec,
    guesser_spec: &AgentSpec,
    env: Environment,
    world: WorldState,
    mut view: BoardView,
    game_seed: u64,
) -> Result<GameRecord> {
    let start = Instant::now();
    let mut spymaster = registry.spymaster(spymaster_spec, seed::derive(game_seed, &[SPYMASTER_STREAM]))?;
    let mut guesser = registry.guesser(guesser_spec, seed::derive(game_seed, &[GUESSER_STREAM]))?;
    let mut transcript = Transcript {
        seed: game_seed,
        spymaster: spymaster_spec.to_string(),
        guesser: guesser_spec.to_string(),
        environment: env.to_string(),
        board: view
            .words()
            .iter()
            .cloned()
            .zip(world.categories().iter().copied())
            .collect(),
        events: Vec::new(),
    };
    let outcome = run_turns(&mut *spymaster, &mut *guesser, env, &world, &mut view, game_seed, &mut transcript.events);
    if let Some(o) = &outcome {
        transcript.events.push(Event::End {
            score: o.score,
            result: o.result,
        });
    }
    Ok(GameRecord {
        transcript,
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_turns(
    spymaster: &mut dyn Spymaster,
    guesser: &mut dyn Guesser,
    env: Environment,
    world: &WorldState,
    view: &mut BoardView,
    game_seed: u64,
    events: &mut Vec<Event>,
) -> Option<Outcome> {
    let invalid = |events: &mut Vec<Event>, reason: String| {
        tracing::warn!(%reason, "game aborted");
        events.push(Event::Invalid(reason));
        None
    };
    while !view.is_terminal() {
        let clue = match spymaster.give_clue(world, view) {
            Ok(c) => c,
            Err(e) => return invalid(events, format!("spymaster: {e}")),
        };
        if let Err(e) = view.validate_clue(&clue) {
            return invalid(events, format!("spymaster gave `{clue}`: {e}"));
        }
        events.push(Event::Clue(clue.clone()));
        let received = transmit(env, Some(spymaster.semantics()), view, &clue, game_seed);
        let guess = guesser.guess(view, &received);
        let observed = match resolve_turn(world, view, &clue, &guess) {
            Ok(o) => o,
            Err(e) => return invalid(events, format!("guesser: {e}")),
        };
        for &(card, category) in &observed {
            events.push(Event::Reveal {
                word: view.word(card).to_owned(),
                category,
            });
        }
        spymaster.observe(&clue, &observed);
        guesser.observe(view, &observed);
    }
    game_outcome(view).ok()
}

/// Rebuilds the board of a transcript.
pub fn board_of(transcript: &Transcript, turn_limit: u32) -> Result<(WorldState, BoardView)> {
    let words: Vec<String> = transcript.board.iter().map(|b| b.0.clone()).collect();
    let categories: Vec<Category> = transcript.board.iter().map(|b| b.1).collect();
    let world = WorldState::new(categories);
    let [red, blue, bystander, assassin] = world.histogram();
    let composition = Composition::new(red, blue, bystander, assassin);
    composition.validate()?;
    Ok((world, BoardView::new(words, composition, turn_limit)))
}

/// Replays a transcript with the same agents and seed, checking every event.
/// The first differing event is reported by its line in the transcript text.
pub fn replay(registry: &ModelRegistry, transcript: &Transcript, turn_limit: u32) -> Result<GameRecord> {
    let spymaster: AgentSpec = transcript.spymaster.parse()?;
    let guesser: AgentSpec = transcript.guesser.parse()?;
    let env: Environment = transcript.environment.parse().map_err(Error::Config)?;
    let (world, view) = board_of(transcript, turn_limit)?;
    let record = play_game(registry, &spymaster, &guesser, env, world, view, transcript.seed)?;
    // SEED, SPYMASTER, GUESSER, ENV and BOARD come first
    const HEADER_LINES: usize = 5;
    let (expected, actual) = (&transcript.events, &record.transcript.events);
    for i in 0..expected.len().max(actual.len()) {
        let show = |e: Option<&Event>| e.map_or_else(|| "<end of game>".to_owned(), ToString::to_string);
        if expected.get(i) != actual.get(i) {
            return Err(Error::Divergence {
                line: HEADER_LINES + i + 1,
                expected: show(expected.get(i)),
                actual: show(actual.get(i)),
            });
        }
    }
    Ok(record)
}
