//! One game between a human and an agent, advanced one action at a time.
//!
//! This is the state machine behind the play service; the wire types here
//! are what the service serializes and the client deserializes.
//!
//! ```text
//! awaiting_clue --clue--> awaiting_guess --guess--> awaiting_clue | finished
//! ```
//!
//! Whichever side the human does not play moves on `agent_step`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, AgentSpec, BeliefSnapshot, Guesser, ModelRegistry, ReceivedClue, Role, Spymaster};
use crate::game::{
    game_outcome, new_game, resolve_turn, BoardView, Category, Clue, Composition, Event, GuessSequence, Outcome,
    RuleViolation, Transcript, WorldState, DEFAULT_TURN_LIMIT,
};
use crate::harness::{transmit, Channel, Environment, GUESSER_STREAM, SPYMASTER_STREAM};
use crate::seed;

/// Transcript name of the human side.
pub const HUMAN: &str = "human";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// The role the human plays.
    pub role: Role,
    /// The agent playing the other role.
    pub agent: AgentSpec,
    #[serde(default)]
    pub composition: Option<Composition>,
    /// Random when absent; echoed in the transcript either way.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "deterministic")]
    pub environment: Environment,
    #[serde(default)]
    pub turn_limit: Option<u32>,
}

fn deterministic() -> Environment {
    Environment::Deterministic
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingClue,
    AwaitingGuess,
    Finished,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::AwaitingClue => "awaiting_clue",
            Status::AwaitingGuess => "awaiting_guess",
            Status::Finished => "finished",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardView {
    pub word: String,
    /// Set once the card is revealed.
    pub revealed: Option<Category>,
    /// The hidden assignment; only ever sent to a human spymaster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealView {
    pub word: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnView {
    /// The clue as the human saw it: as given for a human spymaster, as
    /// received for a human guesser.
    pub clue: Clue,
    pub reveals: Vec<RevealView>,
}

/// Everything the human may see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub role: Role,
    pub agent: String,
    pub environment: String,
    pub status: Status,
    pub turn: u32,
    pub turn_limit: u32,
    pub composition: Composition,
    /// Unrevealed cards per category.
    pub remaining: Composition,
    pub cards: Vec<CardView>,
    pub history: Vec<TurnView>,
    /// The clue waiting for a guess.
    pub pending_clue: Option<Clue>,
    pub outcome: Option<Outcome>,
}

/// Result of one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub view: SessionView,
    /// The clue given by this action, as the human sees it.
    pub clue: Option<Clue>,
    pub revealed: Vec<RevealView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefsResponse {
    /// False for static agents, which hold no beliefs.
    pub bayesian: bool,
    pub snapshot: Option<BeliefSnapshot>,
}

/// Error body of every failed request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    /// The game rule an illegal action broke.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Rule(#[from] RuleViolation),
    #[error("agent failed: {0}")]
    Agent(String),
    #[error("{0}")]
    BadRequest(String),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Conflict(_) => "conflict",
            SessionError::Rule(_) => "illegal_action",
            SessionError::Agent(_) => "agent_failed",
            SessionError::BadRequest(_) => "bad_request",
        }
    }

    pub fn to_api(&self) -> ApiError {
        ApiError {
            code: self.code().to_owned(),
            message: self.to_string(),
            rule: match self {
                SessionError::Rule(v) => Some(v.rule().to_owned()),
                _ => None,
            },
        }
    }
}

impl From<crate::Error> for SessionError {
    fn from(e: crate::Error) -> Self {
        SessionError::BadRequest(e.to_string())
    }
}

impl From<AgentError> for SessionError {
    fn from(e: AgentError) -> Self {
        SessionError::Agent(e.to_string())
    }
}

#[derive(Debug)]
struct Pending {
    given: Clue,
    received: ReceivedClue,
}

pub struct Session {
    role: Role,
    agent_spec: AgentSpec,
    env: Environment,
    game_seed: u64,
    world: WorldState,
    view: BoardView,
    spymaster: Option<Box<dyn Spymaster>>,
    guesser: Option<Box<dyn Guesser>>,
    status: Status,
    pending: Option<Pending>,
    history: Vec<TurnView>,
    transcript: Transcript,
    outcome: Option<Outcome>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("role", &self.role)
            .field("agent", &self.agent_spec.to_string())
            .field("seed", &self.game_seed)
            .field("status", &self.status)
            .finish_non_exhaustive()
    }
}

impl Session {
    /// Deals a board from `pool` and builds the agent. Agents and the channel
    /// draw from the same seed streams as harness games, so a session whose
    /// human plays like an agent reproduces that agent's harness game.
    pub fn new(registry: &ModelRegistry, pool: &[String], config: SessionConfig) -> Result<Self, SessionError> {
        let agent_role = config.agent.role();
        if agent_role == config.role {
            return Err(SessionError::BadRequest(format!(
                "the agent `{}` plays the same role as the human",
                config.agent
            )));
        }
        if let Environment::Stochastic { noise, channel } = config.environment {
            if !(noise >= 0.0 && noise.is_finite()) {
                return Err(SessionError::BadRequest("channel noise must be finite and non-negative".into()));
            }
            // vector noise needs a guesser that reads vectors, snapping needs
            // a spymaster with a vector space
            match (channel, config.role) {
                (Channel::ClueVectorNoise, Role::Guesser) | (Channel::SnapNoise, Role::Spymaster) => {
                    return Err(SessionError::BadRequest(format!(
                        "channel `{channel}` is not available to a human {}",
                        config.role
                    )))
                }
                _ => {}
            }
        }
        let composition = config.composition.unwrap_or_default();
        composition.validate().map_err(|e| SessionError::BadRequest(e.to_string()))?;
        let turn_limit = config.turn_limit.unwrap_or(DEFAULT_TURN_LIMIT);
        if turn_limit == 0 {
            return Err(SessionError::BadRequest("turn_limit must be at least 1".into()));
        }
        let game_seed = config.seed.unwrap_or_else(rand::random);
        let board_seed = seed::derive(game_seed, &[seed::hash_str("board")]);
        let (world, view) = new_game(pool, composition, turn_limit, &mut seed::rng(board_seed))
            .map_err(|e| SessionError::BadRequest(e.to_string()))?;

        let (spymaster, guesser) = match agent_role {
            Role::Spymaster => (
                Some(registry.spymaster(&config.agent, seed::derive(game_seed, &[SPYMASTER_STREAM]))?),
                None,
            ),
            Role::Guesser => (
                None,
                Some(registry.guesser(&config.agent, seed::derive(game_seed, &[GUESSER_STREAM]))?),
            ),
        };
        let name = |r: Role| if r == agent_role { config.agent.to_string() } else { HUMAN.to_owned() };
        let transcript = Transcript {
            seed: game_seed,
            spymaster: name(Role::Spymaster),
            guesser: name(Role::Guesser),
            environment: config.environment.to_string(),
            board: view.words().iter().cloned().zip(world.categories().iter().copied()).collect(),
            events: Vec::new(),
        };
        Ok(Self {
            role: config.role,
            agent_spec: config.agent,
            env: config.environment,
            game_seed,
            world,
            view,
            spymaster,
            guesser,
            status: Status::AwaitingClue,
            pending: None,
            history: Vec::new(),
            transcript,
            outcome: None,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn seed(&self) -> u64 {
        self.game_seed
    }

    /// The full record, hidden assignment included.
    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// The view for the human, with the hidden assignment only for a
    /// spymaster.
    pub fn view(&self) -> SessionView {
        let spymaster = self.role == Role::Spymaster;
        SessionView {
            role: self.role,
            agent: self.agent_spec.to_string(),
            environment: self.env.to_string(),
            status: self.status,
            turn: self.view.turn(),
            turn_limit: self.view.turn_limit(),
            composition: self.view.composition(),
            remaining: self.view.remaining_composition(),
            cards: (0..self.view.len())
                .map(|c| CardView {
                    word: self.view.word(c).to_owned(),
                    revealed: self.view.revealed(c),
                    category: spymaster.then(|| self.world.category(c)),
                })
                .collect(),
            history: self.history.clone(),
            pending_clue: self.pending.as_ref().map(|p| self.shown(p)),
            outcome: self.outcome,
        }
    }

    fn shown(&self, pending: &Pending) -> Clue {
        match self.role {
            Role::Spymaster => pending.given.clone(),
            Role::Guesser => pending.received.clue.clone(),
        }
    }

    pub fn beliefs(&self) -> BeliefsResponse {
        let snapshot = match (&self.spymaster, &self.guesser) {
            (Some(s), _) => s.beliefs(),
            (_, Some(g)) => g.beliefs(),
            _ => None,
        };
        BeliefsResponse {
            bayesian: self.agent_spec.is_bayesian(),
            snapshot,
        }
    }

    fn expect(&self, status: Status, human: bool, action: &str) -> Result<(), SessionError> {
        if self.status != status {
            return Err(SessionError::Conflict(format!("cannot {action} while the session is {}", self.status)));
        }
        let actor = match status {
            Status::AwaitingGuess => Role::Guesser,
            _ => Role::Spymaster,
        };
        if human != (self.role == actor) {
            let who = if human { "the agent" } else { "the human" };
            return Err(SessionError::Conflict(format!("{who} plays the {actor} in this session")));
        }
        Ok(())
    }

    /// A human spymaster's clue.
    pub fn submit_clue(&mut self, clue: Clue) -> Result<ActionResponse, SessionError> {
        self.expect(Status::AwaitingClue, true, "give a clue")?;
        self.give(clue)
    }

    /// A human guesser's guess, as board words in order.
    pub fn submit_guess(&mut self, words: &[String]) -> Result<ActionResponse, SessionError> {
        self.expect(Status::AwaitingGuess, true, "guess")?;
        let cards = words
            .iter()
            .map(|w| self.view.card(w).ok_or_else(|| RuleViolation::NotOnBoard(w.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        self.guess(GuessSequence(cards), true)
    }

    /// Lets the agent take its pending action.
    pub fn agent_step(&mut self) -> Result<ActionResponse, SessionError> {
        match self.status {
            Status::AwaitingClue => {
                self.expect(Status::AwaitingClue, false, "step")?;
                let spymaster = self.spymaster.as_mut().expect("agent spymaster");
                let clue = spymaster.give_clue(&self.world, &self.view)?;
                self.view
                    .validate_clue(&clue)
                    .map_err(|e| SessionError::Agent(format!("illegal clue `{clue}`: {e}")))?;
                self.give(clue)
            }
            Status::AwaitingGuess => {
                self.expect(Status::AwaitingGuess, false, "step")?;
                let received = &self.pending.as_ref().expect("pending clue").received;
                let guess = self.guesser.as_mut().expect("agent guesser").guess(&self.view, received);
                self.guess(guess, false)
            }
            Status::Finished => Err(SessionError::Conflict("the game is over".into())),
        }
    }

    fn give(&mut self, clue: Clue) -> Result<ActionResponse, SessionError> {
        self.view.validate_clue(&clue)?;
        let snap_space = self.spymaster.as_ref().map(|s| s.semantics().as_ref());
        let received = transmit(self.env, snap_space, &self.view, &clue, self.game_seed);
        self.transcript.events.push(Event::Clue(clue.clone()));
        let pending = Pending { given: clue, received };
        let shown = self.shown(&pending);
        self.pending = Some(pending);
        self.status = Status::AwaitingGuess;
        Ok(ActionResponse {
            view: self.view(),
            clue: Some(shown),
            revealed: Vec::new(),
        })
    }

    fn guess(&mut self, guess: GuessSequence, human: bool) -> Result<ActionResponse, SessionError> {
        let given = self.pending.as_ref().expect("pending clue").given.clone();
        let observed = resolve_turn(&self.world, &mut self.view, &given, &guess).map_err(|e| {
            if human {
                SessionError::Rule(e)
            } else {
                SessionError::Agent(format!("illegal guess: {e}"))
            }
        })?;
        let pending = self.pending.take().expect("pending clue");
        let revealed: Vec<RevealView> = observed
            .iter()
            .map(|&(card, category)| RevealView {
                word: self.view.word(card).to_owned(),
                category,
            })
            .collect();
        for r in &revealed {
            self.transcript.events.push(Event::Reveal {
                word: r.word.clone(),
                category: r.category,
            });
        }
        if let Some(s) = self.spymaster.as_mut() {
            s.observe(&given, &observed);
        }
        if let Some(g) = self.guesser.as_mut() {
            g.observe(&self.view, &observed);
        }
        self.history.push(TurnView {
            clue: self.shown(&pending),
            reveals: revealed.clone(),
        });
        if self.view.is_terminal() {
            let outcome = game_outcome(&self.view).expect("terminal view");
            self.transcript.events.push(Event::End {
                score: outcome.score,
                result: outcome.result,
            });
            self.outcome = Some(outcome);
            self.status = Status::Finished;
        } else {
            self.status = Status::AwaitingClue;
        }
        Ok(ActionResponse {
            view: self.view(),
            clue: None,
            revealed,
        })
    }
}
