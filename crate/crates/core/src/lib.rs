//! Solitaire Codenames with Bayesian partner-modeling agents.
//!
//! - [`embedding`]: word vectors, neighbor search, Voronoi likelihoods.
//! - [`game`]: the single-team rules engine and transcripts.
//! - [`agents`]: level-0 and Bayesian spymasters and guessers.
//! - [`harness`]: seeded experiment runs, result tables and replay.
//! - [`session`]: human-versus-agent games for the play service.

pub mod agents;
pub mod embedding;
pub mod error;
pub mod game;
pub mod harness;
pub mod seed;
pub mod session;

pub use error::{Error, Result};
