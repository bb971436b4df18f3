//! Seeded experiment runs: every spymaster × guesser × environment pairing,
//! aggregated into a results CSV and an aligned win-rate table.

mod config;
mod play;
mod run;

pub use config::{Channel, Environment, ExperimentConfig, SyntheticConfig, SyntheticMode};
pub use play::{board_of, play_game, replay, transmit, GameRecord};
pub(crate) use play::{GUESSER_STREAM, SPYMASTER_STREAM};
pub use run::{
    build_registry, csv_string, paired_bootstrap, read_csv, render_table, write_csv, BootstrapCi, Harness,
    MatrixReport, ResultRow,
};
