use codenames_core::game::{Event, GameResult, Transcript};
use codenames_core::harness::{csv_string, replay, ExperimentConfig, Harness};
use codenames_core::Error;

fn config(extra: &str) -> ExperimentConfig {
    format!(
        r#"
        seed = 11
        games = 4
        workers = 2
        models = ["a", "b"]
        spymasters = ["static:spymaster:a", "bayes:spymaster:a,b:noise=0.5:samples=4"]
        guessers = ["static:guesser:a", "bayes:guesser:a,b:worlds=200:vsamples=100"]
        {extra}
        [synthetic]
        names = ["a", "b"]
        clusters = 30
        words_per_cluster = 10
        "#
    )
    .parse()
    .unwrap()
}

#[test]
fn same_embedding_level0_pair_wins_a_planted_board() {
    let mut c = config("");
    c.games = 1;
    c.spymasters.truncate(1);
    c.guessers.truncate(1);
    let h = Harness::new(c).unwrap();
    let (row, games) = h
        .run_pairing(&h.config().spymasters[0], &h.config().guessers[0], h.config().environments[0])
        .unwrap();
    assert_eq!(row.invalid, 0);
    assert_eq!(games[0].outcome.unwrap().result, GameResult::Win, "{}", games[0].transcript);
}

#[test]
fn matrix_is_reproducible_and_replayable() {
    let c = config(r#"environments = [{ kind = "deterministic" }, { kind = "stochastic", noise = 0.3, channel = "clue_vector_noise" }]"#);
    let h = Harness::new(c.clone()).unwrap();
    let first = h.run_matrix().unwrap();
    assert_eq!(first.rows.len(), 8);
    for row in &first.rows {
        assert_eq!(row.games + row.invalid, 4);
        assert!(row.wins <= row.games);
    }

    let mut single = c;
    single.workers = 1;
    let again = Harness::new(single).unwrap().run_matrix().unwrap();
    assert_eq!(csv_string(&first.rows), csv_string(&again.rows));

    for game in first.records.iter().flatten().step_by(3) {
        let text = game.transcript.to_string();
        let parsed: Transcript = text.parse().unwrap();
        replay(h.registry(), &parsed, h.config().turn_limit).unwrap();
    }
}

#[test]
fn edited_transcript_diverges_at_the_edited_line() {
    let mut c = config("");
    c.games = 1;
    let h = Harness::new(c).unwrap();
    let game = h
        .play(&h.config().spymasters[1], &h.config().guessers[0], h.config().environments[0], 0)
        .unwrap();
    let mut edited = game.transcript.clone();
    let idx = edited
        .events
        .iter()
        .position(|e| matches!(e, Event::Reveal { .. }))
        .unwrap();
    if let Event::Reveal { word, .. } = &mut edited.events[idx] {
        word.push('x');
    }
    let err = replay(h.registry(), &edited, h.config().turn_limit).unwrap_err();
    let wanted = edited.events[idx].to_string();
    let line = edited.to_string().lines().position(|l| l == wanted).unwrap() + 1;
    match err {
        Error::Divergence { line: at, .. } => assert_eq!(at, line),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn snap_channel_games_stay_legal() {
    let mut c = config(r#"environments = [{ kind = "stochastic", noise = 1.0, channel = "snap_noise" }]"#);
    c.games = 3;
    let report = Harness::new(c).unwrap().run_matrix().unwrap();
    assert!(report.rows.iter().all(|r| r.invalid == 0));
}
