use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

fn codenames(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_codenames")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "codenames {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    codenames(&["synth", "--names", "a,b", "--out", dir.to_str().unwrap(), "--clusters", "30"]);
    let config = dir.join("experiment.toml");
    std::fs::write(
        &config,
        r#"
seed = 5
games = 4
output = "results.csv"
transcripts = "games"
models = ["a", "b"]
spymasters = ["static:spymaster:a", "bayes:spymaster:a,b:samples=5"]
guessers = ["static:guesser:b"]

[embeddings]
a = "a.txt"
b = "b.txt"
"#,
    )
    .unwrap();
    config
}

#[test]
fn simulate_then_replay_a_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let config = config.to_str().unwrap();

    let table = stdout(&codenames(&["simulate", "--config", config]));
    assert!(table.contains("bayes:spymaster:a,b"), "{table}");
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");

    // a second run with more workers writes the same results
    codenames(&["simulate", "--config", config, "--workers", "2"]);
    assert_eq!(std::fs::read_to_string(dir.path().join("results.csv")).unwrap(), csv);

    let games: Vec<_> = std::fs::read_dir(dir.path().join("games")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(games.len(), 8);
    for game in &games {
        let out = stdout(&codenames(&["replay", game.to_str().unwrap(), "--config", config]));
        assert!(out.starts_with("replay matches"), "{out}");
    }

    // a tampered transcript is reported
    let text = std::fs::read_to_string(&games[0]).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("CLUE") { "CLUE nothing 1" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, tampered).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_codenames"))
        .args(["replay", bad.to_str().unwrap(), "--config", config])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn precompute_writes_a_cache_per_sigma() {
    let dir = tempfile::tempdir().unwrap();
    codenames(&["synth", "--names", "a", "--out", dir.path().to_str().unwrap(), "--clusters", "20"]);
    let cache = dir.path().join("cache");
    let out = stdout(&codenames(&[
        "precompute",
        "--embedding",
        dir.path().join("a.txt").to_str().unwrap(),
        "--samples",
        "20",
        "--neighbors",
        "30",
        "--sigma",
        "0.5,1.0",
        "--limit",
        "5",
        "--out",
        cache.to_str().unwrap(),
    ]));
    let paths: Vec<&str> = out.lines().collect();
    assert_eq!(paths.len(), 2);
    assert!(paths.iter().all(|p| Path::new(p).is_file()));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn session_commands_talk_to_a_running_server() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_codenames"))
        .args(["serve", "--config", config.to_str().unwrap(), "--port", "0"])
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let stderr = child.stderr.take().unwrap();
    let server = Server(child);
    let mut lines = BufReader::new(stderr).lines().map(Result::unwrap);
    let url = lines
        .find_map(|l| l.strip_prefix("serving on ").map(str::to_owned))
        .expect("server address");
    // keep draining the log so the server never writes to a closed pipe
    std::thread::spawn(move || lines.for_each(drop));

    let created = stdout(&codenames(&[
        "session", "--server", &url, "create", "--role", "guesser", "--agent", "static:spymaster:a", "--seed", "3",
    ]));
    let created: serde_json::Value = serde_json::from_str(&created).unwrap();
    let id = created["id"].as_str().unwrap();
    assert_eq!(created["view"]["status"], "awaiting_clue");

    let step: serde_json::Value =
        serde_json::from_str(&stdout(&codenames(&["session", "--server", &url, "step", id]))).unwrap();
    assert!(step["clue"]["word"].is_string());
    let word = step["view"]["cards"][0]["word"].as_str().unwrap();
    let guess: serde_json::Value =
        serde_json::from_str(&stdout(&codenames(&["session", "--server", &url, "guess", id, word]))).unwrap();
    assert_eq!(guess["revealed"][0]["word"], word);

    // illegal actions fail with the service's error
    let out = Command::new(env!("CARGO_BIN_EXE_codenames"))
        .args(["session", "--server", &url, "clue", id, "anything", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("conflict"));
    drop(server);
}
