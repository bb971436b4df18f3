use std::fmt;
use std::str::FromStr;

use super::{Category, Clue, GameResult};
use crate::error::Error;

/// One game, as replayable line-oriented text.
///
/// ```text
/// SEED 17
/// SPYMASTER static:spymaster:a
/// GUESSER static:guesser:a
/// ENV deterministic
/// BOARD apple:red bank:blue …
/// CLUE fruit 2
/// REVEAL apple red
/// END 3 win
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub seed: u64,
    pub spymaster: String,
    pub guesser: String,
    pub environment: String,
    pub board: Vec<(String, Category)>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Clue(Clue),
    Reveal { word: String, category: Category },
    End { score: i64, result: GameResult },
    /// The game was aborted by an agent breaking a rule.
    Invalid(String),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Clue(c) => write!(f, "CLUE {} {}", c.word, c.number),
            Event::Reveal { word, category } => write!(f, "REVEAL {word} {category}"),
            Event::End { score, result } => write!(f, "END {score} {result}"),
            Event::Invalid(reason) => write!(f, "INVALID {reason}"),
        }
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SEED {}", self.seed)?;
        writeln!(f, "SPYMASTER {}", self.spymaster)?;
        writeln!(f, "GUESSER {}", self.guesser)?;
        writeln!(f, "ENV {}", self.environment)?;
        write!(f, "BOARD")?;
        for (w, c) in &self.board {
            write!(f, " {w}:{c}")?;
        }
        writeln!(f)?;
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Transcript {
        line,
        message: message.into(),
    }
}

fn parse_event(line: usize, text: &str) -> Result<Event, Error> {
    let (tag, rest) = text.split_once(' ').unwrap_or((text, ""));
    let fields: Vec<&str> = rest.split_whitespace().collect();
    match (tag, fields.as_slice()) {
        ("CLUE", [word, n]) => Ok(Event::Clue(Clue::new(
            *word,
            n.parse().map_err(|_| bad(line, "bad clue number"))?,
        ))),
        ("REVEAL", [word, cat]) => Ok(Event::Reveal {
            word: (*word).to_owned(),
            category: cat.parse().map_err(|e: String| bad(line, e))?,
        }),
        ("END", [score, result]) => Ok(Event::End {
            score: score.parse().map_err(|_| bad(line, "bad score"))?,
            result: result.parse().map_err(|e: String| bad(line, e))?,
        }),
        ("INVALID", _) => Ok(Event::Invalid(rest.to_owned())),
        _ => Err(bad(line, format!("unrecognized record `{text}`"))),
    }
}

impl FromStr for Transcript {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut seed = None;
        let mut spymaster = None;
        let mut guesser = None;
        let mut environment = None;
        let mut board = None;
        let mut events = Vec::new();
        for (idx, text) in s.lines().enumerate() {
            let line = idx + 1;
            let text = text.trim_end();
            if text.is_empty() {
                continue;
            }
            let (tag, rest) = text.split_once(' ').unwrap_or((text, ""));
            match tag {
                "SEED" => seed = Some(rest.parse().map_err(|_| bad(line, "bad seed"))?),
                "SPYMASTER" => spymaster = Some(rest.to_owned()),
                "GUESSER" => guesser = Some(rest.to_owned()),
                "ENV" => environment = Some(rest.to_owned()),
                "BOARD" => {
                    let cards = rest
                        .split_whitespace()
                        .map(|tok| {
                            let (w, c) = tok.rsplit_once(':').ok_or_else(|| bad(line, "expected word:category"))?;
                            Ok((w.to_owned(), c.parse().map_err(|e: String| bad(line, e))?))
                        })
                        .collect::<Result<Vec<_>, Error>>()?;
                    board = Some(cards);
                }
                _ => events.push(parse_event(line, text)?),
            }
        }
        let missing = |what: &str| bad(0, format!("missing {what} record"));
        Ok(Self {
            seed: seed.ok_or_else(|| missing("SEED"))?,
            spymaster: spymaster.ok_or_else(|| missing("SPYMASTER"))?,
            guesser: guesser.ok_or_else(|| missing("GUESSER"))?,
            environment: environment.ok_or_else(|| missing("ENV"))?,
            board: board.ok_or_else(|| missing("BOARD"))?,
            events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let t = Transcript {
            seed: 17,
            spymaster: "static:spymaster:a".into(),
            guesser: "bayes:guesser:a,b:skip=0:belief=1".into(),
            environment: "stochastic:1:clue_vector_noise".into(),
            board: vec![("apple".into(), Category::Red), ("bank".into(), Category::Assassin)],
            events: vec![
                Event::Clue(Clue::new("fruit", 1)),
                Event::Reveal {
                    word: "apple".into(),
                    category: Category::Red,
                },
                Event::Invalid("clue word `x` is on the board".into()),
                Event::End {
                    score: -3,
                    result: GameResult::Loss,
                },
            ],
        };
        let text = t.to_string();
        assert_eq!(text.parse::<Transcript>().unwrap(), t);
    }

    #[test]
    fn reports_bad_lines() {
        let err = "SEED 1\nCLUE x notanumber\n".parse::<Transcript>().unwrap_err();
        assert!(matches!(err, Error::Transcript { line: 2, .. }));
    }
}
