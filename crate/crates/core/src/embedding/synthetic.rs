//! Planted-cluster embeddings for tests and scaled experiments.
//!
//! Words are grouped into topics; each word sits near its topic center. A
//! *family* of embeddings shares one topic structure and differs by
//! per-embedding jitter, the way real embeddings agree on most but not all
//! associations. *Independent* embeddings each draw their own topic
//! assignment.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, LoadOptions};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub words_per_cluster: usize,
    pub dim: usize,
    /// Standard deviation of topic centers.
    pub cluster_spread: f64,
    /// Standard deviation of a word around its topic center.
    pub word_spread: f64,
    /// Standard deviation of the per-embedding jitter added to every word.
    pub distortion: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            clusters: 40,
            words_per_cluster: 10,
            dim: 16,
            cluster_spread: 1.0,
            word_spread: 0.3,
            distortion: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn vocab_size(&self) -> usize {
        self.clusters * self.words_per_cluster
    }

    pub fn words(&self) -> Vec<String> {
        (0..self.vocab_size()).map(|i| format!("word{i:04}")).collect()
    }

    fn gaussian(&self, rng: &mut seed::Rng, sd: f64) -> Vec<f64> {
        (0..self.dim)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Topic-structured base vectors with a random word → topic assignment.
    fn base(&self, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
        let centers: Vec<Vec<f64>> = (0..self.clusters).map(|_| self.gaussian(rng, self.cluster_spread)).collect();
        let mut topic: Vec<usize> = (0..self.vocab_size()).map(|i| i / self.words_per_cluster).collect();
        topic.shuffle(rng);
        topic
            .iter()
            .map(|&c| {
                let offset = self.gaussian(rng, self.word_spread);
                centers[c].iter().zip(offset).map(|(m, e)| m + e).collect()
            })
            .collect()
    }

    fn jittered(&self, name: &str, base: &[Vec<f64>], rng: &mut seed::Rng) -> EmbeddingTable {
        let entries: Vec<(String, Vec<f64>)> = self
            .words()
            .into_iter()
            .zip(base)
            .map(|(w, b)| {
                let jitter = self.gaussian(rng, self.distortion);
                (w, b.iter().zip(jitter).map(|(x, j)| x + j).collect())
            })
            .collect();
        EmbeddingTable::from_entries(name, entries, LoadOptions::raw()).expect("synthetic vectors are well-formed")
    }

    /// Embeddings sharing one topic structure.
    pub fn family(&self, names: &[&str]) -> Vec<EmbeddingTable> {
        let mut rng = seed::rng(seed::derive(self.seed, &[seed::hash_str("family")]));
        let base = self.base(&mut rng);
        names
            .iter()
            .map(|name| {
                let mut rng = seed::rng(seed::derive(self.seed, &[seed::hash_str(name)]));
                self.jittered(name, &base, &mut rng)
            })
            .collect()
    }

    /// Embeddings whose topic structures are drawn independently.
    pub fn independent(&self, names: &[&str]) -> Vec<EmbeddingTable> {
        names
            .iter()
            .map(|name| {
                let mut rng = seed::rng(seed::derive(self.seed, &[seed::hash_str("independent"), seed::hash_str(name)]));
                let base = self.base(&mut rng);
                self.jittered(name, &base, &mut rng)
            })
            .collect()
    }
}

impl EmbeddingTable {
    /// Writes the comparison-space vectors in the plain text format, with a
    /// `V d` header.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_owned(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "{} {}", self.len(), self.dim()).map_err(io)?;
        for id in 0..self.len() {
            write!(out, "{}", self.word(id)).map_err(io)?;
            for x in self.vector(id) {
                write!(out, " {x}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_shares_vocabulary_and_is_deterministic() {
        let spec = SyntheticSpec::default();
        let a = spec.family(&["x", "y"]);
        let b = spec.family(&["x", "y"]);
        assert_eq!(a[0].words(), a[1].words());
        assert_eq!(a[0].vector(17), b[0].vector(17));
        assert_ne!(a[0].vector(17), a[1].vector(17));
        assert_eq!(a[0].len(), 400);
    }

    #[test]
    fn family_members_agree_more_than_independent_ones() {
        let spec = SyntheticSpec::default();
        let fam = spec.family(&["x", "y"]);
        let ind = spec.independent(&["x", "y"]);
        let gap = |t: &[EmbeddingTable]| -> f64 {
            (0..50)
                .map(|i| {
                    let d0 = t[0].distance(t[0].word(i), t[0].word(i + 1)).unwrap();
                    let d1 = t[1].distance(t[1].word(i), t[1].word(i + 1)).unwrap();
                    (d0 - d1).abs()
                })
                .sum()
        };
        assert!(gap(&fam) < gap(&ind));
    }

    #[test]
    fn text_round_trip() {
        let spec = SyntheticSpec {
            clusters: 3,
            words_per_cluster: 2,
            dim: 4,
            ..Default::default()
        };
        let t = &spec.family(&["fam"])[0];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fam.txt");
        t.write_text(&path).unwrap();
        let back = EmbeddingTable::load(&path, "fam", LoadOptions::raw()).unwrap();
        assert_eq!(back.words(), t.words());
        for id in 0..t.len() {
            assert_eq!(back.vector(id), t.vector(id));
        }
    }
}
