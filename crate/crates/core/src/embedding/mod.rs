//! Word embeddings: loading, distance, nearest-neighbor search, Gaussian
//! perturbation and Voronoi-region likelihoods.

mod neighbors;
pub mod synthetic;
mod voronoi;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use rand_distr::StandardNormal;

use crate::error::{EmbeddingError, Error, Result};

pub use neighbors::{nearest_in, nearest_words, snap_to_vocab, NeighborIndex, DEFAULT_NEIGHBORS};
pub use voronoi::{voronoi_probability, VoronoiCache, VoronoiKey, DEFAULT_POOL, DEFAULT_VORONOI_SAMPLES};
pub use synthetic::SyntheticSpec;

/// Options applied while loading a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Scale every vector to unit length, making Euclidean and cosine
    /// orderings coincide.
    pub normalize: bool,
    /// When normalizing, keep the raw vectors so that noise is added in the
    /// raw space and the result re-normalized.
    pub noise_in_raw_space: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            noise_in_raw_space: true,
        }
    }
}

impl LoadOptions {
    pub fn raw() -> Self {
        Self {
            normalize: false,
            noise_in_raw_space: false,
        }
    }
}

/// A vocabulary with one dense vector per word, stored row-major.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    name: String,
    dim: usize,
    words: Vec<String>,
    lookup: HashMap<String, usize>,
    vectors: Vec<f64>,
    raw: Option<Vec<f64>>,
    normalized: bool,
    duplicates: usize,
}

/// Either a vocabulary word or a free vector.
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Word(&'a str),
    Vector(&'a [f64]),
}

impl<'a> From<&'a str> for Operand<'a> {
    fn from(w: &'a str) -> Self {
        Operand::Word(w)
    }
}

impl<'a> From<&'a [f64]> for Operand<'a> {
    fn from(v: &'a [f64]) -> Self {
        Operand::Vector(v)
    }
}

impl<'a, const N: usize> From<&'a [f64; N]> for Operand<'a> {
    fn from(v: &'a [f64; N]) -> Self {
        Operand::Vector(v)
    }
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` pairs. Words are lowercase-folded;
    /// later duplicates are dropped and counted.
    pub fn from_entries<I>(name: impl Into<String>, entries: I, options: LoadOptions) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut dim = None;
        let mut words = Vec::new();
        let mut lookup = HashMap::new();
        let mut vectors = Vec::new();
        let mut duplicates = 0;
        for (line, (word, vector)) in entries.into_iter().enumerate() {
            let line = line + 1;
            let expected = *dim.get_or_insert(vector.len());
            if vector.len() != expected || expected == 0 {
                return Err(EmbeddingError::DimensionMismatch {
                    line,
                    expected,
                    found: vector.len(),
                });
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite { line });
            }
            let word = word.to_lowercase();
            if lookup.contains_key(&word) {
                duplicates += 1;
                continue;
            }
            if options.normalize && norm(&vector) == 0.0 {
                return Err(EmbeddingError::ZeroVector { line, word });
            }
            lookup.insert(word.clone(), words.len());
            words.push(word);
            vectors.extend_from_slice(&vector);
        }
        let dim = dim.ok_or(EmbeddingError::Empty)?;
        if duplicates > 0 {
            tracing::warn!(duplicates, "duplicate words skipped while loading embedding");
        }

        let mut raw = None;
        if options.normalize {
            if options.noise_in_raw_space {
                raw = Some(vectors.clone());
            }
            for row in vectors.chunks_mut(dim) {
                let n = norm(row);
                row.iter_mut().for_each(|x| *x /= n);
            }
        }

        Ok(Self {
            name: name.into(),
            dim,
            words,
            lookup,
            vectors,
            raw,
            normalized: options.normalize,
            duplicates,
        })
    }

    /// Loads a whitespace-separated text embedding (`word c1 … cd` per line,
    /// with an optional `V d` header line).
    pub fn load(path: impl AsRef<Path>, name: impl Into<String>, options: LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_owned(),
            source,
        };
        let file = File::open(path).map_err(io)?;
        Self::parse(BufReader::new(file), name, options)
    }

    pub fn parse<R: BufRead>(reader: R, name: impl Into<String>, options: LoadOptions) -> Result<Self> {
        let mut entries = Vec::new();
        let mut first = true;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: "<reader>".into(),
                source,
            })?;
            let mut tokens = line.split_whitespace();
            let Some(word) = tokens.next() else { continue };
            let rest: Vec<&str> = tokens.collect();
            if first {
                first = false;
                if rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                    continue;
                }
            }
            let vector = rest
                .iter()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| EmbeddingError::NonNumeric {
                        line: idx + 1,
                        token: (*t).to_owned(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            entries.push((word.to_owned(), vector));
        }
        Ok(Self::from_entries(name, entries, options)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Number of duplicate lines skipped at load.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.lookup.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains_key(word)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn vector(&self, id: usize) -> &[f64] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vector_of(&self, word: &str) -> Result<&[f64], EmbeddingError> {
        self.id(word)
            .map(|id| self.vector(id))
            .ok_or_else(|| EmbeddingError::UnknownWord(word.to_owned()))
    }

    fn resolve<'a>(&'a self, op: Operand<'a>) -> Result<&'a [f64], EmbeddingError> {
        let v = match op {
            Operand::Word(w) => self.vector_of(w)?,
            Operand::Vector(v) => v,
        };
        if v.len() != self.dim {
            return Err(EmbeddingError::WrongDimension {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(v)
    }

    /// Euclidean distance between two words or vectors.
    pub fn distance<'a>(
        &'a self,
        a: impl Into<Operand<'a>>,
        b: impl Into<Operand<'a>>,
    ) -> Result<f64, EmbeddingError> {
        Ok(euclidean(self.resolve(a.into())?, self.resolve(b.into())?))
    }

    /// Perturbs the vector of `id` with isotropic Gaussian noise, in raw space
    /// when the table keeps one, and maps the result back into the comparison
    /// space.
    pub fn perturb_word<R: rand::Rng + ?Sized>(&self, id: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
        if sigma == 0.0 {
            return self.vector(id).to_vec();
        }
        match &self.raw {
            Some(raw) => {
                let mut v = perturb(&raw[id * self.dim..(id + 1) * self.dim], sigma, rng);
                let n = norm(&v);
                if n > 0.0 {
                    v.iter_mut().for_each(|x| *x /= n);
                }
                v
            }
            None => perturb(self.vector(id), sigma, rng),
        }
    }
}

/// Returns `vector + z` with `z` drawn i.i.d. from `N(0, sigma²)` per component.
pub fn perturb<R: rand::Rng + ?Sized>(vector: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return vector.to_vec();
    }
    vector
        .iter()
        .map(|x| {
            let z: f64 = rng.sample(StandardNormal);
            x + sigma * z
        })
        .collect()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A table together with its precomputed neighbor lists. This is the unit of
/// "semantics" a partner model carries.
#[derive(Debug)]
pub struct Semantics {
    pub table: Arc<EmbeddingTable>,
    pub neighbors: Arc<NeighborIndex>,
}

impl Semantics {
    pub fn new(table: Arc<EmbeddingTable>, neighbors: Arc<NeighborIndex>) -> Self {
        Self { table, neighbors }
    }

    /// Indexes every word of `table` with `k` neighbors.
    pub fn index_all(table: EmbeddingTable, k: usize) -> Self {
        let table = Arc::new(table);
        let neighbors = Arc::new(NeighborIndex::build(&table, k, None));
        Self { table, neighbors }
    }

    pub fn name(&self) -> &str {
        self.table.name()
    }
}
