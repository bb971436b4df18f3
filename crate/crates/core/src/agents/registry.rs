//! Named semantics and the shared Voronoi caches, turned into agents on
//! demand from spec strings.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;

use super::{
    AgentSpec, BayesianGuesser, BayesianSpymaster, Guesser, GuesserState, Level0Guesser, Level0Spymaster,
    PartnerModel, Spymaster, SpymasterBeliefs,
};
use crate::embedding::{EmbeddingTable, LoadOptions, NeighborIndex, Semantics, VoronoiCache, VoronoiKey, DEFAULT_POOL};
use crate::error::{Error, Result, SpecError};

/// Environment variable naming a directory of precomputed Voronoi caches.
pub const CACHE_DIR_ENV: &str = "CODENAMES_CACHE_DIR";

type VoronoiId = (String, u64, usize);

#[derive(Debug)]
pub struct ModelRegistry {
    semantics: BTreeMap<String, Arc<Semantics>>,
    voronoi: Mutex<HashMap<VoronoiId, Arc<VoronoiCache>>>,
    voronoi_seed: u64,
    pool_size: usize,
    cache_dir: Option<PathBuf>,
}

impl ModelRegistry {
    /// Empty registry; Voronoi rows are sampled from `voronoi_seed`.
    pub fn new(voronoi_seed: u64) -> Self {
        Self {
            semantics: BTreeMap::new(),
            voronoi: Mutex::default(),
            voronoi_seed,
            pool_size: DEFAULT_POOL,
            cache_dir: None,
        }
    }

    /// Reads precomputed caches from `dir` when present.
    pub fn with_cache_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.cache_dir = dir;
        self
    }

    /// Cache directory from [`CACHE_DIR_ENV`], if set.
    pub fn cache_dir_from_env() -> Option<PathBuf> {
        std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)
    }

    pub fn with_pool_size(mut self, pool_size: usize) -> Self {
        self.pool_size = pool_size;
        self
    }

    pub fn voronoi_seed(&self) -> u64 {
        self.voronoi_seed
    }

    pub fn insert(&mut self, semantics: Arc<Semantics>) {
        self.semantics.insert(semantics.name().to_owned(), semantics);
    }

    /// Indexes `table` with `k` neighbors per word and registers it.
    pub fn insert_table(&mut self, table: EmbeddingTable, k: usize) -> Arc<Semantics> {
        let semantics = Arc::new(Semantics::index_all(table, k));
        self.insert(semantics.clone());
        semantics
    }

    /// Loads an embedding file, indexes it and registers it under `name`.
    pub fn load(&mut self, name: &str, path: &Path, options: LoadOptions, k: usize) -> Result<Arc<Semantics>> {
        let table = EmbeddingTable::load(path, name, options)?;
        if table.duplicates() > 0 {
            tracing::warn!(embedding = name, duplicates = table.duplicates(), "duplicate words ignored");
        }
        Ok(self.insert_table(table, k))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.semantics.keys().map(String::as_str)
    }

    pub fn semantics(&self, name: &str) -> Result<Arc<Semantics>> {
        self.semantics.get(name).cloned().ok_or_else(|| {
            Error::Spec(SpecError::UnknownEmbedding {
                spec: name.to_owned(),
                name: name.to_owned(),
            })
        })
    }

    fn check(&self, spec: &AgentSpec) -> Result<()> {
        for name in spec.embeddings() {
            if !self.semantics.contains_key(name) {
                return Err(Error::Spec(SpecError::UnknownEmbedding {
                    spec: spec.to_string(),
                    name: name.to_owned(),
                }));
            }
        }
        Ok(())
    }

    /// Words every named embedding knows, minus multi-token entries, sorted.
    pub fn word_pool<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<String>> {
        let mut tables = Vec::new();
        for n in names {
            tables.push(self.semantics(n.as_ref())?);
        }
        let Some((first, rest)) = tables.split_first() else {
            return Ok(Vec::new());
        };
        let pool: BTreeSet<String> = first
            .table
            .words()
            .iter()
            .filter(|w| w.chars().all(char::is_alphanumeric))
            .filter(|w| rest.iter().all(|t| t.table.contains(w)))
            .cloned()
            .collect();
        Ok(pool.into_iter().collect())
    }

    /// Level-0 partner models, ranked for tie-breaks in the given order.
    pub fn models<S: AsRef<str>>(&self, names: &[S], assumed_noise: f64) -> Result<Vec<PartnerModel>> {
        names
            .iter()
            .enumerate()
            .map(|(rank, n)| Ok(PartnerModel::level0(self.semantics(n.as_ref())?, assumed_noise, rank)))
            .collect()
    }

    /// The shared cache for `(embedding, σ, samples)`, read from the cache
    /// directory when a matching file exists.
    pub fn voronoi(&self, name: &str, sigma: f64, samples: usize) -> Result<Arc<VoronoiCache>> {
        let id = (name.to_owned(), sigma.to_bits(), samples);
        if let Some(c) = self.voronoi.lock().get(&id) {
            return Ok(c.clone());
        }
        let semantics = self.semantics(name)?;
        let key = VoronoiKey {
            sigma,
            samples,
            seed: self.voronoi_seed,
        };
        let fresh = VoronoiCache::new(semantics.clone(), key, self.pool_size);
        let cache = match &self.cache_dir {
            Some(dir) if fresh.path_in(dir).exists() => {
                let loaded = VoronoiCache::load(semantics, &fresh.path_in(dir))?;
                if loaded.key() != key {
                    return Err(Error::Cache(format!("{} holds a different key", fresh.path_in(dir).display())));
                }
                tracing::debug!(embedding = name, sigma, rows = loaded.rows_len(), "loaded Voronoi cache");
                loaded
            }
            _ => fresh,
        };
        let cache = Arc::new(cache);
        Ok(self.voronoi.lock().entry(id).or_insert(cache).clone())
    }

    pub fn spymaster(&self, spec: &AgentSpec, seed: u64) -> Result<Box<dyn Spymaster>> {
        self.check(spec)?;
        match spec {
            AgentSpec::StaticSpymaster { embedding } => Ok(Box::new(Level0Spymaster::new(self.semantics(embedding)?))),
            AgentSpec::BayesSpymaster { models, config } => {
                let beliefs = SpymasterBeliefs::new(self.models(models, config.assumed_noise)?, None)?;
                Ok(Box::new(BayesianSpymaster::new(beliefs, *config, seed)))
            }
            other => Err(Error::Config(format!("`{other}` is not a spymaster"))),
        }
    }

    pub fn guesser(&self, spec: &AgentSpec, seed: u64) -> Result<Box<dyn Guesser>> {
        self.check(spec)?;
        match spec {
            AgentSpec::StaticGuesser { embedding } => Ok(Box::new(Level0Guesser::new(self.semantics(embedding)?))),
            AgentSpec::BayesGuesser { models, config } => {
                let partner = self.models(models, config.noise)?;
                let caches = models
                    .iter()
                    .map(|m| self.voronoi(m, config.noise, config.voronoi_samples))
                    .collect::<Result<Vec<_>>>()?;
                let state = GuesserState::new(partner, caches, None, *config)?;
                Ok(Box::new(BayesianGuesser::new(state, seed)))
            }
            other => Err(Error::Config(format!("`{other}` is not a guesser"))),
        }
    }
}

/// Builds neighbor lists for only the given words, for vocabularies too
/// large to index whole. Other words fall back to a full scan.
pub fn index_subset(table: EmbeddingTable, k: usize, words: &[String]) -> Semantics {
    let ids: Vec<usize> = words.iter().filter_map(|w| table.id(w)).collect();
    let index = NeighborIndex::build(&table, k, Some(&ids));
    Semantics::new(Arc::new(table), Arc::new(index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> ModelRegistry {
        let mut r = ModelRegistry::new(7);
        for (name, words) in [("a", vec!["x", "y", "z", "q_r"]), ("b", vec!["y", "x", "w"])] {
            let entries = words
                .iter()
                .enumerate()
                .map(|(i, w)| (w.to_string(), vec![i as f64, 1.0]))
                .collect::<Vec<_>>();
            r.insert_table(EmbeddingTable::from_entries(name, entries, LoadOptions::raw()).unwrap(), 10);
        }
        r
    }

    #[test]
    fn pool_is_the_intersection() {
        let r = registry();
        assert_eq!(r.word_pool(&["a", "b"]).unwrap(), vec!["x", "y"]);
        assert_eq!(r.word_pool(&["a"]).unwrap(), vec!["x", "y", "z"]);
        assert!(r.word_pool(&["a", "nope"]).is_err());
    }

    #[test]
    fn builds_agents_and_rejects_unknown_embeddings() {
        let r = registry();
        assert!(r.guesser(&"static:guesser:a".parse().unwrap(), 0).is_ok());
        assert!(r.guesser(&"bayes:guesser:a,b".parse().unwrap(), 0).is_ok());
        assert!(r.spymaster(&"bayes:spymaster:a,b".parse().unwrap(), 0).is_ok());
        assert!(r.spymaster(&"static:spymaster:c".parse().unwrap(), 0).is_err());
        assert!(r.spymaster(&"static:guesser:a".parse().unwrap(), 0).is_err());
    }

    #[test]
    fn voronoi_caches_are_shared() {
        let r = registry();
        let a = r.voronoi("a", 1.0, 100).unwrap();
        let b = r.voronoi("a", 1.0, 100).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(!Arc::ptr_eq(&a, &r.voronoi("a", 0.5, 100).unwrap()));
    }
}
