use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::RwLock;
use rayon::prelude::*;

use super::{nearest_in, snap_to_vocab, EmbeddingTable, Semantics};
use crate::error::{EmbeddingError, Error, Result};
use crate::seed;

/// Neighbors of the intended word that compete for each noisy sample.
pub const DEFAULT_POOL: usize = 500;
pub const DEFAULT_VORONOI_SAMPLES: usize = 1000;

const MAGIC: &[u8; 4] = b"CNVC";
const FORMAT_VERSION: u8 = 1;

/// Monte-Carlo estimate of the Gaussian mass that falls in `observed`'s
/// Voronoi cell when the noise is centered on `intended`.
///
/// Each of `n_samples` perturbed copies of the intended vector is snapped to
/// its nearest `pool` word; the result is the fraction that land on
/// `observed`.
pub fn voronoi_probability<R: rand::Rng + ?Sized>(
    table: &EmbeddingTable,
    intended: &str,
    observed: &str,
    sigma: f64,
    n_samples: usize,
    pool: &[usize],
    rng: &mut R,
) -> Result<f64, EmbeddingError> {
    let intended = table.id(intended).ok_or_else(|| EmbeddingError::UnknownWord(intended.to_owned()))?;
    let observed = table.id(observed).ok_or_else(|| EmbeddingError::UnknownWord(observed.to_owned()))?;
    let n_samples = n_samples.max(1);
    let hits = count_hits(table, intended, sigma, n_samples, pool, rng);
    Ok(hits.get(&observed).copied().unwrap_or(0) as f64 / n_samples as f64)
}

fn count_hits<R: rand::Rng + ?Sized>(
    table: &EmbeddingTable,
    intended: usize,
    sigma: f64,
    n_samples: usize,
    pool: &[usize],
    rng: &mut R,
) -> HashMap<usize, usize> {
    let mut hits = HashMap::new();
    if sigma == 0.0 {
        if let Some(w) = snap_to_vocab(table, table.vector(intended), pool) {
            hits.insert(w, n_samples);
        }
        return hits;
    }
    for _ in 0..n_samples {
        let y = table.perturb_word(intended, sigma, rng);
        if let Some(w) = snap_to_vocab(table, &y, pool) {
            *hits.entry(w).or_default() += 1;
        }
    }
    hits
}

/// Identifies a reproducible precomputation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiKey {
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
}

impl VoronoiKey {
    pub fn file_name(&self, embedding: &str) -> String {
        format!("{embedding}.sigma{}.n{}.seed{}.vor", self.sigma, self.samples, self.seed)
    }
}

type Row = HashMap<usize, f64>;

/// Memoized Voronoi probabilities for one embedding and noise level.
///
/// A row holds, for one intended word, the probability of every pool word,
/// computed from one shared sample set. Rows are filled on first use, so the
/// cache can be shared by concurrent games; each row's samples are seeded from
/// the intended word alone, which keeps results independent of fill order.
#[derive(Debug)]
pub struct VoronoiCache {
    semantics: Arc<Semantics>,
    key: VoronoiKey,
    pool_size: usize,
    rows: RwLock<HashMap<usize, Arc<Row>>>,
    pools: RwLock<HashMap<usize, Arc<Vec<usize>>>>,
    forced: RwLock<HashMap<(usize, usize), f64>>,
}

impl VoronoiCache {
    pub fn new(semantics: Arc<Semantics>, key: VoronoiKey, pool_size: usize) -> Self {
        Self {
            semantics,
            key,
            pool_size,
            rows: RwLock::default(),
            pools: RwLock::default(),
            forced: RwLock::default(),
        }
    }

    pub fn key(&self) -> VoronoiKey {
        self.key
    }

    pub fn embedding(&self) -> &str {
        self.semantics.name()
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.semantics.table
    }

    fn row_rng(&self, intended: usize) -> seed::Rng {
        let word = self.semantics.table.word(intended);
        seed::rng(seed::derive(self.key.seed, &[seed::hash_str(word)]))
    }

    /// The intended word plus its `pool_size` nearest neighbors.
    pub fn pool(&self, intended: usize) -> Arc<Vec<usize>> {
        if let Some(p) = self.pools.read().get(&intended) {
            return p.clone();
        }
        let table = &self.semantics.table;
        let index = &self.semantics.neighbors;
        let mut pool = vec![intended];
        match index.get(intended) {
            Some(list) if index.k() >= self.pool_size => {
                pool.extend(list.iter().take(self.pool_size).map(|e| e.0));
            }
            _ => {
                let list = nearest_in(table, table.vector(intended), 0..table.len(), self.pool_size, |i| {
                    i == intended
                });
                pool.extend(list.into_iter().map(|e| e.0));
            }
        }
        let pool = Arc::new(pool);
        self.pools.write().insert(intended, pool.clone());
        pool
    }

    pub fn row(&self, intended: usize) -> Arc<Row> {
        if let Some(r) = self.rows.read().get(&intended) {
            return r.clone();
        }
        let pool = self.pool(intended);
        let n = self.key.samples.max(1);
        let hits = count_hits(
            &self.semantics.table,
            intended,
            self.key.sigma,
            n,
            &pool,
            &mut self.row_rng(intended),
        );
        let row: Row = hits.into_iter().map(|(w, c)| (w, c as f64 / n as f64)).collect();
        let row = Arc::new(row);
        self.rows.write().entry(intended).or_insert(row).clone()
    }

    /// `P(observed | intended)`. An observed word outside the intended word's
    /// pool is force-included and scored against the same samples.
    pub fn probability(&self, intended: usize, observed: usize) -> f64 {
        let pool = self.pool(intended);
        if pool.contains(&observed) {
            return self.row(intended).get(&observed).copied().unwrap_or(0.0);
        }
        if let Some(p) = self.forced.read().get(&(intended, observed)) {
            return *p;
        }
        let mut extended = (*pool).clone();
        extended.push(observed);
        let n = self.key.samples.max(1);
        let hits = count_hits(
            &self.semantics.table,
            intended,
            self.key.sigma,
            n,
            &extended,
            &mut self.row_rng(intended),
        );
        let p = hits.get(&observed).copied().unwrap_or(0) as f64 / n as f64;
        self.forced.write().insert((intended, observed), p);
        p
    }

    pub fn probability_of(&self, intended: &str, observed: &str) -> Result<f64, EmbeddingError> {
        let table = &self.semantics.table;
        let i = table.id(intended).ok_or_else(|| EmbeddingError::UnknownWord(intended.to_owned()))?;
        let o = table.id(observed).ok_or_else(|| EmbeddingError::UnknownWord(observed.to_owned()))?;
        Ok(self.probability(i, o))
    }

    /// Fills the rows of `words` in parallel.
    pub fn precompute(&self, words: &[usize]) {
        words.par_iter().for_each(|&w| {
            self.row(w);
        });
    }

    pub fn rows_len(&self) -> usize {
        self.rows.read().len()
    }

    /// Writes every computed row to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let table = &self.semantics.table;
        let rows = self.rows.read();
        let mut intended: Vec<&usize> = rows.keys().collect();
        intended.sort_by_key(|id| table.word(**id));

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        put_str(&mut out, table.name());
        out.extend_from_slice(&self.key.sigma.to_le_bytes());
        out.extend_from_slice(&(self.key.samples as u64).to_le_bytes());
        out.extend_from_slice(&self.key.seed.to_le_bytes());
        out.extend_from_slice(&(self.pool_size as u64).to_le_bytes());
        out.extend_from_slice(&(intended.len() as u64).to_le_bytes());
        for id in intended {
            let row = &rows[id];
            let mut entries: Vec<(&usize, &f64)> = row.iter().collect();
            entries.sort_by_key(|(w, _)| table.word(**w));
            put_str(&mut out, table.word(*id));
            out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
            for (w, p) in entries {
                put_str(&mut out, table.word(*w));
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
        let io = |source| Error::Io {
            path: path.to_owned(),
            source,
        };
        let mut file = fs::File::create(path).map_err(io)?;
        file.write_all(&out).map_err(io)
    }

    /// Reads a cache written by [`save`](Self::save). The file's key and
    /// embedding name must match.
    pub fn load(semantics: Arc<Semantics>, path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?;
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = r.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported format version {version}")));
        }
        let name = r.string()?;
        if name != semantics.name() {
            return Err(Error::Cache(format!(
                "cache is for embedding `{name}`, not `{}`",
                semantics.name()
            )));
        }
        let key = VoronoiKey {
            sigma: r.f64()?,
            samples: r.u64()? as usize,
            seed: r.u64()?,
        };
        let pool_size = r.u64()? as usize;
        let cache = Self::new(semantics, key, pool_size);
        let table = &cache.semantics.table;
        let lookup = |w: &str| table.id(w).ok_or_else(|| Error::Cache(format!("unknown word `{w}`")));
        let n_rows = r.u64()?;
        {
            let mut rows = cache.rows.write();
            for _ in 0..n_rows {
                let intended = lookup(&r.string()?)?;
                let n = r.u64()?;
                let mut row = Row::new();
                for _ in 0..n {
                    let w = lookup(&r.string()?)?;
                    row.insert(w, r.f64()?);
                }
                rows.insert(intended, Arc::new(row));
            }
        }
        Ok(cache)
    }

    /// Standard cache location for this key under `dir`.
    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(self.key.file_name(self.embedding()))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Cache("truncated file".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Cache("invalid utf-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{LoadOptions, NeighborIndex};
    use statrs::distribution::{ContinuousCDF, Normal};

    fn line(points: &[(&str, f64)]) -> EmbeddingTable {
        EmbeddingTable::from_entries(
            "line",
            points.iter().map(|(w, x)| (w.to_string(), vec![*x])),
            LoadOptions::raw(),
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_is_degenerate() {
        let t = line(&[("a", 0.0), ("b", 10.0)]);
        let mut rng = seed::rng(1);
        assert_eq!(voronoi_probability(&t, "a", "a", 0.0, 100, &[0, 1], &mut rng).unwrap(), 1.0);
        assert_eq!(voronoi_probability(&t, "a", "b", 0.0, 100, &[0, 1], &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn matches_gaussian_cdf_at_half_space_boundary() {
        let t = line(&[("a", 0.0), ("b", 10.0)]);
        let p = voronoi_probability(&t, "a", "a", 1.0, 10_000, &[0, 1], &mut seed::rng(5)).unwrap();
        let phi5 = Normal::new(0.0, 1.0).unwrap().cdf(5.0);
        assert!((p - phi5).abs() <= 0.01, "p = {p}, Φ(5) = {phi5}");
    }

    #[test]
    fn unknown_word_errors() {
        let t = line(&[("a", 0.0)]);
        let r = voronoi_probability(&t, "a", "zz", 1.0, 10, &[0], &mut seed::rng(0));
        assert_eq!(r, Err(EmbeddingError::UnknownWord("zz".into())));
    }

    fn cache_fixture(sigma: f64) -> VoronoiCache {
        let t = line(&[("a", 0.0), ("b", 1.0), ("c", 2.0), ("d", 3.5), ("e", 9.0)]);
        let table = Arc::new(t);
        let index = Arc::new(NeighborIndex::build(&table, 2, None));
        let sem = Arc::new(Semantics::new(table, index));
        VoronoiCache::new(
            sem,
            VoronoiKey {
                sigma,
                samples: 2000,
                seed: 42,
            },
            2,
        )
    }

    #[test]
    fn rows_sum_to_at_most_one() {
        let cache = cache_fixture(0.8);
        for w in 0..5 {
            let total: f64 = cache.row(w).values().sum();
            assert!(total <= 1.0 + 1e-9);
            assert!((total - 1.0).abs() < 1e-9, "every sample lands in some pool cell");
        }
    }

    #[test]
    fn forced_observed_word_gets_a_likelihood() {
        let cache = cache_fixture(1.0);
        // "e" is not among a's two nearest neighbours
        assert!(!cache.pool(0).contains(&4));
        let p = cache.probability(0, 4);
        assert!((0.0..=1.0).contains(&p));
        let again = cache.probability(0, 4);
        assert_eq!(p, again);
    }

    #[test]
    fn fill_order_does_not_matter() {
        let a = cache_fixture(1.0);
        let b = cache_fixture(1.0);
        a.row(3);
        a.row(1);
        b.row(1);
        b.row(3);
        assert_eq!(*a.row(1), *b.row(1));
        assert_eq!(*a.row(3), *b.row(3));
    }

    #[test]
    fn save_and_load_round_trip() {
        let cache = cache_fixture(1.0);
        cache.precompute(&[0, 1, 2, 3, 4]);
        let dir = tempfile::tempdir().unwrap();
        let path = cache.path_in(dir.path());
        cache.save(&path).unwrap();
        let loaded = VoronoiCache::load(cache.semantics.clone(), &path).unwrap();
        assert_eq!(loaded.key(), cache.key());
        assert_eq!(loaded.rows_len(), 5);
        for w in 0..5 {
            assert_eq!(*loaded.row(w), *cache.row(w));
        }
    }

    #[test]
    fn load_rejects_bad_version() {
        let cache = cache_fixture(1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.vor");
        cache.save(&path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 99;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            VoronoiCache::load(cache.semantics.clone(), &path),
            Err(Error::Cache(_))
        ));
    }
}
