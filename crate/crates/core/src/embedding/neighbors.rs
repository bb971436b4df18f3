use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::{squared_euclidean, EmbeddingTable};

pub const DEFAULT_NEIGHBORS: usize = 300;

/// Precomputed `k` nearest neighbors for a set of query words. Query words
/// never appear in their own list.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    source: String,
    k: usize,
    lists: HashMap<usize, Vec<(usize, f64)>>,
}

impl NeighborIndex {
    /// Indexes `queries` (every word when `None`) by exhaustive scan.
    pub fn build(table: &EmbeddingTable, k: usize, queries: Option<&[usize]>) -> Self {
        let all: Vec<usize>;
        let queries = match queries {
            Some(q) => q,
            None => {
                all = (0..table.len()).collect();
                &all
            }
        };
        let lists = queries
            .par_iter()
            .map(|&q| {
                let list = nearest_in(table, table.vector(q), 0..table.len(), k, |id| id == q);
                (q, list)
            })
            .collect();
        Self {
            source: table.name().to_owned(),
            k,
            lists,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&[(usize, f64)]> {
        self.lists.get(&id).map(Vec::as_slice)
    }

    /// Neighbor list of `id`, falling back to a full scan for words the index
    /// does not cover.
    pub fn neighbors<'a>(&'a self, table: &EmbeddingTable, id: usize) -> Cow<'a, [(usize, f64)]> {
        match self.lists.get(&id) {
            Some(list) => Cow::Borrowed(list),
            None => Cow::Owned(nearest_in(table, table.vector(id), 0..table.len(), self.k, |i| i == id)),
        }
    }
}

#[inline]
fn by_distance_then_word(table: &EmbeddingTable, a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| table.word(a.0).cmp(table.word(b.0)))
}

/// The `k` pool words nearest to `query`, ascending by distance with ties
/// broken by word. Excluded ids are skipped.
pub fn nearest_in<I, F>(table: &EmbeddingTable, query: &[f64], pool: I, k: usize, exclude: F) -> Vec<(usize, f64)>
where
    I: IntoIterator<Item = usize>,
    F: Fn(usize) -> bool,
{
    if k == 0 {
        return Vec::new();
    }
    let mut scored: Vec<(usize, f64)> = pool
        .into_iter()
        .filter(|&id| !exclude(id))
        .map(|id| (id, squared_euclidean(table.vector(id), query)))
        .collect();
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, |a, b| by_distance_then_word(table, a, b));
        scored.truncate(k);
    }
    scored.sort_by(|a, b| by_distance_then_word(table, a, b));
    scored.iter_mut().for_each(|e| e.1 = e.1.sqrt());
    scored
}

/// Word-level nearest-neighbor search. With an `(index, anchor)` pair the
/// search is restricted to the anchor and its indexed neighbors; otherwise
/// the whole vocabulary is scanned.
pub fn nearest_words(
    table: &EmbeddingTable,
    index: Option<(&NeighborIndex, &str)>,
    query: &[f64],
    k: usize,
    exclude: &HashSet<String>,
) -> Vec<(String, f64)> {
    let excluded = |id: usize| exclude.contains(table.word(id));
    let anchored = index.and_then(|(idx, anchor)| {
        let id = table.id(anchor)?;
        let list = idx.get(id)?;
        Some(std::iter::once(id).chain(list.iter().map(|e| e.0)).collect::<Vec<_>>())
    });
    let hits = match anchored {
        Some(pool) => nearest_in(table, query, pool, k, excluded),
        None => nearest_in(table, query, 0..table.len(), k, excluded),
    };
    hits.into_iter().map(|(id, d)| (table.word(id).to_owned(), d)).collect()
}

/// The pool word closest to `vector`, ties broken by word. `None` only for an
/// empty pool.
pub fn snap_to_vocab(table: &EmbeddingTable, vector: &[f64], pool: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &id in pool {
        let d = squared_euclidean(table.vector(id), vector);
        best = match best {
            None => Some((id, d)),
            Some(b) if by_distance_then_word(table, &(id, d), &b) == Ordering::Less => Some((id, d)),
            keep => keep,
        };
    }
    best.map(|b| b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::LoadOptions;
    use crate::seed;
    use rand::Rng;

    fn line_table(points: &[(&str, f64)]) -> EmbeddingTable {
        EmbeddingTable::from_entries(
            "line",
            points.iter().map(|(w, x)| (w.to_string(), vec![*x])),
            LoadOptions::raw(),
        )
        .unwrap()
    }

    fn random_table(n: usize, dim: usize, seed_value: u64, normalize: bool) -> EmbeddingTable {
        let mut rng = seed::rng(seed_value);
        let entries = (0..n).map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (format!("w{i:03}"), v)
        });
        let options = LoadOptions {
            normalize,
            noise_in_raw_space: false,
        };
        EmbeddingTable::from_entries("rand", entries.collect::<Vec<_>>(), options).unwrap()
    }

    #[test]
    fn one_dimensional_sort() {
        let t = line_table(&[("a", 0.0), ("b", 1.0), ("c", 3.0)]);
        let got = nearest_words(&t, None, &[0.9], 2, &HashSet::new());
        assert_eq!(got[0].0, "b");
        assert!((got[0].1 - 0.1).abs() < 1e-12);
        assert_eq!(got[1].0, "a");
        assert!((got[1].1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn exclusion_removes_exact_match() {
        let t = line_table(&[("a", 0.0), ("b", 1.0), ("c", 3.0)]);
        let exclude = HashSet::from(["a".to_owned()]);
        let got = nearest_words(&t, None, &[0.0], 1, &exclude);
        assert_eq!(got[0].0, "b");
    }

    #[test]
    fn ties_break_lexicographically() {
        let t = line_table(&[("zeta", -1.0), ("alpha", 1.0), ("mid", 0.0)]);
        let got = nearest_words(&t, None, &[0.0], 3, &HashSet::new());
        let words: Vec<_> = got.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(words, ["mid", "alpha", "zeta"]);
    }

    #[test]
    fn index_lists_exclude_self_and_are_sorted() {
        let t = random_table(50, 4, 1, false);
        let idx = NeighborIndex::build(&t, 10, None);
        for id in 0..t.len() {
            let list = idx.get(id).unwrap();
            assert_eq!(list.len(), 10);
            assert!(list.iter().all(|e| e.0 != id));
            assert!(list.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }

    #[test]
    fn index_restricted_search_matches_full_scan() {
        let t = random_table(50, 5, 2, false);
        let idx = NeighborIndex::build(&t, 15, None);
        let mut rng = seed::rng(3);
        let mut compared = 0;
        for _ in 0..200 {
            let anchor = rng.random_range(0..t.len());
            // a query near the anchor
            let query: Vec<f64> = t.vector(anchor).iter().map(|x| x + rng.random_range(-0.2..0.2)).collect();
            let full = nearest_words(&t, None, &query, 1, &HashSet::new());
            let pool: HashSet<&str> = std::iter::once(anchor)
                .chain(idx.get(anchor).unwrap().iter().map(|e| e.0))
                .map(|id| t.word(id))
                .collect();
            if !pool.contains(full[0].0.as_str()) {
                continue;
            }
            let restricted = nearest_words(&t, Some((&idx, t.word(anchor))), &query, 1, &HashSet::new());
            assert_eq!(restricted, full);
            compared += 1;
        }
        assert!(compared > 100);
    }

    #[test]
    fn euclidean_and_cosine_argmin_agree_on_unit_vectors() {
        for case in 0..20 {
            let t = random_table(30, 6, 100 + case, true);
            let mut rng = seed::rng(case);
            let q: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            let q: Vec<f64> = q.iter().map(|x| x / qn).collect();
            let by_l2 = nearest_in(&t, &q, 0..t.len(), 1, |_| false)[0].0;
            let by_cos = (0..t.len())
                .max_by(|&a, &b| {
                    let ca: f64 = t.vector(a).iter().zip(&q).map(|(x, y)| x * y).sum();
                    let cb: f64 = t.vector(b).iter().zip(&q).map(|(x, y)| x * y).sum();
                    ca.total_cmp(&cb)
                })
                .unwrap();
            assert_eq!(by_l2, by_cos, "case {case}");
        }
    }

    #[test]
    fn snap_examples() {
        let t = line_table(&[("a", 0.0), ("b", 10.0)]);
        assert_eq!(snap_to_vocab(&t, &[4.9], &[0, 1]), Some(0));
        assert_eq!(snap_to_vocab(&t, &[10.0], &[0, 1]), Some(1));
        assert_eq!(snap_to_vocab(&t, &[5.0], &[1, 0]), Some(0));
        assert_eq!(snap_to_vocab(&t, &[5.0], &[]), None);
    }

    #[test]
    fn snap_matches_exhaustive_argmin() {
        let t = random_table(40, 3, 9, false);
        let mut rng = seed::rng(10);
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pool: Vec<usize> = (0..t.len()).filter(|_| rng.random_bool(0.5)).collect();
            if pool.is_empty() {
                continue;
            }
            let mut best = pool[0];
            for &id in &pool {
                let d = t.distance(&v[..], t.word(id)).unwrap();
                let db = t.distance(&v[..], t.word(best)).unwrap();
                if d < db || (d == db && t.word(id) < t.word(best)) {
                    best = id;
                }
            }
            assert_eq!(snap_to_vocab(&t, &v, &pool), Some(best));
        }
    }
}
