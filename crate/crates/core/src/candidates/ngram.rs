//! Character n-gram similarity and an inverted gram index over index keys.

use std::collections::HashMap;

pub const PAD: char = '#';

/// Distinct character n-grams of `s` padded with `n - 1` sentinels on each
/// side, sorted.
pub fn padded_ngrams(s: &str, n: usize) -> Vec<String> {
    let n = n.max(1);
    let pad = std::iter::repeat_n(PAD, n - 1);
    let chars: Vec<char> = pad.clone().chain(s.chars()).chain(pad).collect();
    let mut grams: Vec<String> = chars.windows(n).map(|w| w.iter().collect()).collect();
    grams.sort_unstable();
    grams.dedup();
    grams
}

/// Dice coefficient of two gram sets given their sizes and overlap.
#[inline]
pub fn overlap_score(shared: usize, a: usize, b: usize) -> f64 {
    if a + b == 0 {
        return 1.0;
    }
    2.0 * shared as f64 / (a + b) as f64
}

fn shared_count(a: &[String], b: &[String]) -> usize {
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared
}

/// Overlap of the padded character n-gram sets of `a` and `b`, as
/// `2|A∩B| / (|A| + |B|)`. Symmetric, in `[0, 1]`, 1 for equal strings and 0
/// for disjoint gram sets.
pub fn ngram_similarity(a: &str, b: &str, n: usize) -> f64 {
    let ga = padded_ngrams(a, n);
    let gb = padded_ngrams(b, n);
    overlap_score(shared_count(&ga, &gb), ga.len(), gb.len())
}

/// Gram-to-key postings for one n. Answers "which keys reach a similarity
/// threshold" without scoring keys that share no gram with the query.
#[derive(Debug)]
pub struct GramIndex {
    n: usize,
    gram_counts: Vec<u32>,
    postings: HashMap<String, Vec<u32>>,
}

impl GramIndex {
    pub fn build<'a>(keys: impl IntoIterator<Item = &'a str>, n: usize) -> Self {
        let mut gram_counts = Vec::new();
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (id, key) in keys.into_iter().enumerate() {
            let grams = padded_ngrams(key, n);
            gram_counts.push(grams.len() as u32);
            for g in grams {
                postings.entry(g).or_default().push(id as u32);
            }
        }
        GramIndex {
            n,
            gram_counts,
            postings,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ids of keys whose similarity to `query` is at least `threshold`, with
    /// their scores, in ascending id order.
    pub fn search(&self, query: &str, threshold: f64) -> Vec<(usize, f64)> {
        let grams = padded_ngrams(query, self.n);
        let mut shared: HashMap<u32, usize> = HashMap::new();
        for g in &grams {
            if let Some(ids) = self.postings.get(g) {
                for &id in ids {
                    *shared.entry(id).or_default() += 1;
                }
            }
        }
        let score = |id: usize, s: usize| overlap_score(s, grams.len(), self.gram_counts[id] as usize);
        let mut hits: Vec<(usize, f64)> = if threshold <= 0.0 {
            (0..self.gram_counts.len())
                .map(|id| (id, score(id, shared.get(&(id as u32)).copied().unwrap_or(0))))
                .collect()
        } else {
            shared
                .into_iter()
                .map(|(id, s)| (id as usize, score(id as usize, s)))
                .filter(|&(_, sim)| sim >= threshold)
                .collect()
        };
        hits.sort_by_key(|&(id, _)| id);
        hits
    }
}
