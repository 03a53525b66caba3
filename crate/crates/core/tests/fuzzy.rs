mod common;

use std::collections::BTreeSet;

use common::*;
use entity_linker::candidates::{ngram_similarity, GramCache};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pinned_value() {
    assert_eq!(ngram_similarity("london", "londno", 3), 0.5);
    assert_eq!(sim_oracle("london", "londno", 3), 0.5);
}

#[test]
fn similarity_matches_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..2000 {
        let (a, b) = string_pair(&mut rng);
        for n in [2, 3, 4] {
            assert_eq!(ngram_similarity(&a, &b, n), sim_oracle(&a, &b, n), "{a:?} {b:?} n={n}");
        }
    }
}

/// Queries: every key, a one-character edit of every key, a few strangers.
fn queries(keys: &[String]) -> Vec<String> {
    let mut out: Vec<String> = keys.to_vec();
    for k in keys {
        let chars: Vec<char> = k.chars().collect();
        if chars.len() > 3 {
            let mut dropped = chars.clone();
            dropped.remove(chars.len() / 2);
            out.push(dropped.into_iter().collect());
            let mut swapped = chars.clone();
            swapped.swap(1, 2);
            out.push(swapped.into_iter().collect());
        }
        out.push(format!("{k}x"));
    }
    out.extend(["zzz", "r", "paris saint germain", "são", "東京"].map(String::from));
    out
}

#[test]
fn fuzzy_retrieval_equals_exhaustive_scan() {
    for name in FIXTURES {
        let bundle = fixture_bundle(name);
        let cache = GramCache::new();
        let keys: Vec<String> = cache.keys(&bundle).to_vec();
        let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
        assert!(keys.len() <= 1000);
        for n in [2, 3, 4] {
            for threshold in [0.3, 0.6, 0.82, 1.0] {
                for q in queries(&keys) {
                    let got: BTreeSet<&str> = cache.fuzzy_keys(&bundle, &q, n, threshold).into_iter().map(|(k, _)| k).collect();
                    let want = brute_force_keys(&key_refs, &q, n, threshold);
                    assert_eq!(got, want, "{name} n={n} t={threshold} q={q:?}");
                }
            }
        }
    }
}

#[test]
fn zero_threshold_returns_every_key() {
    let bundle = fixture_bundle("rio");
    let cache = GramCache::new();
    let all = cache.keys(&bundle).len();
    assert_eq!(cache.fuzzy_keys(&bundle, "qqq", 3, 0.0).len(), all);
}

proptest! {
    #[test]
    fn similarity_laws(a in "\\PC{0,12}", b in "\\PC{0,12}", n in 2usize..5) {
        let s = ngram_similarity(&a, &b, n);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, ngram_similarity(&b, &a, n));
        prop_assert_eq!(ngram_similarity(&a, &a, n), 1.0);
    }
}
