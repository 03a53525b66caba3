//! Online step one: a bounded, ranked list of candidate entities per mention.

mod ngram;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::index::{normalize_surface_form, tokenize, AcronymIndex, IndexBundle};
use crate::kb::Iri;
use crate::text::Document;

pub use ngram::{ngram_similarity, overlap_score, padded_ngrams, GramIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Direct,
    Rare,
    Person,
    Expanded,
    Acronym,
    Context,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Direct => "direct",
            Source::Rare => "rare",
            Source::Person => "person",
            Source::Expanded => "expanded",
            Source::Acronym => "acronym",
            Source::Context => "context",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub mention_index: usize,
    pub entity: Iri,
    pub matched_label: String,
    pub sim: f64,
    pub popularity: f64,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Hits,
    PageRank,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hits" => Ok(Algorithm::Hits),
            "pagerank" => Ok(Algorithm::PageRank),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Hits => "hits",
            Algorithm::PageRank => "pagerank",
        })
    }
}

/// Per-request linking parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkerConfig {
    /// Order candidates by popularity instead of similarity.
    pub popularity: bool,
    pub algorithm: Algorithm,
    /// Fall back to the context index when nothing else matched.
    pub context: bool,
    pub acronym: bool,
    /// Keep entities outside the person/place/organization classes.
    pub common_entities: bool,
    pub ngram_distance: usize,
    pub depth: usize,
    pub heuristic_expansion: bool,
    pub sim_threshold: f64,
    pub max_candidates: usize,
    pub hits_iterations: usize,
    pub pagerank_iterations: usize,
    pub damping: f64,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        LinkerConfig {
            popularity: false,
            algorithm: Algorithm::Hits,
            context: false,
            acronym: false,
            common_entities: false,
            ngram_distance: 3,
            depth: 2,
            heuristic_expansion: true,
            sim_threshold: 0.82,
            max_candidates: 100,
            hits_iterations: 20,
            pagerank_iterations: 50,
            damping: 0.85,
        }
    }
}

/// Lazily built gram indices over the union of surface, person and rare
/// keys, one per n-gram size. Shared by all requests against one bundle.
#[derive(Debug, Default)]
pub struct GramCache {
    keys: OnceLock<Vec<String>>,
    by_n: Mutex<HashMap<usize, Arc<GramIndex>>>,
}

impl GramCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// All lookup keys in ascending order, deduplicated.
    pub fn keys<'a>(&'a self, bundle: &IndexBundle) -> &'a [String] {
        self.keys.get_or_init(|| {
            let set: BTreeSet<&str> = bundle
                .surface
                .keys()
                .chain(bundle.persons.keys())
                .chain(bundle.rare.keys())
                .collect();
            set.into_iter().map(String::from).collect()
        })
    }

    pub fn index(&self, bundle: &IndexBundle, n: usize) -> Arc<GramIndex> {
        let keys = self.keys(bundle);
        let mut by_n = self.by_n.lock().unwrap_or_else(|e| e.into_inner());
        by_n.entry(n)
            .or_insert_with(|| Arc::new(GramIndex::build(keys.iter().map(String::as_str), n)))
            .clone()
    }

    /// Index keys whose similarity to the normalized `query` reaches
    /// `threshold`, in ascending key order.
    pub fn fuzzy_keys<'a>(
        &'a self,
        bundle: &IndexBundle,
        query: &str,
        n: usize,
        threshold: f64,
    ) -> Vec<(&'a str, f64)> {
        let keys = self.keys(bundle);
        self.index(bundle, n)
            .search(query, threshold)
            .into_iter()
            .map(|(id, sim)| (keys[id].as_str(), sim))
            .collect()
    }
}

/// For every mention whose surface occurs, on token boundaries, inside a
/// longer mention of the same document, the longer surface. The longest
/// superstring wins; ties go to the one appearing first.
pub fn heuristic_expansion(surfaces: &[&str]) -> BTreeMap<usize, String> {
    let tokens: Vec<Vec<String>> = surfaces
        .iter()
        .map(|s| normalize_surface_form(s).split(' ').filter(|t| !t.is_empty()).map(String::from).collect())
        .collect();
    let mut out = BTreeMap::new();
    for (i, short) in tokens.iter().enumerate() {
        if short.is_empty() {
            continue;
        }
        let mut best: Option<usize> = None;
        for (j, long) in tokens.iter().enumerate() {
            if long.len() <= short.len() || !long.windows(short.len()).any(|w| w == short.as_slice()) {
                continue;
            }
            let len = surfaces[j].chars().count();
            match best {
                Some(b) if surfaces[b].chars().count() >= len => {}
                _ => best = Some(j),
            }
        }
        if let Some(j) = best {
            out.insert(i, surfaces[j].to_string());
        }
    }
    out
}

/// Expansions registered for the exact, case-sensitive `surface`.
pub fn acronym_lookup<'a>(surface: &str, index: &'a AcronymIndex) -> BTreeSet<&'a str> {
    index
        .get(surface)
        .map(|set| set.iter().map(String::as_str).collect())
        .unwrap_or_default()
}

/// Bag of normalized word tokens.
pub fn token_bag(text: &str) -> BTreeMap<String, u32> {
    let mut bag = BTreeMap::new();
    for t in tokenize(text) {
        *bag.entry(t).or_default() += 1;
    }
    bag
}

/// Entities whose abstracts overlap the document's tokens. Only entities
/// sharing at least one token with `surface` qualify. The score is the size
/// of the bag intersection divided by the size of the document bag.
pub fn context_search(
    mention_index: usize,
    surface: &str,
    doc_tokens: &BTreeMap<String, u32>,
    bundle: &IndexBundle,
    max_candidates: usize,
) -> Vec<Candidate> {
    let context = &bundle.context;
    let eligible: BTreeSet<&Iri> = token_bag(surface)
        .keys()
        .flat_map(|t| context.postings(t).iter().map(|(iri, _)| iri))
        .collect();
    if eligible.is_empty() {
        return Vec::new();
    }
    let doc_size: u32 = doc_tokens.values().sum();
    let mut overlap: BTreeMap<&Iri, u32> = BTreeMap::new();
    for (token, &count) in doc_tokens {
        for (iri, tf) in context.postings(token) {
            if eligible.contains(iri) {
                *overlap.entry(iri).or_default() += count.min(*tf);
            }
        }
    }
    let mut out: Vec<Candidate> = overlap
        .into_iter()
        .filter(|&(_, o)| o > 0)
        .map(|(iri, o)| Candidate {
            mention_index,
            entity: iri.clone(),
            matched_label: surface.to_string(),
            sim: o as f64 / doc_size as f64,
            popularity: bundle.popularity.score(iri),
            source: Source::Context,
        })
        .collect();
    out.sort_by(|a, b| b.sim.total_cmp(&a.sim).then_with(|| a.entity.cmp(&b.entity)));
    out.truncate(max_candidates);
    out
}

/// Per-entity accumulator keeping the best-scoring route to each entity.
struct Found {
    mention_index: usize,
    by_entity: BTreeMap<Iri, Candidate>,
}

impl Found {
    fn offer(&mut self, entity: &Iri, label: &str, sim: f64, source: Source) {
        let candidate = Candidate {
            mention_index: self.mention_index,
            entity: entity.clone(),
            matched_label: label.to_string(),
            sim,
            popularity: 0.0,
            source,
        };
        match self.by_entity.get(entity) {
            Some(existing) if existing.sim >= sim => {}
            _ => {
                self.by_entity.insert(entity.clone(), candidate);
            }
        }
    }

    fn is_empty(&self) -> bool {
        self.by_entity.is_empty()
    }
}

/// Convenience wrapper building a throwaway [`GramCache`].
pub fn generate_candidates(doc: &Document, bundle: &IndexBundle, cfg: &LinkerConfig) -> Vec<Vec<Candidate>> {
    generate_candidates_with(doc, bundle, &GramCache::new(), cfg)
}

/// Candidate lists, one per mention in document order.
pub fn generate_candidates_with(
    doc: &Document,
    bundle: &IndexBundle,
    grams: &GramCache,
    cfg: &LinkerConfig,
) -> Vec<Vec<Candidate>> {
    let surfaces: Vec<&str> = doc.mentions.iter().map(|m| m.surface.as_str()).collect();
    let expansions = if cfg.heuristic_expansion {
        heuristic_expansion(&surfaces)
    } else {
        BTreeMap::new()
    };
    let doc_tokens = if cfg.context { token_bag(&doc.text) } else { BTreeMap::new() };
    let exact_indices = [
        (&bundle.surface, Source::Direct),
        (&bundle.persons, Source::Person),
        (&bundle.rare, Source::Rare),
    ];

    doc.mentions
        .iter()
        .enumerate()
        .map(|(i, mention)| {
            let mut found = Found {
                mention_index: i,
                by_entity: BTreeMap::new(),
            };
            let (query, expanded) = match expansions.get(&i) {
                Some(longer) => (longer.as_str(), true),
                None => (mention.surface.as_str(), false),
            };
            let key = normalize_surface_form(query);
            let route = |source| if expanded { Source::Expanded } else { source };

            for (index, source) in exact_indices {
                for iri in index.get(&key).into_iter().flatten() {
                    found.offer(iri, query, 1.0, route(source));
                }
            }
            if found.is_empty() && !key.is_empty() {
                for (k, sim) in grams.fuzzy_keys(bundle, &key, cfg.ngram_distance, cfg.sim_threshold) {
                    for (index, source) in exact_indices {
                        for iri in index.get(k).into_iter().flatten() {
                            found.offer(iri, k, sim, route(source));
                        }
                    }
                }
            }
            if cfg.acronym {
                for expansion in acronym_lookup(mention.surface.trim(), &bundle.acronyms) {
                    let key = normalize_surface_form(expansion);
                    for iri in bundle.surface.get(&key).into_iter().flatten() {
                        found.offer(iri, expansion, 1.0, Source::Acronym);
                    }
                }
            }
            if found.is_empty() && cfg.context {
                for c in context_search(i, query, &doc_tokens, bundle, cfg.max_candidates) {
                    found.offer(&c.entity, &c.matched_label, c.sim, Source::Context);
                }
            }

            let mut list: Vec<Candidate> = found
                .by_entity
                .into_values()
                .filter(|c| cfg.common_entities || bundle.graph.classes(&c.entity).any())
                .map(|mut c| {
                    c.popularity = bundle.popularity.score(&c.entity);
                    c
                })
                .collect();
            let sort_key = |c: &Candidate| if cfg.popularity { c.popularity } else { c.sim };
            list.sort_by(|a, b| {
                sort_key(b)
                    .total_cmp(&sort_key(a))
                    .then_with(|| a.entity.cmp(&b.entity))
            });
            list.truncate(cfg.max_candidates);
            list
        })
        .collect()
}
