use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::EntityGraph;
use crate::kb::Iri;
use crate::rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopularityMode {
    /// In-degree in the entity graph.
    Frequency,
    /// Whole-KB PageRank.
    PageRank,
}

impl FromStr for PopularityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "frequency" => Ok(PopularityMode::Frequency),
            "pagerank" => Ok(PopularityMode::PageRank),
            other => Err(format!("unknown popularity mode {other:?}")),
        }
    }
}

impl fmt::Display for PopularityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PopularityMode::Frequency => "frequency",
            PopularityMode::PageRank => "pagerank",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopularityTable {
    pub mode: PopularityMode,
    pub scores: BTreeMap<Iri, f64>,
}

impl PopularityTable {
    pub fn score(&self, iri: &Iri) -> f64 {
        self.scores.get(iri).copied().unwrap_or(0.0)
    }
}

/// Scores every graph node. Parallel edges with different predicates count
/// once: both modes work on distinct (source, target) pairs.
pub fn compute_popularity(
    graph: &EntityGraph,
    mode: PopularityMode,
    damping: f64,
    iterations: usize,
) -> PopularityTable {
    let (order, adj) = graph.adjacency();
    let values = match mode {
        PopularityMode::Frequency => {
            let mut indegree = vec![0.0; order.len()];
            for succ in &adj {
                for &v in succ {
                    indegree[v] += 1.0;
                }
            }
            indegree
        }
        PopularityMode::PageRank => rank::pagerank(&adj, damping, iterations),
    };
    PopularityTable {
        mode,
        scores: order.into_iter().cloned().zip(values).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexConfig;
    use crate::kb::load_kb;

    fn graph(src: &str) -> EntityGraph {
        let kb = load_kb(src.as_bytes(), "en", "t").unwrap();
        EntityGraph::from_kb(&kb, &IndexConfig::default())
    }

    fn score(t: &PopularityTable, s: &str) -> f64 {
        t.score(&Iri::new(s).unwrap())
    }

    #[test]
    fn frequency_is_in_degree() {
        let g = graph("<A> <p> <B>\n<A> <p> <C>\n");
        let t = compute_popularity(&g, PopularityMode::Frequency, 0.85, 50);
        assert_eq!((score(&t, "A"), score(&t, "B"), score(&t, "C")), (0.0, 1.0, 1.0));
    }

    #[test]
    fn frequency_ignores_parallel_predicates() {
        let g = graph("<A> <p> <B>\n<A> <q> <B>\n");
        let t = compute_popularity(&g, PopularityMode::Frequency, 0.85, 50);
        assert_eq!(score(&t, "B"), 1.0);
    }

    #[test]
    fn pagerank_two_cycle() {
        let g = graph("<A> <p> <B>\n<B> <p> <A>\n");
        let t = compute_popularity(&g, PopularityMode::PageRank, 0.85, 50);
        assert!((score(&t, "A") - 0.5).abs() < 1e-12);
        assert!((score(&t, "B") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pagerank_sums_to_one_and_is_positive() {
        let g = graph("<A> <p> <B>\n<A> <p> <C>\n<B> <p> <C>\n<D> <rdfs:label> \"d\"\n");
        let t = compute_popularity(&g, PopularityMode::PageRank, 0.85, 50);
        let sum: f64 = t.scores.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(t.scores.values().all(|&s| s > 0.0));
        assert_eq!(t.scores.len(), 4);
    }
}
