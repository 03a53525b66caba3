//! Online step two: depth-bounded graph over the candidates, node scoring,
//! and one entity (or NIL) per mention.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::candidates::{Algorithm, Candidate, LinkerConfig};
use crate::index::EntityGraph;
use crate::kb::Iri;
use crate::rank;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphNode {
    /// BFS round in which the node entered; 0 for candidates.
    pub level: usize,
    /// Mentions this node is a candidate for. Empty for expansion nodes.
    pub mentions: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisambiguationGraph {
    pub nodes: BTreeMap<Iri, GraphNode>,
    pub edges: BTreeSet<(Iri, Iri)>,
}

impl DisambiguationGraph {
    /// Node order (by IRI) and successor lists over node positions.
    pub fn adjacency(&self) -> (Vec<&Iri>, Vec<Vec<usize>>) {
        let order: Vec<&Iri> = self.nodes.keys().collect();
        let position: BTreeMap<&Iri, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut adj = vec![Vec::new(); order.len()];
        for (u, v) in &self.edges {
            adj[position[u]].push(position[v]);
        }
        (order, adj)
    }
}

/// Seeds the graph with every candidate, grows it breadth-first along KB
/// out-edges for `depth` rounds, then adds every KB edge whose endpoints are
/// both in the graph.
pub fn build_graph(candidates: &[Vec<Candidate>], kb_graph: &EntityGraph, depth: usize) -> DisambiguationGraph {
    let mut nodes: BTreeMap<Iri, GraphNode> = BTreeMap::new();
    for list in candidates {
        for c in list {
            nodes.entry(c.entity.clone()).or_default().mentions.insert(c.mention_index);
        }
    }
    let mut frontier: VecDeque<Iri> = nodes.keys().cloned().collect();
    for level in 1..=depth {
        let mut next = VecDeque::new();
        while let Some(u) = frontier.pop_front() {
            for v in kb_graph.successors(&u) {
                if !nodes.contains_key(v) {
                    nodes.insert(
                        v.clone(),
                        GraphNode {
                            level,
                            mentions: BTreeSet::new(),
                        },
                    );
                    next.push_back(v.clone());
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let mut edges = BTreeSet::new();
    for u in nodes.keys() {
        for v in kb_graph.successors(u) {
            if nodes.contains_key(v) {
                edges.insert((u.clone(), v.clone()));
            }
        }
    }
    DisambiguationGraph { nodes, edges }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeScore {
    pub hub: f64,
    pub authority: f64,
    pub pagerank: f64,
}

pub fn run_hits(g: &DisambiguationGraph, iterations: usize) -> BTreeMap<Iri, NodeScore> {
    let (order, adj) = g.adjacency();
    let (hub, authority) = rank::Hits::new(&adj).run(iterations);
    order
        .into_iter()
        .enumerate()
        .map(|(i, iri)| {
            let score = NodeScore {
                hub: hub[i],
                authority: authority[i],
                pagerank: 0.0,
            };
            (iri.clone(), score)
        })
        .collect()
}

pub fn run_pagerank(g: &DisambiguationGraph, damping: f64, iterations: usize) -> BTreeMap<Iri, NodeScore> {
    let (order, adj) = g.adjacency();
    let pr = rank::pagerank(&adj, damping, iterations);
    order
        .into_iter()
        .zip(pr)
        .map(|(iri, pagerank)| {
            let score = NodeScore {
                pagerank,
                ..NodeScore::default()
            };
            (iri.clone(), score)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    /// `None` is NIL.
    pub chosen: Option<Iri>,
    pub score: f64,
    pub candidates_considered: usize,
}

/// Per mention, the candidate with the highest score under `algorithm`
/// (authority for HITS); ties go to the smallest IRI.
pub fn select(
    scores: &BTreeMap<Iri, NodeScore>,
    candidates: &[Vec<Candidate>],
    algorithm: Algorithm,
) -> Vec<LinkResult> {
    let relevant = |iri: &Iri| {
        let s = scores.get(iri).copied().unwrap_or_default();
        match algorithm {
            Algorithm::Hits => s.authority,
            Algorithm::PageRank => s.pagerank,
        }
    };
    candidates
        .iter()
        .map(|list| {
            let best = list
                .iter()
                .map(|c| (&c.entity, relevant(&c.entity)))
                .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            LinkResult {
                chosen: best.map(|(iri, _)| iri.clone()),
                score: best.map_or(0.0, |(_, s)| s),
                candidates_considered: list.len(),
            }
        })
        .collect()
}

/// Graph construction, scoring and selection in one call.
pub fn disambiguate(candidates: &[Vec<Candidate>], kb_graph: &EntityGraph, cfg: &LinkerConfig) -> Vec<LinkResult> {
    let g = build_graph(candidates, kb_graph, cfg.depth);
    let scores = match cfg.algorithm {
        Algorithm::Hits => run_hits(&g, cfg.hits_iterations),
        Algorithm::PageRank => run_pagerank(&g, cfg.damping, cfg.pagerank_iterations),
    };
    select(&scores, candidates, cfg.algorithm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::Source;
    use crate::index::IndexConfig;
    use crate::kb::load_kb;
    use proptest::prelude::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    fn cand(mention: usize, entity: &str) -> Candidate {
        Candidate {
            mention_index: mention,
            entity: iri(entity),
            matched_label: entity.to_string(),
            sim: 1.0,
            popularity: 0.0,
            source: Source::Direct,
        }
    }

    fn kb_graph(src: &str) -> EntityGraph {
        EntityGraph::from_kb(&load_kb(src.as_bytes(), "en", "t").unwrap(), &IndexConfig::default())
    }

    #[test]
    fn depth_zero_keeps_candidates_and_closure_edges() {
        let g = kb_graph("<A> <p> <B>\n<B> <p> <C>\n");
        let dg = build_graph(&[vec![cand(0, "A")], vec![cand(1, "B")]], &g, 0);
        assert_eq!(dg.nodes.keys().map(Iri::as_str).collect::<Vec<_>>(), vec!["A", "B"]);
        assert_eq!(dg.edges, BTreeSet::from([(iri("A"), iri("B"))]));
    }

    #[test]
    fn depth_levels() {
        let g = kb_graph("<A> <p> <B>\n<B> <p> <C>\n<C> <p> <D>\n<D> <p> <A>\n");
        let dg = build_graph(&[vec![cand(0, "A")]], &g, 2);
        let levels: Vec<(&str, usize)> = dg.nodes.iter().map(|(k, n)| (k.as_str(), n.level)).collect();
        assert_eq!(levels, vec![("A", 0), ("B", 1), ("C", 2)]);
        assert_eq!(dg.edges.len(), 2);
        let dg = build_graph(&[vec![cand(0, "A")]], &g, 5);
        assert_eq!(dg.nodes.len(), 4);
        assert!(dg.edges.contains(&(iri("D"), iri("A"))));
    }

    #[test]
    fn empty_candidates_give_empty_graph() {
        let g = kb_graph("<A> <p> <B>\n");
        let dg = build_graph(&[vec![], vec![]], &g, 3);
        assert!(dg.nodes.is_empty() && dg.edges.is_empty());
    }

    #[test]
    fn select_argmax_and_ties() {
        let mut scores = BTreeMap::new();
        let set = |a: f64| NodeScore { authority: a, pagerank: a, hub: 0.0 };
        scores.insert(iri("X"), set(0.4));
        scores.insert(iri("Y"), set(0.1));
        scores.insert(iri("e:A"), set(0.3));
        scores.insert(iri("e:B"), set(0.3));
        let cands = vec![vec![cand(0, "Y"), cand(0, "X")], vec![cand(1, "e:B"), cand(1, "e:A")], vec![]];
        let res = select(&scores, &cands, Algorithm::Hits);
        assert_eq!(res[0].chosen, Some(iri("X")));
        assert_eq!(res[0].score, 0.4);
        assert_eq!(res[1].chosen, Some(iri("e:A")));
        assert_eq!(res[2].chosen, None);
        assert_eq!(res[2].candidates_considered, 0);
        assert_eq!(select(&scores, &cands, Algorithm::PageRank)[0].chosen, Some(iri("X")));
    }

    #[test]
    fn hits_on_star() {
        let g = kb_graph("<A> <p> <B>\n<A> <p> <C>\n");
        let dg = build_graph(&[vec![cand(0, "A"), cand(0, "B"), cand(0, "C")]], &g, 0);
        let s = run_hits(&dg, 20);
        assert!((s[&iri("B")].authority - 0.5).abs() < 1e-12);
        assert!((s[&iri("C")].authority - 0.5).abs() < 1e-12);
        assert!((s[&iri("A")].hub - 1.0).abs() < 1e-12);
    }

    fn arb_graph() -> impl Strategy<Value = (Vec<(u8, u8)>, Vec<u8>)> {
        (
            proptest::collection::vec((0u8..8, 0u8..8), 0..20),
            proptest::collection::vec(0u8..8, 1..4),
        )
    }

    fn kb_from_edges(edges: &[(u8, u8)]) -> EntityGraph {
        let src: String = edges.iter().map(|(a, b)| format!("<n{a}> <p> <n{b}>\n")).collect();
        kb_graph(&src)
    }

    proptest! {
        #[test]
        fn graph_grows_monotonically_with_depth((edges, seeds) in arb_graph()) {
            let g = kb_from_edges(&edges);
            let cands = vec![seeds.iter().map(|s| cand(0, &format!("n{s}"))).collect::<Vec<_>>()];
            let mut previous: BTreeSet<Iri> = BTreeSet::new();
            for depth in 0..5 {
                let dg = build_graph(&cands, &g, depth);
                let nodes: BTreeSet<Iri> = dg.nodes.keys().cloned().collect();
                prop_assert!(previous.is_subset(&nodes));
                prop_assert!(dg.nodes.values().all(|n| n.level <= depth));
                prop_assert!(dg.edges.iter().all(|(u, v)| nodes.contains(u) && nodes.contains(v)));
                previous = nodes;
            }
        }

        #[test]
        fn scores_are_normalized((edges, seeds) in arb_graph()) {
            let g = kb_from_edges(&edges);
            let cands = vec![seeds.iter().map(|s| cand(0, &format!("n{s}"))).collect::<Vec<_>>()];
            let dg = build_graph(&cands, &g, 2);
            let hits = run_hits(&dg, 20);
            let auth: f64 = hits.values().map(|s| s.authority).sum();
            let hub: f64 = hits.values().map(|s| s.hub).sum();
            prop_assert!((auth - 1.0).abs() < 1e-9 && (hub - 1.0).abs() < 1e-9);
            let pr: f64 = run_pagerank(&dg, 0.85, 50).values().map(|s| s.pagerank).sum();
            prop_assert!((pr - 1.0).abs() < 1e-9);
        }

        #[test]
        fn argmax_is_scale_invariant(raw in proptest::collection::vec(0u32..50, 1..6), factor in 0.01f64..100.0) {
            let cands = vec![(0..raw.len()).map(|i| cand(0, &format!("c{i}"))).collect::<Vec<_>>()];
            let scores: BTreeMap<Iri, NodeScore> = raw.iter().enumerate()
                .map(|(i, &a)| (iri(&format!("c{i}")), NodeScore { authority: a as f64, ..NodeScore::default() }))
                .collect();
            let scaled: BTreeMap<Iri, NodeScore> = scores.iter()
                .map(|(k, s)| (k.clone(), NodeScore { authority: s.authority * factor, ..*s }))
                .collect();
            let a = select(&scores, &cands, Algorithm::Hits);
            let b = select(&scaled, &cands, Algorithm::Hits);
            prop_assert_eq!(&a[0].chosen, &b[0].chosen);
            prop_assert!(cands[0].iter().any(|c| Some(&c.entity) == a[0].chosen.as_ref()));
        }
    }
}
