//! Fixture helpers and independent oracles shared by the integration tests
//! and the acceptance harness: dense linear algebra for the rankers, set
//! enumeration for similarity, a raw line scan for ingestion.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use entity_linker::index::{build_indices, IndexBundle, IndexConfig};
use entity_linker::kb::{load_kb_with, KnowledgeBase};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const FIXTURES: [&str; 5] = ["rio", "psg", "barack", "nyc", "wikidata"];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_path(file: &str) -> PathBuf {
    fixtures_dir().join(file)
}

pub fn fixture_config(name: &str) -> IndexConfig {
    IndexConfig::from_file(&fixture_path(&format!("{name}.properties"))).expect("fixture config")
}

pub fn fixture_kb(name: &str) -> KnowledgeBase {
    let config = fixture_config(name);
    let file = File::open(fixture_path(&format!("{name}.kb"))).expect("fixture kb");
    load_kb_with(BufReader::new(file), &config.language, &config.name, &config.predicates).expect("fixture parses")
}

pub fn fixture_bundle(name: &str) -> IndexBundle {
    build_indices(&fixture_kb(name), &fixture_config(name))
}

/// `(fixture, tagged text)` request payloads.
pub fn payloads() -> Vec<(String, String)> {
    std::fs::read_to_string(fixture_path("payloads.tsv"))
        .expect("payloads")
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (f, t) = l.split_once('\t').expect("fixture<TAB>text");
            (f.to_string(), t.to_string())
        })
        .collect()
}

// ---- ingestion oracle ----

/// Entity IRIs of a dump by a raw line scan: every subject, every IRI object
/// except type objects. Knows nothing about escapes beyond skipping literals.
pub fn scan_entities(dump: &str, type_predicates: &[&str]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for line in dump.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let subject_end = line.find('>').unwrap();
        out.insert(line[1..subject_end].to_string());
        let rest = line[subject_end + 1..].trim_start();
        let pred_end = rest.find('>').unwrap();
        let predicate = &rest[1..pred_end];
        let object = rest[pred_end + 1..].trim_start();
        if object.starts_with('<') && !type_predicates.contains(&predicate) {
            out.insert(object[1..object.find('>').unwrap()].to_string());
        }
    }
    out
}

// ---- similarity oracle ----

/// Set of padded n-grams by direct substring enumeration over a `Vec<char>`.
pub fn gram_set(s: &str, n: usize) -> HashSet<String> {
    let mut padded = "#".repeat(n - 1);
    padded.push_str(s);
    padded.push_str(&"#".repeat(n - 1));
    let chars: Vec<char> = padded.chars().collect();
    let mut set = HashSet::new();
    let mut i = 0;
    while i + n <= chars.len() {
        set.insert(chars[i..i + n].iter().collect::<String>());
        i += 1;
    }
    set
}

pub fn sim_oracle(a: &str, b: &str, n: usize) -> f64 {
    let (ga, gb) = (gram_set(a, n), gram_set(b, n));
    let shared = ga.intersection(&gb).count();
    if ga.len() + gb.len() == 0 {
        return 1.0;
    }
    (2 * shared) as f64 / (ga.len() + gb.len()) as f64
}

/// Every key whose oracle similarity to `query` reaches `threshold`.
pub fn brute_force_keys<'a>(keys: &[&'a str], query: &str, n: usize, threshold: f64) -> BTreeSet<&'a str> {
    keys.iter()
        .copied()
        .filter(|k| sim_oracle(query, k, n) >= threshold)
        .collect()
}

const SCRIPTS: [&[char]; 7] = [
    &['a', 'b', 'c', 'd', 'e', 'l', 'n', 'o', 'r', 's', 'x', ' ', '-'],
    &['á', 'é', 'í', 'ã', 'ç', 'ö', 'ß', 'ñ'],
    &['д', 'ж', 'л', 'м', 'о', 'р', 'ы'],
    &['α', 'β', 'γ', 'λ', 'ο', 'σ'],
    &['東', '京', '大', '学', '日', '本'],
    &['ر', 'س', 'ع', 'ل', 'م'],
    &['😀', '🌍', '#', '1', '2'],
];

/// A string of 1..=30 characters drawn from a mix of scripts.
pub fn mixed_script_string<R: Rng>(rng: &mut R) -> String {
    let len = rng.random_range(1..=30);
    let scripts: Vec<&[char]> = (0..rng.random_range(1..=3))
        .map(|_| SCRIPTS[rng.random_range(0..SCRIPTS.len())])
        .collect();
    (0..len)
        .map(|_| {
            let pool = scripts[rng.random_range(0..scripts.len())];
            pool[rng.random_range(0..pool.len())]
        })
        .collect()
}

/// `b` is either unrelated to `a` or a small edit of it, so that both high
/// and low similarities show up.
pub fn string_pair<R: Rng>(rng: &mut R) -> (String, String) {
    let a = mixed_script_string(rng);
    if rng.random_bool(0.5) {
        return (a, mixed_script_string(rng));
    }
    let mut chars: Vec<char> = a.chars().collect();
    for _ in 0..rng.random_range(0..=3) {
        let i = rng.random_range(0..chars.len());
        match rng.random_range(0..3) {
            0 if chars.len() > 1 => {
                chars.remove(i);
            }
            1 => chars.insert(i, mixed_script_string(rng).chars().next().unwrap()),
            _ => {
                let j = rng.random_range(0..chars.len());
                chars.swap(i, j);
            }
        }
    }
    (a, chars.into_iter().collect())
}

// ---- graph oracles ----

/// Random directed graph on 1..=8 nodes, self loops allowed, edges distinct.
pub fn random_graph<R: Rng>(rng: &mut R) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(1..=8);
    let p: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

/// Stationary distribution of the damped random surfer, solved directly:
/// `(I - d Mᵀ) x = (1 - d)/n · 1` where row `u` of `M` spreads `u`'s mass over
/// its successors, or uniformly over all nodes when `u` has none.
pub fn dense_pagerank(n: usize, edges: &[(usize, usize)], damping: f64) -> Vec<f64> {
    let mut out_degree = vec![0usize; n];
    for &(u, _) in edges {
        out_degree[u] += 1;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(u, v) in edges {
        m[(u, v)] += 1.0 / out_degree[u] as f64;
    }
    for u in 0..n {
        if out_degree[u] == 0 {
            for v in 0..n {
                m[(u, v)] = 1.0 / n as f64;
            }
        }
    }
    let system = DMatrix::<f64>::identity(n, n) - m.transpose() * damping;
    let rhs = DVector::<f64>::from_element(n, (1.0 - damping) / n as f64);
    let x = system.lu().solve(&rhs).expect("I - dMᵀ is nonsingular for d < 1");
    x.iter().copied().collect()
}

/// Limit of HITS authority iteration from uniform hubs: `Aᵀ·1` projected onto
/// the dominant eigenspace of `AᵀA`, L1-normalised. Uniform when there are no
/// edges.
pub fn dense_hits_authority(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    if edges.is_empty() {
        return vec![1.0 / n as f64; n];
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(u, v) in edges {
        a[(u, v)] = 1.0;
    }
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let start = a.transpose() * DVector::<f64>::from_element(n, 1.0);
    let mut projected = DVector::<f64>::zeros(n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if (top - lambda).abs() <= 1e-9 * top.max(1.0) {
            let v = eig.eigenvectors.column(i);
            projected += v * v.dot(&start);
        }
    }
    let total: f64 = projected.iter().sum();
    projected.iter().map(|x| x / total).collect()
}

/// Ratio of the second-largest to the largest distinct eigenvalue of `AᵀA`;
/// HITS error shrinks roughly like this ratio per iteration.
pub fn hits_spectral_ratio(n: usize, edges: &[(usize, usize)]) -> f64 {
    if edges.is_empty() {
        return 0.0;
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(u, v) in edges {
        a[(u, v)] = 1.0;
    }
    let mut eigenvalues: Vec<f64> = (a.transpose() * &a).symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.total_cmp(x));
    let top = eigenvalues[0];
    eigenvalues
        .iter()
        .find(|&&l| (top - l).abs() > 1e-9 * top.max(1.0))
        .map_or(0.0, |l| l.abs() / top)
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Nodes reachable from `seeds` in at most `depth` out-edge steps, by
/// repeated relaxation over a plain edge list.
pub fn reachable_within(seeds: &BTreeSet<String>, edges: &[(String, String)], depth: usize) -> BTreeSet<String> {
    let mut seen = seeds.clone();
    let mut frontier = seeds.clone();
    for _ in 0..depth {
        let next: BTreeSet<String> = edges
            .iter()
            .filter(|(u, v)| frontier.contains(u) && !seen.contains(v))
            .map(|(_, v)| v.clone())
            .collect();
        seen.extend(next.iter().cloned());
        frontier = next;
    }
    seen
}
