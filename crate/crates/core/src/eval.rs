//! Micro-averaged precision/recall/F1 of linking against gold annotations.
//!
//! Documents file: `doc_id<TAB>text` per line. Gold file:
//! `doc_id<TAB>start<TAB>length<TAB>surface<TAB>iri` per line, offsets in
//! characters. In both, `\t`, `\n` and `\\` escapes are decoded in the text
//! and surface fields; `#` lines are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::candidates::LinkerConfig;
use crate::kb::Iri;
use crate::linker::Linker;
use crate::text::parse_spans_payload;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{file} line {line}: {reason}")]
    Format { file: &'static str, line: usize, reason: String },
    #[error("gold span mismatch for document {doc}: {reason}")]
    SpanMismatch { doc: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub doc_id: String,
    pub start: usize,
    pub length: usize,
    pub surface: String,
    pub gold: Iri,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DocCounts {
    pub id: String,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub documents: Vec<DocCounts>,
}

impl EvalReport {
    /// Micro-averages the per-document counts. Precision is 0 when nothing
    /// was predicted; F1 is 0 when precision and recall are both 0.
    pub fn from_counts(mut documents: Vec<DocCounts>) -> Self {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        let correct: usize = documents.iter().map(|d| d.correct).sum();
        let predicted: usize = documents.iter().map(|d| d.predicted).sum();
        let gold: usize = documents.iter().map(|d| d.gold).sum();
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            correct,
            predicted,
            gold,
            documents,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let width = self
            .documents
            .iter()
            .map(|d| d.id.chars().count())
            .chain(["document".len(), "TOTAL".len()])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>9}  {:>5}", "document", "correct", "predicted", "gold");
        for d in &self.documents {
            let _ = writeln!(out, "{:<width$}  {:>7}  {:>9}  {:>5}", d.id, d.correct, d.predicted, d.gold);
        }
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>9}  {:>5}", "TOTAL", self.correct, self.predicted, self.gold);
        let _ = writeln!(
            out,
            "precision {:.4}  recall {:.4}  f1 {:.4}",
            self.precision, self.recall, self.f1
        );
        out
    }
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn parse_documents(text: &str) -> Result<BTreeMap<String, String>, EvalError> {
    let mut docs = BTreeMap::new();
    for (line, l) in data_lines(text) {
        let err = |reason: &str| EvalError::Format {
            file: "documents",
            line,
            reason: reason.into(),
        };
        let (id, body) = l.split_once('\t').ok_or_else(|| err("expected doc_id<TAB>text"))?;
        if docs.insert(id.to_string(), unescape(body)).is_some() {
            return Err(err("duplicate document id"));
        }
    }
    Ok(docs)
}

pub fn parse_gold(text: &str) -> Result<Vec<GoldRecord>, EvalError> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let err = |reason: String| EvalError::Format {
            file: "gold",
            line,
            reason,
        };
        let fields: Vec<&str> = l.split('\t').collect();
        let [doc_id, start, length, surface, iri] = fields[..] else {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        };
        out.push(GoldRecord {
            doc_id: doc_id.to_string(),
            start: start.parse().map_err(|_| err(format!("bad start {start:?}")))?,
            length: length.parse().map_err(|_| err(format!("bad length {length:?}")))?,
            surface: unescape(surface),
            gold: Iri::new(iri).map_err(err)?,
        });
    }
    Ok(out)
}

/// Links every gold mention (documents are linked with all their gold spans
/// at once) and scores non-NIL predictions after redirect resolution.
pub fn evaluate(
    linker: &Linker,
    documents: &BTreeMap<String, String>,
    gold: &[GoldRecord],
    cfg: &LinkerConfig,
) -> Result<EvalReport, EvalError> {
    let mut by_doc: BTreeMap<&str, Vec<&GoldRecord>> = BTreeMap::new();
    for g in gold {
        by_doc.entry(g.doc_id.as_str()).or_default().push(g);
    }
    let graph = &linker.bundle().graph;
    let mut counts = Vec::new();
    for (id, records) in by_doc {
        let mismatch = |reason: String| EvalError::SpanMismatch {
            doc: id.to_string(),
            reason,
        };
        let text = documents
            .get(id)
            .ok_or_else(|| mismatch("document not found".into()))?;
        let spans: Vec<(usize, usize)> = records.iter().map(|g| (g.start, g.length)).collect();
        let doc = parse_spans_payload(text, &spans).map_err(|e| mismatch(e.to_string()))?;
        let mut expected: BTreeMap<(usize, usize), &GoldRecord> = BTreeMap::new();
        for g in &records {
            expected.insert((g.start, g.length), g);
        }
        for m in &doc.mentions {
            let g = expected[&(m.start, m.length)];
            if g.surface != m.surface {
                return Err(mismatch(format!(
                    "span ({}, {}) is {:?} in the text, gold says {:?}",
                    m.start, m.length, m.surface, g.surface
                )));
            }
        }
        let results = linker.link(&doc, cfg);
        let mut dc = DocCounts {
            id: id.to_string(),
            gold: doc.mentions.len(),
            ..DocCounts::default()
        };
        for (m, r) in doc.mentions.iter().zip(results) {
            let Some(chosen) = r.chosen else { continue };
            dc.predicted += 1;
            let g = expected[&(m.start, m.length)];
            if graph.resolve_redirect(&chosen) == graph.resolve_redirect(&g.gold) {
                dc.correct += 1;
            }
        }
        counts.push(dc);
    }
    Ok(EvalReport::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dc(id: &str, correct: usize, predicted: usize, gold: usize) -> DocCounts {
        DocCounts {
            id: id.into(),
            correct,
            predicted,
            gold,
        }
    }

    #[test]
    fn perfect() {
        let r = EvalReport::from_counts(vec![dc("a", 2, 2, 2)]);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_nil() {
        let r = EvalReport::from_counts(vec![dc("a", 0, 0, 3)]);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn partial() {
        // 3 gold, 2 predicted, 1 correct: P = 1/2, R = 1/3, F1 = 2*(1/6)/(5/6) = 0.4
        let r = EvalReport::from_counts(vec![dc("a", 1, 2, 3)]);
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0 / 3.0);
        assert!((r.f1 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn document_order_does_not_matter() {
        let a = EvalReport::from_counts(vec![dc("x", 1, 2, 3), dc("y", 2, 2, 2)]);
        let b = EvalReport::from_counts(vec![dc("y", 2, 2, 2), dc("x", 1, 2, 3)]);
        assert_eq!(a, b);
    }

    #[test]
    fn parses_files() {
        let docs = parse_documents("# docs\nd1\tRio is\\tbig\n").unwrap();
        assert_eq!(docs["d1"], "Rio is\tbig");
        let gold = parse_gold("d1\t0\t3\tRio\te:Rio_city\n").unwrap();
        assert_eq!(gold[0].length, 3);
        assert!(parse_gold("d1\t0\t3\tRio\n").is_err());
        assert!(parse_documents("d1 no tab\n").is_err());
    }

    #[test]
    fn table_is_aligned() {
        let r = EvalReport::from_counts(vec![dc("doc-long-name", 1, 2, 3)]);
        let table = r.to_table();
        let widths: Vec<usize> = table.lines().take(3).map(|l| l.chars().count()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{table}");
    }
}
