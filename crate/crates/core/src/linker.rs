//! The full online pipeline over one loaded bundle, and the JSON records the
//! service and the CLI both emit.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::candidates::{generate_candidates_with, Candidate, GramCache, LinkerConfig, Source};
use crate::disambiguation::{disambiguate, LinkResult};
use crate::index::{load_bundle, BundleError, IndexBundle};
use crate::text::{parse_entity_tagged_text, Document, TextError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestType {
    /// Full pipeline, one entity per mention.
    Agdistis,
    /// Stop after candidate generation.
    Candidates,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid type {0:?}, expected 'agdistis' or 'candidates'")]
pub struct InvalidType(pub String);

impl FromStr for RequestType {
    type Err = InvalidType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "agdistis" => Ok(RequestType::Agdistis),
            "candidates" => Ok(RequestType::Candidates),
            other => Err(InvalidType(other.to_string())),
        }
    }
}

impl fmt::Display for RequestType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RequestType::Agdistis => "agdistis",
            RequestType::Candidates => "candidates",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkedRecord {
    pub named_entity: String,
    pub start: usize,
    /// Mention length in characters.
    pub offset: usize,
    /// Empty string for NIL.
    #[serde(rename = "disambiguatedURL")]
    pub disambiguated_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEntry {
    pub url: String,
    pub sim: f64,
    pub popularity: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateRecord {
    pub named_entity: String,
    pub start: usize,
    pub offset: usize,
    pub candidates: Vec<CandidateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnnotationResponse {
    Linked(Vec<LinkedRecord>),
    Candidates(Vec<CandidateRecord>),
}

impl AnnotationResponse {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("response records always serialize")
    }
}

/// A loaded bundle plus the lazily built fuzzy-match indices. Immutable apart
/// from that cache; share it behind an `Arc`.
#[derive(Debug)]
pub struct Linker {
    bundle: IndexBundle,
    grams: GramCache,
}

impl Linker {
    pub fn new(bundle: IndexBundle) -> Self {
        Linker {
            bundle,
            grams: GramCache::new(),
        }
    }

    pub fn open(dir: &Path) -> Result<Self, BundleError> {
        load_bundle(dir).map(Linker::new)
    }

    pub fn bundle(&self) -> &IndexBundle {
        &self.bundle
    }

    pub fn candidates(&self, doc: &Document, cfg: &LinkerConfig) -> Vec<Vec<Candidate>> {
        generate_candidates_with(doc, &self.bundle, &self.grams, cfg)
    }

    pub fn link(&self, doc: &Document, cfg: &LinkerConfig) -> Vec<LinkResult> {
        let candidates = self.candidates(doc, cfg);
        disambiguate(&candidates, &self.bundle.graph, cfg)
    }

    pub fn annotate_document(&self, doc: &Document, kind: RequestType, cfg: &LinkerConfig) -> AnnotationResponse {
        match kind {
            RequestType::Agdistis => AnnotationResponse::Linked(
                doc.mentions
                    .iter()
                    .zip(self.link(doc, cfg))
                    .map(|(m, r)| LinkedRecord {
                        named_entity: m.surface.clone(),
                        start: m.start,
                        offset: m.length,
                        disambiguated_url: r.chosen.map(|i| i.to_string()).unwrap_or_default(),
                    })
                    .collect(),
            ),
            RequestType::Candidates => AnnotationResponse::Candidates(
                doc.mentions
                    .iter()
                    .zip(self.candidates(doc, cfg))
                    .map(|(m, list)| CandidateRecord {
                        named_entity: m.surface.clone(),
                        start: m.start,
                        offset: m.length,
                        candidates: list
                            .into_iter()
                            .map(|c| CandidateEntry {
                                url: c.entity.to_string(),
                                sim: c.sim,
                                popularity: c.popularity,
                                source: c.source,
                            })
                            .collect(),
                    })
                    .collect(),
            ),
        }
    }

    /// Parses `<entity>`-tagged text and runs the requested pipeline.
    pub fn annotate(&self, tagged: &str, kind: RequestType, cfg: &LinkerConfig) -> Result<AnnotationResponse, TextError> {
        let doc = parse_entity_tagged_text(tagged)?;
        Ok(self.annotate_document(&doc, kind, cfg))
    }
}
