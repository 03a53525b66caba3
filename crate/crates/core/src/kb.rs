//! Knowledge-base ingestion.
//!
//! A dump is a stream of newline-delimited triples with three
//! whitespace-separated fields:
//!
//! ```text
//! <e:NYC> <rdfs:label> "Big Apple"@en
//! <e:NYC> <dbo:country> <e:USA>
//! # comment
//! ```
//!
//! IRIs are wrapped in `<...>`, literals in `"..."` with an optional `@lang`
//! suffix. Inside literals only `\"` and `\\` are recognised escapes. A
//! trailing ` .` (N-Triples terminator) is tolerated.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: entity {subject} already redirects to {existing}, second redirect to {new}")]
    DuplicateRedirect {
        line: usize,
        subject: String,
        existing: String,
        new: String,
    },
    #[error("read error at line {line}: {message}")]
    Io { line: usize, message: String },
}

impl KbError {
    fn malformed(line: usize, reason: impl Into<String>) -> Self {
        KbError::MalformedLine {
            line,
            reason: reason.into(),
        }
    }
}

/// An absolute identifier of a KB resource.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    /// Fails on empty strings, whitespace, and angle brackets.
    pub fn new(value: impl Into<String>) -> Result<Self, String> {
        let value = value.into();
        if value.is_empty() {
            return Err("empty IRI".into());
        }
        if let Some(c) = value
            .chars()
            .find(|c| c.is_whitespace() || *c == '<' || *c == '>')
        {
            return Err(format!("IRI {value:?} contains forbidden character {c:?}"));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Iri(Iri),
    Literal { text: String, lang: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Object,
}

/// Parses one line of the ingestion format. Blank lines and lines starting
/// with `#` yield `Ok(None)`. `line_no` is only used for error reporting.
pub fn parse_triple_line(line: &str, line_no: usize) -> Result<Option<Triple>, KbError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.starts_with('#') || line.trim().is_empty() {
        return Ok(None);
    }
    let mut cursor = Cursor {
        rest: line,
        line_no,
    };
    let subject = cursor.iri_field("subject")?;
    let predicate = cursor.iri_field("predicate")?;
    cursor.skip_ws();
    let object = match cursor.rest.chars().next() {
        Some('<') => Object::Iri(cursor.iri_field("object")?),
        Some('"') => cursor.literal()?,
        Some(_) => return Err(KbError::malformed(line_no, "object must be <IRI> or \"literal\"")),
        None => return Err(KbError::malformed(line_no, "expected 3 fields, found 2")),
    };
    cursor.skip_ws();
    let trailing = cursor.rest.strip_prefix('.').unwrap_or(cursor.rest).trim();
    if !trailing.is_empty() {
        return Err(KbError::malformed(line_no, "expected 3 fields, found more"));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}

struct Cursor<'a> {
    rest: &'a str,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn iri_field(&mut self, what: &str) -> Result<Iri, KbError> {
        self.skip_ws();
        if self.rest.is_empty() {
            let found = match what {
                "subject" => 0,
                "predicate" => 1,
                _ => 2,
            };
            return Err(KbError::malformed(
                self.line_no,
                format!("expected 3 fields, found {found}"),
            ));
        }
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| KbError::malformed(self.line_no, format!("{what} must be an <IRI>")))?;
        let end = body
            .find('>')
            .ok_or_else(|| KbError::malformed(self.line_no, format!("unterminated {what} IRI")))?;
        let iri = Iri::new(&body[..end]).map_err(|e| KbError::malformed(self.line_no, e))?;
        self.rest = &body[end + 1..];
        if !(self.rest.is_empty() || self.rest.starts_with(char::is_whitespace)) {
            return Err(KbError::malformed(
                self.line_no,
                format!("missing whitespace after {what}"),
            ));
        }
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Object, KbError> {
        let mut chars = self.rest.char_indices().skip(1);
        let mut text = String::new();
        let end = loop {
            match chars.next() {
                None => return Err(KbError::malformed(self.line_no, "unterminated literal")),
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, '"')) => text.push('"'),
                    Some((_, '\\')) => text.push('\\'),
                    Some((_, c)) => {
                        return Err(KbError::malformed(
                            self.line_no,
                            format!("invalid escape \\{c}"),
                        ))
                    }
                    None => return Err(KbError::malformed(self.line_no, "unterminated literal")),
                },
                Some((_, c)) => text.push(c),
            }
        };
        self.rest = &self.rest[end + 1..];
        let lang = if let Some(after) = self.rest.strip_prefix('@') {
            let len = after
                .find(char::is_whitespace)
                .unwrap_or(after.len());
            let tag = &after[..len];
            if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
                return Err(KbError::malformed(self.line_no, "invalid language tag"));
            }
            self.rest = &after[len..];
            Some(tag.to_string())
        } else {
            None
        };
        if !(self.rest.is_empty() || self.rest.starts_with(char::is_whitespace)) {
            return Err(KbError::malformed(self.line_no, "missing whitespace after literal"));
        }
        Ok(Object::Literal { text, lang })
    }
}

/// Which predicates carry labels, types and redirects. Each role accepts a
/// set of predicate IRIs so that Wikidata-style dumps can be remapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateMap {
    pub label: BTreeSet<String>,
    pub type_of: BTreeSet<String>,
    pub redirect: BTreeSet<String>,
}

impl Default for PredicateMap {
    fn default() -> Self {
        let set = |items: &[&str]| items.iter().map(|s| s.to_string()).collect();
        PredicateMap {
            label: set(&["rdfs:label", "http://www.w3.org/2000/01/rdf-schema#label"]),
            type_of: set(&["rdf:type", "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"]),
            redirect: set(&[
                "dbo:wikiPageRedirects",
                "http://dbpedia.org/ontology/wikiPageRedirects",
            ]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub iri: Iri,
    pub preferred_label: Option<String>,
    pub alt_labels: BTreeSet<String>,
    pub types: BTreeSet<Iri>,
    pub redirect_to: Option<Iri>,
}

impl EntityRecord {
    pub fn new(iri: Iri) -> Self {
        EntityRecord {
            iri,
            preferred_label: None,
            alt_labels: BTreeSet::new(),
            types: BTreeSet::new(),
            redirect_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub name: String,
    pub language: String,
    pub entities: BTreeMap<Iri, EntityRecord>,
    /// Duplicate-free per (predicate, target); kept sorted.
    pub out_edges: BTreeMap<Iri, BTreeSet<(Iri, Iri)>>,
    /// Non-label literals in the KB language (abstracts, descriptions, ...).
    pub literals: BTreeMap<Iri, BTreeSet<(Iri, String)>>,
    pub predicates: PredicateMap,
}

impl KnowledgeBase {
    pub fn empty(name: impl Into<String>, language: impl Into<String>) -> Self {
        KnowledgeBase {
            name: name.into(),
            language: language.into(),
            entities: BTreeMap::new(),
            out_edges: BTreeMap::new(),
            literals: BTreeMap::new(),
            predicates: PredicateMap::default(),
        }
    }

    pub fn entity(&self, iri: &str) -> Option<&EntityRecord> {
        self.entities.get(&Iri(iri.to_string()))
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.values().map(BTreeSet::len).sum()
    }

    /// Follows redirect links until a non-redirect entity is reached. Cycles
    /// stop at the last entity before the repeat.
    pub fn resolve_redirect<'a>(&'a self, iri: &'a Iri) -> &'a Iri {
        let mut seen = BTreeSet::new();
        let mut current = iri;
        while let Some(next) = self.entities.get(current).and_then(|e| e.redirect_to.as_ref()) {
            if !seen.insert(current) || seen.contains(next) {
                break;
            }
            current = next;
        }
        current
    }

    /// Serializes back to ingestion lines using the first predicate of each
    /// role. Output order is deterministic.
    pub fn to_lines(&self) -> Vec<String> {
        let label = first(&self.predicates.label);
        let type_of = first(&self.predicates.type_of);
        let redirect = first(&self.predicates.redirect);
        let mut lines = Vec::new();
        for (iri, record) in &self.entities {
            for l in &record.alt_labels {
                lines.push(format!(
                    "<{iri}> <{label}> \"{}\"@{}",
                    escape_literal(l),
                    self.language
                ));
            }
            for t in &record.types {
                lines.push(format!("<{iri}> <{type_of}> <{t}>"));
            }
            if let Some(target) = &record.redirect_to {
                lines.push(format!("<{iri}> <{redirect}> <{target}>"));
            }
        }
        for (s, edges) in &self.out_edges {
            for (p, o) in edges {
                lines.push(format!("<{s}> <{p}> <{o}>"));
            }
        }
        for (s, lits) in &self.literals {
            for (p, text) in lits {
                lines.push(format!(
                    "<{s}> <{p}> \"{}\"@{}",
                    escape_literal(text),
                    self.language
                ));
            }
        }
        lines
    }
}

fn first(set: &BTreeSet<String>) -> &str {
    set.iter().next().map(String::as_str).unwrap_or("")
}

pub fn escape_literal(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Reads a whole dump into a [`KnowledgeBase`] using the default predicate map.
pub fn load_kb<R: BufRead>(source: R, language: &str, name: &str) -> Result<KnowledgeBase, KbError> {
    load_kb_with(source, language, name, &PredicateMap::default())
}

pub fn load_kb_with<R: BufRead>(
    source: R,
    language: &str,
    name: &str,
    predicates: &PredicateMap,
) -> Result<KnowledgeBase, KbError> {
    let mut kb = KnowledgeBase::empty(name, language);
    kb.predicates = predicates.clone();
    // Labels are gathered with their language tag so the preferred label can
    // be chosen independently of line order.
    let mut tagged: BTreeMap<Iri, BTreeSet<(bool, String)>> = BTreeMap::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| KbError::Io {
            line: line_no,
            message: e.to_string(),
        })?;
        let Some(triple) = parse_triple_line(&line, line_no)? else {
            continue;
        };
        let Triple {
            subject,
            predicate,
            object,
        } = triple;
        let p = predicate.as_str();
        kb.entities
            .entry(subject.clone())
            .or_insert_with(|| EntityRecord::new(subject.clone()));

        match object {
            Object::Literal { text, lang } => {
                let exact = match lang.as_deref() {
                    None => false,
                    Some(tag) if tag.eq_ignore_ascii_case(language) => true,
                    Some(_) => continue,
                };
                if predicates.label.contains(p) {
                    tagged.entry(subject.clone()).or_default().insert((!exact, text.clone()));
                    kb.entities.get_mut(&subject).unwrap().alt_labels.insert(text);
                } else {
                    kb.literals.entry(subject).or_default().insert((predicate, text));
                }
            }
            Object::Iri(target) => {
                if predicates.type_of.contains(p) {
                    kb.entities.get_mut(&subject).unwrap().types.insert(target);
                    continue;
                }
                if predicates.redirect.contains(p) {
                    if target == subject {
                        return Err(KbError::malformed(line_no, "entity redirects to itself"));
                    }
                    let record = kb.entities.get_mut(&subject).unwrap();
                    match &record.redirect_to {
                        Some(existing) if *existing != target => {
                            return Err(KbError::DuplicateRedirect {
                                line: line_no,
                                subject: subject.to_string(),
                                existing: existing.to_string(),
                                new: target.to_string(),
                            });
                        }
                        _ => record.redirect_to = Some(target.clone()),
                    }
                } else {
                    kb.out_edges
                        .entry(subject)
                        .or_default()
                        .insert((predicate, target.clone()));
                }
                kb.entities
                    .entry(target.clone())
                    .or_insert_with(|| EntityRecord::new(target));
            }
        }
    }

    for (iri, labels) in tagged {
        // (false, _) sorts first: exact-language labels beat untagged ones.
        if let Some((_, label)) = labels.into_iter().next() {
            kb.entities.get_mut(&iri).unwrap().preferred_label = Some(label);
        }
    }
    Ok(kb)
}
