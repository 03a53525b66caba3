//! Bundle directory layout. Every file is UTF-8, one record per line, fields
//! separated by TAB, records sorted by key in byte order. Backslash, TAB, CR
//! and LF inside fields are written as `\\`, `\t`, `\r`, `\n`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{
    AcronymIndex, BundleMeta, ContextIndex, EntityClasses, EntityGraph, IndexBundle, NodeInfo,
    PopularityMode, PopularityTable, TermIndex, FORMAT_VERSION,
};
use crate::kb::Iri;

pub const BUNDLE_FILES: [&str; 8] = [
    "meta.txt",
    "surface.idx",
    "persons.idx",
    "rare.idx",
    "acronyms.idx",
    "context.idx",
    "popularity.idx",
    "graph.idx",
];

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt bundle file {file}: {reason}")]
    CorruptBundle { file: String, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn corrupt(file: &str, reason: impl Into<String>) -> BundleError {
    BundleError::CorruptBundle {
        file: file.to_string(),
        reason: reason.into(),
    }
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(field: &str) -> Result<String, String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape {other:?}")),
        }
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, lines: impl IntoIterator<Item = String>) -> Result<(), BundleError> {
    let path = dir.join(name);
    let io = |e: std::io::Error| BundleError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = BufWriter::new(fs::File::create(&path).map_err(io)?);
    for line in lines {
        w.write_all(line.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn record<'a>(fields: impl IntoIterator<Item = &'a str>) -> String {
    let mut line = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            line.push('\t');
        }
        line.push_str(&escape(f));
    }
    line
}

fn term_lines(index: &TermIndex) -> Vec<String> {
    index
        .iter()
        .map(|(k, iris)| record(std::iter::once(k).chain(iris.iter().map(Iri::as_str))))
        .collect()
}

/// Writes the bundle into `dir`, creating it if needed.
pub fn persist_bundle(bundle: &IndexBundle, dir: &Path) -> Result<(), BundleError> {
    fs::create_dir_all(dir).map_err(|e| BundleError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;

    let meta = &bundle.meta;
    let mut meta_lines: Vec<String> = [
        ("built_at", meta.built_at.to_string()),
        ("count.acronyms", bundle.acronyms.len().to_string()),
        ("count.context", bundle.context.len().to_string()),
        ("count.entities", bundle.graph.len().to_string()),
        ("count.persons", bundle.persons.len().to_string()),
        ("count.rare", bundle.rare.len().to_string()),
        ("count.surface", bundle.surface.len().to_string()),
        ("format_version", meta.format_version.to_string()),
        ("kb_name", meta.kb_name.clone()),
        ("language", meta.language.clone()),
        ("popularity_mode", bundle.popularity.mode.to_string()),
    ]
    .iter()
    .map(|(k, v)| record([*k, v.as_str()]))
    .collect();
    meta_lines.sort();
    write_file(dir, "meta.txt", meta_lines)?;

    write_file(dir, "surface.idx", term_lines(&bundle.surface))?;
    write_file(dir, "persons.idx", term_lines(&bundle.persons))?;
    write_file(dir, "rare.idx", term_lines(&bundle.rare))?;
    write_file(
        dir,
        "acronyms.idx",
        bundle
            .acronyms
            .iter()
            .map(|(k, exps)| record(std::iter::once(k).chain(exps.iter().map(String::as_str)))),
    )?;
    write_file(
        dir,
        "context.idx",
        bundle.context.iter().map(|(token, postings)| {
            let mut line = escape(token);
            for (iri, tf) in postings {
                let _ = write!(line, "\t{}\t{}", escape(iri.as_str()), tf);
            }
            line
        }),
    )?;
    write_file(
        dir,
        "popularity.idx",
        bundle
            .popularity
            .scores
            .iter()
            .map(|(iri, s)| format!("{}\t{}", escape(iri.as_str()), s)),
    )?;
    write_file(
        dir,
        "graph.idx",
        bundle.graph.nodes.iter().map(|(iri, node)| {
            let classes = node.classes.to_string();
            let redirect = node.redirect_to.as_ref().map(Iri::as_str).unwrap_or("");
            let mut fields = vec![iri.as_str(), classes.as_str(), redirect];
            for (p, o) in &node.edges {
                fields.push(p.as_str());
                fields.push(o.as_str());
            }
            record(fields)
        }),
    )?;
    Ok(())
}

struct Reader {
    file: &'static str,
    lines: Vec<String>,
}

impl Reader {
    fn open(dir: &Path, file: &'static str) -> Result<Self, BundleError> {
        let text = fs::read_to_string(dir.join(file)).map_err(|e| corrupt(file, e.to_string()))?;
        Ok(Reader {
            file,
            lines: text.lines().map(String::from).collect(),
        })
    }

    /// Unescaped fields of each non-empty line, paired with the line number.
    fn records(&self) -> impl Iterator<Item = Result<(usize, Vec<String>), BundleError>> + '_ {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                l.split('\t')
                    .map(unescape)
                    .collect::<Result<Vec<_>, _>>()
                    .map(|f| (i + 1, f))
                    .map_err(|e| corrupt(self.file, format!("line {}: {e}", i + 1)))
            })
    }

    fn err(&self, line: usize, reason: impl std::fmt::Display) -> BundleError {
        corrupt(self.file, format!("line {line}: {reason}"))
    }

    fn iri(&self, line: usize, s: &str) -> Result<Iri, BundleError> {
        Iri::new(s).map_err(|e| self.err(line, e))
    }
}

fn read_terms(dir: &Path, file: &'static str) -> Result<TermIndex, BundleError> {
    let r = Reader::open(dir, file)?;
    let mut index = TermIndex::default();
    for rec in r.records() {
        let (line, fields) = rec?;
        if fields.len() < 2 || fields[0].is_empty() {
            return Err(r.err(line, "expected key and at least one IRI"));
        }
        for f in &fields[1..] {
            index.insert(fields[0].clone(), r.iri(line, f)?);
        }
    }
    Ok(index)
}

pub fn load_bundle(dir: &Path) -> Result<IndexBundle, BundleError> {
    load_bundle_versioned(dir, FORMAT_VERSION)
}

/// Loads a bundle, rejecting any format version other than `expected`.
pub fn load_bundle_versioned(dir: &Path, expected: u32) -> Result<IndexBundle, BundleError> {
    if !dir.is_dir() {
        return Err(BundleError::Io {
            path: dir.display().to_string(),
            message: "bundle directory not found".into(),
        });
    }
    let r = Reader::open(dir, "meta.txt")?;
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    for rec in r.records() {
        let (line, fields) = rec?;
        match <[String; 2]>::try_from(fields) {
            Ok([k, v]) => {
                meta.insert(k, v);
            }
            Err(_) => return Err(r.err(line, "expected key and value")),
        }
    }
    let get = |key: &str| {
        meta.get(key)
            .cloned()
            .ok_or_else(|| corrupt("meta.txt", format!("missing key {key}")))
    };
    let number = |key: &str| -> Result<u64, BundleError> {
        get(key)?
            .parse()
            .map_err(|_| corrupt("meta.txt", format!("{key} is not a number")))
    };
    let found = number("format_version")? as u32;
    if found != expected {
        return Err(BundleError::VersionMismatch { found, expected });
    }
    let bundle_meta = BundleMeta {
        language: get("language")?,
        kb_name: get("kb_name")?,
        built_at: number("built_at")?,
        format_version: found,
    };
    let mode: PopularityMode = get("popularity_mode")?
        .parse()
        .map_err(|e: String| corrupt("meta.txt", e))?;

    let surface = read_terms(dir, "surface.idx")?;
    let persons = read_terms(dir, "persons.idx")?;
    let rare = read_terms(dir, "rare.idx")?;

    let r = Reader::open(dir, "acronyms.idx")?;
    let mut acronyms = AcronymIndex::default();
    for rec in r.records() {
        let (line, fields) = rec?;
        if fields.len() < 2 {
            return Err(r.err(line, "expected acronym and expansions"));
        }
        for exp in &fields[1..] {
            if !acronyms.insert(&fields[0], exp) {
                return Err(r.err(line, format!("invalid acronym entry {:?}", fields[0])));
            }
        }
    }

    let r = Reader::open(dir, "context.idx")?;
    let mut postings = BTreeMap::new();
    for rec in r.records() {
        let (line, fields) = rec?;
        if fields.len() < 3 || fields.len() % 2 == 0 {
            return Err(r.err(line, "expected token followed by (IRI, tf) pairs"));
        }
        let mut list = Vec::with_capacity(fields.len() / 2);
        for pair in fields[1..].chunks(2) {
            let tf: u32 = pair[1].parse().map_err(|_| r.err(line, "bad term frequency"))?;
            if tf == 0 {
                return Err(r.err(line, "term frequency must be positive"));
            }
            list.push((r.iri(line, &pair[0])?, tf));
        }
        list.sort();
        postings.insert(fields[0].clone(), list);
    }
    let context = ContextIndex::from_postings(postings);

    let r = Reader::open(dir, "popularity.idx")?;
    let mut scores = BTreeMap::new();
    for rec in r.records() {
        let (line, fields) = rec?;
        let [iri, score] = <[String; 2]>::try_from(fields).map_err(|_| r.err(line, "expected IRI and score"))?;
        let score: f64 = score.parse().map_err(|_| r.err(line, "bad score"))?;
        if score.is_nan() || score < 0.0 {
            return Err(r.err(line, "negative score"));
        }
        scores.insert(r.iri(line, &iri)?, score);
    }
    let popularity = PopularityTable { mode, scores };

    let r = Reader::open(dir, "graph.idx")?;
    let mut nodes = BTreeMap::new();
    for rec in r.records() {
        let (line, fields) = rec?;
        if fields.len() < 3 || fields.len() % 2 == 0 {
            return Err(r.err(line, "expected IRI, classes, redirect and (predicate, target) pairs"));
        }
        let mut classes = EntityClasses::default();
        if fields[1] != "-" {
            for c in fields[1].split(',') {
                match c {
                    "person" => classes.person = true,
                    "place" => classes.place = true,
                    "organization" => classes.organization = true,
                    other => return Err(r.err(line, format!("unknown class {other:?}"))),
                }
            }
        }
        let redirect_to = match fields[2].as_str() {
            "" => None,
            s => Some(r.iri(line, s)?),
        };
        let mut edges = BTreeSet::new();
        for pair in fields[3..].chunks(2) {
            edges.insert((r.iri(line, &pair[0])?, r.iri(line, &pair[1])?));
        }
        nodes.insert(
            r.iri(line, &fields[0])?,
            NodeInfo {
                classes,
                redirect_to,
                edges,
            },
        );
    }
    let graph = EntityGraph { nodes };

    let bundle = IndexBundle {
        meta: bundle_meta,
        surface,
        persons,
        rare,
        acronyms,
        context,
        popularity,
        graph,
    };
    for (key, actual) in [
        ("count.entities", bundle.graph.len()),
        ("count.surface", bundle.surface.len()),
        ("count.persons", bundle.persons.len()),
        ("count.rare", bundle.rare.len()),
        ("count.acronyms", bundle.acronyms.len()),
        ("count.context", bundle.context.len()),
    ] {
        if number(key)? != actual as u64 {
            return Err(corrupt("meta.txt", format!("{key} does not match index contents")));
        }
    }
    Ok(bundle)
}
