use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use super::popularity::PopularityMode;
use super::is_acronym_key;
use crate::kb::PredicateMap;
use crate::properties;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid value {value:?} for key {key}")]
    InvalidValue { key: String, value: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("acronym seed line {line}: {reason}")]
    AcronymSeed { line: usize, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, value: &str) -> Self {
        ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
        }
    }
}

/// Offline-phase settings: predicate roles, class IRIs, popularity mode.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexConfig {
    pub language: String,
    pub name: String,
    pub predicates: PredicateMap,
    pub disambiguation_predicates: BTreeSet<String>,
    pub abstract_predicates: BTreeSet<String>,
    pub person_types: BTreeSet<String>,
    pub place_types: BTreeSet<String>,
    pub organization_types: BTreeSet<String>,
    pub popularity_mode: PopularityMode,
    pub damping: f64,
    pub iterations: usize,
    /// (acronym, expansion) pairs from `acronyms.tsv`.
    pub acronym_seed: Vec<(String, String)>,
    /// Seconds since the epoch, recorded in the bundle metadata.
    pub built_at: u64,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            language: "en".into(),
            name: String::new(),
            predicates: PredicateMap::default(),
            disambiguation_predicates: set(&[
                "dbo:wikiPageDisambiguates",
                "http://dbpedia.org/ontology/wikiPageDisambiguates",
            ]),
            abstract_predicates: set(&["dbo:abstract", "http://dbpedia.org/ontology/abstract"]),
            person_types: set(&[
                "dbo:Person",
                "http://dbpedia.org/ontology/Person",
                "foaf:Person",
                "http://xmlns.com/foaf/0.1/Person",
                "schema:Person",
                "http://schema.org/Person",
            ]),
            place_types: set(&[
                "dbo:Place",
                "http://dbpedia.org/ontology/Place",
                "schema:Place",
                "http://schema.org/Place",
            ]),
            organization_types: set(&[
                "dbo:Organisation",
                "http://dbpedia.org/ontology/Organisation",
                "schema:Organization",
                "http://schema.org/Organization",
            ]),
            popularity_mode: PopularityMode::PageRank,
            damping: 0.85,
            iterations: 50,
            acronym_seed: Vec::new(),
            built_at: 0,
        }
    }
}

fn list(value: &str) -> BTreeSet<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl IndexConfig {
    /// Reads a properties file. A relative `acronym.seed` path is resolved
    /// against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_properties(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_properties(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config = IndexConfig::default();
        for (key, value) in properties::parse(text) {
            config.set(&key, &value, base_dir)?;
        }
        Ok(config)
    }

    /// Applies one `key=value` setting. Unknown keys are ignored.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<(), ConfigError> {
        let bad = || ConfigError::invalid(key, value);
        match key {
            "language" if !value.is_empty() => self.language = value.to_string(),
            "name" if !value.is_empty() => self.name = value.to_string(),
            // Extra label predicates add to the defaults.
            "label.predicates" => self.predicates.label.extend(list(value)),
            "type.predicate" => self.predicates.type_of = list(value),
            "redirect.predicate" => self.predicates.redirect = list(value),
            "disambiguation.predicates" => self.disambiguation_predicates = list(value),
            "abstract.predicate" => self.abstract_predicates = list(value),
            "person.types" => self.person_types = list(value),
            "place.types" => self.place_types = list(value),
            "organization.types" => self.organization_types = list(value),
            "popularity.mode" => self.popularity_mode = value.parse().map_err(|_| bad())?,
            "popularity.damping" => {
                let d: f64 = value.parse().map_err(|_| bad())?;
                if !(0.0..1.0).contains(&d) {
                    return Err(bad());
                }
                self.damping = d;
            }
            "popularity.iterations" => {
                let n: usize = value.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                self.iterations = n;
            }
            "acronym.seed" => {
                let path = base_dir.join(value);
                let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                self.acronym_seed = parse_acronym_seed(&text)?;
            }
            "language" | "name" => return Err(bad()),
            _ => log::debug!("ignoring unknown index config key {key}"),
        }
        Ok(())
    }
}

/// Parses `ACRONYM<TAB>expansion` lines; `#` comments and blank lines skipped.
pub fn parse_acronym_seed(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| ConfigError::AcronymSeed {
            line: i + 1,
            reason: reason.to_string(),
        };
        let (acronym, expansion) = line.split_once('\t').ok_or_else(|| err("expected ACRONYM<TAB>expansion"))?;
        let acronym = acronym.trim();
        if !is_acronym_key(acronym) {
            return Err(err("acronym must be 2-6 uppercase letters or digits"));
        }
        let expansion = expansion.trim();
        if expansion.is_empty() {
            return Err(err("empty expansion"));
        }
        out.push((acronym.to_string(), expansion.to_string()));
    }
    Ok(out)
}
