//! Offline phase: compile a [`KnowledgeBase`] into the retrieval indices used
//! at link time and persist them as a bundle directory.

mod config;
mod normalize;
mod persist;
mod popularity;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kb::{Iri, KnowledgeBase};

pub use config::{parse_acronym_seed, ConfigError, IndexConfig};
pub use normalize::{normalize_surface_form, tokenize};
pub use persist::{load_bundle, load_bundle_versioned, persist_bundle, BundleError, BUNDLE_FILES};
pub use popularity::{compute_popularity, PopularityMode, PopularityTable};

pub const FORMAT_VERSION: u32 = 1;

/// Normalized string key to the set of entities it can refer to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermIndex {
    entries: BTreeMap<String, BTreeSet<Iri>>,
}

pub type SurfaceFormIndex = TermIndex;
pub type PersonNameIndex = TermIndex;
pub type RareReferenceIndex = TermIndex;

impl TermIndex {
    pub fn insert(&mut self, key: String, iri: Iri) {
        if key.is_empty() {
            return;
        }
        self.entries.entry(key).or_default().insert(iri);
    }

    pub fn get(&self, key: &str) -> Option<&BTreeSet<Iri>> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<Iri>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Uppercase acronym to the spelled-out labels it stands for.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcronymIndex {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl AcronymIndex {
    /// Returns false (and stores nothing) when `acronym` is not a valid key.
    pub fn insert(&mut self, acronym: &str, expansion: &str) -> bool {
        if !is_acronym_key(acronym) || expansion.trim().is_empty() {
            return false;
        }
        self.entries
            .entry(acronym.to_string())
            .or_default()
            .insert(expansion.to_string());
        true
    }

    pub fn get(&self, acronym: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(acronym)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// 2 to 6 characters, each an uppercase letter or a digit, at least one letter.
pub fn is_acronym_key(s: &str) -> bool {
    let n = s.chars().count();
    (2..=6).contains(&n)
        && s.chars().all(|c| c.is_uppercase() || c.is_ascii_digit())
        && s.chars().any(char::is_uppercase)
}

/// Token postings built from entity abstracts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextIndex {
    postings: BTreeMap<String, Vec<(Iri, u32)>>,
    totals: BTreeMap<Iri, u32>,
}

impl ContextIndex {
    /// `postings` for one token must be sorted by IRI with tf >= 1.
    pub fn from_postings(postings: BTreeMap<String, Vec<(Iri, u32)>>) -> Self {
        let mut totals: BTreeMap<Iri, u32> = BTreeMap::new();
        for list in postings.values() {
            for (iri, tf) in list {
                *totals.entry(iri.clone()).or_default() += tf;
            }
        }
        ContextIndex { postings, totals }
    }

    pub fn postings(&self, token: &str) -> &[(Iri, u32)] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(Iri, u32)])> {
        self.postings.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn total(&self, iri: &Iri) -> u32 {
        self.totals.get(iri).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }
}

/// Coarse entity classes used by the common-entities filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityClasses {
    pub person: bool,
    pub place: bool,
    pub organization: bool,
}

impl EntityClasses {
    pub fn any(&self) -> bool {
        self.person || self.place || self.organization
    }
}

impl fmt::Display for EntityClasses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.person, "person"),
            (self.place, "place"),
            (self.organization, "organization"),
        ]
        .into_iter()
        .filter_map(|(set, name)| set.then_some(name))
        .collect();
        if names.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeInfo {
    pub classes: EntityClasses,
    pub redirect_to: Option<Iri>,
    pub edges: BTreeSet<(Iri, Iri)>,
}

/// Directed entity graph plus the per-node attributes needed online.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityGraph {
    pub nodes: BTreeMap<Iri, NodeInfo>,
}

impl EntityGraph {
    pub fn from_kb(kb: &KnowledgeBase, config: &IndexConfig) -> Self {
        let mut nodes = BTreeMap::new();
        for (iri, record) in &kb.entities {
            let has = |set: &BTreeSet<String>| record.types.iter().any(|t| set.contains(t.as_str()));
            let info = NodeInfo {
                classes: EntityClasses {
                    person: has(&config.person_types),
                    place: has(&config.place_types),
                    organization: has(&config.organization_types),
                },
                redirect_to: record.redirect_to.clone(),
                edges: kb.out_edges.get(iri).cloned().unwrap_or_default(),
            };
            nodes.insert(iri.clone(), info);
        }
        EntityGraph { nodes }
    }

    /// Distinct successor nodes, ignoring predicates.
    pub fn successors<'a>(&'a self, iri: &Iri) -> BTreeSet<&'a Iri> {
        self.nodes
            .get(iri)
            .map(|n| n.edges.iter().map(|(_, t)| t).collect())
            .unwrap_or_default()
    }

    pub fn contains(&self, iri: &Iri) -> bool {
        self.nodes.contains_key(iri)
    }

    pub fn classes(&self, iri: &Iri) -> EntityClasses {
        self.nodes.get(iri).map(|n| n.classes).unwrap_or_default()
    }

    pub fn resolve_redirect<'a>(&'a self, iri: &'a Iri) -> &'a Iri {
        let mut seen = BTreeSet::new();
        let mut current = iri;
        while let Some(next) = self.nodes.get(current).and_then(|n| n.redirect_to.as_ref()) {
            if !seen.insert(current) || seen.contains(next) {
                break;
            }
            current = next;
        }
        current
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node list in IRI order together with index-based adjacency.
    pub fn adjacency(&self) -> (Vec<&Iri>, Vec<Vec<usize>>) {
        let order: Vec<&Iri> = self.nodes.keys().collect();
        let position: BTreeMap<&Iri, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let adj = order
            .iter()
            .map(|iri| {
                self.successors(iri)
                    .into_iter()
                    .filter_map(|t| position.get(t).copied())
                    .collect()
            })
            .collect();
        (order, adj)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleMeta {
    pub language: String,
    pub kb_name: String,
    pub built_at: u64,
    pub format_version: u32,
}

/// Everything produced by the offline phase.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub meta: BundleMeta,
    pub surface: SurfaceFormIndex,
    pub persons: PersonNameIndex,
    pub rare: RareReferenceIndex,
    pub acronyms: AcronymIndex,
    pub context: ContextIndex,
    pub popularity: PopularityTable,
    pub graph: EntityGraph,
}

impl IndexBundle {
    pub fn entity_count(&self) -> usize {
        self.graph.len()
    }
}

/// Builds all sub-indices. Deterministic: identical inputs give identical
/// bundles (the timestamp comes from `config.built_at`).
pub fn build_indices(kb: &KnowledgeBase, config: &IndexConfig) -> IndexBundle {
    let graph = EntityGraph::from_kb(kb, config);
    let live = || kb.entities.values().filter(|e| e.redirect_to.is_none());

    let mut surface = TermIndex::default();
    for entity in live() {
        for label in &entity.alt_labels {
            surface.insert(normalize_surface_form(label), entity.iri.clone());
        }
    }

    let mut persons = TermIndex::default();
    for entity in live().filter(|e| graph.classes(&e.iri).person) {
        for label in &entity.alt_labels {
            for variant in person_name_variants(label) {
                persons.insert(variant, entity.iri.clone());
            }
        }
    }

    let mut rare = TermIndex::default();
    for entity in kb.entities.values() {
        if entity.redirect_to.is_some() {
            let target = kb.resolve_redirect(&entity.iri);
            if target != &entity.iri {
                for label in &entity.alt_labels {
                    rare.insert(normalize_surface_form(label), target.clone());
                }
            }
        }
        let members = kb
            .out_edges
            .get(&entity.iri)
            .into_iter()
            .flatten()
            .filter(|(p, _)| config.disambiguation_predicates.contains(p.as_str()));
        for (_, member) in members {
            let member = kb.resolve_redirect(member);
            let member_labels = kb.entities.get(member).map(|m| &m.alt_labels);
            for label in entity.alt_labels.iter().chain(member_labels.into_iter().flatten()) {
                rare.insert(normalize_surface_form(label), member.clone());
            }
        }
    }

    let mut acronyms = AcronymIndex::default();
    for entity in live() {
        for label in &entity.alt_labels {
            if let Some(initials) = label_initials(label) {
                if entity.alt_labels.contains(&initials) && is_acronym_key(&initials) {
                    acronyms.insert(&initials, label);
                }
            }
        }
    }
    for (acronym, expansion) in &config.acronym_seed {
        acronyms.insert(acronym, expansion);
    }

    let mut postings: BTreeMap<String, BTreeMap<Iri, u32>> = BTreeMap::new();
    for entity in live() {
        let texts = kb
            .literals
            .get(&entity.iri)
            .into_iter()
            .flatten()
            .filter(|(p, _)| config.abstract_predicates.contains(p.as_str()));
        for (_, text) in texts {
            for token in tokenize(text) {
                *postings.entry(token).or_default().entry(entity.iri.clone()).or_default() += 1;
            }
        }
    }
    let context = ContextIndex::from_postings(
        postings
            .into_iter()
            .map(|(t, m)| (t, m.into_iter().collect()))
            .collect(),
    );

    let popularity = compute_popularity(
        &graph,
        config.popularity_mode,
        config.damping,
        config.iterations,
    );

    IndexBundle {
        meta: BundleMeta {
            language: kb.language.clone(),
            kb_name: kb.name.clone(),
            built_at: config.built_at,
            format_version: FORMAT_VERSION,
        },
        surface,
        persons,
        rare,
        acronyms,
        context,
        popularity,
        graph,
    }
}

/// Normalized lookup keys for a person's label: the full name, "Last, First",
/// the last name alone, and first initial plus last name.
pub fn person_name_variants(label: &str) -> Vec<String> {
    let full = normalize_surface_form(label);
    let tokens: Vec<&str> = full.split(' ').filter(|t| !t.is_empty()).collect();
    let mut out = vec![full.clone()];
    if tokens.len() >= 2 {
        let (last, rest) = tokens.split_last().unwrap();
        out.push(normalize_surface_form(&format!("{last}, {}", rest.join(" "))));
        out.push(last.to_string());
        let initial: String = rest[0].chars().take(1).collect();
        out.push(format!("{initial} {last}"));
    }
    out.retain(|v| !v.is_empty());
    out.dedup();
    out
}

/// Uppercased first letters of the label's words, ignoring parenthesised
/// qualifiers and treating hyphens as word separators.
pub fn label_initials(label: &str) -> Option<String> {
    let mut depth = 0usize;
    let mut stripped = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => stripped.push(c),
            _ => {}
        }
    }
    let initials: String = stripped
        .split(|c: char| c.is_whitespace() || matches!(c, '-' | '\u{2010}' | '\u{2011}' | '\u{2013}'))
        .filter_map(|w| w.chars().find(|c| c.is_alphanumeric()))
        .flat_map(char::to_uppercase)
        .collect();
    (initials.chars().count() >= 2).then_some(initials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::load_kb;

    fn kb(src: &str) -> KnowledgeBase {
        load_kb(src.as_bytes(), "en", "test").unwrap()
    }

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn surface_contains_every_label() {
        let k = kb(concat!(
            "<e:NYC> <rdfs:label> \"New York City\"@en\n",
            "<e:NYC> <rdfs:label> \"NY\"@en\n",
            "<e:NYC> <rdfs:label> \"Big Apple\"@en\n",
        ));
        let b = build_indices(&k, &IndexConfig::default());
        assert!(b.surface.get("big apple").unwrap().contains(&iri("e:NYC")));
        assert!(b.surface.get("ny").unwrap().contains(&iri("e:NYC")));
        assert!(b.surface.get("new york city").unwrap().contains(&iri("e:NYC")));
    }

    #[test]
    fn empty_kb_gives_empty_bundle() {
        let b = build_indices(&kb(""), &IndexConfig::default());
        assert!(b.surface.is_empty() && b.persons.is_empty() && b.rare.is_empty());
        assert!(b.acronyms.is_empty() && b.context.is_empty());
        assert!(b.popularity.scores.is_empty() && b.graph.is_empty());
    }

    #[test]
    fn redirect_labels_attach_to_target_in_rare_index() {
        let k = kb(concat!(
            "<e:NYC> <rdfs:label> \"New York City\"@en\n",
            "<e:Gotham> <rdfs:label> \"Gotham\"@en\n",
            "<e:Gotham> <dbo:wikiPageRedirects> <e:NYC>\n",
        ));
        let b = build_indices(&k, &IndexConfig::default());
        assert_eq!(b.rare.get("gotham").unwrap().iter().collect::<Vec<_>>(), vec![&iri("e:NYC")]);
        assert!(b.surface.get("gotham").is_none());
    }

    #[test]
    fn disambiguation_members_populate_rare_index() {
        let k = kb(concat!(
            "<e:Paris_(d)> <rdfs:label> \"Paris (disambiguation)\"@en\n",
            "<e:Paris_(d)> <dbo:wikiPageDisambiguates> <e:Paris_Hilton>\n",
            "<e:Paris_Hilton> <rdfs:label> \"Paris Hilton\"@en\n",
        ));
        let b = build_indices(&k, &IndexConfig::default());
        assert!(b.rare.get("paris hilton").unwrap().contains(&iri("e:Paris_Hilton")));
        assert!(b.rare.get("paris disambiguation").unwrap().contains(&iri("e:Paris_Hilton")));
    }

    #[test]
    fn person_variants() {
        assert_eq!(
            person_name_variants("Barack Obama"),
            vec!["barack obama", "obama barack", "obama", "b obama"]
        );
        assert_eq!(person_name_variants("Madonna"), vec!["madonna"]);
        assert_eq!(
            person_name_variants("Martin Luther King"),
            vec!["martin luther king", "king martin luther", "king", "m king"]
        );
    }

    #[test]
    fn only_people_enter_person_index() {
        let k = kb(concat!(
            "<e:BO> <rdfs:label> \"Barack Obama\"@en\n",
            "<e:BO> <rdf:type> <dbo:Person>\n",
            "<e:OS> <rdfs:label> \"Obama Station\"@en\n",
        ));
        let b = build_indices(&k, &IndexConfig::default());
        assert_eq!(b.persons.get("obama").unwrap().iter().collect::<Vec<_>>(), vec![&iri("e:BO")]);
        assert!(b.persons.get("station").is_none());
    }

    #[test]
    fn initials() {
        assert_eq!(label_initials("Paris Saint-Germain").as_deref(), Some("PSG"));
        assert_eq!(label_initials("New York City (NY)").as_deref(), Some("NYC"));
        assert_eq!(label_initials("Rio"), None);
    }

    #[test]
    fn acronym_harvested_from_all_caps_label() {
        let k = kb(concat!(
            "<e:OM> <rdfs:label> \"Olympique de Marseille\"@en\n",
            "<e:OM> <rdfs:label> \"ODM\"@en\n",
        ));
        let b = build_indices(&k, &IndexConfig::default());
        let exp = b.acronyms.get("ODM").unwrap();
        assert_eq!(exp.iter().collect::<Vec<_>>(), vec!["Olympique de Marseille"]);
    }

    #[test]
    fn acronym_seed_entries_are_added() {
        let k = kb("<e:PSG> <rdfs:label> \"Paris Saint-Germain\"@en\n");
        let config = IndexConfig {
            acronym_seed: vec![("PSG".into(), "Paris Saint-Germain".into())],
            ..IndexConfig::default()
        };
        let b = build_indices(&k, &config);
        assert_eq!(
            b.acronyms.get("PSG").unwrap().iter().collect::<Vec<_>>(),
            vec!["Paris Saint-Germain"]
        );
    }

    #[test]
    fn acronym_keys() {
        assert!(is_acronym_key("PSG"));
        assert!(is_acronym_key("G20"));
        assert!(!is_acronym_key("P"));
        assert!(!is_acronym_key("Psg"));
        assert!(!is_acronym_key("ABCDEFG"));
        assert!(!is_acronym_key("12"));
    }

    #[test]
    fn context_postings_count_terms() {
        let k = kb(concat!(
            "<e:R> <dbo:abstract> \"Beach city, beach life.\"@en\n",
            "<e:S> <dbo:abstract> \"A city.\"@en\n",
        ));
        let b = build_indices(&k, &IndexConfig::default());
        assert_eq!(b.context.postings("beach"), &[(iri("e:R"), 2)]);
        assert_eq!(b.context.postings("city"), &[(iri("e:R"), 1), (iri("e:S"), 1)]);
        assert_eq!(b.context.total(&iri("e:R")), 4);
    }

    #[test]
    fn deterministic() {
        let src = "<a> <p> <b>\n<b> <p> <c>\n<a> <rdfs:label> \"A\"@en\n";
        let config = IndexConfig::default();
        assert_eq!(build_indices(&kb(src), &config), build_indices(&kb(src), &config));
    }
}
