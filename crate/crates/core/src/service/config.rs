use std::path::{Path, PathBuf};

use crate::candidates::LinkerConfig;
use crate::index::ConfigError;
use crate::properties;

pub const ENV_PREFIX: &str = "AGD_";

/// Keys that tune linking; all of them may also be overridden per request.
pub const LINKER_KEYS: [&str; 13] = [
    "algorithm",
    "popularity",
    "context",
    "acronym",
    "commonEntities",
    "ngramDistance",
    "depth",
    "heuristicExpansion",
    "simThreshold",
    "maxCandidates",
    "hitsIterations",
    "pagerankIterations",
    "damping",
];

pub const SERVICE_KEYS: [&str; 4] = ["port", "bind", "bundleDir", "maxRequestBytes"];

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub linker: LinkerConfig,
    pub bind: String,
    pub port: u16,
    pub bundle_dir: PathBuf,
    pub max_request_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            linker: LinkerConfig::default(),
            bind: "127.0.0.1".into(),
            port: 8080,
            bundle_dir: PathBuf::from("index"),
            max_request_bytes: 1 << 20,
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::invalid(key, value)),
    }
}

fn parse_int(key: &str, value: &str, min: i64, max: i64) -> Result<i64, ConfigError> {
    value
        .trim()
        .parse::<i64>()
        .ok()
        .filter(|n| (min..=max).contains(n))
        .ok_or_else(|| ConfigError::invalid(key, value))
}

fn parse_unit(key: &str, value: &str, upper_inclusive: bool) -> Result<f64, ConfigError> {
    let x: f64 = value.trim().parse().map_err(|_| ConfigError::invalid(key, value))?;
    let ok = x >= 0.0 && if upper_inclusive { x <= 1.0 } else { x < 1.0 };
    if ok {
        Ok(x)
    } else {
        Err(ConfigError::invalid(key, value))
    }
}

/// Applies one linker setting. Returns `Ok(false)` for keys that are not
/// linker settings.
pub fn set_linker_key(cfg: &mut LinkerConfig, key: &str, value: &str) -> Result<bool, ConfigError> {
    const BIG: i64 = 1 << 32;
    match key {
        "algorithm" => cfg.algorithm = value.parse().map_err(|_| ConfigError::invalid(key, value))?,
        "popularity" => cfg.popularity = parse_bool(key, value)?,
        "context" => cfg.context = parse_bool(key, value)?,
        "acronym" => cfg.acronym = parse_bool(key, value)?,
        "commonEntities" => cfg.common_entities = parse_bool(key, value)?,
        "heuristicExpansion" => cfg.heuristic_expansion = parse_bool(key, value)?,
        "ngramDistance" => cfg.ngram_distance = parse_int(key, value, 2, 64)? as usize,
        "depth" => cfg.depth = parse_int(key, value, 0, 64)? as usize,
        "maxCandidates" => cfg.max_candidates = parse_int(key, value, 1, BIG)? as usize,
        "hitsIterations" => cfg.hits_iterations = parse_int(key, value, 1, BIG)? as usize,
        "pagerankIterations" => cfg.pagerank_iterations = parse_int(key, value, 1, BIG)? as usize,
        "simThreshold" => cfg.sim_threshold = parse_unit(key, value, true)?,
        "damping" => cfg.damping = parse_unit(key, value, false)?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl ServiceConfig {
    /// Applies one setting; unknown keys are ignored.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if set_linker_key(&mut self.linker, key, value)? {
            return Ok(());
        }
        match key {
            "port" => self.port = parse_int(key, value, 1, 65535)? as u16,
            "bind" if !value.trim().is_empty() => self.bind = value.trim().to_string(),
            "bundleDir" if !value.trim().is_empty() => self.bundle_dir = PathBuf::from(value.trim()),
            "maxRequestBytes" => self.max_request_bytes = parse_int(key, value, 1, 1 << 40)? as usize,
            "bind" | "bundleDir" => return Err(ConfigError::invalid(key, value)),
            _ => log::debug!("ignoring unknown config key {key}"),
        }
        Ok(())
    }
}

/// The configuration key an environment variable maps to, if any.
pub fn env_key(var: &str) -> Option<&'static str> {
    let suffix = var.strip_prefix(ENV_PREFIX)?;
    LINKER_KEYS
        .iter()
        .chain(SERVICE_KEYS.iter())
        .find(|k| k.to_ascii_uppercase() == suffix)
        .copied()
}

/// Defaults, then the properties file (if any), then `AGD_*` variables from
/// `env`. Per-request overrides are applied later by the caller.
pub fn load_config<I>(path: Option<&Path>, env: I) -> Result<ServiceConfig, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut config = ServiceConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for (key, value) in properties::parse(&text) {
            config.set(&key, &value)?;
        }
    }
    let mut from_env: Vec<(&str, String)> = env
        .into_iter()
        .filter_map(|(var, value)| env_key(&var).map(|k| (k, value)))
        .collect();
    from_env.sort();
    for (key, value) in from_env {
        config.set(key, &value)?;
    }
    Ok(config)
}

/// Applies `key=value` overrides, ignoring keys that are not linker settings.
pub fn apply_overrides<'a, I>(base: &LinkerConfig, overrides: I) -> Result<LinkerConfig, ConfigError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut cfg = base.clone();
    for (key, value) in overrides {
        set_linker_key(&mut cfg, key, value)?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::Algorithm;
    use std::io::Write;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    fn props(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_table() {
        let c = load_config(None, no_env()).unwrap();
        let l = &c.linker;
        assert_eq!(l.algorithm, Algorithm::Hits);
        assert_eq!(l.depth, 2);
        assert_eq!(l.ngram_distance, 3);
        assert!(!l.popularity && !l.context && !l.acronym && !l.common_entities);
        assert!(l.heuristic_expansion);
        assert_eq!(l.sim_threshold, 0.82);
        assert_eq!(l.max_candidates, 100);
        assert_eq!((l.hits_iterations, l.pagerank_iterations, l.damping), (20, 50, 0.85));
        assert_eq!(c.port, 8080);
    }

    #[test]
    fn env_beats_file() {
        let f = props("algorithm=pagerank\ndepth=3\n");
        let env = vec![("AGD_ALGORITHM".to_string(), "hits".to_string()), ("HOME".into(), "/".into())];
        let c = load_config(Some(f.path()), env).unwrap();
        assert_eq!(c.linker.algorithm, Algorithm::Hits);
        assert_eq!(c.linker.depth, 3);
    }

    #[test]
    fn file_beats_defaults() {
        let f = props("algorithm=pagerank\ncommonEntities=true\nport=9000\nbundleDir=/tmp/b\n");
        let c = load_config(Some(f.path()), no_env()).unwrap();
        assert_eq!(c.linker.algorithm, Algorithm::PageRank);
        assert!(c.linker.common_entities);
        assert_eq!(c.port, 9000);
        assert_eq!(c.bundle_dir, PathBuf::from("/tmp/b"));
    }

    #[test]
    fn invalid_values_name_the_key() {
        for (text, key) in [
            ("depth=-1", "depth"),
            ("ngramDistance=1", "ngramDistance"),
            ("popularity=yes", "popularity"),
            ("simThreshold=1.5", "simThreshold"),
            ("port=0", "port"),
            ("port=70000", "port"),
            ("algorithm=random", "algorithm"),
        ] {
            let f = props(text);
            match load_config(Some(f.path()), no_env()) {
                Err(ConfigError::InvalidValue { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{text}: {other:?}"),
            }
        }
        let err = load_config(None, vec![("AGD_DEPTH".to_string(), "x".to_string())]).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { key, .. } if key == "depth"));
    }

    #[test]
    fn env_names() {
        assert_eq!(env_key("AGD_NGRAMDISTANCE"), Some("ngramDistance"));
        assert_eq!(env_key("AGD_BUNDLEDIR"), Some("bundleDir"));
        assert_eq!(env_key("AGD_NOPE"), None);
        assert_eq!(env_key("DEPTH"), None);
    }

    #[test]
    fn overrides() {
        let base = LinkerConfig::default();
        let c = apply_overrides(&base, [("acronym", "true"), ("depth", "0"), ("port", "1")]).unwrap();
        assert!(c.acronym);
        assert_eq!(c.depth, 0);
        assert!(apply_overrides(&base, [("depth", "deep")]).is_err());
    }
}
