//! Command line: `index`, `link`, `serve`, `eval`.
//!
//! Exit codes: 0 success, 1 bad input (malformed KB line, unbalanced tag,
//! span mismatch, invalid setting), 2 I/O or bundle failure.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::candidates::LinkerConfig;
use crate::eval::{evaluate, parse_documents, parse_gold, EvalError};
use crate::index::{build_indices, persist_bundle, BundleError, ConfigError, IndexConfig};
use crate::kb::{load_kb_with, KbError};
use crate::linker::{Linker, RequestType};
use crate::service::{self, apply_overrides, load_config, ServiceConfig};
use crate::text::TextError;

#[derive(Debug, Parser)]
#[command(name = "entity-linker", version, about = "Build entity-linking indices and link entity mentions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a bundle directory from a triple dump.
    Index {
        /// KB dump in the triple ingestion format.
        kb: PathBuf,
        /// Output bundle directory.
        out: PathBuf,
        /// Index properties file (predicate mapping, class IRIs, acronym seed).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        language: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Link an `<entity>`-tagged text file and print the JSON response.
    Link {
        bundle: PathBuf,
        input: PathBuf,
        #[arg(long = "type", value_enum, default_value_t = OutputType::Agdistis)]
        kind: OutputType,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run the HTTP service.
    Serve {
        /// Bundle directory; defaults to the `bundleDir` setting.
        bundle: Option<PathBuf>,
        #[arg(long)]
        port: Option<String>,
        #[arg(long)]
        bind: Option<String>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Score linking against gold annotations.
    Eval {
        bundle: PathBuf,
        documents: PathBuf,
        gold: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
        format: ReportFormat,
        #[command(flatten)]
        settings: Settings,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputType {
    Agdistis,
    Candidates,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Json,
    Table,
    Both,
}

/// Linker settings; flag names mirror the properties-file keys.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Service properties file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub popularity: Option<String>,
    #[arg(long)]
    pub context: Option<String>,
    #[arg(long)]
    pub acronym: Option<String>,
    #[arg(long = "commonEntities")]
    pub common_entities: Option<String>,
    #[arg(long = "ngramDistance")]
    pub ngram_distance: Option<String>,
    #[arg(long)]
    pub depth: Option<String>,
    #[arg(long = "heuristicExpansion")]
    pub heuristic_expansion: Option<String>,
    #[arg(long = "simThreshold")]
    pub sim_threshold: Option<String>,
    #[arg(long = "maxCandidates")]
    pub max_candidates: Option<String>,
    #[arg(long = "hitsIterations")]
    pub hits_iterations: Option<String>,
    #[arg(long = "pagerankIterations")]
    pub pagerank_iterations: Option<String>,
    #[arg(long)]
    pub damping: Option<String>,
}

impl Settings {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("algorithm", &self.algorithm),
            ("popularity", &self.popularity),
            ("context", &self.context),
            ("acronym", &self.acronym),
            ("commonEntities", &self.common_entities),
            ("ngramDistance", &self.ngram_distance),
            ("depth", &self.depth),
            ("heuristicExpansion", &self.heuristic_expansion),
            ("simThreshold", &self.sim_threshold),
            ("maxCandidates", &self.max_candidates),
            ("hitsIterations", &self.hits_iterations),
            ("pagerankIterations", &self.pagerank_iterations),
            ("damping", &self.damping),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    /// defaults < properties file < `AGD_*` environment < flags
    fn service_config(&self) -> Result<ServiceConfig, CliError> {
        let mut config = load_config(self.config.as_deref(), std::env::vars()).map_err(CliError::from)?;
        config.linker = apply_overrides(&config.linker, self.overrides())?;
        Ok(config)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<KbError> for CliError {
    fn from(e: KbError) -> Self {
        match e {
            KbError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn cmd_index(
    kb_path: &Path,
    out: &Path,
    config_path: Option<&Path>,
    language: Option<&str>,
    name: Option<&str>,
) -> Result<String, CliError> {
    let mut config = match config_path {
        Some(p) => IndexConfig::from_file(p)?,
        None => IndexConfig::default(),
    };
    if let Some(l) = language {
        config.language = l.to_string();
    }
    if let Some(n) = name {
        config.name = n.to_string();
    }
    if config.name.is_empty() {
        config.name = kb_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "kb".into());
    }
    config.built_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let file = File::open(kb_path).map_err(|e| CliError::io(format!("{}: {e}", kb_path.display())))?;
    let kb = load_kb_with(BufReader::new(file), &config.language, &config.name, &config.predicates)
        .map_err(|e| {
            let mut err = CliError::from(e);
            err.message = format!("{}: {}", kb_path.display(), err.message);
            err
        })?;
    let bundle = build_indices(&kb, &config);
    persist_bundle(&bundle, out)?;
    Ok(format!(
        "indexed {} entities, {} edges: {} surface forms, {} person names, {} rare references, {} acronyms, {} context tokens -> {}\n",
        bundle.entity_count(),
        kb.edge_count(),
        bundle.surface.len(),
        bundle.persons.len(),
        bundle.rare.len(),
        bundle.acronyms.len(),
        bundle.context.len(),
        out.display()
    ))
}

/// Returns exactly the body `POST /AGDISTIS` would return.
pub fn cmd_link(bundle: &Path, input: &Path, kind: RequestType, cfg: &LinkerConfig) -> Result<String, CliError> {
    let text = read(input)?;
    let linker = Linker::open(bundle)?;
    linker
        .annotate(&text, kind, cfg)
        .map(|r| r.to_json())
        .map_err(|e: TextError| CliError::input(e.to_string()))
}

pub fn cmd_eval(
    bundle: &Path,
    documents: &Path,
    gold: &Path,
    format: ReportFormat,
    cfg: &LinkerConfig,
) -> Result<String, CliError> {
    let docs = parse_documents(&read(documents)?)?;
    let gold = parse_gold(&read(gold)?)?;
    let linker = Linker::open(bundle)?;
    let report = evaluate(&linker, &docs, &gold, cfg)?;
    Ok(match format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Table => report.to_table(),
        ReportFormat::Both => format!("{}\n\n{}", report.to_json(), report.to_table()),
    })
}

fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Index {
            kb,
            out,
            config,
            language,
            name,
        } => cmd_index(&kb, &out, config.as_deref(), language.as_deref(), name.as_deref()),
        Command::Link {
            bundle,
            input,
            kind,
            settings,
        } => {
            let kind = match kind {
                OutputType::Agdistis => RequestType::Agdistis,
                OutputType::Candidates => RequestType::Candidates,
            };
            cmd_link(&bundle, &input, kind, &settings.service_config()?.linker)
        }
        Command::Serve {
            bundle,
            port,
            bind,
            settings,
        } => {
            let mut config = settings.service_config()?;
            if let Some(p) = port {
                config.set("port", &p)?;
            }
            if let Some(b) = bind {
                config.set("bind", &b)?;
            }
            if let Some(dir) = bundle {
                config.bundle_dir = dir;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(e.to_string()))?;
            runtime
                .block_on(service::serve(config))
                .map_err(|e| CliError::io(e.to_string()))?;
            Ok(String::new())
        }
        Command::Eval {
            bundle,
            documents,
            gold,
            format,
            settings,
        } => cmd_eval(&bundle, &documents, &gold, format, &settings.service_config()?.linker),
    }
}

/// Entry point for the binary.
pub fn run() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
