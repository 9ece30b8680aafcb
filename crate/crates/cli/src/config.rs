use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use biosearch::eval::EvalConfig;
use biosearch::pipeline::{ExpansionSettings, ExperimentConfig, RerankSettings, DEFAULT_TOP_N};
use biosearch::rerank::Normalization;
use biosearch::scoring::{Bm25Params, ScorerKind};
use serde::de::value::StrDeserializer;
use serde::de::{DeserializeOwned, IntoDeserializer};
use serde::{Deserialize, Serialize};

/// A mistake in how the tool was invoked or configured.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchDefaults {
    pub scorer: ScorerKind,
    pub c: f64,
    pub bm25: Bm25Params,
    pub top: usize,
    pub tag: String,
    pub expansion: ExpansionSettings,
    pub rerank: RerankSettings,
}

impl Default for SearchDefaults {
    fn default() -> Self {
        SearchDefaults {
            scorer: ScorerKind::Rtrl,
            c: 1.0,
            bm25: Bm25Params::default(),
            top: DEFAULT_TOP_N,
            tag: "biosearch".into(),
            expansion: ExpansionSettings::default(),
            rerank: RerankSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionDefaults {
    pub alpha: f64,
    pub normalization: Normalization,
}

impl Default for FusionDefaults {
    fn default() -> Self {
        FusionDefaults {
            alpha: 0.5,
            normalization: Normalization::MinMax,
        }
    }
}

/// Contents of a `--config` file. Every key is optional; command-line flags
/// take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalConfig {
    pub threads: Option<usize>,
    /// One of error, warn, info, debug, trace.
    pub verbosity: Option<String>,
    /// External classifier command line.
    pub classifier: Option<Vec<String>>,
    pub paths: Paths,
    pub search: SearchDefaults,
    pub fusion: FusionDefaults,
    pub eval: EvalConfig,
    pub experiment: Option<ExperimentConfig>,
}

impl GlobalConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(GlobalConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let config: GlobalConfig =
            toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        if let Some(experiment) = &config.experiment {
            experiment.validate()?;
        }
        Ok(config)
    }
}

/// Parse a flag value with the same spelling its config key uses.
pub fn parse_enum<T: DeserializeOwned>(value: &str) -> Result<T, String> {
    let de: StrDeserializer<'_, serde::de::value::Error> = value.into_deserializer();
    T::deserialize(de).map_err(|e| e.to_string())
}

/// A path from its flag, else from the config file.
pub fn pick_path(flag: &Option<PathBuf>, config: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| config.clone())
}

pub fn require_path(flag: &Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    pick_path(flag, config).ok_or_else(|| usage(format!("missing --{name} (or paths.{name} in the config file)")))
}

#[derive(Serialize)]
struct Provenance<'a, T: Serialize> {
    command: &'a str,
    settings: &'a T,
}

/// `# `-prefixed TOML naming the command and its effective settings.
pub fn provenance_header<T: Serialize>(command: &str, settings: &T) -> Result<String> {
    let body = toml::to_string(&Provenance { command, settings }).context("serializing provenance header")?;
    let mut out = String::new();
    for line in body.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use biosearch::pipeline::ExpansionMode;

    #[test]
    fn partial_config_keeps_defaults() {
        let config: GlobalConfig = toml::from_str(
            r#"
            [paths]
            index = "idx.bin"

            [search]
            c = 1.85
            expansion = { mode = "penalized", k = 25 }
            "#,
        )
        .unwrap();
        assert_eq!(config.paths.index, Some(PathBuf::from("idx.bin")));
        assert_eq!(config.search.c, 1.85);
        assert_eq!(config.search.expansion.mode, ExpansionMode::Penalized);
        assert_eq!(config.search.expansion.loss, ExpansionSettings::default().loss);
        assert_eq!(config.search.top, DEFAULT_TOP_N);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<GlobalConfig>("[search]\nboost = 2.0").is_err());
        assert!(toml::from_str::<GlobalConfig>("colour = true").is_err());
    }

    #[test]
    fn enum_flags_use_config_spelling() {
        assert_eq!(parse_enum::<ScorerKind>("bm25").unwrap(), ScorerKind::Bm25);
        assert_eq!(parse_enum::<Normalization>("minmax").unwrap(), Normalization::MinMax);
        assert!(parse_enum::<ScorerKind>("dfr").is_err());
    }

    #[test]
    fn header_lines_are_comments() {
        let header = provenance_header("search", &SearchDefaults::default()).unwrap();
        assert!(header.lines().all(|l| l.starts_with('#')));
        assert!(header.contains("command = \"search\""));
        assert!(header.contains("scorer = \"rtrl\""));
    }
}
