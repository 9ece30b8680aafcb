//! Model configurations and end-to-end runs.
//!
//! A model normalizes each topic, optionally expands it with embedding
//! neighbours, ranks with RTRL or a baseline, and optionally boosts results
//! sharing a category with the topic. Fusion models combine the runs of two
//! earlier models. An [`ExperimentConfig`] lists models in TOML:
//!
//! ```toml
//! top_n = 1000
//! baseline = "tfidf"
//!
//! [[model]]
//! id = "tfidf"
//! scorer = "tfidf"
//!
//! [[model]]
//! id = "rtrl"
//! scorer = "rtrl"
//! c = 1.0
//! rerank = { enabled = true, gain = 0.10, fraction = 0.5 }
//!
//! [[model]]
//! id = "fused"
//! fusion = { model_a = "tfidf", model_b = "rtrl", alpha = 0.5 }
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_run, paired_t_test, EvalConfig, Metric, MetricReport, TTest};
use crate::expansion::{expand_query, ExpansionModel, ExpansionParams, QueryTerm, WeightedQuery};
use crate::index::InvertedIndex;
use crate::ingest::{write_run, CategoryLexicon, EmbeddingTable, JudgmentSet, RankedList, TopicQuery};
use crate::rerank::{boost, classify_query, fuse_runs, BoostParams, DocumentClassifier, FusionConfig, LexiconClassifier, Normalization};
use crate::scoring::{baseline_rank, rtrl_rank, BaselineVariant, Bm25Params, RtrlConfig, ScorerKind};

pub const DEFAULT_TOP_N: usize = 1000;

const OFFICIAL_PRESET: &str = include_str!("../presets/official.toml");
const CROSS_VALIDATION_PRESET: &str = include_str!("../presets/cross_validation.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMode {
    #[default]
    None,
    Uniform,
    Penalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionSettings {
    pub mode: ExpansionMode,
    pub k: usize,
    pub loss: f64,
}

impl Default for ExpansionSettings {
    fn default() -> Self {
        let params = ExpansionParams::default();
        ExpansionSettings {
            mode: ExpansionMode::None,
            k: params.k,
            loss: params.loss,
        }
    }
}

impl ExpansionSettings {
    fn params(&self) -> Option<ExpansionParams> {
        let model = match self.mode {
            ExpansionMode::None => return None,
            ExpansionMode::Uniform => ExpansionModel::Uniform,
            ExpansionMode::Penalized => ExpansionModel::Penalized,
        };
        Some(ExpansionParams {
            k: self.k,
            model,
            loss: self.loss,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RerankSettings {
    pub enabled: bool,
    pub gain: f64,
    pub fraction: f64,
}

impl Default for RerankSettings {
    fn default() -> Self {
        let params = BoostParams::default();
        RerankSettings {
            enabled: false,
            gain: params.gain,
            fraction: params.fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSettings {
    pub model_a: String,
    pub model_b: String,
    pub alpha: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub id: String,
    #[serde(default = "default_scorer")]
    pub scorer: ScorerKind,
    /// Key-relevant boost of the RTRL scorer.
    #[serde(default = "default_boost")]
    pub c: f64,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub expansion: ExpansionSettings,
    #[serde(default)]
    pub rerank: RerankSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionSettings>,
}

fn default_scorer() -> ScorerKind {
    ScorerKind::Rtrl
}

fn default_boost() -> f64 {
    1.0
}

impl ModelConfig {
    /// A plain model: the given scorer, no expansion, no re-ranking.
    pub fn plain(id: impl Into<String>, scorer: ScorerKind) -> Self {
        ModelConfig {
            id: id.into(),
            scorer,
            c: default_boost(),
            bm25: Bm25Params::default(),
            expansion: ExpansionSettings::default(),
            rerank: RerankSettings::default(),
            fusion: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("model `{}`: {msg}", self.id)));
        if let Some(f) = &self.fusion {
            if !(0.0..=1.0).contains(&f.alpha) {
                return fail(format!("alpha {} outside [0, 1]", f.alpha));
            }
            return Ok(());
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return fail(format!("c must be ≥ 1, got {}", self.c));
        }
        if self.expansion.mode == ExpansionMode::Penalized && !(self.expansion.loss > 0.0 && self.expansion.loss <= 1.0) {
            return fail(format!("loss {} outside (0, 1]", self.expansion.loss));
        }
        if self.rerank.enabled {
            let params = BoostParams {
                gain: self.rerank.gain,
                fraction: self.rerank.fraction,
            };
            if let Err(e) = params.validate() {
                return fail(e.to_string());
            }
        }
        if self.scorer == ScorerKind::Bm25 && !(self.bm25.k1 >= 0.0 && (0.0..=1.0).contains(&self.bm25.b)) {
            return fail("bm25 needs k1 ≥ 0 and b in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    /// Model the others are tested against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(rename = "model")]
    pub models: Vec<ModelConfig>,
}

fn default_top_n() -> usize {
    DEFAULT_TOP_N
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Parameters of the official submission run.
    pub fn official() -> Self {
        Self::from_toml(OFFICIAL_PRESET).expect("bundled preset is valid")
    }

    /// Parameters re-tuned by 5-fold cross-validation.
    pub fn cross_validation() -> Self {
        Self::from_toml(CROSS_VALIDATION_PRESET).expect("bundled preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "official" => Ok(Self::official()),
            "cross_validation" | "cross-validation" => Ok(Self::cross_validation()),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn model(&self, id: &str) -> Option<&ModelConfig> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::Config("top_n must be positive".into()));
        }
        self.eval.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        let mut plain = HashSet::new();
        let mut seen = HashSet::new();
        for model in &self.models {
            if !seen.insert(model.id.as_str()) {
                return Err(Error::Duplicate {
                    kind: "model",
                    id: model.id.clone(),
                });
            }
            model.validate()?;
            match &model.fusion {
                Some(f) => {
                    for part in [&f.model_a, &f.model_b] {
                        if !plain.contains(part.as_str()) {
                            return Err(Error::Config(format!(
                                "fusion model `{}` must reference an earlier non-fusion model, got `{part}`",
                                model.id
                            )));
                        }
                    }
                }
                None => {
                    plain.insert(model.id.as_str());
                }
            }
        }
        if let Some(b) = &self.baseline {
            if !seen.contains(b.as_str()) {
                return Err(Error::Config(format!("baseline `{b}` is not a configured model")));
            }
        }
        Ok(())
    }

    /// The effective configuration as `# `-prefixed TOML lines.
    pub fn provenance_header(&self) -> String {
        let body = toml::to_string(self).expect("configuration serializes");
        let mut out = String::new();
        for line in body.lines() {
            let _ = writeln!(out, "# {line}");
        }
        out
    }
}

/// Shared read-only inputs of a run.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub index: &'a InvertedIndex,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub lexicon: &'a CategoryLexicon,
    /// Dataset classifier for re-ranking; the lexicon matcher when absent.
    pub classifier: Option<&'a dyn DocumentClassifier>,
}

impl<'a> Resources<'a> {
    pub fn new(index: &'a InvertedIndex, lexicon: &'a CategoryLexicon) -> Self {
        Resources {
            index,
            embeddings: None,
            lexicon,
            classifier: None,
        }
    }

    pub fn with_embeddings(mut self, embeddings: &'a EmbeddingTable) -> Self {
        self.embeddings = Some(embeddings);
        self
    }

    pub fn with_classifier(mut self, classifier: &'a dyn DocumentClassifier) -> Self {
        self.classifier = Some(classifier);
        self
    }
}

/// The weighted query a model ranks with.
pub fn build_query(cfg: &ModelConfig, resources: &Resources<'_>, text: &str) -> Result<WeightedQuery> {
    let tokens = resources.index.analyzer().analyze(text);
    match cfg.expansion.params() {
        None => {
            let terms: Vec<String> = tokens.into_iter().map(|t| t.term).collect();
            Ok(WeightedQuery::from_terms(&terms, resources.index))
        }
        Some(params) => {
            let table = resources
                .embeddings
                .ok_or_else(|| Error::Config(format!("model `{}` expands queries but no embeddings were loaded", cfg.id)))?;
            let terms: Vec<QueryTerm> = tokens.into_iter().map(QueryTerm::from).collect();
            expand_query(&terms, table, resources.index, &params)
        }
    }
}

fn run_query(cfg: &ModelConfig, resources: &Resources<'_>, query: &TopicQuery, top_n: usize) -> Result<RankedList> {
    let weighted = build_query(cfg, resources, &query.text)?;
    if weighted.is_empty() {
        log::warn!("topic `{}` has no terms after normalization", query.topic_id);
        return Ok(RankedList::from_ordered(query.topic_id.clone(), cfg.id.clone(), Vec::new()));
    }
    let ranked = match cfg.scorer {
        ScorerKind::Rtrl => {
            let rtrl = RtrlConfig::with_boost(cfg.c)?;
            rtrl_rank(&query.topic_id, &cfg.id, &weighted, resources.index, &rtrl, top_n)?
        }
        ScorerKind::Tfidf => baseline_rank(&query.topic_id, &cfg.id, &weighted, resources.index, BaselineVariant::Tfidf, top_n)?,
        ScorerKind::Bm25 => baseline_rank(
            &query.topic_id,
            &cfg.id,
            &weighted,
            resources.index,
            BaselineVariant::Bm25(cfg.bm25),
            top_n,
        )?,
    };
    if !cfg.rerank.enabled {
        return Ok(ranked);
    }
    let categories = classify_query(&query.text, resources.lexicon).categories;
    let params = BoostParams {
        gain: cfg.rerank.gain,
        fraction: cfg.rerank.fraction,
    };
    let fallback = LexiconClassifier {
        lexicon: resources.lexicon,
    };
    let classifier = resources.classifier.unwrap_or(&fallback);
    boost(&ranked, &categories, resources.index, classifier, params)
}

/// Run a non-fusion model over every query, in query order.
pub fn run_model(cfg: &ModelConfig, resources: &Resources<'_>, queries: &[TopicQuery], top_n: usize) -> Result<Vec<RankedList>> {
    if cfg.fusion.is_some() {
        return Err(Error::Config(format!(
            "model `{}` fuses other models; run it through run_models",
            cfg.id
        )));
    }
    if top_n == 0 {
        return Err(Error::param("top_n must be positive"));
    }
    cfg.validate()?;
    if cfg.expansion.mode != ExpansionMode::None && resources.embeddings.is_none() {
        return Err(Error::Config(format!(
            "model `{}` expands queries but no embeddings were loaded",
            cfg.id
        )));
    }
    queries.par_iter().map(|q| run_query(cfg, resources, q, top_n)).collect()
}

/// Run every model of `config` in order. Fusion models combine earlier outputs.
pub fn run_models(config: &ExperimentConfig, resources: &Resources<'_>, queries: &[TopicQuery]) -> Result<Vec<(String, Vec<RankedList>)>> {
    config.validate()?;
    for model in &config.models {
        if model.fusion.is_none() && model.expansion.mode != ExpansionMode::None && resources.embeddings.is_none() {
            return Err(Error::Config(format!(
                "model `{}` expands queries but no embeddings were loaded",
                model.id
            )));
        }
    }
    let mut outputs: Vec<(String, Vec<RankedList>)> = Vec::new();
    for model in &config.models {
        log::info!("running model `{}`", model.id);
        let lists = match &model.fusion {
            None => run_model(model, resources, queries, config.top_n)?,
            Some(f) => {
                let find = |id: &str| {
                    outputs
                        .iter()
                        .find(|(m, _)| m == id)
                        .map(|(_, l)| l)
                        .expect("validated reference")
                };
                let cfg = FusionConfig {
                    alpha: f.alpha,
                    normalization: f.normalization,
                };
                let mut fused = fuse_runs(find(&f.model_a), find(&f.model_b), cfg, &model.id)?;
                fused.iter_mut().for_each(|l| l.truncate(config.top_n));
                fused
            }
        };
        outputs.push((model.id.clone(), lists));
    }
    Ok(outputs)
}

/// Outcome of testing one model against the baseline on one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Significance {
    Tested(TTest),
    /// The per-topic differences have zero variance.
    NoDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub model: String,
    pub metric: Metric,
    pub outcome: Significance,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<(String, Vec<RankedList>)>,
    pub reports: Vec<(String, MetricReport)>,
    pub significance: Vec<SignificanceRow>,
}

/// Run all models, evaluate them and test each against the baseline.
pub fn run_experiment(
    config: &ExperimentConfig,
    resources: &Resources<'_>,
    queries: &[TopicQuery],
    qrels: &JudgmentSet,
) -> Result<ExperimentReport> {
    let runs = run_models(config, resources, queries)?;
    let reports = runs
        .iter()
        .map(|(id, lists)| Ok((id.clone(), evaluate_run(lists, qrels, &config.eval)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut significance = Vec::new();
    if let Some(baseline) = &config.baseline {
        let base = &reports.iter().find(|(id, _)| id == baseline).expect("validated baseline").1;
        for (id, report) in reports.iter().filter(|(id, _)| id != baseline) {
            for metric in Metric::ALL {
                let outcome = match paired_t_test(&report.values(metric), &base.values(metric)) {
                    Ok(t) => Significance::Tested(t),
                    Err(Error::Undefined(_)) => Significance::NoDifference,
                    Err(e) => return Err(e),
                };
                significance.push(SignificanceRow {
                    model: id.clone(),
                    metric,
                    outcome,
                });
            }
        }
    }
    Ok(ExperimentReport {
        config: config.clone(),
        runs,
        reports,
        significance,
    })
}

impl ExperimentReport {
    /// Mean of every metric per model, followed by the significance tests.
    pub fn summary(&self) -> String {
        let k = self.config.eval.k;
        let mut out = self.config.provenance_header();
        let width = self.reports.iter().map(|(id, _)| id.len()).max().unwrap_or(5).max(5);
        let _ = write!(out, "{:<width$}", "model");
        for metric in Metric::ALL {
            let _ = write!(out, "  {:>16}", metric.label(k));
        }
        out.push('\n');
        for (id, report) in &self.reports {
            let _ = write!(out, "{id:<width$}");
            for metric in Metric::ALL {
                let _ = write!(out, "  {:>16.4}", report.mean(metric));
            }
            out.push('\n');
        }
        if let Some(baseline) = &self.config.baseline {
            let _ = writeln!(out, "\npaired t-test against `{baseline}` (two-tailed)");
            for row in &self.significance {
                let label = row.metric.label(k);
                match row.outcome {
                    Significance::Tested(t) => {
                        let _ = writeln!(out, "{:<width$}  {label:<16}  t = {:>9.4}  p = {:.4}", row.model, t.t, t.p);
                    }
                    Significance::NoDifference => {
                        let _ = writeln!(out, "{:<width$}  {label:<16}  no difference", row.model);
                    }
                }
            }
        }
        out
    }

    /// Write `runs/<model>.run`, `metrics/<model>.csv` and `summary.txt` under `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("runs"))?;
        fs::create_dir_all(dir.join("metrics"))?;
        let header = self.config.provenance_header();
        for (id, lists) in &self.runs {
            let mut bytes = header.clone().into_bytes();
            write_run(&mut bytes, lists)?;
            fs::write(dir.join("runs").join(format!("{}.run", file_stem(id))), bytes)?;
        }
        for (id, report) in &self.reports {
            let mut bytes = header.clone().into_bytes();
            report.write_csv(&mut bytes)?;
            fs::write(dir.join("metrics").join(format!("{}.csv", file_stem(id))), bytes)?;
        }
        fs::write(dir.join("summary.txt"), self.summary())?;
        Ok(())
    }
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Split topics into `folds` disjoint groups after a seeded shuffle. Group
/// sizes differ by at most one.
pub fn kfold_topics<S: AsRef<str>>(topics: &[S], folds: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if folds == 0 || folds > topics.len() {
        return Err(Error::param(format!(
            "cannot split {} topics into {folds} folds",
            topics.len()
        )));
    }
    let mut shuffled: Vec<String> = topics.iter().map(|t| t.as_ref().to_string()).collect();
    shuffled.sort();
    shuffled.dedup();
    if shuffled.len() != topics.len() {
        return Err(Error::param("topic ids must be unique"));
    }
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut groups = vec![Vec::new(); folds];
    for (i, topic) in shuffled.into_iter().enumerate() {
        groups[i % folds].push(topic);
    }
    groups.iter_mut().for_each(|g| g.sort());
    Ok(groups)
}

/// Restrict a report to the given topics, e.g. the test topics of one fold.
pub fn restrict_report(report: &MetricReport, topics: &[String]) -> MetricReport {
    let keep: HashSet<&str> = topics.iter().map(String::as_str).collect();
    MetricReport {
        k: report.k,
        topics: report
            .topics
            .iter()
            .filter(|t| keep.contains(t.topic_id.as_str()))
            .cloned()
            .collect(),
        excluded: report.excluded.iter().filter(|t| keep.contains(t.as_str())).cloned().collect(),
    }
}

/// Model outputs keyed by model id.
pub fn runs_by_model(runs: &[(String, Vec<RankedList>)]) -> BTreeMap<&str, &[RankedList]> {
    runs.iter().map(|(id, l)| (id.as_str(), l.as_slice())).collect()
}

/// Lists keyed by topic id.
pub fn lists_by_topic(lists: &[RankedList]) -> HashMap<&str, &RankedList> {
    lists.iter().map(|l| (l.topic_id.as_str(), l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_tuned_values() {
        let official = ExperimentConfig::official();
        let m2 = official.model("sibtex-2").unwrap();
        assert_eq!((m2.expansion.mode, m2.expansion.k, m2.rerank.gain), (ExpansionMode::Uniform, 10, 0.10));
        let m3 = official.model("sibtex-3").unwrap();
        assert_eq!((m3.expansion.mode, m3.expansion.loss), (ExpansionMode::Penalized, 0.01));
        assert_eq!(official.model("sibtex-4").unwrap().c, 1.0);
        assert_eq!(official.model("sibtex-5").unwrap().fusion.as_ref().unwrap().alpha, 0.5);

        let cv = ExperimentConfig::cross_validation();
        let m3 = cv.model("sibtex-3").unwrap();
        assert_eq!((m3.expansion.k, m3.expansion.loss, m3.rerank.gain), (25, 0.05, 0.01));
        let m4 = cv.model("sibtex-4").unwrap();
        assert_eq!((m4.c, m4.rerank.gain), (1.85, 0.02));
        assert_eq!(cv.model("sibtex-5").unwrap().fusion.as_ref().unwrap().alpha, 0.7);
        assert_eq!(cv.baseline.as_deref(), Some("sibtex-1"));
        assert!(ExperimentConfig::preset("nope").is_err());
    }

    #[test]
    fn config_validation() {
        let forward = r#"
[[model]]
id = "f"
fusion = { model_a = "a", model_b = "b", alpha = 0.5 }

[[model]]
id = "a"
"#;
        assert!(matches!(ExperimentConfig::from_toml(forward), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("[[model]]\nid = \"a\"\nspeed = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[[model]]\nid = \"a\"\nc = 0.5\n").is_err());
        assert!(ExperimentConfig::from_toml("[[model]]\nid = \"a\"\n[[model]]\nid = \"a\"\n").is_err());
        assert!(ExperimentConfig::from_toml("baseline = \"z\"\n[[model]]\nid = \"a\"\n").is_err());
        let ok = ExperimentConfig::from_toml("[[model]]\nid = \"a\"\nbm25 = { k1 = 0.9 }\n").unwrap();
        assert_eq!(ok.models[0].bm25.b, 0.75);
        assert_eq!(ok.top_n, DEFAULT_TOP_N);
    }

    #[test]
    fn provenance_round_trips() {
        let config = ExperimentConfig::official();
        let header = config.provenance_header();
        assert!(header.lines().all(|l| l.starts_with('#')));
        let body: String = header.lines().map(|l| format!("{}\n", l.trim_start_matches('#').trim_start())).collect();
        assert_eq!(ExperimentConfig::from_toml(&body).unwrap(), config);
    }

    #[test]
    fn kfold_is_seeded_partition() {
        let topics: Vec<String> = (1..=15).map(|i| format!("T{i}")).collect();
        let folds = kfold_topics(&topics, 5, 42).unwrap();
        assert_eq!(folds, kfold_topics(&topics, 5, 42).unwrap());
        assert!(folds.iter().all(|f| f.len() == 3));
        let mut all: Vec<String> = folds.concat();
        all.sort();
        let mut expected = topics.clone();
        expected.sort();
        assert_eq!(all, expected);
        assert!(kfold_topics(&topics, 0, 1).is_err());
        assert!(kfold_topics(&topics[..2], 3, 1).is_err());
    }
}
