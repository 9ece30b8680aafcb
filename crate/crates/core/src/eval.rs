//! Retrieval evaluation.
//!
//! Relevance is graded 0/1/2; a qrels grade of −1 marks a pooled document that
//! was not sampled for judging. Documents absent from the qrels are unjudged
//! too. [`UnjudgedMode`] decides how unjudged documents count in the
//! precision, AP and NDCG family. The inferred measures (infAP, infNDCG)
//! always rely on inclusion probabilities instead.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ingest::{Grade, Judgment, JudgmentSet, RankedList};

/// Which grades count as relevant for binary measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartialMode {
    /// Grades 1 and 2.
    #[default]
    Plus,
    /// Grade 2 only.
    Minus,
}

impl PartialMode {
    pub fn is_relevant(self, grade: Grade) -> bool {
        match self {
            PartialMode::Plus => grade >= Grade::PartiallyRelevant,
            PartialMode::Minus => grade == Grade::Relevant,
        }
    }
}

impl FromStr for PartialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(PartialMode::Plus),
            "minus" => Ok(PartialMode::Minus),
            other => Err(Error::param(format!("partial mode must be plus or minus, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnjudgedMode {
    /// Gain −1 in NDCG, not relevant for precision and AP.
    #[default]
    Official,
    /// Treated exactly like a judged non-relevant document.
    NonRel,
    /// Dropped from the ranking before cutting at `k`.
    Remove,
}

impl FromStr for UnjudgedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "official" => Ok(UnjudgedMode::Official),
            "nonrel" => Ok(UnjudgedMode::NonRel),
            "remove" => Ok(UnjudgedMode::Remove),
            other => Err(Error::param(format!(
                "unjudged mode must be official, nonrel or remove, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub k: usize,
    pub partial: PartialMode,
    pub unjudged: UnjudgedMode,
    /// NDCG gains of grades 0, 1 and 2.
    pub gains: [f64; 3],
    /// Smoothing constant of the infAP estimator.
    pub inf_epsilon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 10,
            partial: PartialMode::Plus,
            unjudged: UnjudgedMode::Official,
            gains: [0.0, 1.0, 2.0],
            inf_epsilon: 1e-5,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("cutoff k must be at least 1"));
        }
        if !(self.inf_epsilon > 0.0 && self.inf_epsilon.is_finite()) {
            return Err(Error::param("infAP epsilon must be positive"));
        }
        Ok(())
    }

    fn gain(&self, grade: Grade) -> f64 {
        match grade {
            Grade::Unjudged => match self.unjudged {
                UnjudgedMode::Official => -1.0,
                UnjudgedMode::NonRel | UnjudgedMode::Remove => 0.0,
            },
            Grade::NonRelevant => self.gains[0],
            Grade::PartiallyRelevant => self.gains[1],
            Grade::Relevant => self.gains[2],
        }
    }
}

/// Judgments of one topic.
pub type TopicJudgments = BTreeMap<String, Judgment>;

fn grade_of(judgments: &TopicJudgments, doc: &str) -> Grade {
    judgments.get(doc).map_or(Grade::Unjudged, |j| j.grade)
}

/// Grades of the ranking in rank order, with unjudged documents removed
/// under [`UnjudgedMode::Remove`].
fn graded_ranking(list: &RankedList, judgments: &TopicJudgments, mode: UnjudgedMode) -> Vec<Grade> {
    list.doc_ids()
        .map(|d| grade_of(judgments, d))
        .filter(|g| mode != UnjudgedMode::Remove || g.is_judged())
        .collect()
}

fn relevant_count(judgments: &TopicJudgments, partial: PartialMode) -> usize {
    judgments.values().filter(|j| partial.is_relevant(j.grade)).count()
}

/// Fraction of the first `k` positions holding a relevant document.
pub fn precision_at_k(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> f64 {
    let hits = graded_ranking(list, judgments, cfg.unjudged)
        .into_iter()
        .take(cfg.k)
        .filter(|g| cfg.partial.is_relevant(*g))
        .count();
    hits as f64 / cfg.k as f64
}

/// Uninterpolated average precision over the whole ranking.
pub fn average_precision(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> f64 {
    let total = relevant_count(judgments, cfg.partial);
    if total == 0 {
        log::warn!("topic `{}` has no relevant judgments; AP is 0", list.topic_id);
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, grade) in graded_ranking(list, judgments, cfg.unjudged).into_iter().enumerate() {
        if cfg.partial.is_relevant(grade) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

/// Inferred AP from a sampled pool.
///
/// For a judged relevant document at rank `j` the expected precision is
/// `1/j + (j−1)/j · d/(j−1) · ρ`, where `d` counts pooled documents above `j`
/// and `ρ` estimates the relevant share among them from the judged ones,
/// each weighted by its inverse inclusion probability. When every pooled
/// document above `j` is judged, `ρ` is the exact weighted share; otherwise
/// it is smoothed by `ε`. Contributions and the relevant total are weighted
/// by inverse inclusion probability as well.
pub fn inf_average_precision(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> f64 {
    let partial = cfg.partial;
    let total: f64 = judgments
        .values()
        .filter(|j| partial.is_relevant(j.grade))
        .map(|j| 1.0 / j.probability)
        .sum();
    if total == 0.0 {
        log::warn!("topic `{}` has no relevant judgments; infAP is 0", list.topic_id);
        return 0.0;
    }
    let eps = cfg.inf_epsilon;
    let (mut pooled, mut judged) = (0usize, 0usize);
    let (mut rel_w, mut nonrel_w) = (0.0f64, 0.0f64);
    let mut sum = 0.0;
    for (i, doc) in list.doc_ids().enumerate() {
        let rank = (i + 1) as f64;
        let judgment = judgments.get(doc);
        if let Some(j) = judgment.filter(|j| partial.is_relevant(j.grade)) {
            let expected = if i == 0 {
                1.0
            } else {
                let share = if judged == pooled {
                    if rel_w + nonrel_w > 0.0 {
                        rel_w / (rel_w + nonrel_w)
                    } else {
                        0.0
                    }
                } else {
                    (rel_w + eps) / (rel_w + nonrel_w + 2.0 * eps)
                };
                1.0 / rank + (rank - 1.0) / rank * (pooled as f64 / (rank - 1.0)) * share
            };
            sum += expected / j.probability;
        }
        if let Some(j) = judgment {
            pooled += 1;
            if j.grade.is_judged() {
                judged += 1;
                if partial.is_relevant(j.grade) {
                    rel_w += 1.0 / j.probability;
                } else {
                    nonrel_w += 1.0 / j.probability;
                }
            }
        }
    }
    sum / total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcgValue {
    /// Clamped to [0, 1].
    pub value: f64,
    /// Before clamping; negative when unjudged documents dominate.
    pub raw: f64,
}

fn discount(rank_index: usize) -> f64 {
    ((rank_index + 2) as f64).log2()
}

fn ideal_dcg(mut gains: Vec<f64>, depth: usize) -> f64 {
    gains.sort_by(|a, b| b.total_cmp(a));
    gains.iter().take(depth).enumerate().map(|(i, g)| g / discount(i)).sum()
}

/// NDCG at `k` with linear gains; the ideal ranking sorts all judged grades.
pub fn ndcg_at_k(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> NdcgValue {
    ndcg_to_depth(list, judgments, cfg, cfg.k)
}

fn ndcg_to_depth(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig, depth: usize) -> NdcgValue {
    let ideal = ideal_dcg(
        judgments.values().filter(|j| j.grade.is_judged()).map(|j| cfg.gain(j.grade)).collect(),
        depth,
    );
    if ideal <= 0.0 {
        log::warn!("topic `{}` has zero ideal gain; NDCG is 0", list.topic_id);
        return NdcgValue { value: 0.0, raw: 0.0 };
    }
    let dcg: f64 = graded_ranking(list, judgments, cfg.unjudged)
        .into_iter()
        .take(depth)
        .enumerate()
        .map(|(i, g)| cfg.gain(g) / discount(i))
        .sum();
    let raw = dcg / ideal;
    NdcgValue {
        value: raw.clamp(0.0, 1.0),
        raw,
    }
}

/// Inferred NDCG over the whole ranking.
///
/// Each judged document's gain is divided by its inclusion probability. The
/// ideal ranking holds `round(Σ 1/p)` documents of every grade. Unjudged
/// documents contribute nothing.
pub fn inf_ndcg(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> f64 {
    let mut estimated = [0.0f64; 3];
    for j in judgments.values() {
        if j.grade.is_judged() {
            estimated[j.grade.value() as usize] += 1.0 / j.probability;
        }
    }
    let mut ideal_gains = Vec::new();
    for (grade, count) in [Grade::NonRelevant, Grade::PartiallyRelevant, Grade::Relevant]
        .into_iter()
        .zip(estimated)
    {
        ideal_gains.extend(std::iter::repeat_n(cfg.gain(grade), count.round() as usize));
    }
    let ideal = ideal_dcg(ideal_gains, usize::MAX);
    if ideal <= 0.0 {
        log::warn!("topic `{}` has zero ideal gain; infNDCG is 0", list.topic_id);
        return 0.0;
    }
    let dcg: f64 = list
        .doc_ids()
        .enumerate()
        .filter_map(|(i, d)| {
            let j = judgments.get(d).filter(|j| j.grade.is_judged())?;
            Some(cfg.gain(j.grade) / j.probability / discount(i))
        })
        .sum();
    dcg / ideal
}

/// NDCG over the full ranking depth.
pub fn ndcg_full(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> NdcgValue {
    ndcg_to_depth(list, judgments, cfg, usize::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    InfAp,
    InfNdcg,
    PrecisionPlus,
    Ndcg,
    PrecisionMinus,
    Ap,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::InfAp,
        Metric::InfNdcg,
        Metric::PrecisionPlus,
        Metric::Ndcg,
        Metric::PrecisionMinus,
        Metric::Ap,
    ];

    /// Column label for a cutoff `k`.
    pub fn label(self, k: usize) -> String {
        match self {
            Metric::InfAp => "infAP".into(),
            Metric::InfNdcg => "infNDCG".into(),
            Metric::PrecisionPlus => format!("P@{k}(+partial)"),
            Metric::Ndcg => format!("NDCG@{k}"),
            Metric::PrecisionMinus => format!("P@{k}(-partial)"),
            Metric::Ap => "AP".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicMetrics {
    pub topic_id: String,
    pub ap: f64,
    pub inf_ap: f64,
    pub ndcg: f64,
    pub ndcg_raw: f64,
    pub inf_ndcg: f64,
    pub precision_plus: f64,
    pub precision_minus: f64,
    /// Judged documents among the first `k` retrieved.
    pub judged_retrieved: usize,
    /// Unjudged documents among the first `k` retrieved.
    pub unjudged_retrieved: usize,
}

impl TopicMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::InfAp => self.inf_ap,
            Metric::InfNdcg => self.inf_ndcg,
            Metric::PrecisionPlus => self.precision_plus,
            Metric::Ndcg => self.ndcg,
            Metric::PrecisionMinus => self.precision_minus,
            Metric::Ap => self.ap,
        }
    }
}

/// All measures for one topic.
pub fn evaluate_topic(list: &RankedList, judgments: &TopicJudgments, cfg: &EvalConfig) -> TopicMetrics {
    let plus = EvalConfig {
        partial: PartialMode::Plus,
        ..*cfg
    };
    let minus = EvalConfig {
        partial: PartialMode::Minus,
        ..*cfg
    };
    let ndcg = ndcg_at_k(list, judgments, cfg);
    let judged_retrieved = list
        .doc_ids()
        .take(cfg.k)
        .filter(|d| grade_of(judgments, d).is_judged())
        .count();
    TopicMetrics {
        topic_id: list.topic_id.clone(),
        ap: average_precision(list, judgments, cfg),
        inf_ap: inf_average_precision(list, judgments, cfg),
        ndcg: ndcg.value,
        ndcg_raw: ndcg.raw,
        inf_ndcg: inf_ndcg(list, judgments, cfg),
        precision_plus: precision_at_k(list, judgments, &plus),
        precision_minus: precision_at_k(list, judgments, &minus),
        judged_retrieved,
        unjudged_retrieved: list.len().min(cfg.k) - judged_retrieved,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub k: usize,
    /// Evaluated topics in ascending id order.
    pub topics: Vec<TopicMetrics>,
    /// Topics skipped for lack of relevant judgments.
    pub excluded: Vec<String>,
}

impl MetricReport {
    /// Arithmetic mean over evaluated topics; 0 when there are none.
    pub fn mean(&self, metric: Metric) -> f64 {
        if self.topics.is_empty() {
            return 0.0;
        }
        self.topics.iter().map(|t| t.get(metric)).sum::<f64>() / self.topics.len() as f64
    }

    /// Per-topic values of one metric, in topic order.
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.topics.iter().map(|t| t.get(metric)).collect()
    }

    pub fn topic_ids(&self) -> Vec<&str> {
        self.topics.iter().map(|t| t.topic_id.as_str()).collect()
    }

    /// `topic,metric,value` rows, one per topic and metric.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "topic,metric,value")?;
        for t in &self.topics {
            for metric in Metric::ALL {
                writeln!(out, "{},{},{:.6}", t.topic_id, metric.label(self.k), t.get(metric))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for metric in Metric::ALL {
            writeln!(f, "{:<16}{:.4}", metric.label(self.k), self.mean(metric))?;
        }
        write!(f, "{:<16}{}", "topics", self.topics.len())
    }
}

/// Evaluate a run against every qrels topic that has at least one document
/// graded 1 or 2. Topics missing from the run score as empty rankings.
pub fn evaluate_run(run: &[RankedList], qrels: &JudgmentSet, cfg: &EvalConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let by_topic: HashMap<&str, &RankedList> = run.iter().map(|l| (l.topic_id.as_str(), l)).collect();
    let mut evaluated = Vec::new();
    let mut excluded = Vec::new();
    for topic in qrels.topic_ids() {
        let judgments = qrels.topic(topic).expect("listed topic exists");
        if relevant_count(judgments, PartialMode::Plus) == 0 {
            log::warn!("topic `{topic}` has no relevant judgments and is excluded");
            excluded.push(topic.to_string());
        } else {
            evaluated.push((topic, judgments));
        }
    }
    let topics = evaluated
        .par_iter()
        .map(|(topic, judgments)| match by_topic.get(topic) {
            Some(list) => evaluate_topic(list, judgments, cfg),
            None => evaluate_topic(&RankedList::from_ordered(*topic, "", Vec::new()), judgments, cfg),
        })
        .collect();
    Ok(MetricReport {
        k: cfg.k,
        topics,
        excluded,
    })
}

/// Unanimous improvement ratio of `a` over `b`.
///
/// Rows are test cases (topics), columns metrics. A case counts for `a` when
/// `a ≥ b` on every metric.
pub fn uir(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param(format!("UIR needs equal topic counts, got {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Undefined("UIR over zero topics".into()));
    }
    let (mut a_wins, mut b_wins) = (0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        if x.len() != y.len() {
            return Err(Error::param("UIR needs the same metrics for both systems"));
        }
        if x.iter().zip(y).all(|(p, q)| p >= q) {
            a_wins += 1;
        }
        if x.iter().zip(y).all(|(p, q)| q >= p) {
            b_wins += 1;
        }
    }
    Ok((a_wins as f64 - b_wins as f64) / a.len() as f64)
}

/// Pairwise UIR over per-topic metric vectors. `matrix[i][j]` is UIR of
/// system `i` over system `j`. All reports must cover the same topics.
pub fn uir_matrix(reports: &[&MetricReport], metrics: &[Metric]) -> Result<Vec<Vec<f64>>> {
    if reports.len() < 2 {
        return Err(Error::param("UIR needs at least two systems"));
    }
    let topics = reports[0].topic_ids();
    for r in &reports[1..] {
        if r.topic_ids() != topics {
            return Err(Error::param("UIR needs every system evaluated on the same topics"));
        }
    }
    let rows: Vec<Vec<Vec<f64>>> = reports
        .iter()
        .map(|r| r.topics.iter().map(|t| metrics.iter().map(|m| t.get(*m)).collect()).collect())
        .collect();
    pairwise(&rows)
}

/// Pairwise UIR where each system contributes one test case: its vector of
/// metric means.
pub fn uir_matrix_of_means(reports: &[&MetricReport], metrics: &[Metric]) -> Result<Vec<Vec<f64>>> {
    if reports.len() < 2 {
        return Err(Error::param("UIR needs at least two systems"));
    }
    let rows: Vec<Vec<Vec<f64>>> = reports
        .iter()
        .map(|r| vec![metrics.iter().map(|m| r.mean(*m)).collect()])
        .collect();
    pairwise(&rows)
}

fn pairwise(rows: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                matrix[i][j] = uir(&rows[i], &rows[j])?;
            }
        }
    }
    Ok(matrix)
}

/// Kendall's tau-b by pair enumeration.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::param(format!("Kendall tau needs equal lengths, got {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::param("Kendall tau needs at least two observations"));
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut x_ties, mut y_ties) = (0i64, 0i64);
    let mut pairs = 0i64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            pairs += 1;
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            if dx == 0 {
                x_ties += 1;
            }
            if dy == 0 {
                y_ties += 1;
            }
            match dx * dy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let denom = (((pairs - x_ties) * (pairs - y_ties)) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Undefined("Kendall tau of a constant sequence".into()));
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Kendall tau between every pair of columns.
pub fn kendall_matrix(columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = columns.len();
    let mut matrix = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let tau = kendall_tau(&columns[i], &columns[j])?;
            matrix[i][j] = tau;
            matrix[j][i] = tau;
        }
    }
    Ok(matrix)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: usize,
}

/// Paired two-tailed t-test on per-topic values.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::param(format!("t-test needs equal lengths, got {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::param("t-test needs at least two pairs"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 1e-15 * mean.abs().max(1.0)) {
        return Err(Error::Undefined("t-test with zero-variance differences".into()));
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Undefined(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df: n - 1 })
}
