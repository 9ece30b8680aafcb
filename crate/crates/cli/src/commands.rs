use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use biosearch::eval::{evaluate_run, uir_matrix, uir_matrix_of_means, Metric, MetricReport, PartialMode, UnjudgedMode};
use biosearch::expansion::{expand_query, ExpansionParams, QueryTerm};
use biosearch::ingest::{
    parse_corpus, parse_embeddings, parse_qrels, parse_queries, parse_run, write_run, CategoryLexicon, CorpusOptions,
};
use biosearch::pipeline::{run_experiment, run_model, ExpansionMode, ExperimentConfig, ModelConfig, Resources};
use biosearch::rerank::{
    boost, classify_document, classify_query, fuse_runs, BoostParams, CategoryAssignment, DocumentClassifier,
    FusionConfig, LexiconClassifier, Normalization, SubprocessClassifier,
};
use biosearch::scoring::ScorerKind;
use biosearch::textprep::parse_stopwords;
use biosearch::{Analyzer, EmbeddingTable, ExpansionModel, InvertedIndex, RankedList, TopicQuery};
use clap::Args;
use serde::Serialize;

use crate::config::{parse_enum, pick_path, provenance_header, require_path, usage, GlobalConfig, Paths};

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Where to get an index: a saved snapshot or a corpus indexed on the fly.
#[derive(Debug, Args)]
pub struct IndexSource {
    /// Index snapshot written by `index`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Corpus to index in memory when no snapshot is given.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Stopword list used when indexing a corpus.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Abort on records whose METADATA is not valid JSON.
    #[arg(long)]
    pub strict: bool,
}

impl IndexSource {
    fn load(&self, paths: &Paths) -> Result<(InvertedIndex, String)> {
        let snapshot = self.index.clone().or(if self.corpus.is_none() { paths.index.clone() } else { None });
        if let Some(path) = snapshot {
            let index = InvertedIndex::load(&path).with_context(|| format!("loading index {}", path.display()))?;
            return Ok((index, display(&path)));
        }
        let corpus = require_path(&self.corpus, &paths.corpus, "corpus")
            .map_err(|_| usage("missing --index or --corpus (or paths.index / paths.corpus in the config file)"))?;
        let stopwords = pick_path(&self.stopwords, &paths.stopwords);
        Ok((build_index(&corpus, stopwords.as_deref(), self.strict)?, display(&corpus)))
    }
}

fn build_index(corpus: &Path, stopwords: Option<&Path>, strict: bool) -> Result<InvertedIndex> {
    let analyzer = match stopwords {
        Some(p) => Analyzer::new(parse_stopwords(open(p)?).with_context(|| format!("reading {}", p.display()))?),
        None => Analyzer::default(),
    };
    let parsed = parse_corpus(open(corpus)?, CorpusOptions { strict })
        .with_context(|| format!("reading corpus {}", corpus.display()))?;
    if !parsed.skipped.is_empty() {
        log::warn!("skipped {} malformed records", parsed.skipped.len());
    }
    Ok(InvertedIndex::build(parsed.records, analyzer)?)
}

fn load_queries(flag: &Option<PathBuf>, paths: &Paths) -> Result<Vec<TopicQuery>> {
    let path = require_path(flag, &paths.queries, "queries")?;
    parse_queries(open(&path)?).with_context(|| format!("reading queries {}", path.display()))
}

fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(open(path)?).with_context(|| format!("reading embeddings {}", path.display()))
}

fn load_lexicon(flag: &Option<PathBuf>, paths: &Paths) -> Result<Option<CategoryLexicon>> {
    match pick_path(flag, &paths.lexicon) {
        Some(path) => Ok(Some(
            CategoryLexicon::from_json(open(&path)?).with_context(|| format!("reading lexicon {}", path.display()))?,
        )),
        None => Ok(None),
    }
}

fn load_runs(path: &Path) -> Result<Vec<RankedList>> {
    parse_run(open(path)?).with_context(|| format!("reading run {}", path.display()))
}

fn spawn_classifier(
    flag: &Option<String>,
    config: &GlobalConfig,
    lexicon: &CategoryLexicon,
) -> Result<Option<SubprocessClassifier>> {
    let command: Vec<String> = match flag {
        Some(line) => line.split_whitespace().map(str::to_string).collect(),
        None => config.classifier.clone().unwrap_or_default(),
    };
    let Some((program, args)) = command.split_first() else {
        return Ok(None);
    };
    Ok(Some(SubprocessClassifier::spawn(program, args, lexicon)?))
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
    /// Snapshot file to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn index(args: &IndexArgs, config: &GlobalConfig) -> Result<()> {
    let corpus = require_path(&args.corpus, &config.paths.corpus, "corpus")?;
    let stopwords = pick_path(&args.stopwords, &config.paths.stopwords);
    let index = build_index(&corpus, stopwords.as_deref(), args.strict)?;
    index.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "indexed {} records, {} terms -> {}",
        index.collection_size(),
        index.vocabulary_size(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub source: IndexSource,
    /// Topics as `ID<TAB>text` lines or a JSON array.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, value_parser = parse_enum::<ScorerKind>)]
    pub scorer: Option<ScorerKind>,
    /// Key-relevant boost of the rtrl scorer.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Query expansion: none, uniform or penalized.
    #[arg(long, value_parser = parse_enum::<ExpansionMode>)]
    pub model: Option<ExpansionMode>,
    /// Neighbours per query term.
    #[arg(long)]
    pub k: Option<usize>,
    /// Loss factor of the penalized expansion.
    #[arg(long)]
    pub loss: Option<f64>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Category re-ranking.
    #[arg(long)]
    pub rerank: bool,
    /// Re-ranking gain.
    #[arg(long)]
    pub g: Option<f64>,
    /// Share of each ranking eligible for the gain.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// External document classifier command.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SearchProvenance<'a> {
    index: String,
    queries: String,
    embeddings: Option<String>,
    lexicon: Option<String>,
    top: usize,
    model: &'a ModelConfig,
}

impl SearchArgs {
    fn model(&self, config: &GlobalConfig) -> ModelConfig {
        let defaults = &config.search;
        let mut model = ModelConfig::plain(self.tag.clone().unwrap_or_else(|| defaults.tag.clone()), defaults.scorer);
        model.scorer = self.scorer.unwrap_or(defaults.scorer);
        model.c = self.c.unwrap_or(defaults.c);
        model.bm25 = defaults.bm25;
        model.bm25.k1 = self.k1.unwrap_or(model.bm25.k1);
        model.bm25.b = self.b.unwrap_or(model.bm25.b);
        model.expansion = defaults.expansion;
        model.expansion.mode = self.model.unwrap_or(model.expansion.mode);
        model.expansion.k = self.k.unwrap_or(model.expansion.k);
        model.expansion.loss = self.loss.unwrap_or(model.expansion.loss);
        model.rerank = defaults.rerank;
        model.rerank.enabled |= self.rerank;
        model.rerank.gain = self.g.unwrap_or(model.rerank.gain);
        model.rerank.fraction = self.fraction.unwrap_or(model.rerank.fraction);
        model
    }
}

pub fn search(args: &SearchArgs, config: &GlobalConfig) -> Result<()> {
    let model = args.model(config);
    let top = args.top.unwrap_or(config.search.top);
    let (index, index_name) = args.source.load(&config.paths)?;
    let queries_path = require_path(&args.queries, &config.paths.queries, "queries")?;
    let queries = load_queries(&args.queries, &config.paths)?;
    let embeddings_path = pick_path(&args.embeddings, &config.paths.embeddings);
    if model.expansion.mode != ExpansionMode::None && embeddings_path.is_none() {
        return Err(usage("query expansion needs --embeddings"));
    }
    let embeddings = embeddings_path.as_deref().map(load_embeddings).transpose()?;
    let lexicon_path = pick_path(&args.lexicon, &config.paths.lexicon);
    let custom = load_lexicon(&args.lexicon, &config.paths)?;
    let lexicon = custom.as_ref().unwrap_or(CategoryLexicon::bundled());
    let classifier = spawn_classifier(&args.classifier, config, lexicon)?;

    let mut resources = Resources::new(&index, lexicon);
    if let Some(table) = &embeddings {
        resources = resources.with_embeddings(table);
    }
    if let Some(c) = &classifier {
        resources = resources.with_classifier(c);
    }
    let lists = run_model(&model, &resources, &queries, top)?;

    let provenance = SearchProvenance {
        index: index_name,
        queries: display(&queries_path),
        embeddings: embeddings_path.as_deref().map(display),
        lexicon: lexicon_path.as_deref().map(display),
        top,
        model: &model,
    };
    let mut out = output(args.out.as_deref())?;
    out.write_all(provenance_header("search", &provenance)?.as_bytes())?;
    write_run(&mut out, &lists)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub source: IndexSource,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// uniform or penalized.
    #[arg(long, value_parser = parse_enum::<ExpansionModel>)]
    pub model: Option<ExpansionModel>,
    #[arg(long)]
    pub loss: Option<f64>,
    /// Query text.
    pub text: String,
}

#[derive(Serialize)]
struct ExpandProvenance {
    index: String,
    embeddings: String,
    k: usize,
    model: ExpansionModel,
    loss: f64,
}

pub fn expand(args: &ExpandArgs, config: &GlobalConfig) -> Result<()> {
    let defaults = config.search.expansion;
    let configured = match defaults.mode {
        ExpansionMode::Penalized => ExpansionModel::Penalized,
        _ => ExpansionModel::Uniform,
    };
    let params = ExpansionParams {
        k: args.k.unwrap_or(defaults.k),
        model: args.model.unwrap_or(configured),
        loss: args.loss.unwrap_or(defaults.loss),
    };
    let (index, index_name) = args.source.load(&config.paths)?;
    let embeddings_path = require_path(&args.embeddings, &config.paths.embeddings, "embeddings")?;
    let table = load_embeddings(&embeddings_path)?;
    let terms: Vec<QueryTerm> = index.analyzer().analyze(&args.text).into_iter().map(QueryTerm::from).collect();
    let query = expand_query(&terms, &table, &index, &params)?;

    let provenance = ExpandProvenance {
        index: index_name,
        embeddings: display(&embeddings_path),
        k: params.k,
        model: params.model,
        loss: params.loss,
    };
    let mut out = output(None)?;
    out.write_all(provenance_header("expand", &provenance)?.as_bytes())?;
    writeln!(out, "term\tweight\tclass\tsource")?;
    for entry in query.entries() {
        writeln!(out, "{}\t{:.6}\t{}\t{}", entry.term, entry.weight, entry.class, entry.source())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Classify every topic of this file.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Classify an indexed document; repeatable.
    #[arg(long = "doc")]
    pub docs: Vec<String>,
    #[command(flatten)]
    pub source: IndexSource,
    /// External document classifier command.
    #[arg(long)]
    pub classifier: Option<String>,
    /// Free query text.
    pub text: Option<String>,
}

fn print_assignment(out: &mut dyn Write, a: &CategoryAssignment) -> Result<()> {
    let categories: Vec<&str> = a.categories.iter().map(String::as_str).collect();
    let method = serde_json::to_value(a.method)?;
    let subject = if a.subject.is_empty() { "-" } else { &a.subject };
    writeln!(out, "{subject}\t{}\t{}", method.as_str().unwrap_or_default(), categories.join(";"))?;
    Ok(())
}

pub fn classify(args: &ClassifyArgs, config: &GlobalConfig) -> Result<()> {
    if args.text.is_none() && args.queries.is_none() && args.docs.is_empty() {
        return Err(usage("give query text, --queries or --doc"));
    }
    let custom = load_lexicon(&args.lexicon, &config.paths)?;
    let lexicon = custom.as_ref().unwrap_or(CategoryLexicon::bundled());
    let mut out = output(None)?;
    writeln!(out, "subject\tmethod\tcategories")?;
    if let Some(text) = &args.text {
        print_assignment(&mut out, &classify_query(text, lexicon))?;
    }
    if let Some(path) = &args.queries {
        for q in parse_queries(open(path)?).with_context(|| format!("reading queries {}", path.display()))? {
            let mut a = classify_query(&q.text, lexicon);
            a.subject = q.topic_id;
            print_assignment(&mut out, &a)?;
        }
    }
    if !args.docs.is_empty() {
        let (index, _) = args.source.load(&config.paths)?;
        let external = spawn_classifier(&args.classifier, config, lexicon)?;
        for id in &args.docs {
            let record = index.record_by_id(id).ok_or_else(|| anyhow!("unknown document `{id}`"))?;
            let a = match &external {
                Some(c) => c.classify(record)?,
                None => classify_document(record, lexicon),
            };
            print_assignment(&mut out, &a)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    /// Run file to re-rank.
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub source: IndexSource,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub fraction: Option<f64>,
    /// External document classifier command.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RerankProvenance {
    run: String,
    index: String,
    queries: String,
    lexicon: Option<String>,
    gain: f64,
    fraction: f64,
}

pub fn rerank(args: &RerankArgs, config: &GlobalConfig) -> Result<()> {
    let params = BoostParams {
        gain: args.g.unwrap_or(config.search.rerank.gain),
        fraction: args.fraction.unwrap_or(config.search.rerank.fraction),
    };
    params.validate()?;
    let runs = load_runs(&args.run)?;
    let (index, index_name) = args.source.load(&config.paths)?;
    let queries_path = require_path(&args.queries, &config.paths.queries, "queries")?;
    let queries = load_queries(&args.queries, &config.paths)?;
    let texts: HashMap<&str, &str> = queries.iter().map(|q| (q.topic_id.as_str(), q.text.as_str())).collect();
    let lexicon_path = pick_path(&args.lexicon, &config.paths.lexicon);
    let custom = load_lexicon(&args.lexicon, &config.paths)?;
    let lexicon = custom.as_ref().unwrap_or(CategoryLexicon::bundled());
    let external = spawn_classifier(&args.classifier, config, lexicon)?;
    let fallback = LexiconClassifier { lexicon };
    let classifier: &dyn DocumentClassifier = match &external {
        Some(c) => c,
        None => &fallback,
    };

    let mut boosted = Vec::with_capacity(runs.len());
    for list in &runs {
        let text = texts
            .get(list.topic_id.as_str())
            .ok_or_else(|| anyhow!("topic `{}` of the run has no query", list.topic_id))?;
        let categories = classify_query(text, lexicon).categories;
        let mut ranked = boost(list, &categories, &index, classifier, params)?;
        if let Some(tag) = &args.tag {
            ranked = ranked.with_tag(tag.clone());
        }
        boosted.push(ranked);
    }

    let provenance = RerankProvenance {
        run: display(&args.run),
        index: index_name,
        queries: display(&queries_path),
        lexicon: lexicon_path.as_deref().map(display),
        gain: params.gain,
        fraction: params.fraction,
    };
    let mut out = output(args.out.as_deref())?;
    out.write_all(provenance_header("rerank", &provenance)?.as_bytes())?;
    write_run(&mut out, &boosted)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Weight of the first run.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// minmax or none.
    #[arg(long, value_parser = parse_enum::<Normalization>)]
    pub normalization: Option<Normalization>,
    #[arg(long, default_value = "fused")]
    pub tag: String,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FuseProvenance {
    a: String,
    b: String,
    alpha: f64,
    normalization: Normalization,
    tag: String,
    top: Option<usize>,
}

pub fn fuse(args: &FuseArgs, config: &GlobalConfig) -> Result<()> {
    let cfg = FusionConfig {
        alpha: args.alpha.unwrap_or(config.fusion.alpha),
        normalization: args.normalization.unwrap_or(config.fusion.normalization),
    };
    if args.top == Some(0) {
        return Err(usage("--top must be positive"));
    }
    let a = load_runs(&args.a)?;
    let b = load_runs(&args.b)?;
    let mut fused = fuse_runs(&a, &b, cfg, &args.tag)?;
    if let Some(top) = args.top {
        fused.iter_mut().for_each(|l| l.truncate(top));
    }
    let provenance = FuseProvenance {
        a: display(&args.a),
        b: display(&args.b),
        alpha: cfg.alpha,
        normalization: cfg.normalization,
        tag: args.tag.clone(),
        top: args.top,
    };
    let mut out = output(args.out.as_deref())?;
    out.write_all(provenance_header("fuse", &provenance)?.as_bytes())?;
    write_run(&mut out, &fused)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run file; repeat to compare systems.
    #[arg(long, required = true)]
    pub run: Vec<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Cutoff of the precision and NDCG measures.
    #[arg(long)]
    pub k: Option<usize>,
    /// plus or minus.
    #[arg(long, value_parser = parse_enum::<PartialMode>)]
    pub partial: Option<PartialMode>,
    /// official, nonrel or remove.
    #[arg(long, value_parser = parse_enum::<UnjudgedMode>)]
    pub unjudged: Option<UnjudgedMode>,
    /// Print one row per topic.
    #[arg(long)]
    pub per_topic: bool,
    /// Write per-topic values as topic,metric,value rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Compare systems by their metric means instead of per topic.
    #[arg(long)]
    pub uir_means: bool,
}

#[derive(Serialize)]
struct EvalProvenance<'a> {
    runs: Vec<String>,
    qrels: String,
    eval: &'a biosearch::eval::EvalConfig,
}

fn write_per_topic(out: &mut dyn Write, report: &MetricReport) -> Result<()> {
    write!(out, "{:<10}", "topic")?;
    for m in Metric::ALL {
        write!(out, "{:>16}", m.label(report.k))?;
    }
    writeln!(out, "{:>8}{:>10}", "judged", "unjudged")?;
    for t in &report.topics {
        write!(out, "{:<10}", t.topic_id)?;
        for m in Metric::ALL {
            write!(out, "{:>16.4}", t.get(m))?;
        }
        writeln!(out, "{:>8}{:>10}", t.judged_retrieved, t.unjudged_retrieved)?;
    }
    Ok(())
}

pub fn eval(args: &EvalArgs, config: &GlobalConfig) -> Result<()> {
    let mut cfg = config.eval;
    cfg.k = args.k.unwrap_or(cfg.k);
    cfg.partial = args.partial.unwrap_or(cfg.partial);
    cfg.unjudged = args.unjudged.unwrap_or(cfg.unjudged);
    cfg.validate()?;
    if args.csv.is_some() && args.run.len() > 1 {
        return Err(usage("--csv takes a single --run"));
    }
    let qrels_path = require_path(&args.qrels, &config.paths.qrels, "qrels")?;
    let qrels = parse_qrels(open(&qrels_path)?).with_context(|| format!("reading qrels {}", qrels_path.display()))?;

    let mut reports = Vec::new();
    for path in &args.run {
        reports.push(evaluate_run(&load_runs(path)?, &qrels, &cfg)?);
    }

    let provenance = EvalProvenance {
        runs: args.run.iter().map(|p| display(p)).collect(),
        qrels: display(&qrels_path),
        eval: &cfg,
    };
    let header = provenance_header("eval", &provenance)?;
    let mut out = output(None)?;
    out.write_all(header.as_bytes())?;
    for (path, report) in args.run.iter().zip(&reports) {
        if reports.len() > 1 {
            writeln!(out, "run {}", path.display())?;
        }
        writeln!(out, "{report}")?;
        if args.per_topic {
            write_per_topic(&mut out, report)?;
        }
    }
    if reports.len() > 1 {
        let refs: Vec<&MetricReport> = reports.iter().collect();
        let matrix = if args.uir_means {
            uir_matrix_of_means(&refs, &Metric::ALL)?
        } else {
            uir_matrix(&refs, &Metric::ALL)?
        };
        writeln!(out, "UIR (row over column)")?;
        for (i, row) in matrix.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>7.3}")).collect();
            writeln!(out, "{:<4}{}", i + 1, cells.join(" "))?;
        }
    }
    out.flush()?;

    if let Some(path) = &args.csv {
        let mut csv = output(Some(path))?;
        csv.write_all(header.as_bytes())?;
        reports[0].write_csv(&mut csv)?;
        csv.flush()?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment TOML with `[[model]]` tables.
    #[arg(long)]
    pub experiment: Option<PathBuf>,
    /// Bundled experiment: official or cross_validation.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub source: IndexSource,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// External document classifier command.
    #[arg(long)]
    pub classifier: Option<String>,
    /// Directory for run files, metric CSVs and the summary.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn experiment(args: &ExperimentArgs, config: &GlobalConfig) -> Result<()> {
    let experiment = if let Some(path) = &args.experiment {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        ExperimentConfig::from_toml(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
    } else if let Some(name) = &args.preset {
        ExperimentConfig::preset(name).map_err(|e| usage(e.to_string()))?
    } else if let Some(exp) = &config.experiment {
        exp.clone()
    } else {
        return Err(usage("give --experiment, --preset or an [experiment] table in the config file"));
    };

    let (index, _) = args.source.load(&config.paths)?;
    let queries = load_queries(&args.queries, &config.paths)?;
    let qrels_path = require_path(&args.qrels, &config.paths.qrels, "qrels")?;
    let qrels = parse_qrels(open(&qrels_path)?).with_context(|| format!("reading qrels {}", qrels_path.display()))?;
    let embeddings = pick_path(&args.embeddings, &config.paths.embeddings)
        .as_deref()
        .map(load_embeddings)
        .transpose()?;
    let custom = load_lexicon(&args.lexicon, &config.paths)?;
    let lexicon = custom.as_ref().unwrap_or(CategoryLexicon::bundled());
    let classifier = spawn_classifier(&args.classifier, config, lexicon)?;

    let mut resources = Resources::new(&index, lexicon);
    if let Some(table) = &embeddings {
        resources = resources.with_embeddings(table);
    }
    if let Some(c) = &classifier {
        resources = resources.with_classifier(c);
    }
    let report = run_experiment(&experiment, &resources, &queries, &qrels)?;
    report.write_to_dir(&args.out)?;
    let mut out = output(None)?;
    out.write_all(report.summary().as_bytes())?;
    out.flush()?;
    Ok(())
}
