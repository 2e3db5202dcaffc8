//! File-based stage orchestration.
//!
//! Each stage reads the previous stage's output file, writes its own, and
//! returns a report with in/out counts and drop reasons. Stages are
//! individually re-runnable: identical inputs, config and seed give
//! byte-identical outputs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corroborate::bayes::{train_plausibility_classifier, DEFAULT_LAPLACE};
use crate::corroborate::{
    load_labeled_signals, prioritize_for_expensive_sources, BooksCorpus, BooksSource,
    CaptionCorpus, CaptionSource, FixtureSnippets, ImageTagData, ImageTagSource, Measurement,
    SignalVector, SnippetSource, SourceClient, TagClusterSource, TagClusters, TextCorpus,
    WindowSource,
};
use crate::error::{Error, Result};
use crate::evalkit::{
    load_qa_items, load_recall_sentences, load_taboo_cards, qa_features, recall_score,
    taboo_coverage, RecallMode, TabooMode, QA_FEATURE_NAMES,
};
use crate::extract::{extract_triples, select_longest_predicate, Extractor, RawTriple};
use crate::group::{
    build_so_p_matrix, grid_search, slice_by_domain, threshold_clusters, SolverConfig,
    DEFAULT_DELTA,
};
use crate::ingest::{
    dedupe_questions, generate_query_prefixes, ingest_forum_questions, pattern_catalog,
    FixtureProvider, PatternSet, ProbeConfig, Prober, Question, QuestionSource,
    SuggestionProvider,
};
use crate::lexicon::{load_seed_subjects, Lexicons};
use crate::normalize::{normalize_tuple, CandidateTuple, NormalizeOutcome};
use crate::pos::Tagger;
use crate::rank::{kb_distribution, merge_duplicates, rank_view, RankKey, ScoredTriple};
use crate::rewrite::{question_to_statement, Statement};

// ---------------------------------------------------------------------------
// configuration

fn default_branch_threshold() -> usize {
    5
}
fn default_max_depth() -> usize {
    3
}
fn default_window() -> usize {
    5
}
fn default_top_k() -> usize {
    100
}
fn default_budget() -> usize {
    1000
}
fn default_laplace() -> f64 {
    DEFAULT_LAPLACE
}
fn default_seed() -> u64 {
    42
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_k_grid() -> Vec<usize> {
    vec![2, 4]
}
fn default_l_grid() -> Vec<usize> {
    vec![2, 4]
}
fn default_rho_grid() -> Vec<f64> {
    vec![0.5]
}
fn default_epochs() -> usize {
    150
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_learning_rate_decay() -> f64 {
    0.002
}
fn default_ortho_weight() -> f64 {
    0.1
}
fn default_recall_top_k() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Fixture,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupStageConfig {
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_l_grid")]
    pub l_grid: Vec<usize>,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_learning_rate_decay")]
    pub learning_rate_decay: f64,
    #[serde(default = "default_ortho_weight")]
    pub ortho_weight: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for GroupStageConfig {
    fn default() -> Self {
        GroupStageConfig {
            k_grid: default_k_grid(),
            l_grid: default_l_grid(),
            rho_grid: default_rho_grid(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            learning_rate_decay: default_learning_rate_decay(),
            ortho_weight: default_ortho_weight(),
            delta: default_delta(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalStageConfig {
    pub taboo_cards: Option<PathBuf>,
    pub recall_sentences: Option<PathBuf>,
    pub qa_items: Option<PathBuf>,
    #[serde(default = "default_recall_top_k")]
    pub recall_top_k: usize,
}

/// The single declarative configuration file. Relative paths resolve against
/// the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed_subjects: PathBuf,
    #[serde(default)]
    pub pattern_set: PatternSet,
    #[serde(default)]
    pub provider: ProviderKind,
    pub autocomplete_fixture: Option<PathBuf>,
    /// Total autocomplete requests allowed per run.
    pub autocomplete_budget: Option<usize>,
    pub forum_corpus: Option<PathBuf>,
    #[serde(default = "default_branch_threshold")]
    pub branch_threshold: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,

    pub wikipedia: Option<PathBuf>,
    pub simple_wikipedia: Option<PathBuf>,
    #[serde(default = "default_window")]
    pub window: usize,
    pub snippets: Option<PathBuf>,
    #[serde(default = "default_top_k")]
    pub snippet_top_k: usize,
    #[serde(default = "default_budget")]
    pub snippet_budget: usize,
    pub books: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub books_budget: usize,
    pub image_tags: Option<PathBuf>,
    pub tag_clusters: Option<PathBuf>,
    pub captions: Option<PathBuf>,
    pub labeled_signals: Option<PathBuf>,
    #[serde(default = "default_laplace")]
    pub laplace: f64,

    pub domain_map: Option<PathBuf>,
    #[serde(default)]
    pub group: GroupStageConfig,
    #[serde(default)]
    pub eval: EvalStageConfig,

    /// Extra open-class lexicon entries merged over the built-in tagger.
    pub pos_lexicon: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl PipelineConfig {
    /// Load from JSON and resolve relative paths against the file's parent.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        resolve(&mut self.seed_subjects);
        for p in [
            &mut self.autocomplete_fixture,
            &mut self.forum_corpus,
            &mut self.wikipedia,
            &mut self.simple_wikipedia,
            &mut self.snippets,
            &mut self.books,
            &mut self.image_tags,
            &mut self.tag_clusters,
            &mut self.captions,
            &mut self.labeled_signals,
            &mut self.domain_map,
            &mut self.pos_lexicon,
            &mut self.eval.taboo_cards,
            &mut self.eval.recall_sentences,
            &mut self.eval.qa_items,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
    }

    /// Check that every referenced path exists.
    pub fn validate(&self) -> Result<()> {
        let mut missing = Vec::new();
        let mut check = |p: &Path| {
            if !p.exists() {
                missing.push(p.display().to_string());
            }
        };
        check(&self.seed_subjects);
        for p in [
            self.autocomplete_fixture.as_deref(),
            self.forum_corpus.as_deref(),
            self.wikipedia.as_deref(),
            self.simple_wikipedia.as_deref(),
            self.snippets.as_deref(),
            self.books.as_deref(),
            self.image_tags.as_deref(),
            self.tag_clusters.as_deref(),
            self.captions.as_deref(),
            self.labeled_signals.as_deref(),
            self.domain_map.as_deref(),
            self.pos_lexicon.as_deref(),
            self.eval.taboo_cards.as_deref(),
            self.eval.recall_sentences.as_deref(),
            self.eval.qa_items.as_deref(),
        ]
        .into_iter()
        .flatten()
        {
            check(p);
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "missing referenced paths: {}",
                missing.join(", ")
            )))
        }
    }

    fn tagger(&self) -> Result<Tagger> {
        match &self.pos_lexicon {
            Some(path) => Tagger::from_tsv(path),
            None => Ok(Tagger::builtin()),
        }
    }
}

// ---------------------------------------------------------------------------
// stage plumbing

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Gather,
    Rewrite,
    Extract,
    Normalize,
    Corroborate,
    Rank,
    Group,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Gather,
        Stage::Rewrite,
        Stage::Extract,
        Stage::Normalize,
        Stage::Corroborate,
        Stage::Rank,
        Stage::Group,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gather => "gather",
            Stage::Rewrite => "rewrite",
            Stage::Extract => "extract",
            Stage::Normalize => "normalize",
            Stage::Corroborate => "corroborate",
            Stage::Rank => "rank",
            Stage::Group => "group",
            Stage::Eval => "eval",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|stage| stage.name() == s)
    }
}

/// Per-stage accounting: counts in and out, drops by reason, wall time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub in_count: usize,
    pub out_count: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dropped: BTreeMap<String, usize>,
    pub wall_ms: u128,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        StageReport {
            stage: stage.name().to_string(),
            in_count: 0,
            out_count: 0,
            dropped: BTreeMap::new(),
            wall_ms: 0,
            details: serde_json::Value::Null,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("serializable record"));
        out.push('\n');
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// stage records

/// A rewritten statement with its source question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatementRecord {
    #[serde(flatten)]
    pub statement: Statement,
    pub question: Question,
}

/// An extracted triple with provenance, as written to the extract file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleRecord {
    pub s: String,
    pub p: String,
    pub o: String,
    pub statement_id: usize,
    pub extractor: Extractor,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
    pub source: String,
}

impl TripleRecord {
    fn from_raw(raw: &RawTriple, source: String) -> Self {
        TripleRecord {
            s: raw.subject.clone(),
            p: raw.predicate.clone(),
            o: raw.object.clone(),
            statement_id: raw.statement_id,
            extractor: raw.extractor,
            negated: raw.negated,
            source,
        }
    }

    fn to_raw(&self) -> RawTriple {
        RawTriple {
            subject: self.s.clone(),
            predicate: self.p.clone(),
            object: self.o.clone(),
            statement_id: self.statement_id,
            extractor: self.extractor,
            negated: self.negated,
        }
    }
}

fn provenance(question: &Question) -> String {
    let source = match question.source {
        QuestionSource::Autocomplete => "autocomplete",
        QuestionSource::Forum => "forum",
    };
    format!("{source}:{}", question.provider)
}

// ---------------------------------------------------------------------------
// staging TSV (candidate tuples, optionally extended with scores)

fn parse_staging_line(path: &Path, idx: usize, line: &str) -> Result<(CandidateTuple, Vec<f64>)> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 7 {
        return Err(Error::parse(
            path,
            idx + 1,
            format!("expected >= 7 tab-separated fields, found {}", fields.len()),
        ));
    }
    let tuple = CandidateTuple::from_tsv_fields(&fields[..7])
        .ok_or_else(|| Error::parse(path, idx + 1, "malformed tuple row"))?;
    let mut extra = Vec::new();
    for field in &fields[7..] {
        extra.push(field.parse::<f64>().map_err(|_| {
            Error::parse(path, idx + 1, format!("bad numeric column {field:?}"))
        })?);
    }
    Ok((tuple, extra))
}

fn read_staging(path: &Path, expected_extra: usize) -> Result<Vec<(CandidateTuple, Vec<f64>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = parse_staging_line(path, idx, line)?;
        if row.1.len() < expected_extra {
            return Err(Error::parse(
                path,
                idx + 1,
                format!(
                    "expected {} score columns, found {}",
                    expected_extra,
                    row.1.len()
                ),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Read a ranked KB file (staging + pi, p_spo, tau, sigma columns).
pub fn read_kb(path: &Path) -> Result<Vec<ScoredTriple>> {
    let rows = read_staging(path, 4)?;
    Ok(rows
        .into_iter()
        .map(|(tuple, extra)| ScoredTriple {
            tuple,
            pi: extra[0],
            p_spo: extra[1],
            tau: extra[2],
            sigma: extra[3],
        })
        .collect())
}

fn render_float(value: f64) -> String {
    // stable shortest representation; files must be byte-identical across runs
    format!("{value}")
}

// ---------------------------------------------------------------------------
// individual stages

fn gather_stage(config: &PipelineConfig, out_path: &Path) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Gather);
    let seeds_text =
        fs::read_to_string(&config.seed_subjects).map_err(|e| Error::io(&config.seed_subjects, e))?;
    let subjects: Vec<String> = seeds_text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect();
    let patterns = pattern_catalog(config.pattern_set);

    let mut questions: Vec<Question> = Vec::new();
    let mut skipped_prefixes = 0usize;
    let mut probed = 0usize;

    if let Some(fixture) = &config.autocomplete_fixture {
        if config.provider == ProviderKind::Http {
            return Err(Error::Config(
                "the http provider is not available in this offline build; use \"fixture\"".into(),
            ));
        }
        let provider = FixtureProvider::from_jsonl(fixture)?;
        let provider: Box<dyn SuggestionProvider> = match config.autocomplete_budget {
            Some(budget) => Box::new(crate::ingest::BudgetedProvider::new(provider, budget)),
            None => Box::new(provider),
        };
        let prefixes = generate_query_prefixes(&patterns, &subjects);
        report.in_count = prefixes.len();
        let probe_config = ProbeConfig {
            branch_threshold: config.branch_threshold,
            max_depth: config.max_depth,
            ..ProbeConfig::default()
        };
        let mut prober = Prober::new(provider.as_ref(), probe_config);
        for prefix in &prefixes {
            let pattern = patterns.iter().find(|p| p.id == prefix.pattern_id);
            let outcome = prober.probe(&prefix.prefix, pattern);
            probed += outcome.queried_prefixes;
            skipped_prefixes += outcome.skipped_prefixes.len();
            questions.extend(outcome.questions);
        }
    }

    let mut forum_malformed = 0usize;
    let mut forum_filtered = 0usize;
    if let Some(corpus) = &config.forum_corpus {
        let file = fs::File::open(corpus).map_err(|e| Error::io(corpus, e))?;
        let ingest = ingest_forum_questions(BufReader::new(file), &patterns, "forum:corpus")?;
        report.in_count += ingest.questions.len() + ingest.filtered_lines + ingest.malformed_lines;
        forum_malformed = ingest.malformed_lines;
        forum_filtered = ingest.filtered_lines;
        questions.extend(ingest.questions);
    }

    let before = questions.len();
    let questions = dedupe_questions(questions);
    let duplicates = before - questions.len();

    write_jsonl(out_path, &questions)?;
    report.out_count = questions.len();
    if duplicates > 0 {
        report.dropped.insert("duplicate".into(), duplicates);
    }
    if forum_filtered > 0 {
        report.dropped.insert("non_pattern_title".into(), forum_filtered);
    }
    if forum_malformed > 0 {
        report.dropped.insert("malformed_line".into(), forum_malformed);
    }
    if skipped_prefixes > 0 {
        report
            .dropped
            .insert("skipped_prefix".into(), skipped_prefixes);
    }
    report.details = serde_json::json!({ "probed_prefixes": probed });
    Ok(report)
}

fn rewrite_stage(config: &PipelineConfig, in_path: &Path, out_path: &Path) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Rewrite);
    let tagger = config.tagger()?;
    let questions: Vec<Question> = read_jsonl(in_path)?;
    report.in_count = questions.len();

    let mut records = Vec::new();
    let mut unparseable = 0usize;
    for question in questions {
        let tokens = tagger.tag_text(&question.text);
        match question_to_statement(&tokens) {
            Some(statement) => records.push(StatementRecord {
                statement,
                question,
            }),
            None => unparseable += 1,
        }
    }
    write_jsonl(out_path, &records)?;
    report.out_count = records.len();
    if unparseable > 0 {
        report.dropped.insert("unparseable".into(), unparseable);
    }
    Ok(report)
}

fn extract_stage(in_path: &Path, out_path: &Path) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Extract);
    let statements: Vec<StatementRecord> = read_jsonl(in_path)?;
    report.in_count = statements.len();

    let mut triples = Vec::new();
    let mut sources = Vec::new();
    let mut unmatched = 0usize;
    for (statement_id, record) in statements.iter().enumerate() {
        let extracted = extract_triples(&record.statement, statement_id);
        if extracted.is_empty() {
            unmatched += 1;
        }
        let source = provenance(&record.question);
        for raw in extracted {
            triples.push(raw);
            sources.push(source.clone());
        }
    }
    let kept = select_longest_predicate(triples.clone());
    // map winners back to their provenance by identity within the statement
    let records: Vec<TripleRecord> = kept
        .iter()
        .map(|raw| {
            let idx = triples
                .iter()
                .position(|t| t == raw)
                .expect("winner came from the input");
            TripleRecord::from_raw(raw, sources[idx].clone())
        })
        .collect();

    write_jsonl(out_path, &records)?;
    report.out_count = records.len();
    if unmatched > 0 {
        report.dropped.insert("no_pattern_match".into(), unmatched);
    }
    Ok(report)
}

fn normalize_stage(config: &PipelineConfig, in_path: &Path, out_path: &Path) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Normalize);
    let records: Vec<TripleRecord> = read_jsonl(in_path)?;
    report.in_count = records.len();

    let seeds = load_seed_subjects(&config.seed_subjects)?;
    let lexicons = Lexicons::builtin();

    let mut lines = String::new();
    let mut kept = 0usize;
    for record in &records {
        match normalize_tuple(&record.to_raw(), &record.source, &seeds, &lexicons) {
            NormalizeOutcome::Kept(tuple) => {
                lines.push_str(&tuple.to_tsv_line());
                lines.push('\n');
                kept += 1;
            }
            NormalizeOutcome::Dropped(reason) => {
                *report.dropped.entry(reason.as_str().to_string()).or_default() += 1;
            }
        }
    }
    write_file(out_path, &lines)?;
    report.out_count = kept;
    Ok(report)
}

fn load_text_corpus(path: &Path) -> Result<TextCorpus> {
    if path.is_dir() {
        TextCorpus::from_directory(path)
    } else {
        TextCorpus::from_segmented_file(path)
    }
}

/// The configured offline scanners behind the common source interface.
struct CorroborationSources {
    wikipedia: Option<Box<dyn SourceClient>>,
    simple_wikipedia: Option<Box<dyn SourceClient>>,
    snippets: Option<Box<dyn SourceClient>>,
    books: Option<Box<dyn SourceClient>>,
    image_tags: Option<Box<dyn SourceClient>>,
    tag_clusters: Option<Box<dyn SourceClient>>,
    captions: Option<Box<dyn SourceClient>>,
}

impl CorroborationSources {
    fn load(config: &PipelineConfig) -> Result<Self> {
        let boxed = |c: Box<dyn SourceClient>| c;
        Ok(CorroborationSources {
            wikipedia: config
                .wikipedia
                .as_deref()
                .map(|p| {
                    Ok::<_, Error>(boxed(Box::new(WindowSource::new(
                        "wikipedia",
                        load_text_corpus(p)?,
                        config.window,
                    ))))
                })
                .transpose()?,
            simple_wikipedia: config
                .simple_wikipedia
                .as_deref()
                .map(|p| {
                    Ok::<_, Error>(boxed(Box::new(WindowSource::new(
                        "simple_wikipedia",
                        load_text_corpus(p)?,
                        config.window,
                    ))))
                })
                .transpose()?,
            snippets: config
                .snippets
                .as_deref()
                .map(|p| {
                    Ok::<_, Error>(boxed(Box::new(SnippetSource::new(
                        FixtureSnippets::from_jsonl(p)?,
                        config.snippet_top_k,
                    ))))
                })
                .transpose()?,
            books: config
                .books
                .as_deref()
                .map(|p| Ok::<_, Error>(boxed(Box::new(BooksSource::new(BooksCorpus::from_file(p)?)))))
                .transpose()?,
            image_tags: config
                .image_tags
                .as_deref()
                .map(|p| {
                    Ok::<_, Error>(boxed(Box::new(ImageTagSource::new(ImageTagData::from_jsonl(
                        p,
                    )?))))
                })
                .transpose()?,
            tag_clusters: config
                .tag_clusters
                .as_deref()
                .map(|p| {
                    Ok::<_, Error>(boxed(Box::new(TagClusterSource::new(
                        TagClusters::from_jsonl(p)?,
                    ))))
                })
                .transpose()?,
            captions: config
                .captions
                .as_deref()
                .map(|p| {
                    Ok::<_, Error>(boxed(Box::new(CaptionSource::new(CaptionCorpus::from_file(
                        p,
                    )?))))
                })
                .transpose()?,
        })
    }
}

fn measure_with(source: &Option<Box<dyn SourceClient>>, tuple: &CandidateTuple) -> Measurement {
    match source {
        Some(client) => client.measure(tuple),
        None => Measurement::Unmeasured,
    }
}

/// Measure every signal for every tuple, then fuse them into pi with the
/// classifier trained from the configured labeled sample.
fn corroborate_stage(
    config: &PipelineConfig,
    in_path: &Path,
    out_path: &Path,
) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Corroborate);
    let rows = read_staging(in_path, 0)?;
    report.in_count = rows.len();

    let sources = CorroborationSources::load(config)?;

    // distinct gathering sources per (s, p, o) key
    let mut multiplicity: HashMap<(String, String, String), HashSet<String>> = HashMap::new();
    for (tuple, _) in &rows {
        multiplicity
            .entry(tuple.spo_key())
            .or_default()
            .insert(tuple.source.clone());
    }

    let mut measured: Vec<(CandidateTuple, SignalVector)> = rows
        .iter()
        .map(|(tuple, _)| {
            let sv = SignalVector {
                wikipedia: measure_with(&sources.wikipedia, tuple),
                simple_wikipedia: measure_with(&sources.simple_wikipedia, tuple),
                snippets: Measurement::Unmeasured,
                books: Measurement::Unmeasured,
                image_tags: measure_with(&sources.image_tags, tuple),
                captions: measure_with(&sources.captions, tuple),
                tag_cluster_hit: measure_with(&sources.tag_clusters, tuple),
                source_multiplicity: Measurement::Count(
                    multiplicity[&tuple.spo_key()].len() as u32,
                ),
            };
            (tuple.clone(), sv)
        })
        .collect();

    // budgeted sources only for the best-evidenced candidates
    if sources.snippets.is_some() {
        for idx in prioritize_for_expensive_sources(&measured, config.snippet_budget) {
            let tuple = measured[idx].0.clone();
            measured[idx].1.snippets = measure_with(&sources.snippets, &tuple);
        }
    }
    if sources.books.is_some() {
        for idx in prioritize_for_expensive_sources(&measured, config.books_budget) {
            let tuple = measured[idx].0.clone();
            measured[idx].1.books = measure_with(&sources.books, &tuple);
        }
    }

    let labeled_path = config.labeled_signals.as_deref().ok_or_else(|| {
        Error::Config("corroborate needs labeled_signals training data".into())
    })?;
    let labeled = load_labeled_signals(labeled_path)?;
    let model = train_plausibility_classifier(&labeled, config.laplace)?;

    let mut lines = String::new();
    for ((tuple, _), (_, sv)) in rows.iter().zip(&measured) {
        let pi = model.score(sv);
        lines.push_str(&tuple.to_tsv_line());
        lines.push('\t');
        lines.push_str(&render_float(pi));
        lines.push('\n');
    }
    write_file(out_path, &lines)?;
    report.out_count = rows.len();
    Ok(report)
}

fn rank_stage(in_path: &Path, out_path: &Path) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Rank);
    let rows = read_staging(in_path, 1)?;
    report.in_count = rows.len();

    let with_pi: Vec<(CandidateTuple, f64)> = rows
        .into_iter()
        .map(|(tuple, extra)| (tuple, extra[0]))
        .collect();
    let before = with_pi.len();
    let merged = merge_duplicates(with_pi);
    let merged_away = before - merged.len();
    let scored = kb_distribution(merged)?;

    let mut lines = String::new();
    for t in &scored {
        lines.push_str(&t.tuple.to_tsv_line());
        for value in [t.pi, t.p_spo, t.tau, t.sigma] {
            lines.push('\t');
            lines.push_str(&render_float(value));
        }
        lines.push('\n');
    }
    write_file(out_path, &lines)?;
    report.out_count = scored.len();
    if merged_away > 0 {
        report.dropped.insert("merged_duplicate".into(), merged_away);
    }
    Ok(report)
}

#[derive(Serialize)]
struct ClusterRecord {
    so_cluster: usize,
    members: Vec<(String, String, f64)>,
    coupled_p_clusters: Vec<CoupledPCluster>,
}

#[derive(Serialize)]
struct CoupledPCluster {
    p_cluster: usize,
    w: f64,
    phrases: Vec<(String, f64)>,
}

/// Factorize each domain slice and write one cluster JSONL per slice into
/// the output directory.
fn group_stage(
    config: &PipelineConfig,
    seed: u64,
    in_path: &Path,
    out_dir: &Path,
) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Group);
    let kb = read_kb(in_path)?;
    report.in_count = kb.len();

    let domain_map: HashMap<String, String> = match &config.domain_map {
        Some(path) => {
            let pairs = crate::lexicon::load_tsv_pairs(path)?;
            pairs.into_iter().collect()
        }
        None => HashMap::new(),
    };

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let solver = SolverConfig {
        epochs: config.group.epochs,
        learning_rate: config.group.learning_rate,
        learning_rate_decay: config.group.learning_rate_decay,
        ortho_weight: config.group.ortho_weight,
        seed,
    };

    let mut slices: Vec<(String, Vec<ScoredTriple>)> =
        slice_by_domain(kb, &domain_map).into_iter().collect();
    slices.sort_by(|a, b| a.0.cmp(&b.0));

    let mut out_count = 0usize;
    let mut chosen = serde_json::Map::new();
    for (domain, triples) in slices {
        let matrix = build_so_p_matrix(&triples);
        if matrix.rows() == 0 || matrix.cols() == 0 {
            continue;
        }
        let k_grid: Vec<usize> = config
            .group
            .k_grid
            .iter()
            .copied()
            .map(|k| k.min(matrix.rows().saturating_sub(1).max(1)))
            .collect();
        let l_grid: Vec<usize> = config
            .group
            .l_grid
            .iter()
            .copied()
            .map(|l| l.min(matrix.cols().saturating_sub(1).max(1)))
            .collect();
        let outcome = grid_search(&matrix, &k_grid, &l_grid, &config.group.rho_grid, &solver)?;
        let clustering = threshold_clusters(&outcome.best, config.group.delta);

        let mut records = Vec::new();
        for (mu, so_cluster) in clustering.so_clusters.iter().enumerate() {
            let members: Vec<(String, String, f64)> = so_cluster
                .members
                .iter()
                .map(|&(i, weight)| {
                    let (s, o) = &matrix.so_pairs[i];
                    (s.clone(), o.clone(), weight)
                })
                .collect();
            let coupled: Vec<CoupledPCluster> = clustering
                .couplings
                .iter()
                .filter(|&&(m, _, _)| m == mu)
                .map(|&(_, nu, w)| CoupledPCluster {
                    p_cluster: nu,
                    w,
                    phrases: clustering.p_clusters[nu]
                        .members
                        .iter()
                        .map(|&(j, weight)| (matrix.p_phrases[j].clone(), weight))
                        .collect(),
                })
                .collect();
            records.push(ClusterRecord {
                so_cluster: mu,
                members,
                coupled_p_clusters: coupled,
            });
        }
        write_jsonl(&out_dir.join(format!("{domain}.jsonl")), &records)?;
        out_count += records.len();
        chosen.insert(
            domain,
            serde_json::json!({
                "k": outcome.best.k,
                "l": outcome.best.l,
                "rho": outcome.best.rho,
                "final_loss": outcome.best.final_loss(),
            }),
        );
    }
    report.out_count = out_count;
    report.details = serde_json::Value::Object(chosen);
    Ok(report)
}

fn eval_stage(config: &PipelineConfig, in_path: &Path, out_path: &Path) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Eval);
    let kb = read_kb(in_path)?;
    report.in_count = kb.len();

    let lexicons = Lexicons::builtin();
    let mut lines = String::new();
    let mut rows = 0usize;
    let mut push_row = |section: &str, item: &str, metric: &str, value: String| {
        // captured buffer grows row by row
        lines.push_str(&format!("{section}\t{item}\t{metric}\t{value}\n"));
        rows += 1;
    };

    if let Some(path) = &config.eval.taboo_cards {
        let cards = load_taboo_cards(path)?;
        for card in &cards {
            let one = std::slice::from_ref(card);
            push_row(
                "taboo",
                &card.concept,
                "p_or_o",
                render_float(taboo_coverage(&kb, one, TabooMode::POrO)),
            );
            push_row(
                "taboo",
                &card.concept,
                "o_only",
                render_float(taboo_coverage(&kb, one, TabooMode::OOnly)),
            );
        }
        push_row(
            "taboo",
            "aggregate",
            "p_or_o",
            render_float(taboo_coverage(&kb, &cards, TabooMode::POrO)),
        );
        push_row(
            "taboo",
            "aggregate",
            "o_only",
            render_float(taboo_coverage(&kb, &cards, TabooMode::OOnly)),
        );
    }

    if let Some(path) = &config.eval.recall_sentences {
        let sentences = load_recall_sentences(path)?;
        for (idx, sentence) in sentences.iter().enumerate() {
            let one = std::slice::from_ref(sentence);
            push_row(
                "recall",
                &format!("sentence:{idx}"),
                "strict",
                render_float(recall_score(&kb, one, RecallMode::Strict, None)),
            );
            push_row(
                "recall",
                &format!("sentence:{idx}"),
                "relaxed",
                render_float(recall_score(&kb, one, RecallMode::Relaxed, None)),
            );
        }
        let top_k = Some(config.eval.recall_top_k);
        push_row(
            "recall",
            "aggregate",
            "strict",
            render_float(recall_score(&kb, &sentences, RecallMode::Strict, None)),
        );
        push_row(
            "recall",
            "aggregate",
            "relaxed",
            render_float(recall_score(&kb, &sentences, RecallMode::Relaxed, None)),
        );
        push_row(
            "recall",
            "aggregate",
            &format!("strict_top{}", config.eval.recall_top_k),
            render_float(recall_score(&kb, &sentences, RecallMode::Strict, top_k)),
        );
        push_row(
            "recall",
            "aggregate",
            &format!("relaxed_top{}", config.eval.recall_top_k),
            render_float(recall_score(&kb, &sentences, RecallMode::Relaxed, top_k)),
        );
    }

    if let Some(path) = &config.eval.qa_items {
        let items = load_qa_items(path)?;
        for (item_idx, item) in items.iter().enumerate() {
            for (answer_idx, answer) in item.answers.iter().enumerate() {
                let features = qa_features(&item.question, answer, &kb, &lexicons.stopwords);
                let item_id = format!("item:{item_idx}:answer:{answer_idx}");
                for (name, value) in QA_FEATURE_NAMES.iter().zip(features.as_row()) {
                    push_row("qa", &item_id, name, value.to_string());
                }
                push_row(
                    "qa",
                    &item_id,
                    "is_correct",
                    usize::from(answer_idx == item.correct).to_string(),
                );
            }
        }
    }

    write_file(out_path, &lines)?;
    report.out_count = rows;
    Ok(report)
}

// ---------------------------------------------------------------------------
// public entry points

/// Run one stage from `in_path` to `out_path` (group writes a directory).
pub fn run_stage(
    stage: Stage,
    config: &PipelineConfig,
    seed: u64,
    in_path: &Path,
    out_path: &Path,
) -> Result<StageReport> {
    let start = Instant::now();
    let mut report = match stage {
        Stage::Gather => gather_stage(config, out_path)?,
        Stage::Rewrite => rewrite_stage(config, in_path, out_path)?,
        Stage::Extract => extract_stage(in_path, out_path)?,
        Stage::Normalize => normalize_stage(config, in_path, out_path)?,
        Stage::Corroborate => corroborate_stage(config, in_path, out_path)?,
        Stage::Rank => rank_stage(in_path, out_path)?,
        Stage::Group => group_stage(config, seed, in_path, out_path)?,
        Stage::Eval => eval_stage(config, in_path, out_path)?,
    };
    report.wall_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Conventional intermediate file names inside a pipeline output directory.
pub fn stage_paths(out_dir: &Path) -> BTreeMap<Stage, PathBuf> {
    let mut paths = BTreeMap::new();
    paths.insert(Stage::Gather, out_dir.join("questions.jsonl"));
    paths.insert(Stage::Rewrite, out_dir.join("statements.jsonl"));
    paths.insert(Stage::Extract, out_dir.join("triples.jsonl"));
    paths.insert(Stage::Normalize, out_dir.join("staging.tsv"));
    paths.insert(Stage::Corroborate, out_dir.join("corroborated.tsv"));
    paths.insert(Stage::Rank, out_dir.join("kb.tsv"));
    paths.insert(Stage::Group, out_dir.join("clusters"));
    paths.insert(Stage::Eval, out_dir.join("eval.tsv"));
    paths
}

/// Run every stage in order with file handoff inside `out_dir`. Group and
/// eval run when their inputs are configured.
pub fn run_pipeline(
    config: &PipelineConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<StageReport>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths = stage_paths(out_dir);
    let mut reports = Vec::new();
    let mut previous: Option<PathBuf> = None;
    for stage in Stage::ALL {
        if stage == Stage::Group && config.domain_map.is_none() && config.group.k_grid.is_empty() {
            continue;
        }
        if stage == Stage::Eval
            && config.eval.taboo_cards.is_none()
            && config.eval.recall_sentences.is_none()
            && config.eval.qa_items.is_none()
        {
            continue;
        }
        let out = &paths[&stage];
        let input = match stage {
            Stage::Gather => PathBuf::new(),
            // group and eval both read the ranked KB
            Stage::Group | Stage::Eval => paths[&Stage::Rank].clone(),
            _ => previous.clone().expect("non-initial stage has an input"),
        };
        let report = run_stage(stage, config, seed, &input, out)?;
        reports.push(report);
        if !matches!(stage, Stage::Group | Stage::Eval) {
            previous = Some(out.clone());
        }
    }
    Ok(reports)
}

/// Ranked lookup over a finished KB file; returns TSV lines.
pub fn query_kb(
    kb_path: &Path,
    subject: Option<&str>,
    key: RankKey,
    top_k: usize,
) -> Result<Vec<String>> {
    let kb = read_kb(kb_path)?;
    let view = rank_view(&kb, key, subject);
    Ok(view
        .into_iter()
        .take(top_k)
        .map(|t| {
            format!(
                "{}\t{}\t{}\t{}",
                t.tuple.to_tsv_line(),
                render_float(t.pi),
                render_float(t.tau),
                render_float(t.sigma)
            )
        })
        .collect())
}
