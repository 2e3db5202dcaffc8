//! Evidence gathering for candidate tuples.
//!
//! Each source produces a per-tuple count. "Unmeasured" is distinct from
//! zero: a tuple that was never sent to a budgeted source must not look like
//! a tuple the source rejected. Offline scanners over local corpora stand in
//! for live services behind the same interface.

pub mod bayes;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inflect::{pluralize, singularize, singularize_word, verb_infinitive_word, verb_third_person_word};
use crate::normalize::CandidateTuple;

/// A count from one evidence source, or the mark that the source was never
/// consulted for this tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measurement {
    Unmeasured,
    Count(u32),
}

impl Measurement {
    pub fn count(self) -> Option<u32> {
        match self {
            Measurement::Unmeasured => None,
            Measurement::Count(c) => Some(c),
        }
    }

    pub fn render(self) -> String {
        match self {
            Measurement::Unmeasured => "\\N".to_string(),
            Measurement::Count(c) => c.to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<Measurement> {
        match s {
            "\\N" | "-" => Some(Measurement::Unmeasured),
            other => other.parse().ok().map(Measurement::Count),
        }
    }
}

/// Per-tuple evidence counts from every corroboration source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalVector {
    pub wikipedia: Measurement,
    pub simple_wikipedia: Measurement,
    pub snippets: Measurement,
    pub books: Measurement,
    pub image_tags: Measurement,
    pub captions: Measurement,
    pub tag_cluster_hit: Measurement,
    pub source_multiplicity: Measurement,
}

pub const SIGNAL_FIELD_NAMES: [&str; 8] = [
    "wikipedia",
    "simple_wikipedia",
    "snippets",
    "books",
    "image_tags",
    "captions",
    "tag_cluster_hit",
    "source_multiplicity",
];

impl SignalVector {
    pub fn unmeasured() -> Self {
        SignalVector {
            wikipedia: Measurement::Unmeasured,
            simple_wikipedia: Measurement::Unmeasured,
            snippets: Measurement::Unmeasured,
            books: Measurement::Unmeasured,
            image_tags: Measurement::Unmeasured,
            captions: Measurement::Unmeasured,
            tag_cluster_hit: Measurement::Unmeasured,
            source_multiplicity: Measurement::Unmeasured,
        }
    }

    pub fn fields(&self) -> [Measurement; 8] {
        [
            self.wikipedia,
            self.simple_wikipedia,
            self.snippets,
            self.books,
            self.image_tags,
            self.captions,
            self.tag_cluster_hit,
            self.source_multiplicity,
        ]
    }

    /// Measured evidence from the cheap (unbudgeted) sources; used to decide
    /// which tuples earn queries against the budgeted ones.
    pub fn cheap_evidence(&self) -> u64 {
        [
            self.wikipedia,
            self.simple_wikipedia,
            self.image_tags,
            self.captions,
            self.tag_cluster_hit,
        ]
        .iter()
        .filter_map(|m| m.count())
        .map(u64::from)
        .sum()
    }
}

/// One corroboration source: given a tuple, a count or unmeasured. Live
/// clients and offline corpus scanners are interchangeable behind this.
pub trait SourceClient {
    fn name(&self) -> &str;
    fn measure(&self, tuple: &CandidateTuple) -> Measurement;
}

// ---------------------------------------------------------------------------
// token matching

/// Tokens a corpus word can stand for: itself, its singular, its infinitive.
fn token_forms(word: &str) -> [String; 3] {
    [
        word.to_string(),
        singularize_word(word),
        verb_infinitive_word(word),
    ]
}

fn normalize_term(term: &str) -> Vec<String> {
    split_camel_case(term)
        .split_whitespace()
        .map(|w| w.to_lowercase())
        .collect()
}

/// "hasColor" -> "has color" so specialized predicates match plain text.
pub(crate) fn split_camel_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 4);
    for c in text.chars() {
        if c.is_uppercase() {
            out.push(' ');
            for lc in c.to_lowercase() {
                out.push(lc);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn token_set(tokens: &[String]) -> HashSet<String> {
    tokens
        .iter()
        .flat_map(|w| token_forms(w))
        .collect()
}

/// True when every token of `term` (after normalization) appears in the set.
fn contains_term(set: &HashSet<String>, term: &str) -> bool {
    let words = normalize_term(term);
    !words.is_empty() && words.iter().all(|w| set.contains(w))
}

fn contains_all_terms(text_tokens: &[String], tuple: &CandidateTuple) -> bool {
    let set = token_set(text_tokens);
    contains_term(&set, &tuple.subject)
        && contains_term(&set, &tuple.predicate)
        && contains_term(&set, &tuple.object)
}

// ---------------------------------------------------------------------------
// encyclopedia-style text corpora

/// Text segments keyed by subject: either one `<subject>.txt` per file in a
/// directory, or a single file with `#SUBJECT: <name>` headers.
#[derive(Debug, Clone, Default)]
pub struct TextCorpus {
    segments: HashMap<String, Vec<String>>,
}

impl TextCorpus {
    pub fn new(segments: HashMap<String, Vec<String>>) -> Self {
        TextCorpus { segments }
    }

    pub fn from_directory(dir: &Path) -> Result<Self> {
        let mut segments = HashMap::new();
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let subject = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .replace('_', " ")
                .to_lowercase();
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            segments.insert(subject, tokenize_text(&text));
        }
        Ok(TextCorpus { segments })
    }

    pub fn from_segmented_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut segments: HashMap<String, Vec<String>> = HashMap::new();
        let mut current: Option<String> = None;
        for line in text.lines() {
            if let Some(subject) = line.strip_prefix("#SUBJECT:") {
                current = Some(subject.trim().to_lowercase());
                segments.entry(current.clone().unwrap()).or_default();
            } else if let Some(subject) = &current {
                segments
                    .get_mut(subject)
                    .unwrap()
                    .extend(tokenize_text(line));
            }
        }
        Ok(TextCorpus { segments })
    }

    pub fn segment(&self, subject: &str) -> Option<&[String]> {
        self.segments.get(subject).map(|v| v.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn tokenize_text(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            let w = w
                .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
                .to_lowercase();
            match w.strip_suffix("'s").or_else(|| w.strip_suffix('\'')) {
                Some(base) => base.to_string(),
                None => w,
            }
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Count P-with-O co-occurrences inside a window of `n` successive words of
/// the subject's segment: every O-token occurrence with some P token within
/// the same window counts once. Absent subjects are unmeasured.
pub fn window_cooccurrence(
    corpus: &TextCorpus,
    tuple: &CandidateTuple,
    n: usize,
) -> Measurement {
    let Some(segment) = corpus.segment(&tuple.subject) else {
        return Measurement::Unmeasured;
    };
    Measurement::Count(window_count(segment, &tuple.predicate, &tuple.object, n))
}

fn window_count(tokens: &[String], predicate: &str, object: &str, n: usize) -> u32 {
    if n == 0 {
        return 0;
    }
    let p_words = normalize_term(predicate);
    let o_words = normalize_term(object);
    let matches = |word: &str, terms: &[String]| {
        let forms = token_forms(word);
        terms.iter().any(|t| forms.contains(t))
    };
    let p_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, w)| matches(w, &p_words))
        .map(|(i, _)| i)
        .collect();
    let mut count = 0;
    for (j, word) in tokens.iter().enumerate() {
        if matches(word, &o_words)
            && p_positions.iter().any(|&i| i.abs_diff(j) < n && i != j)
        {
            count += 1;
        }
    }
    count
}

// ---------------------------------------------------------------------------
// books

/// Disjunctions of surface forms for S, P and O, combined in order:
/// (lion, live in, savanna) -> "lion OR lions live OR lives in savanna OR savannas".
pub fn build_books_query(tuple: &CandidateTuple) -> String {
    let mut parts = vec![noun_disjunction(&tuple.subject)];
    parts.push(predicate_disjunction(&tuple.predicate));
    parts.push(noun_disjunction(&tuple.object));
    parts.join(" ")
}

fn noun_disjunction(phrase: &str) -> String {
    let singular = phrase.to_lowercase();
    let plural = pluralize(&singular);
    if plural == singular {
        singular
    } else {
        format!("{singular} OR {plural}")
    }
}

fn predicate_disjunction(predicate: &str) -> String {
    let spaced = split_camel_case(predicate);
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    let Some((&head, tail)) = tokens.split_first() else {
        return String::new();
    };
    // modals carry no inflection; the verb after them takes the disjunction
    const MODALS: &[&str] = &["can", "could", "may", "might", "must", "shall", "should", "will", "would"];
    if MODALS.contains(&head) && !tail.is_empty() {
        return format!("{head} {}", predicate_disjunction(&tail.join(" ")));
    }
    let infinitive = verb_infinitive_word(head);
    let third = verb_third_person_word(&infinitive);
    let head_part = if third == infinitive {
        infinitive
    } else {
        format!("{infinitive} OR {third}")
    };
    if tail.is_empty() {
        head_part
    } else {
        format!("{head_part} {}", tail.join(" "))
    }
}

/// Plain text treated as a books corpus, one passage per line.
#[derive(Debug, Clone, Default)]
pub struct BooksCorpus {
    passages: Vec<Vec<String>>,
}

impl BooksCorpus {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(BooksCorpus {
            passages: text.lines().map(tokenize_text).collect(),
        })
    }

    /// Passages matching the conjunction of the S, P, O disjunctions.
    pub fn count_matches(&self, tuple: &CandidateTuple) -> u32 {
        self.passages
            .iter()
            .filter(|p| contains_all_terms(p, tuple))
            .count() as u32
    }
}

// ---------------------------------------------------------------------------
// answer snippets

/// Supplies answer snippets for an (S, O) keyword query.
pub trait SnippetProvider {
    fn name(&self) -> &str;
    fn snippets(&self, subject: &str, object: &str) -> Result<Vec<String>>;
}

/// Offline snippets from JSONL records
/// `{"subject": "...", "object": "...", "snippets": ["...", ...]}`.
#[derive(Debug, Clone, Default)]
pub struct FixtureSnippets {
    map: HashMap<(String, String), Vec<String>>,
}

#[derive(Deserialize)]
struct SnippetRecord {
    subject: String,
    object: String,
    snippets: Vec<String>,
}

impl FixtureSnippets {
    pub fn new(map: HashMap<(String, String), Vec<String>>) -> Self {
        FixtureSnippets { map }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: SnippetRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
            map.insert(
                (record.subject.to_lowercase(), record.object.to_lowercase()),
                record.snippets,
            );
        }
        Ok(FixtureSnippets { map })
    }
}

impl SnippetProvider for FixtureSnippets {
    fn name(&self) -> &str {
        "fixture"
    }

    fn snippets(&self, subject: &str, object: &str) -> Result<Vec<String>> {
        Ok(self
            .map
            .get(&(subject.to_lowercase(), object.to_lowercase()))
            .cloned()
            .unwrap_or_default())
    }
}

/// Of the first `top_k` snippets for the tuple's (S, O) query, how many
/// contain all of S, P and O. Provider failure is unmeasured, not fatal.
pub fn snippet_support<P: SnippetProvider + ?Sized>(
    provider: &P,
    tuple: &CandidateTuple,
    top_k: usize,
) -> Measurement {
    let object_head = singularize(&tuple.object);
    match provider.snippets(&tuple.subject, &object_head) {
        Err(_) => Measurement::Unmeasured,
        Ok(snippets) => {
            let hits = snippets
                .iter()
                .take(top_k)
                .filter(|s| contains_all_terms(&tokenize_text(s), tuple))
                .count();
            Measurement::Count(hits as u32)
        }
    }
}

// ---------------------------------------------------------------------------
// image tags and tag clusters

/// Per-image human tag sets, from JSONL `{"image_id": "...", "tags": [...]}`.
#[derive(Debug, Clone, Default)]
pub struct ImageTagData {
    images: Vec<HashSet<String>>,
}

#[derive(Deserialize)]
struct ImageRecord {
    #[serde(rename = "image_id")]
    _image_id: String,
    tags: Vec<String>,
}

impl ImageTagData {
    pub fn new(images: Vec<HashSet<String>>) -> Self {
        ImageTagData { images }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut images = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ImageRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
            images.push(normalize_tags(&record.tags));
        }
        Ok(ImageTagData { images })
    }
}

fn normalize_tags(tags: &[String]) -> HashSet<String> {
    tags.iter().map(|t| singularize(&t.to_lowercase())).collect()
}

/// Images tagged with both S and O. When s == o this degenerates to the
/// count of images carrying the tag at all.
pub fn image_tag_cooccurrence(data: &ImageTagData, subject: &str, object: &str) -> u32 {
    let s = singularize(&subject.to_lowercase());
    let o = singularize(&object.to_lowercase());
    data.images
        .iter()
        .filter(|tags| tags.contains(&s) && tags.contains(&o))
        .count() as u32
}

/// Co-occurring tag clusters, from JSONL `{"cluster_id": "...", "tags": [...]}`.
#[derive(Debug, Clone, Default)]
pub struct TagClusters {
    clusters: Vec<HashSet<String>>,
}

#[derive(Deserialize)]
struct ClusterRecord {
    #[serde(rename = "cluster_id")]
    _cluster_id: String,
    tags: Vec<String>,
}

impl TagClusters {
    pub fn new(clusters: Vec<HashSet<String>>) -> Self {
        TagClusters { clusters }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut clusters = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ClusterRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
            clusters.push(normalize_tags(&record.tags));
        }
        Ok(TagClusters { clusters })
    }
}

/// 1 when any cluster contains both S and O, else 0.
pub fn tag_cluster_hit(clusters: &TagClusters, subject: &str, object: &str) -> u32 {
    let s = singularize(&subject.to_lowercase());
    let o = singularize(&object.to_lowercase());
    u32::from(
        clusters
            .clusters
            .iter()
            .any(|tags| tags.contains(&s) && tags.contains(&o)),
    )
}

/// Captions are one description per line; a caption supports a tuple when it
/// mentions S together with P and O.
#[derive(Debug, Clone, Default)]
pub struct CaptionCorpus {
    captions: Vec<Vec<String>>,
}

impl CaptionCorpus {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(CaptionCorpus {
            captions: text.lines().map(tokenize_text).collect(),
        })
    }

    pub fn count_matches(&self, tuple: &CandidateTuple) -> u32 {
        self.captions
            .iter()
            .filter(|c| contains_all_terms(c, tuple))
            .count() as u32
    }
}

// ---------------------------------------------------------------------------
// scanners wrapped as source clients

/// Window co-occurrence over an encyclopedia-style corpus.
pub struct WindowSource {
    name: String,
    corpus: TextCorpus,
    window: usize,
}

impl WindowSource {
    pub fn new(name: impl Into<String>, corpus: TextCorpus, window: usize) -> Self {
        WindowSource {
            name: name.into(),
            corpus,
            window,
        }
    }
}

impl SourceClient for WindowSource {
    fn name(&self) -> &str {
        &self.name
    }
    fn measure(&self, tuple: &CandidateTuple) -> Measurement {
        window_cooccurrence(&self.corpus, tuple, self.window)
    }
}

/// Answer-snippet containment counting over a snippet provider.
pub struct SnippetSource<P> {
    provider: P,
    top_k: usize,
}

impl<P: SnippetProvider> SnippetSource<P> {
    pub fn new(provider: P, top_k: usize) -> Self {
        SnippetSource { provider, top_k }
    }
}

impl<P: SnippetProvider> SourceClient for SnippetSource<P> {
    fn name(&self) -> &str {
        "snippets"
    }
    fn measure(&self, tuple: &CandidateTuple) -> Measurement {
        snippet_support(&self.provider, tuple, self.top_k)
    }
}

/// Passage matching against a books corpus.
pub struct BooksSource {
    corpus: BooksCorpus,
}

impl BooksSource {
    pub fn new(corpus: BooksCorpus) -> Self {
        BooksSource { corpus }
    }
}

impl SourceClient for BooksSource {
    fn name(&self) -> &str {
        "books"
    }
    fn measure(&self, tuple: &CandidateTuple) -> Measurement {
        Measurement::Count(self.corpus.count_matches(tuple))
    }
}

/// Joint S and O tags on the same image.
pub struct ImageTagSource {
    data: ImageTagData,
}

impl ImageTagSource {
    pub fn new(data: ImageTagData) -> Self {
        ImageTagSource { data }
    }
}

impl SourceClient for ImageTagSource {
    fn name(&self) -> &str {
        "image_tags"
    }
    fn measure(&self, tuple: &CandidateTuple) -> Measurement {
        Measurement::Count(image_tag_cooccurrence(
            &self.data,
            &tuple.subject,
            &tuple.object,
        ))
    }
}

/// Joint S and O membership in a tag cluster.
pub struct TagClusterSource {
    clusters: TagClusters,
}

impl TagClusterSource {
    pub fn new(clusters: TagClusters) -> Self {
        TagClusterSource { clusters }
    }
}

impl SourceClient for TagClusterSource {
    fn name(&self) -> &str {
        "tag_cluster_hit"
    }
    fn measure(&self, tuple: &CandidateTuple) -> Measurement {
        Measurement::Count(tag_cluster_hit(
            &self.clusters,
            &tuple.subject,
            &tuple.object,
        ))
    }
}

/// Caption lines mentioning all of S, P and O.
pub struct CaptionSource {
    corpus: CaptionCorpus,
}

impl CaptionSource {
    pub fn new(corpus: CaptionCorpus) -> Self {
        CaptionSource { corpus }
    }
}

impl SourceClient for CaptionSource {
    fn name(&self) -> &str {
        "captions"
    }
    fn measure(&self, tuple: &CandidateTuple) -> Measurement {
        Measurement::Count(self.corpus.count_matches(tuple))
    }
}

// ---------------------------------------------------------------------------
// budget prioritization

/// Order tuples for the budgeted sources: descending measured cheap-source
/// evidence, ties by subject then input position. Returns the indices of the
/// first `budget` tuples in that order.
pub fn prioritize_for_expensive_sources(
    tuples: &[(CandidateTuple, SignalVector)],
    budget: usize,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tuples.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, sa) = &tuples[a];
        let (tb, sb) = &tuples[b];
        sb.cheap_evidence()
            .cmp(&sa.cheap_evidence())
            .then_with(|| ta.subject.cmp(&tb.subject))
            .then_with(|| a.cmp(&b))
    });
    order.truncate(budget);
    order
}

// ---------------------------------------------------------------------------
// labeled training data

/// TSV rows: the eight signal fields then the label ("valid"/"invalid" or
/// "1"/"0"); `\N` marks an unmeasured signal.
pub fn load_labeled_signals(path: &Path) -> Result<Vec<(SignalVector, bool)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 9 {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected 9 tab-separated fields, found {}", fields.len()),
            ));
        }
        let mut values = [Measurement::Unmeasured; 8];
        for (slot, field) in values.iter_mut().zip(&fields[..8]) {
            *slot = Measurement::parse(field).ok_or_else(|| {
                Error::parse(path, idx + 1, format!("bad signal value {field:?}"))
            })?;
        }
        let label = match fields[8] {
            "valid" | "1" => true,
            "invalid" | "0" => false,
            other => {
                return Err(Error::parse(path, idx + 1, format!("bad label {other:?}")));
            }
        };
        out.push((
            SignalVector {
                wikipedia: values[0],
                simple_wikipedia: values[1],
                snippets: values[2],
                books: values[3],
                image_tags: values[4],
                captions: values[5],
                tag_cluster_hit: values[6],
                source_multiplicity: values[7],
            },
            label,
        ));
    }
    Ok(out)
}
