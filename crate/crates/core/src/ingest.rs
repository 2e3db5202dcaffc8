//! Question gathering: pattern catalog, query-prefix generation, recursive
//! autocomplete probing, and forum-title ingestion.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inflect::pluralize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interrogative {
    Why,
    How,
}

impl Interrogative {
    pub fn as_str(self) -> &'static str {
        match self {
            Interrogative::Why => "why",
            Interrogative::How => "how",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternVerb {
    Is,
    Are,
    Do,
    Does,
    Can,
    Cant,
    Isnt,
    Arent,
    Dont,
    Doesnt,
}

impl PatternVerb {
    pub fn surface(self) -> &'static str {
        match self {
            PatternVerb::Is => "is",
            PatternVerb::Are => "are",
            PatternVerb::Do => "do",
            PatternVerb::Does => "does",
            PatternVerb::Can => "can",
            PatternVerb::Cant => "can't",
            PatternVerb::Isnt => "isn't",
            PatternVerb::Arent => "aren't",
            PatternVerb::Dont => "don't",
            PatternVerb::Doesnt => "doesn't",
        }
    }

    /// Verbs that agree with a plural subject take the `<SUBJS>` placeholder.
    pub fn plural_agreement(self) -> bool {
        matches!(
            self,
            PatternVerb::Are
                | PatternVerb::Do
                | PatternVerb::Can
                | PatternVerb::Cant
                | PatternVerb::Arent
                | PatternVerb::Dont
        )
    }
}

/// One interrogative template, e.g. "why do <SUBJS>".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPattern {
    pub id: String,
    pub template: String,
    pub interrogative: Interrogative,
    pub verb: PatternVerb,
}

impl QuestionPattern {
    fn new(interrogative: Interrogative, verb: PatternVerb, determiner: bool) -> Self {
        let placeholder = if verb.plural_agreement() {
            "<SUBJS>"
        } else {
            "<SUBJ>"
        };
        let template = if determiner {
            format!("{} {} a {placeholder}", interrogative.as_str(), verb.surface())
        } else {
            format!("{} {} {placeholder}", interrogative.as_str(), verb.surface())
        };
        let mut id = format!(
            "{}_{}{}",
            interrogative.as_str(),
            verb.surface().replace('\'', ""),
            if determiner { "_a" } else { "" }
        );
        id = id.replace(' ', "_");
        QuestionPattern {
            id,
            template,
            interrogative,
            verb,
        }
    }

    /// The fixed question prefix before the subject: "why do ".
    pub fn fixed_prefix(&self) -> String {
        format!("{} {} ", self.interrogative.as_str(), self.verb.surface())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PatternSet {
    #[default]
    Base,
    Extended,
}

/// The shipped pattern catalog. The base set is the eleven documented
/// why/how x is/are/do/does/can/can't combinations; the extended set adds
/// "how can't" plus the negated and determiner variants.
pub fn pattern_catalog(set: PatternSet) -> Vec<QuestionPattern> {
    use Interrogative::{How, Why};
    use PatternVerb::*;

    let mut patterns = vec![
        QuestionPattern::new(How, Does, false),
        QuestionPattern::new(Why, Is, false),
        QuestionPattern::new(How, Do, false),
        QuestionPattern::new(Why, Do, false),
        QuestionPattern::new(How, Is, false),
        QuestionPattern::new(Why, Does, false),
        QuestionPattern::new(Why, Are, false),
        QuestionPattern::new(How, Are, false),
        QuestionPattern::new(How, Can, false),
        QuestionPattern::new(Why, Cant, false),
        QuestionPattern::new(Why, Can, false),
    ];
    if set == PatternSet::Extended {
        patterns.extend([
            QuestionPattern::new(How, Cant, false),
            QuestionPattern::new(Why, Isnt, false),
            QuestionPattern::new(Why, Arent, false),
            QuestionPattern::new(Why, Dont, false),
            QuestionPattern::new(Why, Doesnt, false),
            QuestionPattern::new(Why, Is, true),
            QuestionPattern::new(How, Is, true),
            QuestionPattern::new(Why, Does, true),
            QuestionPattern::new(How, Does, true),
            QuestionPattern::new(How, Can, true),
            QuestionPattern::new(Why, Can, true),
            QuestionPattern::new(Why, Cant, true),
            QuestionPattern::new(Why, Isnt, true),
            QuestionPattern::new(Why, Doesnt, true),
        ]);
    }
    patterns
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionSource {
    Autocomplete,
    Forum,
}

/// A harvested interrogative string with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub source: QuestionSource,
    pub provider: String,
    pub pattern_id: Option<String>,
}

/// A generated query prefix awaiting autocomplete probing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPrefix {
    pub prefix: String,
    pub pattern_id: String,
    pub subject: String,
}

/// One prefix per (pattern, subject) pair: `<SUBJS>` takes the pluralized
/// subject, `<SUBJ>` the subject as given.
pub fn generate_query_prefixes(
    patterns: &[QuestionPattern],
    subjects: &[String],
) -> Vec<QueryPrefix> {
    let mut out = Vec::with_capacity(patterns.len() * subjects.len());
    for pattern in patterns {
        for subject in subjects {
            let subject = subject.trim().to_lowercase();
            let filled = if pattern.template.contains("<SUBJS>") {
                pattern.template.replace("<SUBJS>", &pluralize(&subject))
            } else {
                pattern.template.replace("<SUBJ>", &subject)
            };
            let prefix = filled.split_whitespace().collect::<Vec<_>>().join(" ");
            out.push(QueryPrefix {
                prefix,
                pattern_id: pattern.id.clone(),
                subject,
            });
        }
    }
    out
}

/// Supplies autocomplete suggestions for a prefix. Implementations must be
/// safe to call concurrently or serialize internally.
pub trait SuggestionProvider {
    fn name(&self) -> &str;
    fn suggest(&self, prefix: &str) -> Result<Vec<String>>;
}

/// Offline provider backed by a JSONL file of
/// `{"prefix": "...", "suggestions": ["...", ...]}` records. Unknown
/// prefixes yield no suggestions.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    name: String,
    tree: HashMap<String, Vec<String>>,
}

#[derive(Deserialize)]
struct FixtureRecord {
    prefix: String,
    suggestions: Vec<String>,
}

impl FixtureProvider {
    pub fn new(name: impl Into<String>, tree: HashMap<String, Vec<String>>) -> Self {
        FixtureProvider {
            name: name.into(),
            tree,
        }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut tree = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: FixtureRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
            tree.insert(record.prefix.to_lowercase(), record.suggestions);
        }
        Ok(FixtureProvider {
            name: "fixture".to_string(),
            tree,
        })
    }

    /// Every suggestion anywhere in the tree; the oracle for probe tests.
    pub fn all_suggestions(&self) -> HashSet<String> {
        self.tree
            .values()
            .flatten()
            .map(|s| s.to_lowercase())
            .collect()
    }
}

impl SuggestionProvider for FixtureProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn suggest(&self, prefix: &str) -> Result<Vec<String>> {
        Ok(self.tree.get(prefix).cloned().unwrap_or_default())
    }
}

/// Caps the total requests forwarded to the wrapped provider; requests past
/// the budget fail and end up in the skipped-prefix log.
pub struct BudgetedProvider<P> {
    inner: P,
    remaining: std::sync::atomic::AtomicUsize,
}

impl<P: SuggestionProvider> BudgetedProvider<P> {
    pub fn new(inner: P, budget: usize) -> Self {
        BudgetedProvider {
            inner,
            remaining: std::sync::atomic::AtomicUsize::new(budget),
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining.load(std::sync::atomic::Ordering::Relaxed)
    }
}

impl<P: SuggestionProvider> SuggestionProvider for BudgetedProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn suggest(&self, prefix: &str) -> Result<Vec<String>> {
        let taken = self
            .remaining
            .fetch_update(
                std::sync::atomic::Ordering::Relaxed,
                std::sync::atomic::Ordering::Relaxed,
                |n| n.checked_sub(1),
            )
            .is_ok();
        if !taken {
            return Err(Error::InvalidInput("request budget exhausted".to_string()));
        }
        self.inner.suggest(prefix)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Recurse while the suggestion count stays at or above this.
    pub branch_threshold: usize,
    /// Extra expansion levels beyond the starting prefix.
    pub max_depth: usize,
    pub alphabet: Vec<char>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            branch_threshold: 5,
            max_depth: 3,
            alphabet: ('a'..='z').collect(),
        }
    }
}

#[derive(Debug, Default)]
pub struct ProbeOutcome {
    pub questions: Vec<Question>,
    pub skipped_prefixes: Vec<String>,
    pub queried_prefixes: usize,
}

/// Depth-first recursive prober. One `Prober` is one run: no prefix is ever
/// queried twice, across all starting prefixes.
pub struct Prober<'a, P: SuggestionProvider + ?Sized> {
    provider: &'a P,
    config: ProbeConfig,
    visited: HashSet<String>,
    seen_questions: HashSet<String>,
}

impl<'a, P: SuggestionProvider + ?Sized> Prober<'a, P> {
    pub fn new(provider: &'a P, config: ProbeConfig) -> Self {
        Prober {
            provider,
            config,
            visited: HashSet::new(),
            seen_questions: HashSet::new(),
        }
    }

    /// Probe one starting prefix: query it, recurse with alphabet-extended
    /// prefixes while the suggestion count stays at or above the branch
    /// threshold, and collect the deduplicated union of suggestions.
    pub fn probe(&mut self, prefix: &str, pattern: Option<&QuestionPattern>) -> ProbeOutcome {
        let mut outcome = ProbeOutcome::default();
        self.dfs(&prefix.to_lowercase(), 0, pattern, &mut outcome);
        outcome
    }

    fn dfs(
        &mut self,
        prefix: &str,
        depth: usize,
        pattern: Option<&QuestionPattern>,
        outcome: &mut ProbeOutcome,
    ) {
        if !self.visited.insert(prefix.to_string()) {
            return;
        }
        let suggestions = match self.provider.suggest(prefix) {
            Ok(s) => s,
            Err(_) => {
                // partial harvest is fine; remember what was skipped
                outcome.skipped_prefixes.push(prefix.to_string());
                return;
            }
        };
        outcome.queried_prefixes += 1;
        for suggestion in &suggestions {
            let text = suggestion.trim().to_lowercase();
            if text.is_empty() {
                continue;
            }
            let key = normalize_question_text(&text);
            if !self.seen_questions.insert(key) {
                continue;
            }
            let pattern_id = pattern
                .filter(|p| text.starts_with(p.interrogative.as_str()))
                .map(|p| p.id.clone());
            outcome.questions.push(Question {
                text,
                source: QuestionSource::Autocomplete,
                provider: self.provider.name().to_string(),
                pattern_id,
            });
        }
        if suggestions.len() >= self.config.branch_threshold && depth < self.config.max_depth {
            for c in self.config.alphabet.clone() {
                let child = format!("{prefix} {c}");
                self.dfs(&child, depth + 1, pattern, outcome);
            }
        }
    }
}

/// Single-prefix probe with a fresh visited set.
pub fn probe_autocomplete<P: SuggestionProvider + ?Sized>(
    provider: &P,
    prefix: &str,
    config: ProbeConfig,
) -> ProbeOutcome {
    Prober::new(provider, config).probe(prefix, None)
}

#[derive(Debug, Default)]
pub struct ForumIngest {
    pub questions: Vec<Question>,
    pub malformed_lines: usize,
    pub filtered_lines: usize,
}

/// Retain titles whose lowercase form starts with a catalog pattern's fixed
/// prefix; non-UTF-8 lines are skipped and counted.
pub fn ingest_forum_questions<R: BufRead>(
    reader: R,
    patterns: &[QuestionPattern],
    provider_name: &str,
) -> Result<ForumIngest> {
    // one pattern per distinct fixed prefix, first catalog entry wins
    let mut by_prefix: Vec<(String, &QuestionPattern)> = Vec::new();
    for p in patterns {
        let prefix = p.fixed_prefix();
        if !by_prefix.iter().any(|(q, _)| *q == prefix) {
            by_prefix.push((prefix, p));
        }
    }

    let mut out = ForumIngest::default();
    for raw in reader.split(b'\n') {
        let raw = raw.map_err(|e| Error::io("<forum corpus>", e))?;
        let line = match String::from_utf8(raw) {
            Ok(l) => l,
            Err(_) => {
                out.malformed_lines += 1;
                continue;
            }
        };
        let text = line.trim().to_lowercase();
        if text.is_empty() {
            continue;
        }
        match by_prefix.iter().find(|(prefix, _)| text.starts_with(prefix)) {
            Some((_, pattern)) => out.questions.push(Question {
                text,
                source: QuestionSource::Forum,
                provider: provider_name.to_string(),
                pattern_id: Some(pattern.id.clone()),
            }),
            None => out.filtered_lines += 1,
        }
    }
    Ok(out)
}

fn normalize_question_text(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Case-insensitive, whitespace-normalized exact deduplication; the first
/// occurrence keeps its provenance.
pub fn dedupe_questions(questions: Vec<Question>) -> Vec<Question> {
    let mut seen = HashSet::new();
    questions
        .into_iter()
        .filter(|q| seen.insert(normalize_question_text(&q.text)))
        .collect()
}
