//! Canonicalization of raw triples into scored candidate tuples.
//!
//! Pipeline per tuple: singularize subject, lemmatize the predicate, pull
//! modality and negation out into qualifiers, specialize generic copula
//! predicates by object class, strip phatic adverbs, then filter against the
//! seed set and the odd-object list.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::extract::{Extractor, RawTriple};
use crate::inflect::{singularize, singularize_word, verb_infinitive_word};
use crate::lexicon::Lexicons;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Negativity {
    Positive,
    Negative,
}

impl Negativity {
    pub fn as_str(self) -> &'static str {
        match self {
            Negativity::Positive => "positive",
            Negativity::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(Negativity::Positive),
            "negative" => Some(Negativity::Negative),
            _ => None,
        }
    }
}

/// The staging record: (S, P, O, modality, negativity, source, score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTuple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub modality: Option<String>,
    pub negativity: Negativity,
    pub source: String,
    pub score: f64,
}

impl CandidateTuple {
    pub fn spo_key(&self) -> (String, String, String) {
        (
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
        )
    }

    /// Staging TSV row; `\N` marks an absent modality.
    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.subject,
            self.predicate,
            self.object,
            self.modality.as_deref().unwrap_or("\\N"),
            self.negativity.as_str(),
            self.source,
            self.score
        )
    }

    pub fn from_tsv_fields(fields: &[&str]) -> Option<CandidateTuple> {
        if fields.len() < 7 {
            return None;
        }
        Some(CandidateTuple {
            subject: fields[0].to_string(),
            predicate: fields[1].to_string(),
            object: fields[2].to_string(),
            modality: match fields[3] {
                "\\N" => None,
                m => Some(m.to_string()),
            },
            negativity: Negativity::parse(fields[4])?,
            source: fields[5].to_string(),
            score: fields[6].parse().ok()?,
        })
    }
}

/// Why a tuple was removed. Keep-count plus per-reason drop counts always
/// equals the input count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NonseedSubject,
    PersonalPronoun,
    OddObject,
    Degenerate,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NonseedSubject => "nonseed_subject",
            DropReason::PersonalPronoun => "personal_pronoun",
            DropReason::OddObject => "odd_object",
            DropReason::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormalizeOutcome {
    Kept(CandidateTuple),
    Dropped(DropReason),
}

const BE_FORMS: &[&str] = &["is", "are", "am", "was", "were", "be", "been", "being"];
const NEGATED_BE_FORMS: &[&str] = &["isn't", "aren't", "wasn't", "weren't"];
const MODALS: &[&str] = &[
    "can", "could", "may", "might", "must", "shall", "should", "will", "would", "can't", "cannot",
    "couldn't", "won't", "wouldn't", "shouldn't", "mustn't", "shan't",
];
const DO_FORMS: &[&str] = &["do", "does", "did", "don't", "doesn't", "didn't"];

const PERSONAL_PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my", "your",
    "his", "its", "our", "their", "mine", "yours", "hers", "ours", "theirs", "myself", "yourself",
    "himself", "herself", "itself", "ourselves", "themselves",
];

const DETERMINERS: &[&str] = &["a", "an", "the"];

fn adverb_like() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        let lex = Lexicons::builtin();
        lex.modality.union(&lex.phatic).cloned().collect()
    })
}

fn is_adverb_like(word: &str) -> bool {
    word.ends_with("ly") || adverb_like().contains(word)
}

/// Map an inflected predicate to its infinitive form.
///
/// Progressive "be + V-ing" collapses to the bare infinitive (are eating ->
/// eat); passive "be + participle" keeps the participle (is not connected in
/// series -> be not connected in series); a prepositional tail is preserved
/// (lives in -> live in). Specialized predicates containing uppercase pass
/// through untouched.
pub fn lemmatize_verb(predicate: &str) -> String {
    if predicate.chars().any(|c| c.is_uppercase()) {
        return predicate.to_string();
    }
    let tokens: Vec<&str> = predicate.split_whitespace().collect();
    lemmatize_tokens(&tokens)
}

fn lemmatize_tokens(tokens: &[&str]) -> String {
    let Some(&first) = tokens.first() else {
        return String::new();
    };

    // leading adverbs ("often hunts") stay put while the verb is lemmatized
    if is_adverb_like(first) && tokens.len() > 1 {
        return format!("{} {}", first, lemmatize_tokens(&tokens[1..]));
    }

    if BE_FORMS.contains(&first) || NEGATED_BE_FORMS.contains(&first) {
        let mut out: Vec<String> = vec!["be".to_string()];
        if NEGATED_BE_FORMS.contains(&first) {
            out.push("not".to_string());
        }
        let mut rest = &tokens[1..];
        while let Some(&neg) = rest.first() {
            if neg == "not" || neg == "never" {
                out.push(neg.to_string());
                rest = &rest[1..];
            } else {
                break;
            }
        }
        match rest.first() {
            Some(&verb) if verb.ends_with("ing") => {
                // progressive: drop the auxiliary, uninflect the verb
                let mut out: Vec<String> = out.into_iter().skip(1).collect();
                out.push(verb_infinitive_word(verb));
                out.extend(rest[1..].iter().map(|t| t.to_string()));
                out.join(" ")
            }
            Some(_) => {
                // passive or predicative: keep the complement as-is
                out.extend(rest.iter().map(|t| t.to_string()));
                out.join(" ")
            }
            None => out.join(" "),
        }
    } else if MODALS.contains(&first) || DO_FORMS.contains(&first) {
        if tokens.len() == 1 {
            first.to_string()
        } else {
            format!("{} {}", first, lemmatize_tokens(&tokens[1..]))
        }
    } else {
        let mut out = vec![verb_infinitive_word(first)];
        out.extend(tokens[1..].iter().map(|t| t.to_string()));
        out.join(" ")
    }
}

/// Result of pulling a modality qualifier out of a tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityExtraction {
    pub predicate: String,
    pub object: String,
    pub modality: Option<String>,
    /// "never" (logical complement of "always") also flips polarity.
    pub negates: bool,
}

/// Remove modality-lexicon words from P and O; the first one found becomes
/// the qualifier, the rest are dropped. "never" records modality "always"
/// and sets the negation flag.
pub fn extract_modality(predicate: &str, object: &str, lexicons: &Lexicons) -> ModalityExtraction {
    let mut modality: Option<String> = None;
    let mut negates = false;
    let mut strip = |text: &str| -> String {
        let mut kept = Vec::new();
        for word in text.split_whitespace() {
            if lexicons.modality.contains(word) {
                if word == "never" {
                    negates = true;
                    modality.get_or_insert_with(|| "always".to_string());
                } else {
                    modality.get_or_insert_with(|| word.to_string());
                }
            } else {
                kept.push(word);
            }
        }
        kept.join(" ")
    };
    let predicate = strip(predicate);
    let object = strip(object);
    ModalityExtraction {
        predicate,
        object,
        modality,
        negates,
    }
}

/// Strip negation tokens from the predicate and report the polarity.
/// `carried_flag` is the negation a dropped auxiliary left on the statement.
pub fn extract_negation(predicate: &str, carried_flag: bool) -> (String, Negativity) {
    let mut negative = carried_flag;
    let mut kept: Vec<String> = Vec::new();
    for word in predicate.split_whitespace() {
        match word {
            "not" | "never" => negative = true,
            "cannot" => {
                negative = true;
                kept.push("can".to_string());
            }
            w if w.ends_with("n't") => {
                negative = true;
                match &w[..w.len() - 3] {
                    "ca" => kept.push("can".to_string()),
                    "wo" => kept.push("will".to_string()),
                    // do-support disappears with its negation
                    "do" | "does" | "did" => {}
                    "is" | "are" | "was" | "were" => kept.push("be".to_string()),
                    base => kept.push(base.to_string()),
                }
            }
            w => kept.push(w.to_string()),
        }
    }
    let negativity = if negative {
        Negativity::Negative
    } else {
        Negativity::Positive
    };
    (kept.join(" "), negativity)
}

/// Replace a bare generic predicate with a class-specific one chosen by the
/// object's head word (after singularization).
pub fn specialize_predicate(predicate: &str, object: &str, lexicons: &Lexicons) -> String {
    let head = object
        .split_whitespace()
        .last()
        .map(singularize_word)
        .unwrap_or_default();
    match predicate {
        "be" | "is" | "are" => {
            if lexicons.colors.contains(&head) {
                "hasColor".to_string()
            } else if lexicons.body_parts.contains(&head) {
                "hasBodyPart".to_string()
            } else {
                "hasProperty".to_string()
            }
        }
        "have" | "has" if lexicons.body_parts.contains(&head) => "hasPhysicalPart".to_string(),
        _ => predicate.to_string(),
    }
}

fn remove_phatic(text: &str, lexicons: &Lexicons) -> String {
    let kept: Vec<&str> = text
        .split_whitespace()
        .filter(|w| !lexicons.phatic.contains(*w))
        .collect();
    kept.join(" ")
}

fn strip_leading_determiners(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut start = 0;
    while start < words.len() && DETERMINERS.contains(&words[start]) {
        start += 1;
    }
    words[start..].join(" ")
}

fn contains_personal_pronoun(text: &str) -> bool {
    text.split_whitespace()
        .any(|w| PERSONAL_PRONOUNS.contains(&w))
}

/// Seed-set and blacklist filtering. `None` means keep.
pub fn filter_candidate(
    tuple: &CandidateTuple,
    seed_subjects: &HashSet<String>,
    lexicons: &Lexicons,
) -> Option<DropReason> {
    if contains_personal_pronoun(&tuple.subject) || contains_personal_pronoun(&tuple.object) {
        return Some(DropReason::PersonalPronoun);
    }
    if !seed_subjects.contains(&tuple.subject) {
        return Some(DropReason::NonseedSubject);
    }
    if tuple
        .object
        .split_whitespace()
        .any(|w| lexicons.odd_objects.contains(w))
    {
        return Some(DropReason::OddObject);
    }
    None
}

fn extractor_confidence(extractor: Extractor) -> f64 {
    // placeholder pattern confidence; corroboration overwrites it with pi
    match extractor {
        Extractor::Copula => 1.0,
        Extractor::VerbPhrase => 1.0,
    }
}

/// Apply the full normalization chain to one raw triple.
pub fn normalize_tuple(
    raw: &RawTriple,
    source: &str,
    seed_subjects: &HashSet<String>,
    lexicons: &Lexicons,
) -> NormalizeOutcome {
    let subject_raw = strip_leading_determiners(&raw.subject);
    if subject_raw.is_empty() {
        return NormalizeOutcome::Dropped(DropReason::Degenerate);
    }
    let subject = singularize(&subject_raw);

    let predicate = lemmatize_verb(&raw.predicate);
    let object = strip_leading_determiners(&raw.object);

    let extraction = extract_modality(&predicate, &object, lexicons);
    let (predicate, negativity) =
        extract_negation(&extraction.predicate, raw.negated || extraction.negates);

    let predicate = specialize_predicate(&predicate, &extraction.object, lexicons);
    let predicate = remove_phatic(&predicate, lexicons);
    let object = remove_phatic(&extraction.object, lexicons);
    let object = singularize(&object);

    if predicate.is_empty() || object.is_empty() {
        return NormalizeOutcome::Dropped(DropReason::Degenerate);
    }

    let tuple = CandidateTuple {
        subject,
        predicate,
        object,
        modality: extraction.modality,
        negativity,
        source: source.to_string(),
        score: extractor_confidence(raw.extractor),
    };
    match filter_candidate(&tuple, seed_subjects, lexicons) {
        Some(reason) => NormalizeOutcome::Dropped(reason),
        None => NormalizeOutcome::Kept(tuple),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicons {
        Lexicons::builtin()
    }

    fn seeds(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn raw(s: &str, p: &str, o: &str) -> RawTriple {
        RawTriple {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
            statement_id: 0,
            extractor: Extractor::VerbPhrase,
            negated: false,
        }
    }

    #[test]
    fn lemmatize_examples() {
        assert_eq!(lemmatize_verb("are eating"), "eat");
        assert_eq!(lemmatize_verb("eat"), "eat");
        assert_eq!(lemmatize_verb("lives in"), "live in");
        assert_eq!(lemmatize_verb("is"), "be");
        assert_eq!(lemmatize_verb("often hunts"), "often hunt");
        assert_eq!(lemmatize_verb("can reanimate"), "can reanimate");
        assert_eq!(
            lemmatize_verb("is not connected in series"),
            "be not connected in series"
        );
        assert_eq!(lemmatize_verb("hasColor"), "hasColor");
    }

    #[test]
    fn modality_extraction() {
        let m = extract_modality("often hunt", "zebra", &lex());
        assert_eq!(m.predicate, "hunt");
        assert_eq!(m.object, "zebra");
        assert_eq!(m.modality.as_deref(), Some("often"));
        assert!(!m.negates);

        let m = extract_modality("hunt", "zebra", &lex());
        assert_eq!(m.modality, None);
        assert_eq!(m.predicate, "hunt");

        let m = extract_modality("eat", "sometimes at night", &lex());
        assert_eq!(m.object, "at night");
        assert_eq!(m.modality.as_deref(), Some("sometimes"));
    }

    #[test]
    fn multiple_modality_words_keep_the_first() {
        let m = extract_modality("often usually hunt", "zebra", &lex());
        assert_eq!(m.predicate, "hunt");
        assert_eq!(m.modality.as_deref(), Some("often"));
    }

    #[test]
    fn never_flips_polarity_and_maps_to_always() {
        let m = extract_modality("never forget", "face", &lex());
        assert_eq!(m.predicate, "forget");
        assert_eq!(m.modality.as_deref(), Some("always"));
        assert!(m.negates);
    }

    #[test]
    fn negation_extraction() {
        let (p, n) = extract_negation("be not connected in series", false);
        assert_eq!(p, "be connected in series");
        assert_eq!(n, Negativity::Negative);

        let (p, n) = extract_negation("hunt", false);
        assert_eq!(p, "hunt");
        assert_eq!(n, Negativity::Positive);

        let (p, n) = extract_negation("can't fly", false);
        assert_eq!(p, "can fly");
        assert_eq!(n, Negativity::Negative);

        let (p, n) = extract_negation("like water", true);
        assert_eq!(p, "like water");
        assert_eq!(n, Negativity::Negative);
    }

    #[test]
    fn specialization_by_object_class() {
        assert_eq!(specialize_predicate("be", "grey", &lex()), "hasColor");
        assert_eq!(specialize_predicate("have", "trunk", &lex()), "hasPhysicalPart");
        assert_eq!(specialize_predicate("have", "trunks", &lex()), "hasPhysicalPart");
        assert_eq!(specialize_predicate("be", "endangered", &lex()), "hasProperty");
        assert_eq!(specialize_predicate("be", "mammals", &lex()), "hasProperty");
        assert_eq!(specialize_predicate("hunt", "zebra", &lex()), "hunt");
        assert_eq!(specialize_predicate("have", "fun", &lex()), "have");
    }

    #[test]
    fn normalizes_the_lion_tuple() {
        let out = normalize_tuple(
            &raw("lions", "often hunt", "zebras"),
            "autocomplete:fixture",
            &seeds(&["lion", "zebra"]),
            &lex(),
        );
        match out {
            NormalizeOutcome::Kept(t) => {
                assert_eq!(t.subject, "lion");
                assert_eq!(t.predicate, "hunt");
                assert_eq!(t.object, "zebra");
                assert_eq!(t.modality.as_deref(), Some("often"));
                assert_eq!(t.negativity, Negativity::Positive);
                assert_eq!(t.source, "autocomplete:fixture");
                assert!(t.score > 0.0 && t.score <= 1.0);
            }
            other => panic!("expected kept tuple, got {other:?}"),
        }
    }

    #[test]
    fn pronoun_subjects_are_dropped() {
        let out = normalize_tuple(&raw("we", "like", "dogs"), "forum", &seeds(&["dog"]), &lex());
        assert_eq!(out, NormalizeOutcome::Dropped(DropReason::PersonalPronoun));
    }

    #[test]
    fn nonseed_subjects_are_dropped() {
        let out = normalize_tuple(
            &raw("dancing nuns", "love", "dogs"),
            "forum",
            &seeds(&["dog"]),
            &lex(),
        );
        assert_eq!(out, NormalizeOutcome::Dropped(DropReason::NonseedSubject));
    }

    #[test]
    fn odd_objects_are_dropped() {
        let out = normalize_tuple(
            &raw("cats", "watch", "youtube"),
            "forum",
            &seeds(&["cat"]),
            &lex(),
        );
        assert_eq!(out, NormalizeOutcome::Dropped(DropReason::OddObject));
    }

    #[test]
    fn clean_tuples_are_kept() {
        let out = filter_candidate(
            &CandidateTuple {
                subject: "lion".into(),
                predicate: "hunt".into(),
                object: "zebra".into(),
                modality: None,
                negativity: Negativity::Positive,
                source: "x".into(),
                score: 1.0,
            },
            &seeds(&["lion"]),
            &lex(),
        );
        assert_eq!(out, None);
    }

    #[test]
    fn normalization_is_idempotent() {
        let seeds = seeds(&["lion", "voltmeter", "elephant"]);
        let inputs = [
            raw("lions", "often hunt", "zebras"),
            raw("voltmeter", "is not connected in", "series"),
            raw("elephants", "have", "trunks"),
            raw("elephants", "are", "grey"),
        ];
        for input in &inputs {
            let NormalizeOutcome::Kept(t1) = normalize_tuple(input, "s", &seeds, &lex()) else {
                panic!("fixture tuple was dropped: {input:?}");
            };
            let rewrapped = RawTriple {
                subject: t1.subject.clone(),
                predicate: t1.predicate.clone(),
                object: t1.object.clone(),
                statement_id: 0,
                extractor: Extractor::VerbPhrase,
                negated: false,
            };
            let NormalizeOutcome::Kept(t2) = normalize_tuple(&rewrapped, "s", &seeds, &lex())
            else {
                panic!("renormalization dropped {t1:?}");
            };
            assert_eq!(t2.subject, t1.subject);
            assert_eq!(t2.predicate, t1.predicate);
            assert_eq!(t2.object, t1.object);
            assert_eq!(t2.modality, None);
        }
    }

    #[test]
    fn negation_round_trip() {
        let seeds = seeds(&["voltmeter", "penguin"]);
        for (input, expect_negative) in [
            (raw("voltmeter", "is not connected in", "series"), true),
            (raw("penguins", "can't fly in", "storms"), true),
            (raw("penguins", "swim in", "water"), false),
        ] {
            if let NormalizeOutcome::Kept(t) = normalize_tuple(&input, "s", &seeds, &lex()) {
                assert_eq!(
                    t.negativity == Negativity::Negative,
                    expect_negative,
                    "for {input:?}"
                );
            } else {
                panic!("fixture tuple was dropped: {input:?}");
            }
        }
    }

    #[test]
    fn tsv_round_trip() {
        let t = CandidateTuple {
            subject: "lion".into(),
            predicate: "hunt".into(),
            object: "zebra".into(),
            modality: Some("often".into()),
            negativity: Negativity::Positive,
            source: "autocomplete:fixture".into(),
            score: 0.4,
        };
        let line = t.to_tsv_line();
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(CandidateTuple::from_tsv_fields(&fields), Some(t));

        let absent = CandidateTuple {
            modality: None,
            ..CandidateTuple::from_tsv_fields(&line.split('\t').collect::<Vec<_>>()).unwrap()
        };
        let line2 = absent.to_tsv_line();
        assert!(line2.contains("\\N"));
    }
}
