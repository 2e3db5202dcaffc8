//! Deterministic pattern-based triple extraction from assertive statements.
//!
//! Two patterns: a verb-phrase pattern whose predicate greedily absorbs
//! trailing prepositions ("live in savanna" -> P "live in", O "savanna"),
//! and a copula fallback for predicative statements ("chimpanzees are
//! endangered"). Triples with an empty object are dropped.

use serde::{Deserialize, Serialize};

use crate::pos::{PosTag, TaggedToken};
use crate::rewrite::{noun_phrase_end, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    Copula,
    VerbPhrase,
}

/// An extracted (S, P, O) span triple, rendered as plain strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub statement_id: usize,
    pub extractor: Extractor,
    /// Statement-level negation inherited from rewriting.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
}

fn render(tokens: &[TaggedToken]) -> String {
    let words: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    words.join(" ")
}

fn is_copula(token: &TaggedToken) -> bool {
    matches!(
        token.surface.as_str(),
        "is" | "are" | "am" | "was" | "were" | "isn't" | "aren't" | "wasn't" | "weren't"
    )
}

/// Extract candidate triples from one statement.
pub fn extract_triples(statement: &Statement, statement_id: usize) -> Vec<RawTriple> {
    let tokens = &statement.tokens;
    let Some(np_end) = noun_phrase_end(tokens, 0) else {
        return Vec::new();
    };
    if np_end == tokens.len() {
        return Vec::new();
    }
    let subject = render(&tokens[..np_end]);
    let make = |predicate: &[TaggedToken], object: &[TaggedToken], extractor| RawTriple {
        subject: subject.clone(),
        predicate: render(predicate),
        object: render(object),
        statement_id,
        extractor,
        negated: statement.negated,
    };

    // verb-phrase pattern: (AUX|ADV|NEG)* VERB+ (PREP|ADV)*
    let mut j = np_end;
    while j < tokens.len() && matches!(tokens[j].tag, PosTag::Aux | PosTag::Adv | PosTag::Neg) {
        j += 1;
    }
    let verb_start = j;
    while j < tokens.len() && tokens[j].tag == PosTag::Verb {
        j += 1;
    }
    if j > verb_start {
        while j < tokens.len() && matches!(tokens[j].tag, PosTag::Prep | PosTag::Adv) {
            j += 1;
        }
        if j < tokens.len() {
            return vec![make(&tokens[np_end..j], &tokens[j..], Extractor::VerbPhrase)];
        }
    }

    // copula fallback: is/are (+ negation) splits subject from complement
    if is_copula(&tokens[np_end]) {
        let mut k = np_end + 1;
        while k < tokens.len() && tokens[k].tag == PosTag::Neg {
            k += 1;
        }
        if k < tokens.len() {
            return vec![make(&tokens[np_end..k], &tokens[k..], Extractor::Copula)];
        }
    }

    Vec::new()
}

/// Keep one triple per (statement, S, O): the one with the most predicate
/// tokens, ties broken by character length, then first occurrence.
pub fn select_longest_predicate(triples: Vec<RawTriple>) -> Vec<RawTriple> {
    use std::collections::HashMap;

    let mut best: HashMap<(usize, &str, &str), usize> = HashMap::new();
    for (idx, t) in triples.iter().enumerate() {
        let key = (t.statement_id, t.subject.as_str(), t.object.as_str());
        match best.get(&key) {
            None => {
                best.insert(key, idx);
            }
            Some(&cur) => {
                let metric =
                    |t: &RawTriple| (t.predicate.split_whitespace().count(), t.predicate.len());
                if metric(t) > metric(&triples[cur]) {
                    best.insert(key, idx);
                }
            }
        }
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| triples[i].clone()).collect()
}
