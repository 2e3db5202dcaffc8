//! Coarse part-of-speech tagging.
//!
//! Deterministic three-step lookup: closed-class word lists, then the
//! open-class lexicon (a TSV data file), then suffix fallbacks. Unknown words
//! always get a tag, so downstream rules never face untagged input.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lexicon::load_tsv_pairs;

pub const POS_LEXICON: &str = include_str!("../data/pos_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Aux,
    Adj,
    Adv,
    Prep,
    Det,
    Pron,
    Wh,
    Neg,
    Other,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Aux => "AUX",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Prep => "PREP",
            PosTag::Det => "DET",
            PosTag::Pron => "PRON",
            PosTag::Wh => "WH",
            PosTag::Neg => "NEG",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        Some(match s {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "AUX" => PosTag::Aux,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "PREP" => PosTag::Prep,
            "DET" => PosTag::Det,
            "PRON" => PosTag::Pron,
            "WH" => PosTag::Wh,
            "NEG" => PosTag::Neg,
            "OTHER" => PosTag::Other,
            _ => return None,
        })
    }
}

/// A surface word with its coarse tag. Negated auxiliaries ("can't",
/// "don't") stay one token and carry `negated` so the polarity survives
/// rewriting and extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: PosTag,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, tag: PosTag) -> Self {
        TaggedToken {
            surface: surface.into(),
            tag,
            negated: false,
        }
    }
}

const WH_WORDS: &[&str] = &["why", "how", "what", "when", "where", "who", "whom", "whose", "which"];

const AUX_WORDS: &[&str] = &[
    "is", "are", "am", "was", "were", "be", "been", "being", "do", "does", "did", "can", "could",
    "may", "might", "must", "shall", "should", "will", "would",
];

const AUX_NEGATED: &[(&str, bool)] = &[
    ("can't", true),
    ("cannot", true),
    ("won't", true),
    ("don't", true),
    ("doesn't", true),
    ("didn't", true),
    ("isn't", true),
    ("aren't", true),
    ("wasn't", true),
    ("weren't", true),
    ("couldn't", true),
    ("shouldn't", true),
    ("wouldn't", true),
    ("mustn't", true),
    ("shan't", true),
    ("ain't", true),
];

const DET_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "every", "each", "no",
    "another",
];

const PREP_WORDS: &[&str] = &[
    "about", "above", "across", "after", "against", "along", "among", "around", "at", "before",
    "behind", "below", "beneath", "beside", "besides", "between", "beyond", "by", "despite",
    "down", "during", "for", "from", "in", "inside", "into", "near", "of", "off", "on", "onto",
    "out", "outside", "over", "per", "through", "throughout", "till", "to", "toward", "towards",
    "under", "underneath", "until", "up", "upon", "via", "with", "within", "without",
];

const PRON_WORDS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my", "your",
    "his", "its", "our", "their", "mine", "yours", "hers", "ours", "theirs", "myself", "yourself",
    "himself", "herself", "itself", "ourselves", "yourselves", "themselves", "someone", "anyone",
    "everyone", "something", "anything", "everything", "nothing", "somebody", "anybody",
    "everybody", "nobody",
];

const NEG_WORDS: &[&str] = &["not", "never", "neither", "nor"];

fn closed_class() -> &'static HashMap<&'static str, (PosTag, bool)> {
    static TABLE: OnceLock<HashMap<&'static str, (PosTag, bool)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut m = HashMap::new();
        for &w in WH_WORDS {
            m.insert(w, (PosTag::Wh, false));
        }
        for &w in AUX_WORDS {
            m.insert(w, (PosTag::Aux, false));
        }
        for &(w, neg) in AUX_NEGATED {
            m.insert(w, (PosTag::Aux, neg));
        }
        for &w in DET_WORDS {
            m.insert(w, (PosTag::Det, false));
        }
        for &w in PREP_WORDS {
            m.insert(w, (PosTag::Prep, false));
        }
        for &w in PRON_WORDS {
            m.insert(w, (PosTag::Pron, false));
        }
        for &w in NEG_WORDS {
            m.insert(w, (PosTag::Neg, false));
        }
        m
    })
}

/// Lexicon + suffix tagger. Closed-class words are built in; the open-class
/// entries come from the shipped TSV or an external file.
#[derive(Debug, Clone)]
pub struct Tagger {
    lexicon: HashMap<String, PosTag>,
}

impl Tagger {
    pub fn builtin() -> Self {
        Tagger {
            lexicon: parse_lexicon(POS_LEXICON),
        }
    }

    /// Load an open-class lexicon from a `word \t TAG` file.
    pub fn from_tsv(path: &Path) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (word, tag) in load_tsv_pairs(path)? {
            if let Some(tag) = PosTag::parse(tag.trim()) {
                lexicon.insert(word, tag);
            }
        }
        Ok(Tagger { lexicon })
    }

    pub fn tag_word(&self, word: &str) -> TaggedToken {
        if let Some(&(tag, negated)) = closed_class().get(word) {
            return TaggedToken {
                surface: word.to_string(),
                tag,
                negated,
            };
        }
        if let Some(&tag) = self.lexicon.get(word) {
            return TaggedToken::new(word, tag);
        }
        let tag = if word.ends_with("ly") {
            PosTag::Adv
        } else if word.ends_with("ing") || word.ends_with("ed") {
            PosTag::Verb
        } else {
            PosTag::Noun
        };
        TaggedToken::new(word, tag)
    }

    /// Tag a lowercase token sequence; every token receives a tag.
    pub fn tag<S: AsRef<str>>(&self, words: &[S]) -> Vec<TaggedToken> {
        words.iter().map(|w| self.tag_word(w.as_ref())).collect()
    }

    /// Tokenize and tag a raw question or sentence.
    pub fn tag_text(&self, text: &str) -> Vec<TaggedToken> {
        self.tag(&tokenize(text))
    }
}

impl Default for Tagger {
    fn default() -> Self {
        Self::builtin()
    }
}

fn parse_lexicon(text: &str) -> HashMap<String, PosTag> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let mut cols = l.splitn(2, '\t');
            let word = cols.next()?.trim().to_lowercase();
            let tag = PosTag::parse(cols.next()?.trim())?;
            Some((word, tag))
        })
        .collect()
}

/// Lowercase, whitespace-split, punctuation-trimmed tokens. Internal
/// apostrophes and hyphens survive so "can't" stays one token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}
