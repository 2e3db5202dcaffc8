//! Curated word lists backing normalization and evaluation.
//!
//! Every list ships as a plain data file embedded in the crate so behavior is
//! reproducible bit-for-bit; each can also be loaded from an external path to
//! override the built-in version.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MODALITY_WORDS: &str = include_str!("../data/modality.txt");
pub const COLOR_WORDS: &str = include_str!("../data/colors.txt");
pub const BODY_PART_WORDS: &str = include_str!("../data/body_parts.txt");
pub const ODD_OBJECT_WORDS: &str = include_str!("../data/odd_objects.txt");
pub const PHATIC_WORDS: &str = include_str!("../data/phatic.txt");
pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Word lists consumed by tuple normalization and the evaluation kit.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub modality: HashSet<String>,
    pub colors: HashSet<String>,
    pub body_parts: HashSet<String>,
    pub odd_objects: HashSet<String>,
    pub phatic: HashSet<String>,
    pub stopwords: HashSet<String>,
}

impl Lexicons {
    /// The lists shipped with the crate.
    pub fn builtin() -> Self {
        Lexicons {
            modality: parse_word_list(MODALITY_WORDS),
            colors: parse_word_list(COLOR_WORDS),
            body_parts: parse_word_list(BODY_PART_WORDS),
            odd_objects: parse_word_list(ODD_OBJECT_WORDS),
            phatic: parse_word_list(PHATIC_WORDS),
            stopwords: parse_word_list(STOPWORDS),
        }
    }
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::builtin()
    }
}

pub(crate) fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// One lowercase word per line; `#` comments and blank lines ignored.
pub fn load_word_list(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

/// Two tab-separated columns per line.
pub fn load_tsv_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv_pairs(&text, path)
}

pub(crate) fn parse_tsv_pairs(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.splitn(2, '\t');
        match (cols.next(), cols.next()) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => {
                pairs.push((a.to_lowercase(), b.trim().to_string()));
            }
            _ => {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    "expected two tab-separated columns",
                ))
            }
        }
    }
    Ok(pairs)
}

/// Seed subjects, one noun phrase per line.
pub fn load_seed_subjects(path: &Path) -> Result<HashSet<String>> {
    load_word_list(path)
}

pub(crate) fn parse_tsv_map(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let mut cols = l.splitn(2, '\t');
            match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => Some((a.to_lowercase(), b.trim().to_string())),
                _ => None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lists_are_nonempty() {
        let lex = Lexicons::builtin();
        assert!(lex.modality.contains("often"));
        assert!(lex.colors.contains("grey"));
        assert!(lex.body_parts.contains("trunk"));
        assert!(lex.odd_objects.contains("youtube"));
        assert!(lex.phatic.contains("so"));
        assert!(lex.stopwords.contains("the"));
    }

    #[test]
    fn word_list_skips_comments_and_blanks() {
        let set = parse_word_list("# header\n\nfoo\n Bar \n");
        assert_eq!(set.len(), 2);
        assert!(set.contains("foo"));
        assert!(set.contains("bar"));
    }
}
