//! Rule-based English inflection: noun number and verb forms.
//!
//! Irregular forms come from versioned tables under `data/`; everything else
//! falls through suffix rules. Multiword phrases inflect their head (last)
//! word only.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::lexicon::{parse_tsv_map, parse_word_list};

const NOUN_EXCEPTIONS: &str = include_str!("../data/noun_exceptions.tsv");
const NOUN_INVARIANTS: &str = include_str!("../data/noun_invariants.txt");
const VERB_INFINITIVES: &str = include_str!("../data/verb_infinitives.tsv");

fn noun_exceptions() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| parse_tsv_map(NOUN_EXCEPTIONS))
}

fn plural_exceptions() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        noun_exceptions()
            .iter()
            .map(|(plural, singular)| (singular.clone(), plural.clone()))
            .collect()
    })
}

fn noun_invariants() -> &'static HashSet<String> {
    static TABLE: OnceLock<HashSet<String>> = OnceLock::new();
    TABLE.get_or_init(|| parse_word_list(NOUN_INVARIANTS))
}

fn verb_infinitives() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| parse_tsv_map(VERB_INFINITIVES))
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Singular form of one word.
pub fn singularize_word(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(s) = noun_exceptions().get(&w) {
        return s.clone();
    }
    if noun_invariants().contains(&w) || !w.ends_with('s') || w.len() < 3 {
        return w;
    }
    // -ss, -us, -is endings are already singular (glass, dangerous, basis)
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return w;
    }
    if w.ends_with("ies") && w.len() > 4 {
        return format!("{}y", &w[..w.len() - 3]);
    }
    for suffix in ["sses", "xes", "ches", "shes", "oes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    // horses -> horse, houses -> house: trailing -ses strips the final s only
    w[..w.len() - 1].to_string()
}

/// Singularize the head (last) word of a noun phrase.
pub fn singularize(noun_phrase: &str) -> String {
    inflect_head(noun_phrase, singularize_word)
}

/// Plural form of one word.
pub fn pluralize_word(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(p) = plural_exceptions().get(&w) {
        return p.clone();
    }
    if noun_invariants().contains(&w) || w.is_empty() {
        return w;
    }
    let last = w.chars().last().unwrap();
    if last == 'y' {
        let before = w.chars().rev().nth(1);
        if let Some(b) = before {
            if !is_vowel(b) {
                return format!("{}ies", &w[..w.len() - 1]);
            }
        }
        return format!("{w}s");
    }
    if w.ends_with('s') || w.ends_with('x') || w.ends_with('z') || w.ends_with("ch") || w.ends_with("sh") || w.ends_with('o') {
        return format!("{w}es");
    }
    format!("{w}s")
}

/// Pluralize the head (last) word of a noun phrase.
pub fn pluralize(noun_phrase: &str) -> String {
    inflect_head(noun_phrase, pluralize_word)
}

fn inflect_head(phrase: &str, f: fn(&str) -> String) -> String {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    match words.split_last() {
        None => String::new(),
        Some((head, [])) => f(head),
        Some((head, rest)) => format!("{} {}", rest.join(" "), f(head)),
    }
}

// After stripping -ed/-ing, these final letters get the dropped e restored
// (chas -> chase, mov -> move, danc -> dance, ...).
fn needs_final_e(stem: &str) -> bool {
    matches!(stem.chars().last(), Some('v' | 's' | 'c' | 'g' | 'u' | 'z'))
        && !stem.ends_with("ss")
}

fn strip_doubled(stem: &str) -> Option<String> {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 3 && chars[n - 1] == chars[n - 2] && !is_vowel(chars[n - 1]) && chars[n - 1] != 'l' {
        return Some(chars[..n - 1].iter().collect());
    }
    None
}

/// Infinitive of one verb word: irregular table first, then suffix rules.
pub fn verb_infinitive_word(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(inf) = verb_infinitives().get(&w) {
        return inf.clone();
    }
    if w.ends_with("ies") && w.len() > 4 {
        return format!("{}y", &w[..w.len() - 3]);
    }
    for suffix in ["ches", "shes", "sses", "xes", "zzes", "oes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    if w.ends_with("ing") && w.len() > 4 {
        let stem = &w[..w.len() - 3];
        if let Some(undoubled) = strip_doubled(stem) {
            return undoubled;
        }
        if needs_final_e(stem) {
            return format!("{stem}e");
        }
        return stem.to_string();
    }
    if w.ends_with("ied") && w.len() > 4 {
        return format!("{}y", &w[..w.len() - 3]);
    }
    if w.ends_with("ed") && w.len() > 3 {
        let stem = &w[..w.len() - 2];
        if let Some(undoubled) = strip_doubled(stem) {
            return undoubled;
        }
        if needs_final_e(stem) {
            return format!("{stem}e");
        }
        return stem.to_string();
    }
    if w.ends_with('s') && !w.ends_with("ss") && w.len() > 2 {
        return w[..w.len() - 1].to_string();
    }
    w
}

/// Third-person singular of an infinitive verb word.
pub fn verb_third_person_word(word: &str) -> String {
    let w = word.to_lowercase();
    match w.as_str() {
        "be" => return "is".to_string(),
        "have" => return "has".to_string(),
        "do" => return "does".to_string(),
        "go" => return "goes".to_string(),
        _ => {}
    }
    let last = match w.chars().last() {
        Some(c) => c,
        None => return w,
    };
    if last == 'y' {
        if let Some(b) = w.chars().rev().nth(1) {
            if !is_vowel(b) {
                return format!("{}ies", &w[..w.len() - 1]);
            }
        }
        return format!("{w}s");
    }
    if w.ends_with('s') || w.ends_with('x') || w.ends_with('z') || w.ends_with("ch") || w.ends_with("sh") || w.ends_with('o') {
        return format!("{w}es");
    }
    format!("{w}s")
}
