//! Desk-scale intrinsic and extrinsic evaluation: Taboo word coverage,
//! recall against reference sentences, and QA answer-selection features.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corroborate::split_camel_case;
use crate::error::{Error, Result};
use crate::inflect::{singularize, singularize_word};
use crate::rank::ScoredTriple;

/// A guessing-game card: a concept and the five words one may not say.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabooCard {
    pub concept: String,
    pub taboo: Vec<String>,
}

pub fn load_taboo_cards(path: &Path) -> Result<Vec<TabooCard>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cards = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let card: TabooCard =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        if card.taboo.len() != 5 {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("a card needs exactly 5 taboo words, found {}", card.taboo.len()),
            ));
        }
        cards.push(TabooCard {
            concept: card.concept.to_lowercase(),
            taboo: card.taboo.iter().map(|w| w.to_lowercase()).collect(),
        });
    }
    Ok(cards)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabooMode {
    POrO,
    OOnly,
}

fn phrase_tokens(phrase: &str) -> impl Iterator<Item = String> + '_ {
    split_camel_case(phrase)
        .split_whitespace()
        .map(|w| singularize_word(&w.to_lowercase()))
        .collect::<Vec<_>>()
        .into_iter()
}

/// Mean over cards of the fraction of taboo words the KB associates with
/// the concept through the P-or-O (or O-only) argument of its triples.
pub fn taboo_coverage(kb: &[ScoredTriple], cards: &[TabooCard], mode: TabooMode) -> f64 {
    if cards.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for card in cards {
        let concept = singularize(&card.concept);
        let mut surface: HashSet<String> = HashSet::new();
        for t in kb.iter().filter(|t| t.tuple.subject == concept) {
            surface.extend(phrase_tokens(&t.tuple.object));
            if mode == TabooMode::POrO {
                surface.extend(phrase_tokens(&t.tuple.predicate));
            }
        }
        let hits = card
            .taboo
            .iter()
            .filter(|w| surface.contains(&singularize_word(w)))
            .count();
        total += hits as f64 / card.taboo.len() as f64;
    }
    total / cards.len() as f64
}

/// A crowd-style reference sentence about a subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallSentence {
    pub subject: String,
    pub text: String,
}

pub fn load_recall_sentences(path: &Path) -> Result<Vec<RecallSentence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.splitn(2, '\t');
        match (cols.next(), cols.next()) {
            (Some(subject), Some(sentence)) if !sentence.trim().is_empty() => {
                out.push(RecallSentence {
                    subject: subject.to_lowercase(),
                    text: sentence.to_lowercase(),
                })
            }
            _ => {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    "expected `subject<TAB>sentence`",
                ))
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecallMode {
    Strict,
    Relaxed,
}

fn sentence_token_set(text: &str) -> HashSet<String> {
    crate::pos::tokenize(text)
        .into_iter()
        .map(|w| singularize_word(&w))
        .collect()
}

/// Coverage of reference sentences by the KB.
///
/// Strict: per sentence, the best token overlap between a same-subject
/// triple's PO token set and the sentence, normalized by PO size. Relaxed:
/// the predicate-hit and object-hit indicators assessed independently and
/// averaged. `top_k` restricts each subject to its k highest-tau triples.
pub fn recall_score(
    kb: &[ScoredTriple],
    sentences: &[RecallSentence],
    mode: RecallMode,
    top_k: Option<usize>,
) -> f64 {
    if sentences.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for sentence in sentences {
        let subject = singularize(&sentence.subject);
        let mut triples: Vec<&ScoredTriple> =
            kb.iter().filter(|t| t.tuple.subject == subject).collect();
        if let Some(k) = top_k {
            triples.sort_by(|a, b| {
                b.tau
                    .partial_cmp(&a.tau)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.tuple.spo_key().cmp(&b.tuple.spo_key()))
            });
            triples.truncate(k);
        }
        let tokens = sentence_token_set(&sentence.text);
        total += match mode {
            RecallMode::Strict => triples
                .iter()
                .map(|t| {
                    let po: HashSet<String> = phrase_tokens(&t.tuple.predicate)
                        .chain(phrase_tokens(&t.tuple.object))
                        .collect();
                    if po.is_empty() {
                        0.0
                    } else {
                        po.iter().filter(|w| tokens.contains(*w)).count() as f64 / po.len() as f64
                    }
                })
                .fold(0.0, f64::max),
            RecallMode::Relaxed => {
                let p_hit = triples
                    .iter()
                    .any(|t| phrase_tokens(&t.tuple.predicate).any(|w| tokens.contains(&w)));
                let o_hit = triples
                    .iter()
                    .any(|t| phrase_tokens(&t.tuple.object).any(|w| tokens.contains(&w)));
                (u32::from(p_hit) + u32::from(o_hit)) as f64 / 2.0
            }
        };
    }
    total / sentences.len() as f64
}

/// A multiple-choice QA item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub question: String,
    pub answers: Vec<String>,
    pub correct: usize,
}

pub fn load_qa_items(path: &Path) -> Result<Vec<QaItem>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: QaItem =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        if item.correct >= item.answers.len() {
            return Err(Error::parse(path, idx + 1, "correct index out of range"));
        }
        out.push(item);
    }
    Ok(out)
}

/// Overlap features between the KB contexts of a question and an answer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QaFeatures {
    pub spo_overlap: usize,
    pub sp_overlap: usize,
    pub so_overlap: usize,
    pub po_overlap: usize,
    pub s_overlap: usize,
    pub p_overlap: usize,
    pub o_overlap: usize,
    /// Tokens shared between the question context and the answer sentence.
    pub question_ctx_vs_answer: usize,
    /// Tokens shared between the answer context and the question sentence.
    pub answer_ctx_vs_question: usize,
    pub useless_words_question: usize,
    pub useless_words_answer: usize,
    pub words_question: usize,
    pub words_answer: usize,
}

impl QaFeatures {
    pub fn as_row(&self) -> [usize; 13] {
        [
            self.spo_overlap,
            self.sp_overlap,
            self.so_overlap,
            self.po_overlap,
            self.s_overlap,
            self.p_overlap,
            self.o_overlap,
            self.question_ctx_vs_answer,
            self.answer_ctx_vs_question,
            self.useless_words_question,
            self.useless_words_answer,
            self.words_question,
            self.words_answer,
        ]
    }
}

pub const QA_FEATURE_NAMES: [&str; 13] = [
    "spo_overlap",
    "sp_overlap",
    "so_overlap",
    "po_overlap",
    "s_overlap",
    "p_overlap",
    "o_overlap",
    "question_ctx_vs_answer",
    "answer_ctx_vs_question",
    "useless_words_question",
    "useless_words_answer",
    "words_question",
    "words_answer",
];

/// Unigrams and bigrams over the stopword-filtered token sequence.
fn word_groups(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let kept: Vec<String> = crate::pos::tokenize(text)
        .into_iter()
        .filter(|w| !stopwords.contains(w))
        .collect();
    let mut groups: Vec<String> = kept.iter().map(|w| singularize(w)).collect();
    for pair in kept.windows(2) {
        groups.push(singularize(&format!("{} {}", pair[0], pair[1])));
    }
    groups
}

/// Triples whose subject or object equals one of the text's word groups.
fn context<'a>(
    kb: &'a [ScoredTriple],
    text: &str,
    stopwords: &HashSet<String>,
) -> Vec<&'a ScoredTriple> {
    let groups: HashSet<String> = word_groups(text, stopwords).into_iter().collect();
    kb.iter()
        .filter(|t| groups.contains(&t.tuple.subject) || groups.contains(&t.tuple.object))
        .collect()
}

fn ctx_tokens(ctx: &[&ScoredTriple]) -> HashSet<String> {
    ctx.iter()
        .flat_map(|t| {
            phrase_tokens(&t.tuple.subject)
                .chain(phrase_tokens(&t.tuple.predicate))
                .chain(phrase_tokens(&t.tuple.object))
        })
        .collect()
}

/// Build (question, answer) contexts over the KB and emit the overlap counts.
pub fn qa_features(
    question: &str,
    answer: &str,
    kb: &[ScoredTriple],
    stopwords: &HashSet<String>,
) -> QaFeatures {
    let ctx_q = context(kb, question, stopwords);
    let ctx_a = context(kb, answer, stopwords);

    fn project<'a, K: Eq + std::hash::Hash>(
        ctx: &[&'a ScoredTriple],
        f: impl Fn(&'a ScoredTriple) -> K,
    ) -> HashSet<K> {
        ctx.iter().map(|t| f(t)).collect()
    }
    fn overlap<K: Eq + std::hash::Hash>(a: HashSet<K>, b: HashSet<K>) -> usize {
        a.intersection(&b).count()
    }

    let q_tokens = sentence_token_set(question);
    let a_tokens = sentence_token_set(answer);
    let q_words = crate::pos::tokenize(question);
    let a_words = crate::pos::tokenize(answer);

    QaFeatures {
        spo_overlap: overlap(
            project(&ctx_q, |t| t.tuple.spo_key()),
            project(&ctx_a, |t| t.tuple.spo_key()),
        ),
        sp_overlap: overlap(
            project(&ctx_q, |t| (t.tuple.subject.clone(), t.tuple.predicate.clone())),
            project(&ctx_a, |t| (t.tuple.subject.clone(), t.tuple.predicate.clone())),
        ),
        so_overlap: overlap(
            project(&ctx_q, |t| (t.tuple.subject.clone(), t.tuple.object.clone())),
            project(&ctx_a, |t| (t.tuple.subject.clone(), t.tuple.object.clone())),
        ),
        po_overlap: overlap(
            project(&ctx_q, |t| (t.tuple.predicate.clone(), t.tuple.object.clone())),
            project(&ctx_a, |t| (t.tuple.predicate.clone(), t.tuple.object.clone())),
        ),
        s_overlap: overlap(
            project(&ctx_q, |t| t.tuple.subject.clone()),
            project(&ctx_a, |t| t.tuple.subject.clone()),
        ),
        p_overlap: overlap(
            project(&ctx_q, |t| t.tuple.predicate.clone()),
            project(&ctx_a, |t| t.tuple.predicate.clone()),
        ),
        o_overlap: overlap(
            project(&ctx_q, |t| t.tuple.object.clone()),
            project(&ctx_a, |t| t.tuple.object.clone()),
        ),
        question_ctx_vs_answer: ctx_tokens(&ctx_q).intersection(&a_tokens).count(),
        answer_ctx_vs_question: ctx_tokens(&ctx_a).intersection(&q_tokens).count(),
        useless_words_question: q_words.iter().filter(|w| stopwords.contains(*w)).count(),
        useless_words_answer: a_words.iter().filter(|w| stopwords.contains(*w)).count(),
        words_question: q_words.len(),
        words_answer: a_words.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Lexicons;
    use crate::normalize::{CandidateTuple, Negativity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scored(s: &str, p: &str, o: &str) -> ScoredTriple {
        scored_tau(s, p, o, 0.5)
    }

    fn scored_tau(s: &str, p: &str, o: &str, tau: f64) -> ScoredTriple {
        ScoredTriple {
            tuple: CandidateTuple {
                subject: s.into(),
                predicate: p.into(),
                object: o.into(),
                modality: None,
                negativity: Negativity::Positive,
                source: "t".into(),
                score: 1.0,
            },
            pi: 0.5,
            p_spo: 0.1,
            tau,
            sigma: 0.1,
        }
    }

    fn card(concept: &str, words: [&str; 5]) -> TabooCard {
        TabooCard {
            concept: concept.into(),
            taboo: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    #[test]
    fn full_hit_card_scores_one() {
        let kb = vec![
            scored("zebra", "have", "stripes"),
            scored("zebra", "be", "black and white horse"),
            scored("zebra", "live in", "africa savanna"),
        ];
        let cards = [card("zebra", ["stripe", "horse", "africa", "black", "white"])];
        let score = taboo_coverage(&kb, &cards, TabooMode::OOnly);
        assert!((score - 1.0).abs() < 1e-12, "score = {score}");
    }

    #[test]
    fn empty_kb_scores_zero() {
        let cards = [card("zebra", ["stripe", "horse", "africa", "black", "white"])];
        assert_eq!(taboo_coverage(&[], &cards, TabooMode::POrO), 0.0);
        assert_eq!(taboo_coverage(&[], &cards, TabooMode::OOnly), 0.0);
    }

    #[test]
    fn three_card_fixture_scores_eight_fifteenths() {
        let kb = vec![
            // lion: hits mane, roar, africa (3/5)
            scored("lion", "have", "mane"),
            scored("lion", "roar at", "night"),
            scored("lion", "live in", "africa"),
            // penguin: no card words (0/5)
            scored("penguin", "eat", "fish"),
            // bee: hits all five (5/5)
            scored("bee", "make", "honey"),
            scored("bee", "sting", "people"),
            scored("bee", "live in", "hive"),
            scored("bee", "pollinate", "flower"),
            scored("bee", "serve", "queen"),
        ];
        let cards = [
            card("lion", ["mane", "roar", "africa", "pride", "king"]),
            card("penguin", ["ice", "antarctica", "waddle", "tuxedo", "emperor"]),
            card("bee", ["honey", "sting", "hive", "flower", "queen"]),
        ];
        let score = taboo_coverage(&kb, &cards, TabooMode::POrO);
        assert!(
            (score - 8.0 / 15.0).abs() < 1e-12,
            "score = {score}, want 8/15"
        );
    }

    #[test]
    fn predicate_hits_count_only_in_p_or_o_mode() {
        let kb = vec![scored("dog", "bark at", "stranger")];
        let cards = [card("dog", ["bark", "tail", "bone", "leash", "puppy"])];
        let p_or_o = taboo_coverage(&kb, &cards, TabooMode::POrO);
        let o_only = taboo_coverage(&kb, &cards, TabooMode::OOnly);
        assert!((p_or_o - 0.2).abs() < 1e-12);
        assert_eq!(o_only, 0.0);
    }

    #[test]
    fn p_or_o_dominates_o_only_on_random_kbs() {
        let subjects = ["lion", "zebra", "bee", "dog", "owl"];
        let words = ["mane", "stripe", "honey", "bone", "night", "claw", "wing"];
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let kb: Vec<ScoredTriple> = (0..rng.random_range(0..30))
                .map(|_| {
                    scored(
                        subjects[rng.random_range(0..subjects.len())],
                        words[rng.random_range(0..words.len())],
                        words[rng.random_range(0..words.len())],
                    )
                })
                .collect();
            let cards: Vec<TabooCard> = subjects
                .iter()
                .map(|s| {
                    let mut five = [""; 5];
                    for slot in &mut five {
                        *slot = words[rng.random_range(0..words.len())];
                    }
                    card(s, five)
                })
                .collect();
            let p_or_o = taboo_coverage(&kb, &cards, TabooMode::POrO);
            let o_only = taboo_coverage(&kb, &cards, TabooMode::OOnly);
            assert!(p_or_o >= o_only - 1e-12);
            assert!((0.0..=1.0).contains(&p_or_o));
            assert!((0.0..=1.0).contains(&o_only));
        }
    }

    fn sentence(subject: &str, text: &str) -> RecallSentence {
        RecallSentence {
            subject: subject.into(),
            text: text.into(),
        }
    }

    #[test]
    fn strict_overlap_is_po_normalized() {
        let kb = vec![scored("elephant", "hasColor", "grey")];
        let sentences = [sentence("elephant", "elephants are grey")];
        // PO tokens {has, color, grey}; only "grey" appears
        let strict = recall_score(&kb, &sentences, RecallMode::Strict, None);
        assert!((strict - 1.0 / 3.0).abs() < 1e-12, "strict = {strict}");
        // relaxed: object hit without predicate hit
        let relaxed = recall_score(&kb, &sentences, RecallMode::Relaxed, None);
        assert!((relaxed - 0.5).abs() < 1e-12);
    }

    #[test]
    fn literal_po_tokens_score_one() {
        let kb = vec![scored("lion", "hunt", "zebra")];
        let sentences = [sentence("lion", "lions hunt zebras")];
        let strict = recall_score(&kb, &sentences, RecallMode::Strict, None);
        assert!((strict - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_kb_recall_is_zero() {
        let sentences = [sentence("lion", "lions hunt zebras")];
        assert_eq!(recall_score(&[], &sentences, RecallMode::Strict, None), 0.0);
        assert_eq!(recall_score(&[], &sentences, RecallMode::Relaxed, None), 0.0);
    }

    #[test]
    fn top_k_restricts_to_highest_tau() {
        let kb = vec![
            scored_tau("lion", "hunt", "zebra", 0.9),
            scored_tau("lion", "sleep in", "shade", 0.1),
        ];
        let sentences = [sentence("lion", "lions sleep in the shade")];
        let full = recall_score(&kb, &sentences, RecallMode::Strict, None);
        let top1 = recall_score(&kb, &sentences, RecallMode::Strict, Some(1));
        assert!((full - 1.0).abs() < 1e-12);
        assert!(top1 < full);
    }

    #[test]
    fn recall_is_monotone_under_kb_growth() {
        let subjects = ["lion", "zebra", "owl"];
        let words = ["hunt", "sleep", "night", "grass", "fly", "water", "tree"];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let sentences: Vec<RecallSentence> = (0..5)
                .map(|_| {
                    sentence(
                        subjects[rng.random_range(0..subjects.len())],
                        &format!(
                            "{} {} {}",
                            words[rng.random_range(0..words.len())],
                            words[rng.random_range(0..words.len())],
                            words[rng.random_range(0..words.len())]
                        ),
                    )
                })
                .collect();
            let mut kb: Vec<ScoredTriple> = Vec::new();
            let mut previous_strict = 0.0;
            let mut previous_relaxed = 0.0;
            for _ in 0..12 {
                kb.push(scored(
                    subjects[rng.random_range(0..subjects.len())],
                    words[rng.random_range(0..words.len())],
                    words[rng.random_range(0..words.len())],
                ));
                let strict = recall_score(&kb, &sentences, RecallMode::Strict, None);
                let relaxed = recall_score(&kb, &sentences, RecallMode::Relaxed, None);
                assert!(strict >= previous_strict - 1e-12, "strict recall fell");
                assert!(relaxed >= previous_relaxed - 1e-12, "relaxed recall fell");
                assert!((0.0..=1.0).contains(&strict));
                assert!((0.0..=1.0).contains(&relaxed));
                previous_strict = strict;
                previous_relaxed = relaxed;
            }
        }
    }

    fn stopwords() -> HashSet<String> {
        Lexicons::builtin().stopwords
    }

    #[test]
    fn empty_contexts_give_all_zero_features() {
        let kb = vec![scored("lion", "hunt", "zebra")];
        let f = qa_features("what is a quark", "a boson", &kb, &stopwords());
        assert_eq!(f.spo_overlap, 0);
        assert_eq!(f.s_overlap, 0);
        assert_eq!(f.question_ctx_vs_answer, 0);
        assert!(f.words_question > 0);
    }

    #[test]
    fn shared_triple_counts_as_spo_overlap() {
        let kb = vec![scored("lion", "hunt", "zebra")];
        let f = qa_features(
            "what do lions hunt",
            "the zebra",
            &kb,
            &stopwords(),
        );
        // the lion triple enters both contexts (via S and via O)
        assert_eq!(f.spo_overlap, 1);
        assert_eq!(f.sp_overlap, 1);
        assert_eq!(f.p_overlap, 1);
    }

    #[test]
    fn s_hits_count_distinct_subjects() {
        let kb = vec![
            scored("lion", "hunt", "zebra"),
            scored("lion", "sleep in", "shade"),
            scored("zebra", "eat", "grass"),
            scored("owl", "fly at", "night"),
        ];
        let f = qa_features(
            "do lions and zebras share the savanna",
            "lions and zebras do",
            &kb,
            &stopwords(),
        );
        assert_eq!(f.s_overlap, 2, "lion and zebra subjects overlap");
    }

    #[test]
    fn useless_and_word_counts() {
        let kb: Vec<ScoredTriple> = Vec::new();
        let f = qa_features("why is the sky blue", "because of the light", &kb, &stopwords());
        assert_eq!(f.words_question, 5);
        assert_eq!(f.words_answer, 4);
        // "why", "is", "the" are stopwords; "because", "of", "the" likewise
        assert_eq!(f.useless_words_question, 3);
        assert!(f.useless_words_answer >= 2);
    }
}
