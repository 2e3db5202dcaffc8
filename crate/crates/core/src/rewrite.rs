//! Question-to-statement rewriting over flat tag sequences.
//!
//! No dependency parsing: the rules delete the interrogative block and
//! reposition the auxiliary relative to the subject noun phrase. Rewriting
//! only deletes and reorders tokens; it never invents words. Negation carried
//! by a dropped do-form auxiliary ("why don't cats ...") survives as a flag
//! on the statement.

use serde::{Deserialize, Serialize};

use crate::pos::{PosTag, TaggedToken};

/// An assertive token sequence produced from a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub tokens: Vec<TaggedToken>,
    /// True when a deleted auxiliary carried negation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
}

impl Statement {
    pub fn text(&self) -> String {
        let words: Vec<&str> = self.tokens.iter().map(|t| t.surface.as_str()).collect();
        words.join(" ")
    }
}

fn is_nominal(token: &TaggedToken) -> bool {
    match token.tag {
        PosTag::Noun | PosTag::Pron => true,
        // gerund subjects: "becoming a nurse ..."
        PosTag::Verb => token.surface.ends_with("ing"),
        _ => false,
    }
}

/// End of a contiguous DET/ADJ/NOUN/PRON/gerund run. Adjectives count only
/// in attributive position (an adjective run that leads to a nominal);
/// a trailing adjective is a predicate complement ("salt is *bad* for you"),
/// not part of the phrase.
fn core_run_end(tokens: &[TaggedToken], start: usize) -> usize {
    let mut i = start;
    while i < tokens.len() {
        if tokens[i].tag == PosTag::Det || is_nominal(&tokens[i]) {
            i += 1;
            continue;
        }
        if tokens[i].tag == PosTag::Adj {
            let mut j = i;
            while j < tokens.len() && tokens[j].tag == PosTag::Adj {
                j += 1;
            }
            if j < tokens.len() && is_nominal(&tokens[j]) {
                i = j;
                continue;
            }
        }
        break;
    }
    i
}

/// End (exclusive) of the noun phrase starting at `start`: the maximal core
/// run, extended over attached prepositional phrases ("becoming a nurse in
/// france"). None when no phrase starts there.
pub(crate) fn noun_phrase_end(tokens: &[TaggedToken], start: usize) -> Option<usize> {
    let mut i = start;
    loop {
        let run_end = core_run_end(tokens, i);
        if run_end == i {
            break;
        }
        i = run_end;
        // attached PP: preposition followed by further core material
        if i < tokens.len()
            && tokens[i].tag == PosTag::Prep
            && i + 1 < tokens.len()
            && core_run_end(tokens, i + 1) > i + 1
        {
            i += 1;
            continue;
        }
        break;
    }
    if i == start {
        None
    } else {
        Some(i)
    }
}

/// When the scanned phrase swallowed the whole remainder, give back a
/// predicate complement: a trailing ADJ/ADV run ("... hard") or the final
/// noun with its adjectives ("... mammals").
fn back_off_np(tokens: &[TaggedToken], full: usize, start: usize) -> Option<usize> {
    let last = &tokens[full - 1];
    let mut k = match last.tag {
        PosTag::Adj | PosTag::Adv => {
            let mut k = full;
            while k > start && matches!(tokens[k - 1].tag, PosTag::Adj | PosTag::Adv) {
                k -= 1;
            }
            k
        }
        PosTag::Noun => full - 1,
        _ => return None,
    };
    if last.tag == PosTag::Noun {
        while k > start && tokens[k - 1].tag == PosTag::Adj {
            k -= 1;
        }
    }
    if k <= start {
        None
    } else {
        Some(k)
    }
}

fn is_do_form(token: &TaggedToken) -> bool {
    matches!(
        token.surface.as_str(),
        "do" | "does" | "did" | "don't" | "doesn't" | "didn't"
    )
}

fn is_negated_can(token: &TaggedToken) -> bool {
    matches!(token.surface.as_str(), "can't" | "cannot")
}

fn validate(tokens: Vec<TaggedToken>, negated: bool) -> Option<Statement> {
    if tokens.iter().any(|t| t.tag == PosTag::Wh) {
        return None;
    }
    if !tokens
        .iter()
        .any(|t| matches!(t.tag, PosTag::Verb | PosTag::Aux))
    {
        return None;
    }
    Some(Statement { tokens, negated })
}

/// Rewrite a tagged question into an assertive statement.
///
/// Already-assertive input (no WH token) passes through unchanged. Returns
/// None for unparseable input; callers count those rather than failing.
pub fn question_to_statement(question: &[TaggedToken]) -> Option<Statement> {
    if question.is_empty() {
        return None;
    }
    if question[0].tag != PosTag::Wh {
        if question.iter().any(|t| t.tag == PosTag::Wh) {
            return None;
        }
        return validate(question.to_vec(), false);
    }

    // R1: drop the leading interrogative
    let rest = &question[1..];
    let aux = rest.first()?;
    if aux.tag != PosTag::Aux {
        return None;
    }

    if is_do_form(aux) {
        // R2: drop the do-support auxiliary; the main verb stays uninflected
        let body = &rest[1..];
        noun_phrase_end(body, 0)?;
        return validate(body.to_vec(), aux.negated);
    }

    // R3: move the copula or modal behind the subject noun phrase
    let body = &rest[1..];
    let mut np_end = noun_phrase_end(body, 0)?;
    if np_end == body.len() {
        np_end = back_off_np(body, np_end, 0)?;
    }
    let mut tokens: Vec<TaggedToken> = Vec::with_capacity(body.len() + 1);
    tokens.extend_from_slice(&body[..np_end]);
    tokens.push(aux.clone());
    tokens.extend_from_slice(&body[np_end..]);

    // R5: for can't-forms, a stranded sentence-final preposition moves back
    // next to the verb it belongs to ("turn the oven on" -> "turn on the oven")
    if is_negated_can(aux) && tokens.last().map(|t| t.tag) == Some(PosTag::Prep) {
        let aux_idx = np_end;
        if let Some(verb_idx) = tokens[aux_idx + 1..]
            .iter()
            .position(|t| t.tag == PosTag::Verb)
            .map(|i| i + aux_idx + 1)
        {
            if verb_idx + 1 < tokens.len() - 1 {
                let prep = tokens.pop().unwrap();
                tokens.insert(verb_idx + 1, prep);
            }
        }
    }

    validate(tokens, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pos::Tagger;

    fn rewrite(text: &str) -> Option<String> {
        let tagger = Tagger::builtin();
        question_to_statement(&tagger.tag_text(text)).map(|s| s.text())
    }

    #[test]
    fn golden_question_statement_pairs() {
        let cases = [
            (
                "why is voltmeter not connected in series",
                "voltmeter is not connected in series",
            ),
            ("why are chimpanzees endangered", "chimpanzees are endangered"),
            ("why do men have nipples", "men have nipples"),
            ("why are elephant seals mammals", "elephant seals are mammals"),
            (
                "why is becoming a nurse in france hard",
                "becoming a nurse in france is hard",
            ),
        ];
        for (question, statement) in cases {
            assert_eq!(rewrite(question).as_deref(), Some(statement), "for {question:?}");
        }
    }

    #[test]
    fn assertive_input_is_unchanged() {
        let tagger = Tagger::builtin();
        let tokens = tagger.tag_text("men have nipples");
        let out = question_to_statement(&tokens).unwrap();
        assert_eq!(out.tokens, tokens);
        assert!(!out.negated);
    }

    #[test]
    fn token_conservation() {
        let tagger = Tagger::builtin();
        for q in [
            "why is voltmeter not connected in series",
            "why are elephant seals mammals",
            "why is becoming a nurse in france hard",
            "why can't penguins fly south",
            "how can doctors reanimate people",
        ] {
            let input = tagger.tag_text(q);
            if let Some(statement) = question_to_statement(&input) {
                for t in &statement.tokens {
                    assert!(
                        input.iter().any(|i| i.surface == t.surface),
                        "{q:?} invented token {:?}",
                        t.surface
                    );
                }
            }
        }
    }

    #[test]
    fn dropped_negated_do_form_sets_the_flag() {
        let out = {
            let tagger = Tagger::builtin();
            question_to_statement(&tagger.tag_text("why don't cats like water")).unwrap()
        };
        assert_eq!(out.text(), "cats like water");
        assert!(out.negated);
    }

    #[test]
    fn negated_modal_stays_in_the_statement() {
        assert_eq!(
            rewrite("why can't penguins fly").as_deref(),
            Some("penguins can't fly")
        );
    }

    #[test]
    fn final_preposition_reattaches_for_cant_forms() {
        assert_eq!(
            rewrite("why can't you turn the oven on").as_deref(),
            Some("you can't turn on the oven")
        );
    }

    #[test]
    fn unparseable_questions_return_none() {
        assert_eq!(rewrite("why"), None);
        assert_eq!(rewrite("why in of at"), None);
        assert_eq!(rewrite(""), None);
        // no subject noun phrase after the auxiliary
        assert_eq!(rewrite("why is of"), None);
    }

    #[test]
    fn modal_moves_behind_the_subject() {
        assert_eq!(
            rewrite("how can doctors reanimate people").as_deref(),
            Some("doctors can reanimate people")
        );
    }

    #[test]
    fn predicative_adjectives_stay_out_of_the_subject() {
        assert_eq!(
            rewrite("why is salt bad for you").as_deref(),
            Some("salt is bad for you")
        );
        assert_eq!(
            rewrite("why are elephants afraid of mice").as_deref(),
            Some("elephants are afraid of mice")
        );
        // attributive adjectives still belong to the phrase
        assert_eq!(
            rewrite("why are big cats dangerous").as_deref(),
            Some("big cats are dangerous")
        );
    }
}
