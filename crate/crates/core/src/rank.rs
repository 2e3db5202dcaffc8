//! Probabilistic ranking: the global triple distribution and the typicality
//! and saliency conditionals.
//!
//! With p(spo) = pi(spo) / sum pi, typicality tau = p(spo) / P[s] ranks a
//! subject's own properties, and saliency sigma = p(spo) / P[p,o] ranks how
//! strongly a property points back at its subject.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::CandidateTuple;

/// A tuple with its plausibility and the three distribution scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTriple {
    pub tuple: CandidateTuple,
    pub pi: f64,
    pub p_spo: f64,
    pub tau: f64,
    pub sigma: f64,
}

/// Merge duplicate (s, p, o) rows before ranking: pi contributions sum,
/// capped at 1.0; sources union in first-seen order; the first row keeps its
/// qualifiers.
pub fn merge_duplicates(rows: Vec<(CandidateTuple, f64)>) -> Vec<(CandidateTuple, f64)> {
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut merged: HashMap<(String, String, String), (CandidateTuple, f64)> = HashMap::new();
    for (tuple, pi) in rows {
        let key = tuple.spo_key();
        match merged.get_mut(&key) {
            None => {
                order.push(key.clone());
                merged.insert(key, (tuple, pi));
            }
            Some((kept, total)) => {
                *total = (*total + pi).min(1.0);
                for source in tuple.source.split(',') {
                    if !kept.source.split(',').any(|s| s == source) {
                        kept.source.push(',');
                        kept.source.push_str(source);
                    }
                }
                if kept.modality.is_none() {
                    kept.modality = tuple.modality;
                }
            }
        }
    }
    order
        .into_iter()
        .map(|key| merged.remove(&key).unwrap())
        .collect()
}

/// Assign p_spo, tau and sigma to every (tuple, pi) row. Duplicate (s, p, o)
/// keys must already be merged. Fails on a zero total.
pub fn kb_distribution(rows: Vec<(CandidateTuple, f64)>) -> Result<Vec<ScoredTriple>> {
    let total: f64 = rows.iter().map(|(_, pi)| pi).sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }

    let mut subject_mass: HashMap<&str, f64> = HashMap::new();
    let mut po_mass: HashMap<(&str, &str), f64> = HashMap::new();
    for (tuple, pi) in &rows {
        *subject_mass.entry(tuple.subject.as_str()).or_default() += pi / total;
        *po_mass
            .entry((tuple.predicate.as_str(), tuple.object.as_str()))
            .or_default() += pi / total;
    }

    let scored = rows
        .iter()
        .map(|(tuple, pi)| {
            let p_spo = pi / total;
            let tau = p_spo / subject_mass[tuple.subject.as_str()];
            let sigma = p_spo / po_mass[&(tuple.predicate.as_str(), tuple.object.as_str())];
            ScoredTriple {
                tuple: tuple.clone(),
                pi: *pi,
                p_spo,
                tau,
                sigma,
            }
        })
        .collect();
    Ok(scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKey {
    Pi,
    Tau,
    Sigma,
}

impl RankKey {
    pub fn parse(s: &str) -> Option<RankKey> {
        match s {
            "pi" => Some(RankKey::Pi),
            "tau" => Some(RankKey::Tau),
            "sigma" => Some(RankKey::Sigma),
            _ => None,
        }
    }

    fn value(self, t: &ScoredTriple) -> f64 {
        match self {
            RankKey::Pi => t.pi,
            RankKey::Tau => t.tau,
            RankKey::Sigma => t.sigma,
        }
    }
}

/// Descending sort by the chosen key; ties fall back to (s, p, o)
/// lexicographic order so runs are reproducible. An optional subject filter
/// is applied first.
pub fn rank_view<'a>(
    kb: &'a [ScoredTriple],
    key: RankKey,
    subject: Option<&str>,
) -> Vec<&'a ScoredTriple> {
    let mut view: Vec<&ScoredTriple> = kb
        .iter()
        .filter(|t| subject.is_none_or(|s| t.tuple.subject == s))
        .collect();
    view.sort_by(|a, b| {
        key.value(b)
            .partial_cmp(&key.value(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.tuple.spo_key().cmp(&b.tuple.spo_key()))
    });
    view
}
