//! Naive Bayes fusion of corroboration signals into a plausibility score.
//!
//! Counts are discretized into log-scale bins with "unmeasured" as its own
//! bin, so a source that was never consulted is not mistaken for a source
//! that found nothing.

use crate::error::{Error, Result};

use super::{Measurement, SignalVector};

pub const BIN_COUNT: usize = 6;
pub const FEATURE_COUNT: usize = 8;
pub const DEFAULT_LAPLACE: f64 = 1.0;

/// Bins: unmeasured, 0, 1, 2-4, 5-9, >=10.
pub fn bin_index(m: Measurement) -> usize {
    match m {
        Measurement::Unmeasured => 0,
        Measurement::Count(0) => 1,
        Measurement::Count(1) => 2,
        Measurement::Count(2..=4) => 3,
        Measurement::Count(5..=9) => 4,
        Measurement::Count(_) => 5,
    }
}

/// Binned per-feature likelihood tables with Laplace smoothing.
#[derive(Debug, Clone)]
pub struct PlausibilityModel {
    prior_valid: f64,
    prior_invalid: f64,
    // [feature][bin]
    likelihood_valid: [[f64; BIN_COUNT]; FEATURE_COUNT],
    likelihood_invalid: [[f64; BIN_COUNT]; FEATURE_COUNT],
}

impl PlausibilityModel {
    pub fn priors(&self) -> (f64, f64) {
        (self.prior_valid, self.prior_invalid)
    }

    pub fn likelihoods(&self, valid: bool) -> &[[f64; BIN_COUNT]; FEATURE_COUNT] {
        if valid {
            &self.likelihood_valid
        } else {
            &self.likelihood_invalid
        }
    }

    /// Posterior P(valid | signals) under the naive factorization.
    pub fn score(&self, signals: &SignalVector) -> f64 {
        let mut log_valid = self.prior_valid.ln();
        let mut log_invalid = self.prior_invalid.ln();
        for (feature, m) in signals.fields().into_iter().enumerate() {
            let bin = bin_index(m);
            log_valid += self.likelihood_valid[feature][bin].ln();
            log_invalid += self.likelihood_invalid[feature][bin].ln();
        }
        let max = log_valid.max(log_invalid);
        let ev = (log_valid - max).exp();
        let ei = (log_invalid - max).exp();
        ev / (ev + ei)
    }
}

/// Train from labeled vectors. Needs at least one example of each class.
pub fn train_plausibility_classifier(
    labeled: &[(SignalVector, bool)],
    laplace: f64,
) -> Result<PlausibilityModel> {
    let n_valid = labeled.iter().filter(|(_, v)| *v).count();
    let n_invalid = labeled.len() - n_valid;
    if n_valid == 0 || n_invalid == 0 {
        return Err(Error::SingleClassTraining);
    }

    let mut counts_valid = [[0usize; BIN_COUNT]; FEATURE_COUNT];
    let mut counts_invalid = [[0usize; BIN_COUNT]; FEATURE_COUNT];
    for (signals, valid) in labeled {
        let counts = if *valid {
            &mut counts_valid
        } else {
            &mut counts_invalid
        };
        for (feature, m) in signals.fields().into_iter().enumerate() {
            counts[feature][bin_index(m)] += 1;
        }
    }

    let table = |counts: [[usize; BIN_COUNT]; FEATURE_COUNT], n: usize| {
        let mut t = [[0f64; BIN_COUNT]; FEATURE_COUNT];
        for f in 0..FEATURE_COUNT {
            for b in 0..BIN_COUNT {
                t[f][b] = (counts[f][b] as f64 + laplace) / (n as f64 + laplace * BIN_COUNT as f64);
            }
        }
        t
    };

    let total = labeled.len() as f64;
    Ok(PlausibilityModel {
        prior_valid: n_valid as f64 / total,
        prior_invalid: n_invalid as f64 / total,
        likelihood_valid: table(counts_valid, n_valid),
        likelihood_invalid: table(counts_invalid, n_invalid),
    })
}

/// Convenience wrapper matching the scoring contract.
pub fn score_plausibility(model: &PlausibilityModel, signals: &SignalVector) -> f64 {
    model.score(signals)
}
