//! Mean-closure weighting (MCW): combines the scores of several homogeneous
//! matchers of one modality into a single fused score.
//!
//! The mean closure of a probe score is the squared ratio of its distance to
//! the user's genuine mean over its distance to the user's imposter mean;
//! matcher weights are the mean closures normalized over the matchers of the
//! modality, so no training beyond per-user class means is involved.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scores::{Label, ScoreSet};

/// Guard for the denominator of the mean closure when a score sits exactly
/// on the imposter mean.
pub const MEAN_CLOSURE_EPSILON: f64 = 1e-6;

/// Genuine/imposter training-score means for one (user, matcher) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMeans {
    pub mu_gen: f64,
    pub mu_imp: f64,
    pub n_gen: usize,
    pub n_imp: usize,
}

/// Per-user, per-matcher class means, immutable once built.
#[derive(Debug, Clone, Default)]
pub struct MatcherStats {
    by_pair: BTreeMap<(String, String), ClassMeans>,
}

impl MatcherStats {
    pub fn get(&self, user: &str, matcher: &str) -> Option<&ClassMeans> {
        self.by_pair.get(&(user.to_owned(), matcher.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.by_pair.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pair.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &ClassMeans)> {
        self.by_pair.iter()
    }
}

#[derive(Default)]
struct Accum {
    gen_sum: f64,
    gen_n: usize,
    imp_sum: f64,
    imp_n: usize,
}

/// Computes per-(user, matcher) genuine/imposter means from a training
/// score set.
///
/// A comparison contributes to the statistics of every subject it involves:
/// genuine records count once for their subject, imposter records count for
/// the subjects on both sides. Every (user, matcher) pair that appears must
/// end up with at least one score of each class.
pub fn matcher_statistics(training: &ScoreSet) -> Result<MatcherStats> {
    let mut acc: BTreeMap<(String, String), Accum> = BTreeMap::new();
    for r in training.records() {
        let mut users = vec![r.gallery_subject.as_str()];
        if r.probe_subject != r.gallery_subject {
            users.push(r.probe_subject.as_str());
        }
        for user in users {
            let slot = acc.entry((user.to_owned(), r.matcher.clone())).or_default();
            match r.label {
                Label::Genuine => {
                    slot.gen_sum += r.score;
                    slot.gen_n += 1;
                }
                Label::Imposter => {
                    slot.imp_sum += r.score;
                    slot.imp_n += 1;
                }
            }
        }
    }
    let mut by_pair = BTreeMap::new();
    for ((user, matcher), a) in acc {
        if a.gen_n == 0 || a.imp_n == 0 {
            let label = if a.gen_n == 0 { "genuine" } else { "imposter" };
            return Err(Error::InsufficientTraining {
                user,
                matcher,
                label,
            });
        }
        by_pair.insert(
            (user, matcher),
            ClassMeans {
                mu_gen: a.gen_sum / a.gen_n as f64,
                mu_imp: a.imp_sum / a.imp_n as f64,
                n_gen: a.gen_n,
                n_imp: a.imp_n,
            },
        );
    }
    Ok(MatcherStats { by_pair })
}

/// Squared ratio of the score's separation from the genuine mean over its
/// separation from the imposter mean, for the claimed user.
pub fn mean_closure(stats: &MatcherStats, user: &str, matcher: &str, score: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    let means = stats.get(user, matcher).ok_or_else(|| Error::UnknownPair {
        user: user.to_owned(),
        matcher: matcher.to_owned(),
    })?;
    Ok(mean_closure_from_means(means, score))
}

pub fn mean_closure_from_means(means: &ClassMeans, score: f64) -> f64 {
    let num = means.mu_gen - score;
    let mut den = means.mu_imp - score;
    if den.abs() < MEAN_CLOSURE_EPSILON {
        den = MEAN_CLOSURE_EPSILON;
    }
    (num / den).powi(2)
}

/// Normalizes mean closures into matcher weights. An all-zero closure
/// vector falls back to uniform weights.
pub fn mcw_weights(mean_closures: &[f64]) -> Result<Vec<f64>> {
    if mean_closures.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 1 });
    }
    let total: f64 = mean_closures.iter().sum();
    if total <= 0.0 {
        return Ok(vec![1.0 / mean_closures.len() as f64; mean_closures.len()]);
    }
    Ok(mean_closures.iter().map(|mc| mc / total).collect())
}

/// Weighted sum of matcher scores; a convex combination, so the result
/// stays inside [min(scores), max(scores)].
pub fn fuse_scores(scores: &[f64], weights: &[f64]) -> Result<f64> {
    if scores.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: weights.len(),
        });
    }
    Ok(scores.iter().zip(weights).map(|(s, w)| s * w).sum())
}

/// Full MCW application for one probe of one modality: per-matcher mean
/// closures for the claimed user, normalized weights, fused score.
pub fn fuse_modality(
    stats: &MatcherStats,
    user: &str,
    matchers: &[String],
    scores: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if matchers.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: matchers.len(),
            right: scores.len(),
        });
    }
    let closures = matchers
        .iter()
        .zip(scores)
        .map(|(m, &s)| mean_closure(stats, user, m, s))
        .collect::<Result<Vec<_>>>()?;
    let weights = mcw_weights(&closures)?;
    let fused = fuse_scores(scores, &weights)?;
    Ok((fused, weights))
}
