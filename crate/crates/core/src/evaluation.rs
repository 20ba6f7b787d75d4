//! Comparison-protocol generation and verification metrics.
//!
//! Builds genuine/imposter comparison lists (FVC-style all-pairs genuine
//! plus first-sample imposter, with a first-vs-rest variant), splits
//! subjects into train/test halves, and computes ROC curves, EER, GMR at a
//! target FMR, the decidability index d', and HTER with binomial
//! confidence intervals.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scores::Label;

/// How genuine pairs are enumerated. Imposter pairs are always the first
/// sample of every subject against the first sample of every other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// All unordered intra-subject sample pairs: U * C(S,2) genuine.
    #[default]
    AllPairs,
    /// First sample against each remaining sample: U * (S-1) genuine.
    FirstVsRest,
}

/// One scheduled template comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonPair {
    pub probe_subject: String,
    pub probe_sample: String,
    pub gallery_subject: String,
    pub gallery_sample: String,
    pub label: Label,
}

/// Subjects with their ordered sample ids; the comparison schedule is
/// generated from this.
pub type Roster = Vec<(String, Vec<String>)>;

fn sorted_roster(roster: &[(String, Vec<String>)]) -> Result<Roster> {
    let mut out: Roster = roster.to_vec();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    for i in 1..out.len() {
        if out[i].0 == out[i - 1].0 {
            return Err(Error::InvalidConfig(format!(
                "duplicate subject '{}' in roster",
                out[i].0
            )));
        }
    }
    for (subject, samples) in &mut out {
        samples.sort();
        for i in 1..samples.len() {
            if samples[i] == samples[i - 1] {
                return Err(Error::InvalidConfig(format!(
                    "duplicate sample '{}' for subject '{subject}'",
                    samples[i]
                )));
            }
        }
    }
    Ok(out)
}

/// Enumerates the comparison schedule for a roster. Subjects and samples
/// are ordered lexicographically, so the schedule is deterministic; the
/// "first" sample of a subject is the smallest sample id. Genuine pairs use
/// the earlier sample as gallery; imposter pairs use the smaller subject as
/// gallery. Every subject needs at least two samples and the roster at
/// least two subjects.
pub fn generate_comparisons(
    roster: &[(String, Vec<String>)],
    protocol: Protocol,
) -> Result<Vec<ComparisonPair>> {
    let roster = sorted_roster(roster)?;
    if roster.len() < 2 {
        return Err(Error::TooFewSubjects(roster.len()));
    }
    for (subject, samples) in &roster {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples {
                subject: subject.clone(),
                count: samples.len(),
            });
        }
    }

    let mut pairs = Vec::new();
    for (subject, samples) in &roster {
        match protocol {
            Protocol::AllPairs => {
                for i in 0..samples.len() {
                    for j in i + 1..samples.len() {
                        pairs.push(ComparisonPair {
                            probe_subject: subject.clone(),
                            probe_sample: samples[j].clone(),
                            gallery_subject: subject.clone(),
                            gallery_sample: samples[i].clone(),
                            label: Label::Genuine,
                        });
                    }
                }
            }
            Protocol::FirstVsRest => {
                for sample in &samples[1..] {
                    pairs.push(ComparisonPair {
                        probe_subject: subject.clone(),
                        probe_sample: sample.clone(),
                        gallery_subject: subject.clone(),
                        gallery_sample: samples[0].clone(),
                        label: Label::Genuine,
                    });
                }
            }
        }
    }
    for i in 0..roster.len() {
        for j in i + 1..roster.len() {
            pairs.push(ComparisonPair {
                probe_subject: roster[j].0.clone(),
                probe_sample: roster[j].1[0].clone(),
                gallery_subject: roster[i].0.clone(),
                gallery_sample: roster[i].1[0].clone(),
                label: Label::Imposter,
            });
        }
    }
    Ok(pairs)
}

/// Splits subjects into disjoint train/test halves. Subjects are sorted
/// first; with a shuffle seed the sorted list is permuted reproducibly
/// before splitting. The train half takes the extra subject when the count
/// is odd.
pub fn split_subjects(
    subjects: &[String],
    shuffle_seed: Option<u64>,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut sorted: Vec<String> = subjects.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::TooFewSubjects(sorted.len()));
    }
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sorted.shuffle(&mut rng);
    }
    let cut = sorted.len().div_ceil(2);
    let test = sorted.split_off(cut);
    Ok((sorted, test))
}

/// One point of the threshold sweep; rates are fractions in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

/// Empirical ROC: ordered threshold sweep over the union of observed
/// scores plus the endpoints 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    n_genuine: usize,
    n_imposter: usize,
}

fn validated_sorted(scores: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(scores.len());
    for &s in scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ScoreOutOfRange(s));
        }
        out.push(s);
    }
    out.sort_unstable_by(f64::total_cmp);
    Ok(out)
}

/// Builds the exact empirical ROC. Acceptance is strict (`score > t`), so
/// FMR(t) is the fraction of imposter scores above t and FNMR(t) the
/// fraction of genuine scores at or below t.
pub fn roc_curve(genuine: &[f64], imposter: &[f64]) -> Result<RocCurve> {
    if genuine.is_empty() || imposter.is_empty() {
        return Err(Error::MissingScoreClass);
    }
    let gen = validated_sorted(genuine)?;
    let imp = validated_sorted(imposter)?;

    let mut thresholds: Vec<f64> = Vec::with_capacity(gen.len() + imp.len() + 2);
    thresholds.push(0.0);
    thresholds.push(1.0);
    thresholds.extend_from_slice(&gen);
    thresholds.extend_from_slice(&imp);
    thresholds.sort_unstable_by(f64::total_cmp);
    thresholds.dedup();

    let points = thresholds
        .into_iter()
        .map(|t| {
            let imp_at_or_below = imp.partition_point(|&s| s <= t);
            let gen_at_or_below = gen.partition_point(|&s| s <= t);
            RocPoint {
                threshold: t,
                fmr: (imp.len() - imp_at_or_below) as f64 / imp.len() as f64,
                fnmr: gen_at_or_below as f64 / gen.len() as f64,
            }
        })
        .collect();
    Ok(RocCurve {
        points,
        n_genuine: gen.len(),
        n_imposter: imp.len(),
    })
}

impl RocCurve {
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn n_genuine(&self) -> usize {
        self.n_genuine
    }

    pub fn n_imposter(&self) -> usize {
        self.n_imposter
    }
}

/// The FMR = FNMR crossing as (rate fraction, threshold), linearly
/// interpolated between the two sweep points bracketing the sign change.
fn eer_crossing(roc: &RocCurve) -> (f64, f64) {
    let pts = roc.points();
    let diff = |p: &RocPoint| p.fmr - p.fnmr;
    // FMR is non-increasing and FNMR non-decreasing, so the difference
    // crosses zero exactly once; it is always <= -1 + fnmr(1) at t = 1.
    let Some(i) = pts.iter().position(|p| diff(p) <= 0.0) else {
        let last = pts[pts.len() - 1];
        return ((last.fmr + last.fnmr) / 2.0, last.threshold);
    };
    if i == 0 {
        let p = pts[0];
        return ((p.fmr + p.fnmr) / 2.0, p.threshold);
    }
    let (a, b) = (pts[i - 1], pts[i]);
    let (d1, d2) = (diff(&a), diff(&b));
    let alpha = if d1 - d2 == 0.0 { 0.0 } else { d1 / (d1 - d2) };
    (
        a.fmr + alpha * (b.fmr - a.fmr),
        a.threshold + alpha * (b.threshold - a.threshold),
    )
}

/// Equal error rate in percent.
pub fn eer(roc: &RocCurve) -> f64 {
    100.0 * eer_crossing(roc).0
}

/// The threshold at which FMR and FNMR cross; the natural operating point
/// for thresholded decisions.
pub fn eer_threshold(roc: &RocCurve) -> f64 {
    eer_crossing(roc).1
}

/// Genuine match rate (percent) at the smallest threshold whose FMR does
/// not exceed `target_fmr_percent`. Targets outside [0, 100] are clamped
/// with a warning.
pub fn gmr_at_fmr(roc: &RocCurve, target_fmr_percent: f64) -> f64 {
    let mut target = target_fmr_percent;
    if !(0.0..=100.0).contains(&target) {
        target = target.clamp(0.0, 100.0);
        log::warn!("GMR target FMR {target_fmr_percent}% outside [0, 100], clamped to {target}%");
    }
    let target = target / 100.0;
    let point = roc
        .points()
        .iter()
        .find(|p| p.fmr <= target)
        .unwrap_or_else(|| {
            // FMR reaches 0 at threshold 1, so a point always qualifies.
            unreachable!("ROC sweep always contains FMR = 0")
        });
    100.0 * (1.0 - point.fnmr)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_variance(xs: &[f64], mu: f64) -> f64 {
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Decidability index d' = |mu1 - mu2| / sqrt((var1 + var2) / 2), with
/// population variances. Requires at least two scores per class and a
/// nonzero variance in at least one class.
pub fn decidability(gen_scores: &[f64], imp_scores: &[f64]) -> Result<f64> {
    for class in [gen_scores, imp_scores] {
        if class.len() < 2 {
            return Err(Error::TooFewScores {
                need: 2,
                got: class.len(),
            });
        }
    }
    let (mu_g, mu_i) = (mean(gen_scores), mean(imp_scores));
    let pooled =
        (population_variance(gen_scores, mu_g) + population_variance(imp_scores, mu_i)) / 2.0;
    if pooled == 0.0 {
        return Err(Error::DegenerateDistributions);
    }
    Ok((mu_g - mu_i).abs() / pooled.sqrt())
}

/// Supported confidence levels for HTER intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfidenceLevel {
    Ninety,
    NinetyFive,
    NinetyNine,
}

impl ConfidenceLevel {
    pub fn from_percent(percent: u32) -> Result<Self> {
        match percent {
            90 => Ok(Self::Ninety),
            95 => Ok(Self::NinetyFive),
            99 => Ok(Self::NinetyNine),
            other => Err(Error::UnsupportedLevel(other)),
        }
    }

    pub fn percent(self) -> u32 {
        match self {
            Self::Ninety => 90,
            Self::NinetyFive => 95,
            Self::NinetyNine => 99,
        }
    }

    /// Two-sided normal quantile for the level.
    pub fn z(self) -> f64 {
        match self {
            Self::Ninety => 1.645,
            Self::NinetyFive => 1.960,
            Self::NinetyNine => 2.576,
        }
    }
}

/// Half total error rate with its confidence margin, both as fractions:
/// HTER = (FMR + FNMR) / 2, margin = z * sqrt(FMR(1-FMR)/(4 NI) +
/// FNMR(1-FNMR)/(4 NG)).
pub fn hter_ci(
    fmr: f64,
    fnmr: f64,
    n_imposter: usize,
    n_genuine: usize,
    level: ConfidenceLevel,
) -> Result<(f64, f64)> {
    for rate in [fmr, fnmr] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::ScoreOutOfRange(rate));
        }
    }
    for n in [n_imposter, n_genuine] {
        if n == 0 {
            return Err(Error::TooFewScores { need: 1, got: 0 });
        }
    }
    let hter = (fmr + fnmr) / 2.0;
    let sigma = (fmr * (1.0 - fmr) / (4.0 * n_imposter as f64)
        + fnmr * (1.0 - fnmr) / (4.0 * n_genuine as f64))
        .sqrt();
    Ok((hter, level.z() * sigma))
}

/// Full verification report for one score channel. Rate fields are
/// percentages rounded to 4 decimal places.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_genuine: usize,
    pub n_imposter: usize,
    pub eer_percent: f64,
    pub eer_threshold: f64,
    pub d_prime: f64,
    /// Keyed by target FMR in percent (e.g. "0.01").
    pub gmr_at_fmr_percent: BTreeMap<String, f64>,
    /// FMR/FNMR (percent) at the operating threshold used for HTER.
    pub operating_threshold: f64,
    pub fmr_percent: f64,
    pub fnmr_percent: f64,
    pub hter_percent: f64,
    /// Keyed by confidence level in percent (e.g. "95").
    pub hter_margin_percent: BTreeMap<String, f64>,
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

fn format_number(x: f64) -> String {
    format!("{x}")
}

/// Evaluates one channel of genuine/imposter scores. GMR targets are FMRs
/// in percent. HTER is computed at `operating_threshold` when given
/// (e.g. a threshold fixed on training data), otherwise at this channel's
/// own EER threshold.
pub fn evaluate_scores(
    genuine: &[f64],
    imposter: &[f64],
    gmr_targets_percent: &[f64],
    ci_levels: &[ConfidenceLevel],
    operating_threshold: Option<f64>,
) -> Result<EvalReport> {
    let roc = roc_curve(genuine, imposter)?;
    let threshold = operating_threshold.unwrap_or_else(|| eer_threshold(&roc));
    let fmr = imposter.iter().filter(|&&s| s > threshold).count() as f64 / imposter.len() as f64;
    let fnmr = genuine.iter().filter(|&&s| s <= threshold).count() as f64 / genuine.len() as f64;

    let mut gmr = BTreeMap::new();
    for &target in gmr_targets_percent {
        gmr.insert(format_number(target), round4(gmr_at_fmr(&roc, target)));
    }
    let mut margins = BTreeMap::new();
    let mut hter = 0.0;
    for &level in ci_levels {
        let (h, margin) = hter_ci(fmr, fnmr, imposter.len(), genuine.len(), level)?;
        hter = h;
        margins.insert(level.percent().to_string(), round4(100.0 * margin));
    }
    if ci_levels.is_empty() {
        hter = (fmr + fnmr) / 2.0;
    }

    Ok(EvalReport {
        n_genuine: genuine.len(),
        n_imposter: imposter.len(),
        eer_percent: round4(eer(&roc)),
        eer_threshold: eer_threshold(&roc),
        d_prime: round4(decidability(genuine, imposter)?),
        gmr_at_fmr_percent: gmr,
        operating_threshold: threshold,
        fmr_percent: round4(100.0 * fmr),
        fnmr_percent: round4(100.0 * fnmr),
        hter_percent: round4(100.0 * hter),
        hter_margin_percent: margins,
    })
}
