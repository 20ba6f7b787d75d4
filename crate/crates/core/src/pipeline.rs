//! End-to-end verification pipeline: template matching, per-user MCW score
//! fusion within each modality, evidential decision fusion across
//! modalities, and train/test evaluation.
//!
//! Subjects are split into disjoint halves. Global parameters — per-channel
//! operating thresholds and matcher predictive rates — come from the train
//! half only; per-user closure statistics play the role of enrollment data
//! and are computed within each half. Every stage iterates sorted
//! collections, so the outputs (report JSON, trace CSVs) are byte-stable
//! for a fixed input and seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ds_fusion::{
    combine_all_tracked, induced_bba, induced_bba_split, predictive_rate, verify, ClassLabel,
    Decision, Frame, MassFunction, PredictiveRates, GEN, IMP,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    eer_threshold, evaluate_scores, generate_comparisons, roc_curve, split_subjects,
    ConfidenceLevel, EvalReport, Protocol, RocCurve, Roster,
};
use crate::score_fusion::{fuse_modality, matcher_statistics, MatcherStats};
use crate::scores::{Label, ScoreRecord, ScoreSet};
use crate::similarity::{
    fingerprint_cosine_score, fingerprint_dice_score, hamming_similarity, jaccard_similarity,
};
use crate::template::{BinaryTemplate, FeatureMatrix, Template};

pub const MATCHER_IRIS_HAMMING: &str = "iris_hamming";
pub const MATCHER_IRIS_JACCARD: &str = "iris_jaccard";
pub const MATCHER_FP_DICE: &str = "fp_dice";
pub const MATCHER_FP_COSINE: &str = "fp_cosine";

/// Channel name of the combined evidential score in reports and traces.
pub const HYBRID_CHANNEL: &str = "hybrid";

/// How many BBAs enter the combination per comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DsVariant {
    /// One BBA per modality (belief and disbelief in one mass).
    #[default]
    TwoMass,
    /// Separate belief and disbelief BBAs per modality.
    FourMass,
}

impl DsVariant {
    pub fn mass_count(self) -> u8 {
        match self {
            DsVariant::TwoMass => 2,
            DsVariant::FourMass => 4,
        }
    }

    pub fn from_mass_count(n: u8) -> Result<Self> {
        match n {
            2 => Ok(DsVariant::TwoMass),
            4 => Ok(DsVariant::FourMass),
            other => Err(Error::InvalidConfig(format!(
                "ds-masses must be 2 or 4, got {other}"
            ))),
        }
    }
}

/// Pipeline-level settings; everything defaults to the standard run
/// (all-pairs protocol, two-mass combination, 95% CI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub protocol: Protocol,
    pub ds_variant: DsVariant,
    /// Confidence levels in percent (90, 95, 99).
    pub ci_levels: Vec<u32>,
    /// GMR operating points as target FMRs in percent.
    pub gmr_targets_percent: Vec<f64>,
    /// Shuffle subjects with this seed before the half split; `None`
    /// splits the sorted subject list directly.
    pub shuffle_seed: Option<u64>,
    /// Explicit matcher-to-modality assignments. Matchers not listed use
    /// the name prefix before the first '_' (or the whole name).
    pub matcher_modality: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::AllPairs,
            ds_variant: DsVariant::TwoMass,
            ci_levels: vec![95],
            gmr_targets_percent: vec![0.1, 0.01],
            shuffle_seed: None,
            matcher_modality: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    fn modality_of(&self, matcher: &str) -> String {
        if let Some(m) = self.matcher_modality.get(matcher) {
            return m.clone();
        }
        match matcher.split_once('_') {
            Some((prefix, _)) => prefix.to_string(),
            None => matcher.to_string(),
        }
    }

    fn modality_groups(&self, matchers: &[String]) -> BTreeMap<String, Vec<String>> {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for m in matchers {
            groups
                .entry(self.modality_of(m))
                .or_default()
                .push(m.clone());
        }
        groups
    }
}

/// One MCW weight assignment in the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightRow {
    pub probe_subject: String,
    pub probe_sample: String,
    pub gallery_subject: String,
    pub gallery_sample: String,
    pub modality: String,
    pub matcher: String,
    pub weight: f64,
}

/// One combined-mass trace line; a total-conflict event reports zero
/// masses with K = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRow {
    pub probe_subject: String,
    pub probe_sample: String,
    pub m_gen: f64,
    pub m_imp: f64,
    pub m_theta: f64,
    pub conflict_k: f64,
    pub decision: Decision,
}

/// Aggregated run results serialized as the report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub protocol: Protocol,
    pub ds_masses: u8,
    pub shuffle_seed: Option<u64>,
    pub n_train_subjects: usize,
    pub n_test_subjects: usize,
    pub n_test_genuine: usize,
    pub n_test_imposter: usize,
    /// Train-side predictive rates per modality.
    pub predictive_rates: BTreeMap<String, PredictiveRates>,
    /// Train-EER operating thresholds per channel (matchers, mcw:<modality>,
    /// hybrid).
    pub train_thresholds: BTreeMap<String, f64>,
    pub accepts: usize,
    pub rejects: usize,
    /// Test combinations whose evidence was totally conflicting; always
    /// rejected and excluded from no metric (they score 0).
    pub conflict_rejects: usize,
    pub matchers: BTreeMap<String, EvalReport>,
    pub modalities: BTreeMap<String, EvalReport>,
    pub hybrid: EvalReport,
}

/// Everything a pipeline run produces, ready for emission.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    /// Test-half fused scores: `mcw:<modality>` rows plus `hybrid` rows.
    pub fused_records: Vec<ScoreRecord>,
    pub weight_rows: Vec<WeightRow>,
    pub mass_rows: Vec<MassRow>,
    /// Test-half ROC per channel, for CSV emission.
    pub roc_curves: BTreeMap<String, RocCurve>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct PairKey {
    probe_subject: String,
    probe_sample: String,
    gallery_subject: String,
    gallery_sample: String,
}

struct Comparison {
    key: PairKey,
    label: Label,
    by_matcher: BTreeMap<String, f64>,
}

fn group_comparisons(set: &ScoreSet, matchers: &[String]) -> Result<Vec<Comparison>> {
    let mut grouped: BTreeMap<PairKey, (Label, BTreeMap<String, f64>)> = BTreeMap::new();
    for r in set.records() {
        let key = PairKey {
            probe_subject: r.probe_subject.clone(),
            probe_sample: r.probe_sample.clone(),
            gallery_subject: r.gallery_subject.clone(),
            gallery_sample: r.gallery_sample.clone(),
        };
        let entry = grouped
            .entry(key)
            .or_insert_with(|| (r.label, BTreeMap::new()));
        if entry.1.insert(r.matcher.clone(), r.score).is_some() {
            return Err(Error::InvalidConfig(format!(
                "duplicate score for {} vs {} from matcher '{}'",
                r.probe_subject, r.gallery_subject, r.matcher
            )));
        }
    }
    let mut out = Vec::with_capacity(grouped.len());
    for (key, (label, by_matcher)) in grouped {
        for m in matchers {
            if !by_matcher.contains_key(m) {
                return Err(Error::IncompleteComparison {
                    probe: format!("{}/{}", key.probe_subject, key.probe_sample),
                    gallery: format!("{}/{}", key.gallery_subject, key.gallery_sample),
                    matcher: m.clone(),
                });
            }
        }
        out.push(Comparison {
            key,
            label,
            by_matcher,
        });
    }
    Ok(out)
}

struct FusedComparison {
    key: PairKey,
    label: Label,
    by_modality: BTreeMap<String, f64>,
}

fn fuse_comparisons(
    comparisons: &[Comparison],
    stats: &MatcherStats,
    modalities: &BTreeMap<String, Vec<String>>,
) -> Result<(Vec<FusedComparison>, Vec<WeightRow>)> {
    let mut fused = Vec::with_capacity(comparisons.len());
    let mut weight_rows = Vec::new();
    for c in comparisons {
        let mut by_modality = BTreeMap::new();
        for (modality, matchers) in modalities {
            let scores: Vec<f64> = matchers.iter().map(|m| c.by_matcher[m]).collect();
            let (score, weights) = fuse_modality(stats, &c.key.gallery_subject, matchers, &scores)?;
            by_modality.insert(modality.clone(), score);
            for (matcher, weight) in matchers.iter().zip(&weights) {
                weight_rows.push(WeightRow {
                    probe_subject: c.key.probe_subject.clone(),
                    probe_sample: c.key.probe_sample.clone(),
                    gallery_subject: c.key.gallery_subject.clone(),
                    gallery_sample: c.key.gallery_sample.clone(),
                    modality: modality.clone(),
                    matcher: matcher.clone(),
                    weight: *weight,
                });
            }
        }
        fused.push(FusedComparison {
            key: c.key.clone(),
            label: c.label,
            by_modality,
        });
    }
    Ok((fused, weight_rows))
}

fn split_labeled(items: impl Iterator<Item = (Label, f64)>) -> (Vec<f64>, Vec<f64>) {
    let mut gen = Vec::new();
    let mut imp = Vec::new();
    for (label, score) in items {
        match label {
            Label::Genuine => gen.push(score),
            Label::Imposter => imp.push(score),
        }
    }
    (gen, imp)
}

fn raw_class_scores(comparisons: &[Comparison], matcher: &str) -> (Vec<f64>, Vec<f64>) {
    split_labeled(comparisons.iter().map(|c| (c.label, c.by_matcher[matcher])))
}

fn fused_class_scores(fused: &[FusedComparison], modality: &str) -> (Vec<f64>, Vec<f64>) {
    split_labeled(fused.iter().map(|f| (f.label, f.by_modality[modality])))
}

fn comparison_masses(
    fused: &FusedComparison,
    rates: &BTreeMap<String, PredictiveRates>,
    variant: DsVariant,
) -> Result<Vec<MassFunction>> {
    let mut masses = Vec::new();
    for (modality, &score) in &fused.by_modality {
        let r = &rates[modality];
        match variant {
            DsVariant::TwoMass => masses.push(induced_bba(score, r)?),
            DsVariant::FourMass => {
                let (belief, disbelief) = induced_bba_split(score, r)?;
                masses.push(belief);
                masses.push(disbelief);
            }
        }
    }
    Ok(masses)
}

/// Runs only the MCW stage: splits subjects into halves, computes
/// per-half class means, and fuses every within-half comparison. Returns
/// one `mcw:<modality>` record per (comparison, modality) plus the weight
/// trace, train half first.
pub fn fuse_score_set(
    scores: &ScoreSet,
    cfg: &PipelineConfig,
) -> Result<(Vec<ScoreRecord>, Vec<WeightRow>)> {
    let matchers = scores.matchers();
    if matchers.is_empty() {
        return Err(Error::MissingScoreClass);
    }
    let modalities = cfg.modality_groups(&matchers);
    let subjects = scores.subjects();
    let (train_subjects, test_subjects) = split_subjects(&subjects, cfg.shuffle_seed)?;

    let mut fused_records = Vec::new();
    let mut weight_rows = Vec::new();
    for half in [train_subjects, test_subjects] {
        let members: BTreeSet<&str> = half.iter().map(String::as_str).collect();
        let subset = scores.filter(|r| {
            members.contains(r.probe_subject.as_str())
                && members.contains(r.gallery_subject.as_str())
        });
        let stats = matcher_statistics(&subset)?;
        let comparisons = group_comparisons(&subset, &matchers)?;
        let (fused, weights) = fuse_comparisons(&comparisons, &stats, &modalities)?;
        weight_rows.extend(weights);
        for f in &fused {
            for (modality, &score) in &f.by_modality {
                fused_records.push(ScoreRecord {
                    probe_subject: f.key.probe_subject.clone(),
                    probe_sample: f.key.probe_sample.clone(),
                    gallery_subject: f.key.gallery_subject.clone(),
                    gallery_sample: f.key.gallery_sample.clone(),
                    matcher: format!("mcw:{modality}"),
                    score,
                    label: f.label,
                });
            }
        }
    }
    Ok((fused_records, weight_rows))
}

/// Runs the full train/test pipeline over a raw matcher ScoreSet.
pub fn run_pipeline(scores: &ScoreSet, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let ci_levels: Vec<ConfidenceLevel> = cfg
        .ci_levels
        .iter()
        .map(|&p| ConfidenceLevel::from_percent(p))
        .collect::<Result<_>>()?;
    let matchers = scores.matchers();
    if matchers.is_empty() {
        return Err(Error::MissingScoreClass);
    }
    let modalities = cfg.modality_groups(&matchers);

    let subjects = scores.subjects();
    let (train_subjects, test_subjects) = split_subjects(&subjects, cfg.shuffle_seed)?;
    let train_half: BTreeSet<&str> = train_subjects.iter().map(String::as_str).collect();
    let test_half: BTreeSet<&str> = test_subjects.iter().map(String::as_str).collect();
    let within = |half: &BTreeSet<&str>, r: &ScoreRecord| {
        half.contains(r.probe_subject.as_str()) && half.contains(r.gallery_subject.as_str())
    };
    let train_set = scores.filter(|r| within(&train_half, r));
    let test_set = scores.filter(|r| within(&test_half, r));

    let train_stats = matcher_statistics(&train_set)?;
    let test_stats = matcher_statistics(&test_set)?;
    let train_cmp = group_comparisons(&train_set, &matchers)?;
    let test_cmp = group_comparisons(&test_set, &matchers)?;
    let (train_fused, _) = fuse_comparisons(&train_cmp, &train_stats, &modalities)?;
    let (test_fused, weight_rows) = fuse_comparisons(&test_cmp, &test_stats, &modalities)?;

    // Train side: operating thresholds for every channel, predictive rates
    // for every modality.
    let mut train_thresholds = BTreeMap::new();
    for m in &matchers {
        let (gen, imp) = raw_class_scores(&train_cmp, m);
        train_thresholds.insert(m.clone(), eer_threshold(&roc_curve(&gen, &imp)?));
    }
    let mut rates: BTreeMap<String, PredictiveRates> = BTreeMap::new();
    for modality in modalities.keys() {
        let (gen, imp) = fused_class_scores(&train_fused, modality);
        let tau = eer_threshold(&roc_curve(&gen, &imp)?);
        train_thresholds.insert(format!("mcw:{modality}"), tau);
        let decisions: Vec<(ClassLabel, ClassLabel)> = train_fused
            .iter()
            .map(|f| {
                let predicted = if f.by_modality[modality] > tau {
                    ClassLabel::Gen
                } else {
                    ClassLabel::Imp
                };
                let truth = match f.label {
                    Label::Genuine => ClassLabel::Gen,
                    Label::Imposter => ClassLabel::Imp,
                };
                (predicted, truth)
            })
            .collect();
        rates.insert(modality.clone(), predictive_rate(&decisions)?);
    }

    let frame = Frame::verification();
    let gen_set = frame.singleton(GEN);
    let imp_set = frame.singleton(IMP);
    let full_set = frame.full();

    // Train-side hybrid scores fix the decision threshold.
    let mut train_hybrid: Vec<(Label, f64)> = Vec::with_capacity(train_fused.len());
    for f in &train_fused {
        let masses = comparison_masses(f, &rates, cfg.ds_variant)?;
        let score = match combine_all_tracked(&masses) {
            Ok((m, _)) => m.mass(gen_set),
            Err(Error::TotalConflict { .. }) => {
                log::warn!(
                    "total conflict on training comparison {}/{}; scoring 0",
                    f.key.probe_subject,
                    f.key.probe_sample
                );
                0.0
            }
            Err(e) => return Err(e),
        };
        train_hybrid.push((f.label, score));
    }
    let (gen_h, imp_h) = split_labeled(train_hybrid.into_iter());
    let hybrid_tau = eer_threshold(&roc_curve(&gen_h, &imp_h)?);
    train_thresholds.insert(HYBRID_CHANNEL.to_string(), hybrid_tau);

    // Test side: combine, decide, trace.
    let mut mass_rows = Vec::with_capacity(test_fused.len());
    let mut hybrid_scores: Vec<(Label, f64)> = Vec::with_capacity(test_fused.len());
    let mut fused_records = Vec::new();
    let (mut accepts, mut rejects, mut conflict_rejects) = (0usize, 0usize, 0usize);
    for f in &test_fused {
        let masses = comparison_masses(f, &rates, cfg.ds_variant)?;
        let (m_gen, m_imp, m_theta, conflict_k, decision) = match combine_all_tracked(&masses) {
            Ok((m, k)) => {
                let d = verify(&m, hybrid_tau);
                (m.mass(gen_set), m.mass(imp_set), m.mass(full_set), k, d)
            }
            Err(Error::TotalConflict { .. }) => {
                conflict_rejects += 1;
                (0.0, 0.0, 0.0, 1.0, Decision::Reject)
            }
            Err(e) => return Err(e),
        };
        match decision {
            Decision::Accept => accepts += 1,
            Decision::Reject => rejects += 1,
        }
        mass_rows.push(MassRow {
            probe_subject: f.key.probe_subject.clone(),
            probe_sample: f.key.probe_sample.clone(),
            m_gen,
            m_imp,
            m_theta,
            conflict_k,
            decision,
        });
        hybrid_scores.push((f.label, m_gen));

        for (modality, &score) in &f.by_modality {
            fused_records.push(ScoreRecord {
                probe_subject: f.key.probe_subject.clone(),
                probe_sample: f.key.probe_sample.clone(),
                gallery_subject: f.key.gallery_subject.clone(),
                gallery_sample: f.key.gallery_sample.clone(),
                matcher: format!("mcw:{modality}"),
                score,
                label: f.label,
            });
        }
        fused_records.push(ScoreRecord {
            probe_subject: f.key.probe_subject.clone(),
            probe_sample: f.key.probe_sample.clone(),
            gallery_subject: f.key.gallery_subject.clone(),
            gallery_sample: f.key.gallery_sample.clone(),
            matcher: HYBRID_CHANNEL.to_string(),
            score: m_gen,
            label: f.label,
        });
    }
    if !test_fused.is_empty() && conflict_rejects == test_fused.len() {
        return Err(Error::ConflictExhausted {
            total: conflict_rejects,
        });
    }
    if conflict_rejects > 0 {
        log::warn!("{conflict_rejects} test comparison(s) hit total conflict, rejected");
    }

    // Reports and ROC curves per channel, all on the test half with
    // train-side operating thresholds.
    let mut roc_curves = BTreeMap::new();
    let mut matcher_reports = BTreeMap::new();
    for m in &matchers {
        let (gen, imp) = raw_class_scores(&test_cmp, m);
        matcher_reports.insert(
            m.clone(),
            evaluate_scores(
                &gen,
                &imp,
                &cfg.gmr_targets_percent,
                &ci_levels,
                Some(train_thresholds[m]),
            )?,
        );
        roc_curves.insert(m.clone(), roc_curve(&gen, &imp)?);
    }
    let mut modality_reports = BTreeMap::new();
    for modality in modalities.keys() {
        let (gen, imp) = fused_class_scores(&test_fused, modality);
        let channel = format!("mcw:{modality}");
        modality_reports.insert(
            modality.clone(),
            evaluate_scores(
                &gen,
                &imp,
                &cfg.gmr_targets_percent,
                &ci_levels,
                Some(train_thresholds[&channel]),
            )?,
        );
        roc_curves.insert(channel, roc_curve(&gen, &imp)?);
    }
    let (gen_h, imp_h) = split_labeled(hybrid_scores.into_iter());
    let hybrid_report = evaluate_scores(
        &gen_h,
        &imp_h,
        &cfg.gmr_targets_percent,
        &ci_levels,
        Some(hybrid_tau),
    )?;
    roc_curves.insert(HYBRID_CHANNEL.to_string(), roc_curve(&gen_h, &imp_h)?);

    let report = PipelineReport {
        protocol: cfg.protocol,
        ds_masses: cfg.ds_variant.mass_count(),
        shuffle_seed: cfg.shuffle_seed,
        n_train_subjects: train_subjects.len(),
        n_test_subjects: test_subjects.len(),
        n_test_genuine: gen_h.len(),
        n_test_imposter: imp_h.len(),
        predictive_rates: rates,
        train_thresholds,
        accepts,
        rejects,
        conflict_rejects,
        matchers: matcher_reports,
        modalities: modality_reports,
        hybrid: hybrid_report,
    };
    Ok(PipelineOutput {
        report,
        fused_records,
        weight_rows,
        mass_rows,
        roc_curves,
    })
}

/// Scores every scheduled comparison with all matchers applicable to the
/// templates present: Hamming and Jaccard for iris bit templates, Dice and
/// Cosine for fingerprint matrices. When both modalities are present every
/// (subject, sample) must carry both templates.
pub fn match_templates(templates: &[Template], protocol: Protocol) -> Result<Vec<ScoreRecord>> {
    let mut iris: BTreeMap<(String, String), &BinaryTemplate> = BTreeMap::new();
    let mut fp: BTreeMap<(String, String), &FeatureMatrix> = BTreeMap::new();
    for t in templates {
        let (key, duplicate) = match t {
            Template::Iris(b) => {
                let key = (b.subject_id.clone(), b.sample_id.clone());
                (key.clone(), iris.insert(key, b).is_some())
            }
            Template::Fingerprint(m) => {
                let key = (m.subject_id.clone(), m.sample_id.clone());
                (key.clone(), fp.insert(key, m).is_some())
            }
        };
        if duplicate {
            return Err(Error::InvalidConfig(format!(
                "duplicate template for subject '{}', sample '{}'",
                key.0, key.1
            )));
        }
    }
    if !iris.is_empty() && !fp.is_empty() {
        for key in iris.keys() {
            if !fp.contains_key(key) {
                return Err(Error::MissingTemplate {
                    subject: key.0.clone(),
                    sample: key.1.clone(),
                    modality: "fingerprint",
                });
            }
        }
        for key in fp.keys() {
            if !iris.contains_key(key) {
                return Err(Error::MissingTemplate {
                    subject: key.0.clone(),
                    sample: key.1.clone(),
                    modality: "iris",
                });
            }
        }
    }

    let mut roster_map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (subject, sample) in iris.keys().chain(fp.keys()) {
        roster_map
            .entry(subject.clone())
            .or_default()
            .insert(sample.clone());
    }
    let roster: Roster = roster_map
        .into_iter()
        .map(|(s, samples)| (s, samples.into_iter().collect()))
        .collect();

    let pairs = generate_comparisons(&roster, protocol)?;
    let mut out = Vec::new();
    for p in &pairs {
        let gallery = (p.gallery_subject.clone(), p.gallery_sample.clone());
        let probe = (p.probe_subject.clone(), p.probe_sample.clone());
        let mut push = |matcher: &str, score: f64| {
            out.push(ScoreRecord {
                probe_subject: p.probe_subject.clone(),
                probe_sample: p.probe_sample.clone(),
                gallery_subject: p.gallery_subject.clone(),
                gallery_sample: p.gallery_sample.clone(),
                matcher: matcher.to_string(),
                score,
                label: p.label,
            });
        };
        if let (Some(e), Some(q)) = (iris.get(&gallery), iris.get(&probe)) {
            push(MATCHER_IRIS_HAMMING, hamming_similarity(e, q)?);
            push(MATCHER_IRIS_JACCARD, jaccard_similarity(e, q)?);
        }
        if let (Some(e), Some(q)) = (fp.get(&gallery), fp.get(&probe)) {
            push(MATCHER_FP_DICE, fingerprint_dice_score(e, q)?);
            push(MATCHER_FP_COSINE, fingerprint_cosine_score(e, q)?);
        }
    }
    Ok(out)
}

/// Evaluates each matcher channel of a ScoreSet independently at its own
/// EER operating point (no train/test split).
pub fn evaluate_all(
    scores: &ScoreSet,
    gmr_targets_percent: &[f64],
    ci_levels: &[ConfidenceLevel],
) -> Result<BTreeMap<String, EvalReport>> {
    let mut out = BTreeMap::new();
    for matcher in scores.matchers() {
        let (gen, imp) = scores.class_scores(&matcher);
        out.insert(
            matcher,
            evaluate_scores(&gen, &imp, gmr_targets_percent, ci_levels, None)?,
        );
    }
    Ok(out)
}

/// File name under which a channel's ROC curve is emitted
/// (`roc_<channel>.csv` with non-alphanumerics replaced by `_`).
pub fn channel_file_name(channel: &str) -> String {
    let sanitized: String = channel
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("roc_{sanitized}.csv")
}

/// Renders the per-user weight trace as CSV.
pub fn weights_csv(rows: &[WeightRow]) -> String {
    let mut out = String::from(
        "probe_subject,probe_sample,gallery_subject,gallery_sample,modality,matcher,weight\n",
    );
    for w in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6}",
            w.probe_subject,
            w.probe_sample,
            w.gallery_subject,
            w.gallery_sample,
            w.modality,
            w.matcher,
            w.weight
        )
        .expect("string write");
    }
    out
}

/// Renders the combined-mass/decision trace as CSV.
pub fn masses_csv(rows: &[MassRow]) -> String {
    let mut out =
        String::from("probe_subject,probe_sample,m_gen,m_imp,m_theta,conflict_K,decision\n");
    for m in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            m.probe_subject, m.probe_sample, m.m_gen, m.m_imp, m.m_theta, m.conflict_k, m.decision
        )
        .expect("string write");
    }
    out
}

/// Renders a ROC curve as plot-ready CSV; FMR/FNMR columns are percentages.
pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fmr,fnmr\n");
    for p in curve.points() {
        writeln!(
            out,
            "{:.6},{:.4},{:.4}",
            p.threshold,
            100.0 * p.fmr,
            100.0 * p.fnmr
        )
        .expect("string write");
    }
    out
}

/// Serializes the report as pretty JSON (trailing newline included).
pub fn report_json(report: &PipelineReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Writes the report JSON, fused-score CSV, weight and mass traces, and
/// one ROC CSV per channel into `out_dir`. Returns the written paths in
/// emission order. Output is byte-stable for identical inputs.
pub fn write_outputs(out_dir: &Path, output: &PipelineOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let emit = |name: &str, contents: &str| -> Result<PathBuf> {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    };

    written.push(emit("report.json", &report_json(&output.report)?)?);

    let mut fused = Vec::new();
    let fused_set = ScoreSet::from_records(output.fused_records.clone())?;
    crate::scores::write_scores(&mut fused, &fused_set)?;
    written.push(emit(
        "fused_scores.csv",
        std::str::from_utf8(&fused).expect("CSV is UTF-8"),
    )?);

    written.push(emit("weights.csv", &weights_csv(&output.weight_rows))?);
    written.push(emit("masses.csv", &masses_csv(&output.mass_rows))?);

    for (channel, roc) in &output.roc_curves {
        written.push(emit(&channel_file_name(channel), &roc_csv(roc))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{synth_scores, synth_templates, SynthConfig};

    fn small_score_cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            n_subjects: 12,
            samples_per_subject: 4,
            seed,
            ..SynthConfig::default_with_scores()
        }
    }

    fn run_small(seed: u64) -> PipelineOutput {
        let records = synth_scores(&small_score_cfg(seed), Protocol::AllPairs).unwrap();
        let scores = ScoreSet::from_records(records).unwrap();
        run_pipeline(&scores, &PipelineConfig::default()).unwrap()
    }

    #[test]
    fn pipeline_shapes_and_counts() {
        let out = run_small(5);
        let r = &out.report;
        assert_eq!((r.n_train_subjects, r.n_test_subjects), (6, 6));
        // Test half: 6 subjects * C(4,2) genuine + C(6,2) imposter.
        assert_eq!(r.n_test_genuine, 36);
        assert_eq!(r.n_test_imposter, 15);
        assert_eq!(r.accepts + r.rejects, 51);
        assert_eq!(out.mass_rows.len(), 51);
        assert_eq!(out.weight_rows.len(), 51 * 4);
        // Two mcw rows and one hybrid row per comparison.
        assert_eq!(out.fused_records.len(), 51 * 3);
        assert_eq!(r.matchers.len(), 4);
        assert_eq!(r.modalities.keys().collect::<Vec<_>>(), vec!["fp", "iris"]);
        assert_eq!(out.roc_curves.len(), 4 + 2 + 1);
        assert!(r.train_thresholds.contains_key("mcw:iris"));
        assert!(r.train_thresholds.contains_key(HYBRID_CHANNEL));
        for record in &out.fused_records {
            assert!((0.0..=1.0).contains(&record.score));
        }
        for rate in r.predictive_rates.values() {
            assert!((0.0..=1.0).contains(&rate.p_gen));
            assert!((0.0..=1.0).contains(&rate.p_imp));
        }
        for m in &out.mass_rows {
            let total = m.m_gen + m.m_imp + m.m_theta;
            assert!(
                (total - 1.0).abs() < 1e-9 || total == 0.0,
                "mass row sums to {total}"
            );
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let a = run_small(9);
        let b = run_small(9);
        assert_eq!(
            report_json(&a.report).unwrap(),
            report_json(&b.report).unwrap()
        );
        assert_eq!(a.fused_records, b.fused_records);
        assert_eq!(a.mass_rows, b.mass_rows);
    }

    #[test]
    fn four_mass_variant_runs() {
        let records = synth_scores(&small_score_cfg(3), Protocol::AllPairs).unwrap();
        let scores = ScoreSet::from_records(records).unwrap();
        let cfg = PipelineConfig {
            ds_variant: DsVariant::FourMass,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&scores, &cfg).unwrap();
        assert_eq!(out.report.ds_masses, 4);
        assert_eq!(out.mass_rows.len(), 51);
    }

    fn rec(probe: (&str, &str), gallery: (&str, &str), matcher: &str, score: f64) -> ScoreRecord {
        let label = if probe.0 == gallery.0 {
            Label::Genuine
        } else {
            Label::Imposter
        };
        ScoreRecord {
            probe_subject: probe.0.to_string(),
            probe_sample: probe.1.to_string(),
            gallery_subject: gallery.0.to_string(),
            gallery_sample: gallery.1.to_string(),
            matcher: matcher.to_string(),
            score,
            label,
        }
    }

    /// Hand-built two-modality set (one matcher each): subjects a,b,c train
    /// and d,e,f test, two samples each, separable scores except where a
    /// test comparison is overridden.
    fn handcrafted(overrides: &[((&'static str, &'static str), f64, f64)]) -> ScoreSet {
        let subjects = ["a", "b", "c", "d", "e", "f"];
        let mut records = Vec::new();
        let roster: Roster = subjects
            .iter()
            .map(|s| (s.to_string(), vec!["1".to_string(), "2".to_string()]))
            .collect();
        for (i, p) in generate_comparisons(&roster, Protocol::AllPairs)
            .unwrap()
            .into_iter()
            .enumerate()
        {
            let (base_a, base_b) = match p.label {
                Label::Genuine => (0.9, 0.85),
                Label::Imposter => (0.1, 0.15),
            };
            // Small per-comparison spread keeps each class non-degenerate
            // without breaking separability.
            let jitter = 0.004 * (i % 4) as f64;
            let (mut s_a, mut s_b) = (base_a + jitter, base_b + jitter);
            for ((ps, gs), a, b) in overrides {
                if p.probe_subject == *ps && p.gallery_subject == *gs {
                    s_a = *a;
                    s_b = *b;
                }
            }
            records.push(rec(
                (&p.probe_subject, &p.probe_sample),
                (&p.gallery_subject, &p.gallery_sample),
                "alpha",
                s_a,
            ));
            records.push(rec(
                (&p.probe_subject, &p.probe_sample),
                (&p.gallery_subject, &p.gallery_sample),
                "beta",
                s_b,
            ));
        }
        ScoreSet::from_records(records).unwrap()
    }

    #[test]
    fn single_matcher_modalities_get_unit_weights() {
        let scores = handcrafted(&[]);
        let out = run_pipeline(&scores, &PipelineConfig::default()).unwrap();
        assert!(!out.weight_rows.is_empty());
        for w in &out.weight_rows {
            assert_eq!(w.weight, 1.0, "single-matcher modality must weight 1.0");
        }
        // Separable scores: perfect train rates and zero hybrid EER.
        for rate in out.report.predictive_rates.values() {
            assert_eq!((rate.p_gen, rate.p_imp), (1.0, 1.0));
        }
        assert_eq!(out.report.hybrid.eer_percent, 0.0);
        assert_eq!(out.report.conflict_rejects, 0);
    }

    #[test]
    fn fuse_score_set_covers_both_halves() {
        let scores = handcrafted(&[]);
        let (records, weights) = fuse_score_set(&scores, &PipelineConfig::default()).unwrap();
        // 21 comparisons per half-pair of modalities: (6 genuine + 15
        // imposter) comparisons split 3+3 subjects per half -> (3 + 3) * 2
        // per half, over both halves and two single-matcher modalities.
        assert_eq!(records.len(), 2 * (3 + 3) * 2);
        assert_eq!(weights.len(), records.len());
        assert!(weights.iter().all(|w| w.weight == 1.0));
        assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.score)));
        let mut names: Vec<&str> = records.iter().map(|r| r.matcher.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names, vec!["mcw:alpha", "mcw:beta"]);
    }

    #[test]
    fn total_conflict_maps_to_reject_and_is_counted() {
        // One test imposter comparison with maximal disagreement: alpha
        // says certainly genuine, beta certainly imposter. Perfect train
        // rates make both BBAs categorical, so K = 1.
        let scores = handcrafted(&[(("e", "d"), 1.0, 0.0)]);
        let out = run_pipeline(&scores, &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.conflict_rejects, 1);
        let conflicted: Vec<&MassRow> = out
            .mass_rows
            .iter()
            .filter(|m| m.conflict_k == 1.0)
            .collect();
        assert_eq!(conflicted.len(), 1);
        assert_eq!(conflicted[0].decision, Decision::Reject);
        assert_eq!(conflicted[0].probe_subject, "e");
        assert_eq!(
            (
                conflicted[0].m_gen,
                conflicted[0].m_imp,
                conflicted[0].m_theta
            ),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn all_probes_conflicting_is_an_error() {
        let overrides: Vec<((&str, &str), f64, f64)> = vec![
            (("d", "d"), 1.0, 0.0),
            (("e", "e"), 1.0, 0.0),
            (("f", "f"), 1.0, 0.0),
            (("e", "d"), 1.0, 0.0),
            (("f", "d"), 1.0, 0.0),
            (("f", "e"), 1.0, 0.0),
        ];
        let scores = handcrafted(&overrides);
        let err = run_pipeline(&scores, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ConflictExhausted { total: 6 }));
    }

    #[test]
    fn explicit_modality_map_overrides_prefix() {
        let scores = handcrafted(&[]);
        let mut cfg = PipelineConfig::default();
        cfg.matcher_modality
            .insert("alpha".to_string(), "left".to_string());
        cfg.matcher_modality
            .insert("beta".to_string(), "left".to_string());
        let out = run_pipeline(&scores, &cfg).unwrap();
        assert_eq!(out.report.modalities.len(), 1);
        assert!(out.report.modalities.contains_key("left"));
        // Two matchers in one modality: weights sum to 1 per comparison.
        let mut by_pair: BTreeMap<[String; 4], f64> = BTreeMap::new();
        for w in &out.weight_rows {
            *by_pair
                .entry([
                    w.probe_subject.clone(),
                    w.probe_sample.clone(),
                    w.gallery_subject.clone(),
                    w.gallery_sample.clone(),
                ])
                .or_default() += w.weight;
        }
        assert!(!by_pair.is_empty());
        for (_, total) in by_pair {
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn match_templates_produces_all_four_channels() {
        let cfg = SynthConfig {
            n_subjects: 4,
            samples_per_subject: 3,
            iris_bits: 256,
            intra_flip_rate: 0.08,
            fp_minutiae_range: (6, 10),
            descriptor_dim: 4,
            descriptor_noise: 0.04,
            score_model: None,
            seed: 21,
        };
        let templates = synth_templates(&cfg).unwrap();
        let records = match_templates(&templates, Protocol::AllPairs).unwrap();
        // 4 * C(3,2) genuine + C(4,2) imposter = 18 comparisons, 4 matchers.
        assert_eq!(records.len(), 18 * 4);
        let set = ScoreSet::from_records(records).unwrap();
        assert_eq!(
            set.matchers(),
            vec![
                MATCHER_FP_COSINE,
                MATCHER_FP_DICE,
                MATCHER_IRIS_HAMMING,
                MATCHER_IRIS_JACCARD
            ]
        );
        for matcher in set.matchers() {
            let (gen, imp) = set.class_scores(&matcher);
            let gen_mean = gen.iter().sum::<f64>() / gen.len() as f64;
            let imp_mean = imp.iter().sum::<f64>() / imp.len() as f64;
            assert!(
                gen_mean > imp_mean,
                "{matcher}: genuine mean {gen_mean} <= imposter mean {imp_mean}"
            );
        }
    }

    #[test]
    fn match_templates_rejects_missing_modality_entries() {
        let cfg = SynthConfig {
            n_subjects: 2,
            samples_per_subject: 2,
            iris_bits: 64,
            fp_minutiae_range: (4, 5),
            ..SynthConfig::default()
        };
        let mut templates = synth_templates(&cfg).unwrap();
        // Drop one fingerprint template to break pairing.
        let drop_at = templates
            .iter()
            .position(|t| matches!(t, Template::Fingerprint(_)))
            .unwrap();
        templates.remove(drop_at);
        let err = match_templates(&templates, Protocol::AllPairs).unwrap_err();
        assert!(matches!(err, Error::MissingTemplate { .. }));
    }

    #[test]
    fn templates_to_report_end_to_end() {
        let cfg = SynthConfig {
            n_subjects: 8,
            samples_per_subject: 3,
            iris_bits: 512,
            intra_flip_rate: 0.1,
            fp_minutiae_range: (8, 14),
            descriptor_dim: 4,
            descriptor_noise: 0.05,
            score_model: None,
            seed: 33,
        };
        let templates = synth_templates(&cfg).unwrap();
        let records = match_templates(&templates, Protocol::AllPairs).unwrap();
        let scores = ScoreSet::from_records(records).unwrap();
        let out = run_pipeline(&scores, &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.n_train_subjects, 4);
        assert_eq!(out.report.matchers.len(), 4);
        assert!(out.report.hybrid.eer_percent <= 50.0);
    }

    #[test]
    fn write_outputs_is_byte_stable() {
        let out = run_small(14);
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let paths1 = write_outputs(dir1.path(), &out).unwrap();
        let paths2 = write_outputs(dir2.path(), &out).unwrap();
        assert_eq!(paths1.len(), paths2.len());
        assert!(paths1.iter().any(|p| p.ends_with("report.json")));
        assert!(paths1.iter().any(|p| p.ends_with("roc_hybrid.csv")));
        assert!(paths1.iter().any(|p| p.ends_with("roc_mcw_iris.csv")));
        for (p1, p2) in paths1.iter().zip(&paths2) {
            assert_eq!(p1.file_name(), p2.file_name());
            assert_eq!(
                fs::read(p1).unwrap(),
                fs::read(p2).unwrap(),
                "{:?} differs",
                p1.file_name()
            );
        }
        let masses = fs::read_to_string(dir1.path().join("masses.csv")).unwrap();
        assert!(masses
            .starts_with("probe_subject,probe_sample,m_gen,m_imp,m_theta,conflict_K,decision\n"));
    }

    #[test]
    fn evaluate_all_reports_each_matcher() {
        let records = synth_scores(&small_score_cfg(2), Protocol::AllPairs).unwrap();
        let scores = ScoreSet::from_records(records).unwrap();
        let reports = evaluate_all(&scores, &[0.1], &[ConfidenceLevel::NinetyFive]).unwrap();
        assert_eq!(reports.len(), 4);
        for report in reports.values() {
            assert!(report.eer_percent < 50.0);
        }
    }
}
