//! Reproducible synthetic datasets: iris-like bit templates, fingerprint-
//! like descriptor matrices, and raw matcher scores with controllable
//! class separation. Everything is a deterministic function of the config,
//! including the seed, so datasets can be regenerated byte-identically.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{generate_comparisons, Protocol, Roster};
use crate::scores::ScoreRecord;
use crate::template::{BinaryTemplate, FeatureMatrix, Template};

/// Score distribution of one matcher: truncated normals on [0,1] per
/// class, with an optional within-modality latent correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherModel {
    /// Modality this matcher belongs to; matchers sharing a modality share
    /// a latent factor per comparison.
    pub modality: String,
    pub gen_mean: f64,
    pub gen_std: f64,
    pub imp_mean: f64,
    pub imp_std: f64,
    /// Loading on the shared latent factor, in [0,1]. Two matchers with
    /// loadings r1, r2 have score correlation r1*r2.
    #[serde(default)]
    pub inter_matcher_correlation: f64,
}

/// Full synthesis configuration. Serialized as JSON for the CLI; omitted
/// fields fall back to the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub samples_per_subject: usize,
    pub iris_bits: usize,
    /// Per-bit flip probability applied to a subject's base template for
    /// each sample; must stay below 0.5 or classes become inseparable.
    pub intra_flip_rate: f64,
    /// Inclusive (min, max) minutiae count per subject.
    pub fp_minutiae_range: (usize, usize),
    pub descriptor_dim: usize,
    /// Standard deviation of the additive per-sample descriptor noise.
    pub descriptor_noise: f64,
    /// Per-matcher score models keyed by matcher name; required for score
    /// synthesis, ignored by template synthesis.
    #[serde(default)]
    pub score_model: Option<BTreeMap<String, MatcherModel>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 50,
            samples_per_subject: 7,
            iris_bits: 2048,
            intra_flip_rate: 0.12,
            fp_minutiae_range: (24, 40),
            descriptor_dim: 8,
            descriptor_noise: 0.06,
            score_model: None,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Default four-matcher score model: two matchers per modality with
    /// moderate separation (analytic d' roughly 2.2-2.7 before
    /// truncation) and a shared latent factor within each modality.
    pub fn default_with_scores() -> Self {
        let mut model = BTreeMap::new();
        let mut insert = |name: &str, modality: &str, gen: (f64, f64), imp: (f64, f64)| {
            model.insert(
                name.to_string(),
                MatcherModel {
                    modality: modality.to_string(),
                    gen_mean: gen.0,
                    gen_std: gen.1,
                    imp_mean: imp.0,
                    imp_std: imp.1,
                    inter_matcher_correlation: 0.4,
                },
            );
        };
        insert("iris_hamming", "iris", (0.66, 0.11), (0.36, 0.11));
        insert("iris_jaccard", "iris", (0.62, 0.11), (0.38, 0.11));
        insert("fp_dice", "fp", (0.65, 0.12), (0.35, 0.12));
        insert("fp_cosine", "fp", (0.63, 0.11), (0.37, 0.11));
        Self {
            score_model: Some(model),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_subjects == 0 || self.n_subjects > 999 {
            return bad(format!("n_subjects {} not in 1..=999", self.n_subjects));
        }
        if self.samples_per_subject == 0 || self.samples_per_subject > 99 {
            return bad(format!(
                "samples_per_subject {} not in 1..=99",
                self.samples_per_subject
            ));
        }
        if self.iris_bits == 0 {
            return bad("iris_bits must be positive".into());
        }
        if !(0.0..0.5).contains(&self.intra_flip_rate) {
            return bad(format!(
                "intra_flip_rate {} not in [0, 0.5)",
                self.intra_flip_rate
            ));
        }
        let (lo, hi) = self.fp_minutiae_range;
        if lo == 0 || lo > hi {
            return bad(format!(
                "fp_minutiae_range ({lo}, {hi}) is not a valid range"
            ));
        }
        if self.descriptor_dim == 0 {
            return bad("descriptor_dim must be positive".into());
        }
        if !self.descriptor_noise.is_finite() || self.descriptor_noise < 0.0 {
            return bad(format!(
                "descriptor_noise {} invalid",
                self.descriptor_noise
            ));
        }
        if let Some(model) = &self.score_model {
            if model.is_empty() {
                return bad("score_model present but empty".into());
            }
            for (name, m) in model {
                if m.modality.is_empty() {
                    return bad(format!("matcher '{name}' has an empty modality"));
                }
                for v in [m.gen_mean, m.gen_std, m.imp_mean, m.imp_std] {
                    if !v.is_finite() {
                        return bad(format!("matcher '{name}' has a non-finite parameter"));
                    }
                }
                if m.gen_std <= 0.0 || m.imp_std <= 0.0 {
                    return bad(format!("matcher '{name}' needs positive deviations"));
                }
                if m.gen_mean <= m.imp_mean {
                    return bad(format!(
                        "matcher '{name}' has gen_mean {} <= imp_mean {}",
                        m.gen_mean, m.imp_mean
                    ));
                }
                if !(0.0..=1.0).contains(&m.inter_matcher_correlation) {
                    return bad(format!(
                        "matcher '{name}' correlation {} not in [0,1]",
                        m.inter_matcher_correlation
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn subject_id(&self, index: usize) -> String {
        format!("u{index:03}")
    }

    pub fn sample_id(&self, index: usize) -> String {
        format!("s{index:02}")
    }

    /// The roster implied by the config: zero-padded subject and sample
    /// ids, so lexicographic order matches generation order.
    pub fn roster(&self) -> Roster {
        (0..self.n_subjects)
            .map(|u| {
                (
                    self.subject_id(u),
                    (0..self.samples_per_subject)
                        .map(|s| self.sample_id(s))
                        .collect(),
                )
            })
            .collect()
    }
}

const DESCRIPTOR_BASE_MIN: f64 = 0.2;
const DESCRIPTOR_MIN: f64 = 0.05;
const DESCRIPTOR_MAX: f64 = 1.0;

/// Generates iris bit templates and fingerprint descriptor matrices for
/// every (subject, sample): each subject gets one random base per
/// modality, and each sample perturbs it (independent bit flips at the
/// configured rate; additive Gaussian descriptor noise). All iris
/// templates are emitted first, then all fingerprint templates, both in
/// subject-major order.
pub fn synth_templates(cfg: &SynthConfig) -> Result<Vec<Template>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(2 * cfg.n_subjects * cfg.samples_per_subject);

    for u in 0..cfg.n_subjects {
        let subject = cfg.subject_id(u);
        let base: Vec<bool> = (0..cfg.iris_bits).map(|_| rng.random()).collect();
        for s in 0..cfg.samples_per_subject {
            let bits: Vec<bool> = base
                .iter()
                .map(|&b| {
                    if rng.random::<f64>() < cfg.intra_flip_rate {
                        !b
                    } else {
                        b
                    }
                })
                .collect();
            out.push(Template::Iris(BinaryTemplate::from_bools(
                &subject,
                &cfg.sample_id(s),
                &bits,
            )?));
        }
    }

    let noise = if cfg.descriptor_noise > 0.0 {
        Some(Normal::new(0.0, cfg.descriptor_noise).expect("validated noise deviation"))
    } else {
        None
    };
    for u in 0..cfg.n_subjects {
        let subject = cfg.subject_id(u);
        let (lo, hi) = cfg.fp_minutiae_range;
        let n_minutiae = rng.random_range(lo..=hi);
        let base: Vec<Vec<f64>> = (0..n_minutiae)
            .map(|_| {
                (0..cfg.descriptor_dim)
                    .map(|_| rng.random_range(DESCRIPTOR_BASE_MIN..=DESCRIPTOR_MAX))
                    .collect()
            })
            .collect();
        for s in 0..cfg.samples_per_subject {
            let rows: Vec<Vec<f64>> = base
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&v| {
                            let n = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                            (v + n).clamp(DESCRIPTOR_MIN, DESCRIPTOR_MAX)
                        })
                        .collect()
                })
                .collect();
            out.push(Template::Fingerprint(FeatureMatrix::new(
                &subject,
                &cfg.sample_id(s),
                rows,
            )?));
        }
    }
    Ok(out)
}

/// Resample cap for the joint clip-and-resample loop; exceeding it clamps
/// with a warning instead of looping forever on a badly placed model.
const MAX_RESAMPLES: usize = 1000;

/// Draws raw matcher scores for every comparison in the protocol. Matchers
/// of one modality share a standard-normal latent factor per comparison;
/// each matcher mixes it with private noise by its correlation loading,
/// then the whole modality draw is rejected and redrawn until every score
/// lands in [0,1] (joint clip-and-resample).
pub fn synth_scores(cfg: &SynthConfig, protocol: Protocol) -> Result<Vec<ScoreRecord>> {
    cfg.validate()?;
    let Some(model) = &cfg.score_model else {
        return Err(Error::InvalidConfig(
            "score synthesis requires score_model in the config".into(),
        ));
    };

    // Group matcher names by modality; BTreeMap keeps both levels sorted
    // so the draw order is deterministic.
    let mut modalities: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (name, m) in model {
        modalities.entry(&m.modality).or_default().push(name);
    }

    let pairs = generate_comparisons(&cfg.roster(), protocol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(pairs.len() * model.len());

    for pair in &pairs {
        for matchers in modalities.values() {
            let mut scores = vec![0.0; matchers.len()];
            let mut accepted = false;
            for attempt in 0..MAX_RESAMPLES {
                let z: f64 = rng.sample(StandardNormal);
                let mut all_in_range = true;
                for (k, name) in matchers.iter().enumerate() {
                    let m = &model[*name];
                    let (mu, sd) = match pair.label {
                        crate::scores::Label::Genuine => (m.gen_mean, m.gen_std),
                        crate::scores::Label::Imposter => (m.imp_mean, m.imp_std),
                    };
                    let rho = m.inter_matcher_correlation;
                    let e: f64 = rng.sample(StandardNormal);
                    let x = mu + sd * (rho * z + (1.0 - rho * rho).sqrt() * e);
                    scores[k] = x;
                    all_in_range &= (0.0..=1.0).contains(&x);
                }
                if all_in_range {
                    accepted = true;
                    break;
                }
                if attempt + 1 == MAX_RESAMPLES {
                    log::warn!(
                        "clip-and-resample hit the {MAX_RESAMPLES}-draw cap; clamping scores"
                    );
                }
            }
            if !accepted {
                for s in &mut scores {
                    *s = s.clamp(0.0, 1.0);
                }
            }
            for (k, name) in matchers.iter().enumerate() {
                records.push(ScoreRecord {
                    probe_subject: pair.probe_subject.clone(),
                    probe_sample: pair.probe_sample.clone(),
                    gallery_subject: pair.gallery_subject.clone(),
                    gallery_sample: pair.gallery_sample.clone(),
                    matcher: name.to_string(),
                    score: scores[k],
                    label: pair.label,
                });
            }
        }
    }
    Ok(records)
}
