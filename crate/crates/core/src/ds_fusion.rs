//! Dempster-Shafer evidential engine.
//!
//! Basic belief assignments over a small frame of discernment, Dempster's
//! rule of combination with explicit conflict, belief/plausibility/
//! conditioning queries, and the verification-side pieces: matcher
//! predictive rates, score-induced BBAs and the thresholded decision.
//!
//! Focal elements are bitmasks over the frame's hypothesis indices, and a
//! mass function stores one value per subset, which keeps every operation
//! an exact enumeration for the small frames used here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported frame; verification needs 2 hypotheses, algebra tests
/// use 3.
pub const MAX_FRAME: usize = 12;

/// Masses must sum to 1 within this tolerance.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Frame of discernment: the exhaustive set of mutually exclusive
/// hypotheses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    labels: Vec<String>,
}

/// Index of the genuine hypothesis in the verification frame.
pub const GEN: usize = 0;
/// Index of the imposter hypothesis in the verification frame.
pub const IMP: usize = 1;

impl Frame {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_FRAME {
            return Err(Error::InvalidFrame {
                got: labels.len(),
                max: MAX_FRAME,
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidFrame {
                    got: labels.len(),
                    max: MAX_FRAME,
                });
            }
        }
        Ok(Self { labels })
    }

    /// The two-class verification frame {Gen, Imp}.
    pub fn verification() -> Self {
        Self::new(vec!["Gen", "Imp"]).expect("static frame is valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn full(&self) -> FocalSet {
        FocalSet((1u32 << self.labels.len()) - 1)
    }

    pub fn singleton(&self, index: usize) -> FocalSet {
        assert!(index < self.labels.len(), "hypothesis index out of range");
        FocalSet(1 << index)
    }

    pub fn subset(&self, indices: &[usize]) -> FocalSet {
        let mut bits = 0u32;
        for &i in indices {
            assert!(i < self.labels.len(), "hypothesis index out of range");
            bits |= 1 << i;
        }
        FocalSet(bits)
    }

    pub fn complement(&self, set: FocalSet) -> FocalSet {
        FocalSet(!set.0 & self.full().0)
    }

    fn n_subsets(&self) -> usize {
        1 << self.labels.len()
    }
}

/// A subset of the frame's hypotheses, one bit per hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FocalSet(pub u32);

impl FocalSet {
    pub const EMPTY: FocalSet = FocalSet(0);

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersect(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 & other.0)
    }

    pub fn union(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: FocalSet) -> bool {
        self.0 & !other.0 == 0
    }
}

/// Basic belief assignment: masses over the subsets of a frame with
/// m(empty) = 0 and total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Frame,
    masses: Vec<f64>,
}

impl MassFunction {
    /// The vacuous mass: everything on the full frame (total ignorance).
    pub fn vacuous(frame: Frame) -> Self {
        let mut masses = vec![0.0; frame.n_subsets()];
        let full = frame.full();
        masses[full.0 as usize] = 1.0;
        Self { frame, masses }
    }

    pub fn from_assignments(frame: Frame, assignments: &[(FocalSet, f64)]) -> Result<Self> {
        let mut masses = vec![0.0; frame.n_subsets()];
        for &(set, value) in assignments {
            if set.0 as usize >= masses.len() {
                return Err(Error::InvalidMass(format!(
                    "focal set {:#b} outside the frame",
                    set.0
                )));
            }
            masses[set.0 as usize] += value;
        }
        let m = Self { frame, masses };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.masses[0] != 0.0 {
            return Err(Error::InvalidMass(format!(
                "empty set carries mass {}",
                self.masses[0]
            )));
        }
        let mut total = 0.0;
        for &v in &self.masses {
            if !(0.0..=1.0 + MASS_TOLERANCE).contains(&v) {
                return Err(Error::InvalidMass(format!("mass {v} outside [0,1]")));
            }
            total += v;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMass(format!("masses sum to {total}")));
        }
        Ok(())
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mass(&self, set: FocalSet) -> f64 {
        self.masses[set.0 as usize]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Focal elements (nonzero-mass subsets) with their masses.
    pub fn focal_elements(&self) -> impl Iterator<Item = (FocalSet, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (FocalSet(i as u32), v))
    }

    /// Total mass committed to subsets of `set`.
    pub fn belief(&self, set: FocalSet) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptyFocalSet);
        }
        Ok(self
            .focal_elements()
            .filter(|(b, _)| b.is_subset_of(set))
            .map(|(_, v)| v)
            .sum())
    }

    /// Total mass of subsets intersecting `set`; equals 1 - bel(not set).
    pub fn plausibility(&self, set: FocalSet) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptyFocalSet);
        }
        Ok(self
            .focal_elements()
            .filter(|(b, _)| !b.intersect(set).is_empty())
            .map(|(_, v)| v)
            .sum())
    }

    /// Belief in `a` conditioned on the event `e`:
    /// bel(a ∪ ¬e) - bel(¬e). `e` must be a nonempty strict subset of the
    /// frame.
    pub fn condition_belief(&self, a: FocalSet, e: FocalSet) -> Result<f64> {
        if e.is_empty() || e == self.frame.full() {
            return Err(Error::DegenerateConditioning);
        }
        let not_e = self.frame.complement(e);
        Ok(self.belief(a.union(not_e))? - self.belief(not_e)?)
    }
}

/// Dempster's rule for two masses over the same frame. The conflict K is
/// the product mass falling on empty intersections; 1 - K renormalizes the
/// rest. K = 1 has no defined combination and is an error.
pub fn dempster_combine(m1: &MassFunction, m2: &MassFunction) -> Result<MassFunction> {
    combine_inner(m1, m2).map(|(m, _)| m)
}

/// The conflict K between two masses, without combining them.
pub fn dempster_conflict(m1: &MassFunction, m2: &MassFunction) -> Result<f64> {
    if m1.frame != m2.frame {
        return Err(Error::FrameMismatch);
    }
    let mut conflict = 0.0;
    for (b, v1) in m1.focal_elements() {
        for (c, v2) in m2.focal_elements() {
            if b.intersect(c).is_empty() {
                conflict += v1 * v2;
            }
        }
    }
    Ok(conflict)
}

fn combine_inner(m1: &MassFunction, m2: &MassFunction) -> Result<(MassFunction, f64)> {
    if m1.frame != m2.frame {
        return Err(Error::FrameMismatch);
    }
    let mut masses = vec![0.0; m1.frame.n_subsets()];
    let mut conflict = 0.0;
    for (b, v1) in m1.focal_elements() {
        for (c, v2) in m2.focal_elements() {
            let a = b.intersect(c);
            if a.is_empty() {
                conflict += v1 * v2;
            } else {
                masses[a.0 as usize] += v1 * v2;
            }
        }
    }
    let scale = 1.0 - conflict;
    if scale <= MASS_TOLERANCE {
        return Err(Error::TotalConflict { index: 1 });
    }
    for v in &mut masses {
        *v /= scale;
    }
    Ok((
        MassFunction {
            frame: m1.frame.clone(),
            masses,
        },
        conflict,
    ))
}

/// Left fold of [`dempster_combine`]. A total conflict reports the index of
/// the mass whose inclusion made the running combination undefined.
pub fn combine_all(masses: &[MassFunction]) -> Result<MassFunction> {
    combine_all_tracked(masses).map(|(m, _)| m)
}

/// Like [`combine_all`] but also returns the cumulative conflict of the
/// whole combination, 1 - prod(1 - K_step).
pub fn combine_all_tracked(masses: &[MassFunction]) -> Result<(MassFunction, f64)> {
    let Some((first, rest)) = masses.split_first() else {
        return Err(Error::EmptyDecisions);
    };
    let mut acc = first.clone();
    let mut kept = 1.0;
    for (i, m) in rest.iter().enumerate() {
        let (next, conflict) = combine_inner(&acc, m).map_err(|e| match e {
            Error::TotalConflict { .. } => Error::TotalConflict { index: i + 1 },
            other => other,
        })?;
        kept *= 1.0 - conflict;
        acc = next;
    }
    Ok((acc, 1.0 - kept))
}

/// Verification decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

/// Winner-take-all output: a single hypothesis, or the rejection class when
/// the frame mass wins or the maximum is tied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtaOutcome {
    Class(usize),
    Reject,
}

/// Argmax over the singleton masses and the frame mass. The frame maps to
/// the rejection class; exact ties resolve to rejection.
pub fn winner_take_all(m: &MassFunction) -> WtaOutcome {
    let full = m.frame().full();
    let mut candidates: Vec<(Option<usize>, f64)> = (0..m.frame().len())
        .map(|i| (Some(i), m.mass(m.frame().singleton(i))))
        .collect();
    candidates.push((None, m.mass(full)));
    let best = candidates
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<Option<usize>> = candidates
        .iter()
        .filter(|&&(_, v)| v == best)
        .map(|&(c, _)| c)
        .collect();
    match winners.as_slice() {
        [Some(class)] => WtaOutcome::Class(*class),
        _ => WtaOutcome::Reject,
    }
}

/// Thresholded verification: accept only when the genuine mass strictly
/// exceeds the threshold.
pub fn verify(m_final: &MassFunction, threshold: f64) -> Decision {
    let gen_mass = m_final.mass(m_final.frame().singleton(GEN));
    if gen_mass > threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Two-class label used for predictive-rate bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassLabel {
    Gen,
    Imp,
}

/// Per-class predictive rates of one matcher: of the samples it classified
/// as class k, the fraction that truly were k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRates {
    pub p_gen: f64,
    pub p_imp: f64,
    pub gen_correct: usize,
    pub gen_classified: usize,
    pub imp_correct: usize,
    pub imp_classified: usize,
}

/// Fallback rate for a class the matcher never predicted.
pub const UNINFORMATIVE_RATE: f64 = 0.5;

/// Computes predictive rates from (predicted, true) decision pairs.
pub fn predictive_rate(decisions: &[(ClassLabel, ClassLabel)]) -> Result<PredictiveRates> {
    if decisions.is_empty() {
        return Err(Error::EmptyDecisions);
    }
    let mut rates = PredictiveRates {
        p_gen: UNINFORMATIVE_RATE,
        p_imp: UNINFORMATIVE_RATE,
        gen_correct: 0,
        gen_classified: 0,
        imp_correct: 0,
        imp_classified: 0,
    };
    for &(predicted, truth) in decisions {
        match predicted {
            ClassLabel::Gen => {
                rates.gen_classified += 1;
                if truth == ClassLabel::Gen {
                    rates.gen_correct += 1;
                }
            }
            ClassLabel::Imp => {
                rates.imp_classified += 1;
                if truth == ClassLabel::Imp {
                    rates.imp_correct += 1;
                }
            }
        }
    }
    if rates.gen_classified > 0 {
        rates.p_gen = rates.gen_correct as f64 / rates.gen_classified as f64;
    }
    if rates.imp_classified > 0 {
        rates.p_imp = rates.imp_correct as f64 / rates.imp_classified as f64;
    }
    Ok(rates)
}

/// Builds the BBA induced by a fused modality score: belief scaled by the
/// genuine predictive rate, disbelief by the imposter predictive rate on
/// the complementary score, remainder on the frame. If belief and disbelief
/// ever exceed 1 together they are rescaled proportionally.
pub fn induced_bba(score: f64, rates: &PredictiveRates) -> Result<MassFunction> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    let mut m_gen = rates.p_gen * score;
    let mut m_imp = rates.p_imp * (1.0 - score);
    let total = m_gen + m_imp;
    if total > 1.0 {
        m_gen /= total;
        m_imp /= total;
    }
    let theta = (1.0 - m_gen - m_imp).max(0.0);
    let frame = Frame::verification();
    MassFunction::from_assignments(
        frame.clone(),
        &[
            (frame.singleton(GEN), m_gen),
            (frame.singleton(IMP), m_imp),
            (frame.full(), theta),
        ],
    )
}

/// Splits the induced evidence into separate belief and disbelief BBAs
/// (the four-mass combination variant): one mass carries only the genuine
/// support, the other only the imposter support, remainders on the frame.
pub fn induced_bba_split(
    score: f64,
    rates: &PredictiveRates,
) -> Result<(MassFunction, MassFunction)> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    let frame = Frame::verification();
    let m_gen = rates.p_gen * score;
    let belief = MassFunction::from_assignments(
        frame.clone(),
        &[(frame.singleton(GEN), m_gen), (frame.full(), 1.0 - m_gen)],
    )?;
    let m_imp = rates.p_imp * (1.0 - score);
    let disbelief = MassFunction::from_assignments(
        frame.clone(),
        &[(frame.singleton(IMP), m_imp), (frame.full(), 1.0 - m_imp)],
    )?;
    Ok((belief, disbelief))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn verification_mass(gen: f64, imp: f64, theta: f64) -> MassFunction {
        let frame = Frame::verification();
        MassFunction::from_assignments(
            frame.clone(),
            &[
                (frame.singleton(GEN), gen),
                (frame.singleton(IMP), imp),
                (frame.full(), theta),
            ],
        )
        .unwrap()
    }

    #[test]
    fn frame_rejects_duplicates_and_empty() {
        assert!(Frame::new::<&str>(vec![]).is_err());
        assert!(Frame::new(vec!["a", "a"]).is_err());
        assert!(Frame::new(vec!["a", "b", "c"]).is_ok());
    }

    #[test]
    fn mass_invariants_enforced() {
        let frame = Frame::verification();
        let bad = MassFunction::from_assignments(
            frame.clone(),
            &[(FocalSet::EMPTY, 0.2), (frame.full(), 0.8)],
        );
        assert!(bad.is_err());
        let short = MassFunction::from_assignments(frame.clone(), &[(frame.singleton(GEN), 0.5)]);
        assert!(short.is_err());
    }

    #[test]
    fn belief_and_plausibility_subset_sums() {
        let frame = Frame::verification();
        let m = verification_mass(0.6, 0.0, 0.4);
        assert_relative_eq!(m.belief(frame.full()).unwrap(), 1.0);
        assert_relative_eq!(m.belief(frame.singleton(GEN)).unwrap(), 0.6);
        assert_relative_eq!(m.plausibility(frame.singleton(GEN)).unwrap(), 1.0);

        // On a two-hypothesis frame {Gen, Imp} is the whole frame, so every
        // focal element (theta included) is a subset of it.
        let m = verification_mass(0.5, 0.3, 0.2);
        assert_relative_eq!(m.belief(frame.subset(&[GEN, IMP])).unwrap(), 1.0);
        assert_relative_eq!(m.plausibility(frame.singleton(GEN)).unwrap(), 0.7);

        let vacuous = MassFunction::vacuous(frame.clone());
        assert_relative_eq!(vacuous.plausibility(frame.singleton(IMP)).unwrap(), 1.0);
        assert!(m.belief(FocalSet::EMPTY).is_err());

        // A strict subset only accumulates the masses it contains: on a
        // three-hypothesis frame the residual frame mass stays outside.
        let wide = Frame::new(vec!["a", "b", "c"]).unwrap();
        let m = MassFunction::from_assignments(
            wide.clone(),
            &[
                (wide.singleton(0), 0.5),
                (wide.singleton(1), 0.3),
                (wide.full(), 0.2),
            ],
        )
        .unwrap();
        assert_relative_eq!(m.belief(wide.subset(&[0, 1])).unwrap(), 0.8);
        assert_relative_eq!(m.plausibility(wide.singleton(2)).unwrap(), 0.2);
    }

    #[test]
    fn conditioning_examples() {
        let frame = Frame::verification();
        let m = verification_mass(0.6, 0.0, 0.4);
        let gen = frame.singleton(GEN);
        assert_relative_eq!(m.condition_belief(gen, gen).unwrap(), 1.0);

        // bel({Imp} ∪ {Gen}) - bel({Gen}) = 1.0 - 0.5 on the binary frame.
        let m = verification_mass(0.5, 0.3, 0.2);
        let imp = frame.singleton(IMP);
        assert_relative_eq!(m.condition_belief(imp, imp).unwrap(), 0.5);

        assert!(m.condition_belief(gen, FocalSet::EMPTY).is_err());
        assert!(m.condition_belief(gen, frame.full()).is_err());

        // On a wider frame conditioning can strictly shrink the belief:
        // bel({b} ∪ {c}) - bel({c}) = 0.3 - 0.0.
        let wide = Frame::new(vec!["a", "b", "c"]).unwrap();
        let m = MassFunction::from_assignments(
            wide.clone(),
            &[
                (wide.singleton(0), 0.5),
                (wide.singleton(1), 0.3),
                (wide.full(), 0.2),
            ],
        )
        .unwrap();
        assert_relative_eq!(
            m.condition_belief(wide.singleton(1), wide.subset(&[0, 1]))
                .unwrap(),
            0.3
        );
    }

    #[test]
    fn combine_agrees_with_hand_products() {
        // m1: Gen 0.6, theta 0.4; m2: Gen 0.7, theta 0.3 -> Gen 0.88, K = 0
        let m1 = verification_mass(0.6, 0.0, 0.4);
        let m2 = verification_mass(0.7, 0.0, 0.3);
        assert_relative_eq!(dempster_conflict(&m1, &m2).unwrap(), 0.0);
        let combined = dempster_combine(&m1, &m2).unwrap();
        let frame = Frame::verification();
        assert_relative_eq!(combined.mass(frame.singleton(GEN)), 0.88);
        assert_relative_eq!(combined.mass(frame.full()), 0.12);
    }

    #[test]
    fn combine_normalizes_by_conflict() {
        // m1: Gen 0.8, Imp 0.2; m2: Gen 0.5, Imp 0.5 -> K = 0.5, Gen 0.8
        let m1 = verification_mass(0.8, 0.2, 0.0);
        let m2 = verification_mass(0.5, 0.5, 0.0);
        assert_relative_eq!(dempster_conflict(&m1, &m2).unwrap(), 0.5);
        let combined = dempster_combine(&m1, &m2).unwrap();
        let frame = Frame::verification();
        assert_relative_eq!(combined.mass(frame.singleton(GEN)), 0.8);
        assert_relative_eq!(combined.mass(frame.singleton(IMP)), 0.2);
    }

    #[test]
    fn vacuous_is_neutral() {
        let m = verification_mass(0.5, 0.3, 0.2);
        let vacuous = MassFunction::vacuous(Frame::verification());
        let left = dempster_combine(&vacuous, &m).unwrap();
        let right = dempster_combine(&m, &vacuous).unwrap();
        for (set, value) in m.focal_elements() {
            assert_relative_eq!(left.mass(set), value, epsilon = 1e-12);
            assert_relative_eq!(right.mass(set), value, epsilon = 1e-12);
        }
    }

    #[test]
    fn total_conflict_is_an_error() {
        let m1 = verification_mass(1.0, 0.0, 0.0);
        let m2 = verification_mass(0.0, 1.0, 0.0);
        assert!(matches!(
            dempster_combine(&m1, &m2).unwrap_err(),
            Error::TotalConflict { .. }
        ));
        let err = combine_all(&[m1.clone(), m1.clone(), m2]).unwrap_err();
        assert!(matches!(err, Error::TotalConflict { index: 2 }));
    }

    #[test]
    fn combine_all_folds_and_tracks_conflict() {
        let m = verification_mass(0.5, 0.3, 0.2);
        let single = combine_all(std::slice::from_ref(&m)).unwrap();
        assert_eq!(single, m);

        let vacuous = MassFunction::vacuous(Frame::verification());
        let with_vacuous = combine_all(&[m.clone(), vacuous, m.clone()]).unwrap();
        let without = combine_all(&[m.clone(), m.clone()]).unwrap();
        for (set, value) in without.focal_elements() {
            assert_relative_eq!(with_vacuous.mass(set), value, epsilon = 1e-12);
        }

        let (_, k) = combine_all_tracked(&[m.clone(), m]).unwrap();
        // K = 0.5*0.3 + 0.3*0.5
        assert_relative_eq!(k, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn frame_mismatch_rejected() {
        let m1 = verification_mass(0.5, 0.3, 0.2);
        let other = MassFunction::vacuous(Frame::new(vec!["a", "b", "c"]).unwrap());
        assert!(matches!(
            dempster_combine(&m1, &other).unwrap_err(),
            Error::FrameMismatch
        ));
    }

    #[test]
    fn winner_take_all_rules() {
        assert_eq!(
            winner_take_all(&verification_mass(0.7, 0.2, 0.1)),
            WtaOutcome::Class(GEN)
        );
        assert_eq!(
            winner_take_all(&MassFunction::vacuous(Frame::verification())),
            WtaOutcome::Reject
        );
        assert_eq!(
            winner_take_all(&verification_mass(0.4, 0.4, 0.2)),
            WtaOutcome::Reject
        );
    }

    #[test]
    fn verify_uses_strict_inequality() {
        let m = verification_mass(0.88, 0.0, 0.12);
        assert_eq!(verify(&m, 0.5), Decision::Accept);
        assert_eq!(verify(&m, 0.88), Decision::Reject);
        let zero = verification_mass(0.0, 0.5, 0.5);
        assert_eq!(verify(&zero, 0.0), Decision::Reject);
    }

    #[test]
    fn predictive_rates_count_correct_fractions() {
        let mut decisions = Vec::new();
        for i in 0..100 {
            let truth = if i < 90 {
                ClassLabel::Gen
            } else {
                ClassLabel::Imp
            };
            decisions.push((ClassLabel::Gen, truth));
        }
        let rates = predictive_rate(&decisions).unwrap();
        assert_relative_eq!(rates.p_gen, 0.9);
        // Imp never predicted -> fallback
        assert_relative_eq!(rates.p_imp, UNINFORMATIVE_RATE);

        let perfect = predictive_rate(&[
            (ClassLabel::Gen, ClassLabel::Gen),
            (ClassLabel::Imp, ClassLabel::Imp),
        ])
        .unwrap();
        assert_relative_eq!(perfect.p_gen, 1.0);
        assert_relative_eq!(perfect.p_imp, 1.0);

        assert!(predictive_rate(&[]).is_err());
    }

    #[test]
    fn induced_bba_products() {
        let rates = PredictiveRates {
            p_gen: 0.95,
            p_imp: 0.9,
            gen_correct: 0,
            gen_classified: 0,
            imp_correct: 0,
            imp_classified: 0,
        };
        let frame = Frame::verification();
        let m = induced_bba(0.8, &rates).unwrap();
        assert_relative_eq!(m.mass(frame.singleton(GEN)), 0.76);
        assert_relative_eq!(m.mass(frame.singleton(IMP)), 0.18, epsilon = 1e-12);
        assert_relative_eq!(m.mass(frame.full()), 0.06, epsilon = 1e-12);
        assert_relative_eq!(m.total_mass(), 1.0, epsilon = 1e-12);

        let zero = induced_bba(0.0, &rates).unwrap();
        assert_eq!(zero.mass(frame.singleton(GEN)), 0.0);

        assert!(induced_bba(1.2, &rates).is_err());
    }

    #[test]
    fn induced_bba_split_masses() {
        let rates = PredictiveRates {
            p_gen: 0.95,
            p_imp: 0.9,
            gen_correct: 0,
            gen_classified: 0,
            imp_correct: 0,
            imp_classified: 0,
        };
        let frame = Frame::verification();
        let (belief, disbelief) = induced_bba_split(0.8, &rates).unwrap();
        assert_relative_eq!(belief.mass(frame.singleton(GEN)), 0.76);
        assert_relative_eq!(belief.mass(frame.full()), 0.24, epsilon = 1e-12);
        assert_eq!(belief.mass(frame.singleton(IMP)), 0.0);
        assert_relative_eq!(disbelief.mass(frame.singleton(IMP)), 0.18, epsilon = 1e-12);
        assert_eq!(disbelief.mass(frame.singleton(GEN)), 0.0);
    }
}
