//! Match-score computation between protected templates.
//!
//! Iris templates are compared bit-wise (Hamming and Jaccard similarity);
//! fingerprint templates row-wise through local similarity matrices (Dice
//! and cosine), double-match filtering and a global score. All outputs lie
//! in [0,1] and every function here is pure, so batch sweeps can run on any
//! number of workers.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::template::{BinaryTemplate, FeatureMatrix};

/// Counts how often a global similarity had to be clamped back into [0,1].
static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of global-similarity clamp events since process start.
pub fn clamp_event_count() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

/// Local similarity grid between enrolled rows (i) and query rows (j),
/// entries in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl SimilarityMatrix {
    pub fn from_values(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if values.len() != n_rows * n_cols || n_rows == 0 || n_cols == 0 {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n_rows * n_cols,
            });
        }
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ScoreOutOfRange(v));
            }
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Hamming similarity: one minus the normalized Hamming distance.
pub fn hamming_similarity(enrolled: &BinaryTemplate, query: &BinaryTemplate) -> Result<f64> {
    enrolled.check_same_len(query)?;
    if enrolled.is_empty() {
        return Err(Error::EmptyTemplate);
    }
    let differing: usize = enrolled
        .words()
        .iter()
        .zip(query.words())
        .map(|(&e, &q)| (e ^ q).count_ones() as usize)
        .sum();
    Ok(1.0 - differing as f64 / enrolled.len() as f64)
}

/// Jaccard similarity N11 / (N01 + N10 + N11), skipping 0-0 overlaps.
///
/// An all-zero pair leaves the ratio undefined and is reported as a
/// degenerate-template error: a protected template without any set bit
/// points at an ingestion fault rather than a legitimate comparison.
pub fn jaccard_similarity(enrolled: &BinaryTemplate, query: &BinaryTemplate) -> Result<f64> {
    enrolled.check_same_len(query)?;
    if enrolled.is_empty() {
        return Err(Error::EmptyTemplate);
    }
    let mut n11 = 0usize;
    let mut union = 0usize;
    for (&e, &q) in enrolled.words().iter().zip(query.words()) {
        n11 += (e & q).count_ones() as usize;
        union += (e | q).count_ones() as usize;
    }
    if union == 0 {
        return Err(Error::DegenerateTemplatePair);
    }
    Ok(n11 as f64 / union as f64)
}

fn check_same_dim(enrolled: &FeatureMatrix, query: &FeatureMatrix) -> Result<()> {
    if enrolled.dim() != query.dim() {
        return Err(Error::DimensionMismatch {
            left: enrolled.dim(),
            right: query.dim(),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Entries are clamped into [0,1]: negative descriptor values are accepted
/// at ingestion, but local similarities stay within the score contract.
fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Dice coefficient between every enrolled and query row:
/// `2 <e,q> / (|e|^2 + |q|^2)`.
pub fn dice_local_matrix(
    enrolled: &FeatureMatrix,
    query: &FeatureMatrix,
) -> Result<SimilarityMatrix> {
    check_same_dim(enrolled, query)?;
    let mut values = Vec::with_capacity(enrolled.n_rows() * query.n_rows());
    for i in 0..enrolled.n_rows() {
        let e = enrolled.row(i);
        let e_sq = norm_sq(e);
        for j in 0..query.n_rows() {
            let q = query.row(j);
            values.push(clamp_unit(2.0 * dot(e, q) / (e_sq + norm_sq(q))));
        }
    }
    SimilarityMatrix::from_values(values, enrolled.n_rows(), query.n_rows())
}

/// Cosine similarity between every enrolled and query row.
pub fn cosine_local_matrix(
    enrolled: &FeatureMatrix,
    query: &FeatureMatrix,
) -> Result<SimilarityMatrix> {
    check_same_dim(enrolled, query)?;
    let mut values = Vec::with_capacity(enrolled.n_rows() * query.n_rows());
    for i in 0..enrolled.n_rows() {
        let e = enrolled.row(i);
        let e_norm = norm_sq(e).sqrt();
        for j in 0..query.n_rows() {
            let q = query.row(j);
            values.push(clamp_unit(dot(e, q) / (e_norm * norm_sq(q).sqrt())));
        }
    }
    SimilarityMatrix::from_values(values, enrolled.n_rows(), query.n_rows())
}

/// Keeps entry (i,j) only when it is simultaneously the maximum of row i
/// and of column j; everything else becomes 0. Ties resolve to the lowest
/// index in each dimension, so at most `min(n_rows, n_cols)` entries
/// survive and filtering is idempotent.
pub fn filter_double_matches(local: &SimilarityMatrix) -> SimilarityMatrix {
    let (nr, nc) = (local.n_rows(), local.n_cols());
    let mut row_argmax = vec![0usize; nr];
    for (i, slot) in row_argmax.iter_mut().enumerate() {
        let mut best = 0usize;
        for j in 1..nc {
            if local.get(i, j) > local.get(i, best) {
                best = j;
            }
        }
        *slot = best;
    }
    let mut col_argmax = vec![0usize; nc];
    for (j, slot) in col_argmax.iter_mut().enumerate() {
        let mut best = 0usize;
        for i in 1..nr {
            if local.get(i, j) > local.get(best, j) {
                best = i;
            }
        }
        *slot = best;
    }
    let mut values = vec![0.0; nr * nc];
    for i in 0..nr {
        let j = row_argmax[i];
        if col_argmax[j] == i {
            values[i * nc + j] = local.get(i, j);
        }
    }
    SimilarityMatrix::from_values(values, nr, nc).expect("filtered entries stay in range")
}

/// Global fingerprint score: the filtered-matrix sum divided by the smaller
/// minutiae count, clamped into [0,1] (clamps are counted, see
/// [`clamp_event_count`]).
pub fn global_similarity(
    filtered: &SimilarityMatrix,
    n_enrolled: usize,
    n_query: usize,
) -> Result<f64> {
    if n_enrolled == 0 || n_query == 0 {
        return Err(Error::EmptyTemplate);
    }
    let raw = filtered.sum() / n_enrolled.min(n_query) as f64;
    if raw > 1.0 {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        log::warn!("global similarity {raw} clamped to 1.0");
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Dice-route fingerprint matcher: local Dice matrix, double-match filter,
/// global score.
pub fn fingerprint_dice_score(enrolled: &FeatureMatrix, query: &FeatureMatrix) -> Result<f64> {
    let filtered = filter_double_matches(&dice_local_matrix(enrolled, query)?);
    global_similarity(&filtered, enrolled.n_rows(), query.n_rows())
}

/// Cosine-route fingerprint matcher.
pub fn fingerprint_cosine_score(enrolled: &FeatureMatrix, query: &FeatureMatrix) -> Result<f64> {
    let filtered = filter_double_matches(&cosine_local_matrix(enrolled, query)?);
    global_similarity(&filtered, enrolled.n_rows(), query.n_rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bt(bits: &[u8]) -> BinaryTemplate {
        let bools: Vec<bool> = bits.iter().map(|&b| b == 1).collect();
        BinaryTemplate::from_bools("s", "q", &bools).unwrap()
    }

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::new("s", "q", rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn hamming_identity_and_complement() {
        let e = bt(&[0, 1, 0, 1]);
        let c = bt(&[1, 0, 1, 0]);
        assert_eq!(hamming_similarity(&e, &e).unwrap(), 1.0);
        assert_eq!(hamming_similarity(&e, &c).unwrap(), 0.0);
    }

    #[test]
    fn hamming_half_match() {
        // XOR of 0101 and 0110 sets 2 of 4 bits.
        let e = bt(&[0, 1, 0, 1]);
        let q = bt(&[0, 1, 1, 0]);
        assert_eq!(hamming_similarity(&e, &q).unwrap(), 0.5);
    }

    #[test]
    fn hamming_length_mismatch() {
        let err = hamming_similarity(&bt(&[0, 1]), &bt(&[0, 1, 1])).unwrap_err();
        assert!(matches!(
            err,
            Error::BitLengthMismatch { left: 2, right: 3 }
        ));
    }

    #[test]
    fn jaccard_identity_needs_a_set_bit() {
        let e = bt(&[1, 0, 1, 0]);
        assert_eq!(jaccard_similarity(&e, &e).unwrap(), 1.0);
        let z = bt(&[0, 0, 0, 0]);
        assert!(matches!(
            jaccard_similarity(&z, &z).unwrap_err(),
            Error::DegenerateTemplatePair
        ));
    }

    #[test]
    fn jaccard_hand_counts() {
        // N11=1, N10=1, N01=1 -> 1/3
        let e = bt(&[1, 1, 0, 0]);
        let q = bt(&[1, 0, 1, 0]);
        assert_relative_eq!(jaccard_similarity(&e, &q).unwrap(), 1.0 / 3.0);
        // disjoint set bits -> 0
        let e = bt(&[1, 1, 1, 1]);
        let q = bt(&[0, 0, 0, 0]);
        assert_eq!(jaccard_similarity(&e, &q).unwrap(), 0.0);
    }

    #[test]
    fn dice_entries() {
        let m = dice_local_matrix(&fm(&[&[1.0, 2.0, 2.0]]), &fm(&[&[1.0, 2.0, 2.0]])).unwrap();
        assert_relative_eq!(m.get(0, 0), 1.0);
        let m = dice_local_matrix(&fm(&[&[1.0, 0.0]]), &fm(&[&[0.0, 1.0]])).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        let m = dice_local_matrix(&fm(&[&[1.0, 0.0]]), &fm(&[&[1.0, 1.0]])).unwrap();
        assert_relative_eq!(m.get(0, 0), 2.0 / 3.0);
    }

    #[test]
    fn cosine_entries() {
        let m = cosine_local_matrix(&fm(&[&[3.0, 4.0]]), &fm(&[&[3.0, 4.0]])).unwrap();
        assert_relative_eq!(m.get(0, 0), 1.0);
        let m = cosine_local_matrix(&fm(&[&[1.0, 0.0]]), &fm(&[&[0.0, 1.0]])).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        let m = cosine_local_matrix(&fm(&[&[1.0, 1.0]]), &fm(&[&[1.0, 0.0]])).unwrap();
        assert_relative_eq!(m.get(0, 0), 1.0 / 2.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn negative_descriptors_clamp_to_zero() {
        let m = cosine_local_matrix(&fm(&[&[1.0, 0.0]]), &fm(&[&[-1.0, 0.0]])).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        let m = dice_local_matrix(&fm(&[&[1.0, 0.0]]), &fm(&[&[-1.0, 0.0]])).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = dice_local_matrix(&fm(&[&[1.0, 2.0]]), &fm(&[&[1.0, 2.0, 3.0]])).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch { left: 2, right: 3 }
        ));
    }

    #[test]
    fn filter_keeps_coinciding_maxima() {
        let l = SimilarityMatrix::from_values(vec![0.9], 1, 1).unwrap();
        assert_eq!(filter_double_matches(&l).values(), &[0.9]);

        // Both diagonal entries are simultaneously row and column maxima.
        let l = SimilarityMatrix::from_values(vec![0.9, 0.2, 0.3, 0.7], 2, 2).unwrap();
        assert_eq!(filter_double_matches(&l).values(), &[0.9, 0.0, 0.0, 0.7]);

        // 0.8 is the max of row 1 but not of column 0, so only one entry survives.
        let l = SimilarityMatrix::from_values(vec![0.9, 0.2, 0.8, 0.7], 2, 2).unwrap();
        assert_eq!(filter_double_matches(&l).values(), &[0.9, 0.0, 0.0, 0.0]);

        // 0.9 is the max of row 0 but not of column 1.
        let l = SimilarityMatrix::from_values(vec![0.5, 0.9, 0.8, 0.95], 2, 2).unwrap();
        assert_eq!(filter_double_matches(&l).values(), &[0.0, 0.0, 0.0, 0.95]);
    }

    #[test]
    fn filter_tie_prefers_lowest_index() {
        let l = SimilarityMatrix::from_values(vec![0.5, 0.5], 1, 2).unwrap();
        assert_eq!(filter_double_matches(&l).values(), &[0.5, 0.0]);
    }

    #[test]
    fn global_similarity_examples() {
        let zero = SimilarityMatrix::from_values(vec![0.0; 12], 3, 4).unwrap();
        assert_eq!(global_similarity(&zero, 3, 4).unwrap(), 0.0);

        let mut vals = vec![0.0; 12];
        vals[0] = 0.9;
        let single = SimilarityMatrix::from_values(vals, 3, 4).unwrap();
        assert_relative_eq!(global_similarity(&single, 3, 4).unwrap(), 0.3);

        let ident = SimilarityMatrix::from_values(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        assert_eq!(global_similarity(&ident, 2, 2).unwrap(), 1.0);

        assert!(matches!(
            global_similarity(&ident, 0, 2).unwrap_err(),
            Error::EmptyTemplate
        ));
    }

    #[test]
    fn global_similarity_clamps_and_counts() {
        let before = clamp_event_count();
        let m = SimilarityMatrix::from_values(vec![1.0, 1.0, 1.0, 1.0], 2, 2).unwrap();
        // Unfiltered matrix: sum 4 over min 2 would exceed 1.
        assert_eq!(global_similarity(&m, 2, 2).unwrap(), 1.0);
        assert!(clamp_event_count() > before);
    }

    #[test]
    fn identical_fingerprints_score_one() {
        let t = fm(&[&[1.0, 2.0], &[3.0, 1.0], &[0.5, 0.5]]);
        assert_relative_eq!(
            fingerprint_dice_score(&t, &t).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            fingerprint_cosine_score(&t, &t).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }
}
