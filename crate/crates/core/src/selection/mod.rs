//! Support-set construction and representativeness testing.

mod ks;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Dataset, FeatureMatrix, RespondentRecord};

pub use ks::{
    ks_statistic, ks_two_sample, representativeness_report, summarize_repeats, KsResult, RepresentativenessReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectionError {
    #[error("feature vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("support size {k} exceeds training set of {n}")]
    TooLarge { k: usize, n: usize },
    #[error("query set is empty")]
    EmptyQuery,
    #[error("empty sample")]
    EmptySample,
    #[error("support set is empty")]
    EmptySupport,
}

/// `1 / sqrt(d^2 + 1)` for Euclidean distance `d`; lies in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct SimilarityScore(pub f64);

pub fn similarity(a: &[f64], b: &[f64]) -> Result<SimilarityScore, SelectionError> {
    if a.len() != b.len() {
        return Err(SelectionError::LengthMismatch(a.len(), b.len()));
    }
    Ok(SimilarityScore(similarity_unchecked(a, b)))
}

#[inline]
fn similarity_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    1.0 / (d2 + 1.0).sqrt()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportProvenance {
    SimilarityRanked,
    Random { seed: u64 },
}

/// Labelled exemplars drawn from a training set.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    members: Vec<RespondentRecord>,
    /// Positions of the members within the training set.
    indices: Vec<usize>,
    provenance: SupportProvenance,
}

impl SupportSet {
    pub fn from_indices(train: &Dataset, indices: Vec<usize>, provenance: SupportProvenance) -> Self {
        let members = indices.iter().map(|&i| train.records()[i].clone()).collect();
        Self {
            members,
            indices,
            provenance,
        }
    }

    pub fn empty(provenance: SupportProvenance) -> Self {
        Self {
            members: Vec::new(),
            indices: Vec::new(),
            provenance,
        }
    }

    pub fn members(&self) -> &[RespondentRecord] {
        &self.members
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn provenance(&self) -> &SupportProvenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|r| r.id.as_str())
    }
}

/// Mean similarity of every training row to all query rows.
pub fn mean_similarities(train: &FeatureMatrix, query: &FeatureMatrix) -> Result<Vec<f64>, SelectionError> {
    if query.rows() == 0 {
        return Err(SelectionError::EmptyQuery);
    }
    if train.cols() != query.cols() {
        return Err(SelectionError::LengthMismatch(train.cols(), query.cols()));
    }
    let nq = query.rows() as f64;
    Ok((0..train.rows())
        .map(|i| {
            let t = train.row(i);
            (0..query.rows())
                .map(|q| similarity_unchecked(t, query.row(q)))
                .sum::<f64>()
                / nq
        })
        .collect())
}

/// Indices of the `k` training rows with the highest mean similarity to the
/// query rows, best first; ties go to the lower index.
pub fn rank_indices(train: &FeatureMatrix, query: &FeatureMatrix, k: usize) -> Result<Vec<usize>, SelectionError> {
    if k > train.rows() {
        return Err(SelectionError::TooLarge { k, n: train.rows() });
    }
    let scores = mean_similarities(train, query)?;
    let mut order: Vec<usize> = (0..train.rows()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Similarity-ranked support set. `train_x` and `query_x` are the encoded
/// rows of `train` and of the query records respectively.
pub fn rank_support(
    train: &Dataset,
    train_x: &FeatureMatrix,
    query_x: &FeatureMatrix,
    k: usize,
) -> Result<SupportSet, SelectionError> {
    assert_eq!(
        train.len(),
        train_x.rows(),
        "encoded training rows do not match dataset"
    );
    let idx = rank_indices(train_x, query_x, k)?;
    Ok(SupportSet::from_indices(
        train,
        idx,
        SupportProvenance::SimilarityRanked,
    ))
}

/// `k` distinct training records drawn uniformly without replacement.
pub fn random_support(train: &Dataset, k: usize, seed: u64) -> Result<SupportSet, SelectionError> {
    if k > train.len() {
        return Err(SelectionError::TooLarge { k, n: train.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = index::sample(&mut rng, train.len(), k).into_vec();
    Ok(SupportSet::from_indices(train, idx, SupportProvenance::Random { seed }))
}
