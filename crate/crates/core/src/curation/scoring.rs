//! Feature weights and the linear interestingness score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Feature, FeatureLabels, FeatureWeights};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoringError {
    #[error("importance counts are all zero")]
    ZeroCounts,
    #[error("fact is not scoreable; gated out by relevance = 0")]
    NotRelevant,
    #[error("labels must be 0 or 1")]
    NonBinaryLabels,
}

/// How often annotators picked each feature as the most important one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImportanceCounts {
    pub novelty: u64,
    pub specificity: u64,
    pub conciseness: u64,
    pub informativeness: u64,
}

impl ImportanceCounts {
    pub fn new(novelty: u64, specificity: u64, conciseness: u64, informativeness: u64) -> Self {
        Self {
            novelty,
            specificity,
            conciseness,
            informativeness,
        }
    }

    pub fn get(&self, feature: Feature) -> u64 {
        match feature {
            Feature::Novelty => self.novelty,
            Feature::Specificity => self.specificity,
            Feature::Conciseness => self.conciseness,
            Feature::Informativeness => self.informativeness,
        }
    }

    pub fn total(&self) -> u64 {
        Feature::RANKED.iter().map(|&f| self.get(f)).sum()
    }
}

/// `weight[f] = count[f] / sum(counts)`.
pub fn compute_feature_weights(counts: &ImportanceCounts) -> Result<FeatureWeights, ScoringError> {
    let total = counts.total();
    if total == 0 {
        return Err(ScoringError::ZeroCounts);
    }
    let t = total as f64;
    Ok(FeatureWeights {
        novelty: counts.novelty as f64 / t,
        specificity: counts.specificity as f64 / t,
        conciseness: counts.conciseness as f64 / t,
        informativeness: counts.informativeness as f64 / t,
    })
}

/// Weighted sum of the four scored labels. Irrelevant facts are refused.
pub fn score_interestingness(
    labels: &FeatureLabels,
    weights: &FeatureWeights,
) -> Result<f64, ScoringError> {
    if !labels.is_binary() {
        return Err(ScoringError::NonBinaryLabels);
    }
    if !labels.is_relevant() {
        return Err(ScoringError::NotRelevant);
    }
    Ok(weights.weighted_sum(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: u8, s: u8, c: u8, i: u8) -> FeatureLabels {
        FeatureLabels {
            novelty: n,
            specificity: s,
            conciseness: c,
            informativeness: i,
            relevance: 1,
        }
    }

    #[test]
    fn weights_from_counts() {
        let w = compute_feature_weights(&ImportanceCounts::new(4, 3, 2, 1)).unwrap();
        assert!((w.novelty - 0.4).abs() < 1e-12);
        assert!((w.specificity - 0.3).abs() < 1e-12);
        assert!((w.conciseness - 0.2).abs() < 1e-12);
        assert!((w.informativeness - 0.1).abs() < 1e-12);

        let w = compute_feature_weights(&ImportanceCounts::new(1, 1, 1, 1)).unwrap();
        assert_eq!(w, FeatureWeights::uniform());

        let w = compute_feature_weights(&ImportanceCounts::new(1, 0, 0, 0)).unwrap();
        assert_eq!((w.novelty, w.specificity, w.conciseness, w.informativeness), (1.0, 0.0, 0.0, 0.0));

        assert_eq!(
            compute_feature_weights(&ImportanceCounts::default()),
            Err(ScoringError::ZeroCounts)
        );
    }

    #[test]
    fn score_examples() {
        let w = FeatureWeights::new(0.4, 0.3, 0.2, 0.1).unwrap();
        assert!((score_interestingness(&labels(1, 1, 1, 1), &w).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(score_interestingness(&labels(0, 0, 0, 0), &w).unwrap(), 0.0);
        let s = score_interestingness(&labels(1, 1, 0, 1), &w).unwrap();
        assert!((s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn irrelevant_is_gated() {
        let mut l = labels(1, 1, 1, 1);
        l.relevance = 0;
        assert_eq!(
            score_interestingness(&l, &FeatureWeights::uniform()),
            Err(ScoringError::NotRelevant)
        );
        l.relevance = 3;
        assert_eq!(
            score_interestingness(&l, &FeatureWeights::uniform()),
            Err(ScoringError::NonBinaryLabels)
        );
    }

    fn arb_weights() -> impl Strategy<Value = FeatureWeights> {
        (0u64..50, 0u64..50, 0u64..50, 1u64..50).prop_map(|(a, b, c, d)| {
            compute_feature_weights(&ImportanceCounts::new(a, b, c, d)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn flipping_a_label_on_never_lowers_the_score(
            w in arb_weights(),
            bits in prop::array::uniform4(0u8..2),
            which in 0usize..4,
        ) {
            let mut l = labels(bits[0], bits[1], bits[2], bits[3]);
            let feature = Feature::RANKED[which];
            l.set(feature, false);
            let before = score_interestingness(&l, &w).unwrap();
            l.set(feature, true);
            let after = score_interestingness(&l, &w).unwrap();
            prop_assert!(after >= before);
        }

        #[test]
        fn weights_always_normalized(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000, d in 0u64..1000) {
            prop_assume!(a + b + c + d > 0);
            let w = compute_feature_weights(&ImportanceCounts::new(a, b, c, d)).unwrap();
            prop_assert!((w.sum() - 1.0).abs() <= 1e-9);
        }
    }
}
