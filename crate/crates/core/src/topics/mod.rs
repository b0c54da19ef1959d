//! Topic modeling over need texts: preprocessing, collapsed Gibbs LDA,
//! skewness of per-need topic distributions, and selection of k by minimizing
//! the number of negatively skewed needs.

mod lda;
mod model_file;
mod select;
mod skew;
mod tokenize;

pub use lda::{gibbs_train, infer_distributions, LdaModel, LdaParams, LdaSampler, TopicDistribution};
pub use model_file::{read_model, write_model, ModelFile, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use select::{derive_seed, select_k, KSelection, SelectionParams, SkewReport};
pub use skew::skewness;
pub use tokenize::{preprocess, tokenize, TokenizedCorpus, TokenizedNeed, Vocabulary, TOKENIZER_VERSION};

use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopicsError {
    #[error("corpus too small: {0}")]
    CorpusTooSmall(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    ModelFile(String),
}

/// Dominant topic per need: argmax, ties to the lowest index.
pub fn dominant_topic_assignment(dists: &[TopicDistribution]) -> BTreeMap<String, usize> {
    dists.iter().map(|d| (d.need_id.clone(), argmax(&d.probs))).collect()
}

pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn dominant_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dists: Vec<TopicDistribution> = (0..100)
            .map(|i| {
                // Coarse values make ties common.
                let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0..4) as f64).collect();
                let total: f64 = raw.iter().sum::<f64>().max(1.0);
                let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
                TopicDistribution { need_id: format!("n{i}"), dominant_topic: argmax(&probs), probs }
            })
            .collect();
        let got = dominant_topic_assignment(&dists);
        for d in &dists {
            let max = d.probs.iter().cloned().fold(f64::MIN, f64::max);
            let expected = (0..d.probs.len()).find(|&i| d.probs[i] == max).unwrap();
            assert_eq!(got[&d.need_id], expected);
        }
    }
}
