//! Collapsed Gibbs sampling for LDA.
//!
//! Each token's topic is resampled from
//! `P(z = t) ∝ (n_dt + α) · (n_tw + β) / (n_t + V·β)`, with the token's own
//! assignment removed from the counts. θ and φ are read off count matrices
//! accumulated over the last sweeps of the chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, TokenizedNeed, TopicsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaParams {
    /// Symmetric document-topic prior; `None` means 50 / k.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: u32,
    /// Number of final sweeps whose counts are averaged into θ and φ.
    pub average_last: u32,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams { alpha: None, beta: 0.01, iterations: 1000, average_last: 100 }
    }
}

impl LdaParams {
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub need_id: String,
    pub probs: Vec<f64>,
    pub dominant_topic: usize,
}

/// Sampler state; exposed so callers can observe the chain between sweeps.
pub struct LdaSampler {
    k: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
    sweeps: u32,
}

fn validate(k: usize, vocab_size: usize, alpha: f64, beta: f64) -> Result<(), TopicsError> {
    if k < 2 {
        return Err(TopicsError::InvalidParameter(format!("k must be ≥ 2, got {k}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(TopicsError::InvalidParameter(format!("priors must be positive (alpha={alpha}, beta={beta})")));
    }
    if vocab_size == 0 {
        return Err(TopicsError::CorpusTooSmall("empty vocabulary".into()));
    }
    Ok(())
}

impl LdaSampler {
    pub fn new(
        docs: Vec<Vec<u32>>,
        vocab_size: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<Self, TopicsError> {
        validate(k, vocab_size, alpha, beta)?;
        if let Some(bad) = docs.iter().flatten().find(|&&w| w as usize >= vocab_size) {
            return Err(TopicsError::InvalidParameter(format!("token id {bad} outside vocabulary of {vocab_size}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut topic_word = vec![0u32; k * vocab_size];
        let mut topic_totals = vec![0u32; k];
        let assignments: Vec<Vec<u32>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        doc_topic[d * k + t] += 1;
                        topic_word[t * vocab_size + w as usize] += 1;
                        topic_totals[t] += 1;
                        t as u32
                    })
                    .collect()
            })
            .collect();
        Ok(LdaSampler {
            k,
            vocab_size,
            alpha,
            beta,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_totals,
            rng,
            weights: vec![0.0; k],
            sweeps: 0,
        })
    }

    /// One full pass resampling every token once.
    pub fn sweep(&mut self) {
        let (k, v) = (self.k, self.vocab_size);
        let vbeta = v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.assignments[d][i] as usize;
                self.doc_topic[d * k + old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.doc_topic[d * k + t] as f64 + self.alpha)
                        * (self.topic_word[t * v + w] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    total += p;
                    self.weights[t] = total;
                }
                assert!(total.is_finite() && total > 0.0, "non-finite sampling mass");
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignments[d][i] = new as u32;
                self.doc_topic[d * k + new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sweeps(&self) -> u32 {
        self.sweeps
    }

    pub fn doc_topic(&self) -> &[u32] {
        &self.doc_topic
    }

    pub fn topic_word(&self) -> &[u32] {
        &self.topic_word
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_totals
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn docs(&self) -> &[Vec<u32>] {
        &self.docs
    }

    /// θ_d from the current counts.
    pub fn theta(&self, d: usize) -> Vec<f64> {
        let n_d = self.docs[d].len() as f64;
        let denom = n_d + self.k as f64 * self.alpha;
        (0..self.k).map(|t| (self.doc_topic[d * self.k + t] as f64 + self.alpha) / denom).collect()
    }

    /// φ_t from the current counts.
    pub fn phi(&self, t: usize) -> Vec<f64> {
        let denom = self.topic_totals[t] as f64 + self.vocab_size as f64 * self.beta;
        (0..self.vocab_size)
            .map(|w| (self.topic_word[t * self.vocab_size + w] as f64 + self.beta) / denom)
            .collect()
    }
}

/// Fitted model. `*_sum` hold counts summed over `samples` final sweeps, so
/// the averaged counts are `sum / samples` and reload reproduces θ/φ exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: u32,
    pub vocab_size: usize,
    pub doc_ids: Vec<String>,
    pub docs: Vec<Vec<u32>>,
    /// Per-token topics after the final sweep.
    pub assignments: Vec<Vec<u32>>,
    pub samples: u32,
    pub doc_topic_sum: Vec<u64>,
    pub topic_word_sum: Vec<u64>,
}

impl LdaModel {
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    /// Final-sweep count matrices rebuilt from the assignments.
    pub fn final_counts(&self) -> (Vec<u32>, Vec<u32>) {
        let mut dt = vec![0u32; self.docs.len() * self.k];
        let mut tw = vec![0u32; self.k * self.vocab_size];
        for (d, (doc, z)) in self.docs.iter().zip(&self.assignments).enumerate() {
            for (&w, &t) in doc.iter().zip(z) {
                dt[d * self.k + t as usize] += 1;
                tw[t as usize * self.vocab_size + w as usize] += 1;
            }
        }
        (dt, tw)
    }

    pub fn theta(&self, d: usize) -> Vec<f64> {
        let s = self.samples as f64;
        let denom = self.docs[d].len() as f64 + self.k as f64 * self.alpha;
        (0..self.k)
            .map(|t| (self.doc_topic_sum[d * self.k + t] as f64 / s + self.alpha) / denom)
            .collect()
    }

    pub fn phi(&self, t: usize) -> Vec<f64> {
        let s = self.samples as f64;
        let v = self.vocab_size;
        let n_t: u64 = self.topic_word_sum[t * v..(t + 1) * v].iter().sum();
        let denom = n_t as f64 / s + v as f64 * self.beta;
        (0..v)
            .map(|w| (self.topic_word_sum[t * v + w] as f64 / s + self.beta) / denom)
            .collect()
    }

    /// Highest-probability word ids of topic `t`, ties to the lower id.
    pub fn top_words(&self, t: usize, n: usize) -> Vec<u32> {
        let phi = self.phi(t);
        let mut ids: Vec<u32> = (0..self.vocab_size as u32).collect();
        ids.sort_by(|&a, &b| phi[b as usize].total_cmp(&phi[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    /// Checks count/assignment consistency; used after loading a model file.
    pub fn check_consistency(&self) -> Result<(), TopicsError> {
        let bad = |m: &str| Err(TopicsError::ModelFile(m.to_string()));
        if self.doc_ids.len() != self.docs.len() || self.assignments.len() != self.docs.len() {
            return bad("document arrays differ in length");
        }
        if self.docs.iter().zip(&self.assignments).any(|(d, z)| d.len() != z.len()) {
            return bad("assignment length differs from document length");
        }
        if self.assignments.iter().flatten().any(|&t| t as usize >= self.k)
            || self.docs.iter().flatten().any(|&w| w as usize >= self.vocab_size)
        {
            return bad("topic or word id out of range");
        }
        if self.samples == 0
            || self.doc_topic_sum.len() != self.docs.len() * self.k
            || self.topic_word_sum.len() != self.k * self.vocab_size
        {
            return bad("accumulated count matrices have the wrong shape");
        }
        for (d, doc) in self.docs.iter().enumerate() {
            let row: u64 = self.doc_topic_sum[d * self.k..(d + 1) * self.k].iter().sum();
            if row != doc.len() as u64 * self.samples as u64 {
                return bad("document-topic sums do not match document lengths");
            }
        }
        let tokens: u64 = self.docs.iter().map(|d| d.len() as u64).sum();
        if self.topic_word_sum.iter().sum::<u64>() != tokens * self.samples as u64 {
            return bad("topic-word sums do not match token count");
        }
        Ok(())
    }
}

/// Trains one chain. The seed, corpus and parameters fully determine the result.
pub fn gibbs_train(
    corpus: &[TokenizedNeed],
    vocab_size: usize,
    k: usize,
    params: &LdaParams,
    seed: u64,
) -> Result<LdaModel, TopicsError> {
    if params.iterations < 1 {
        return Err(TopicsError::InvalidParameter("iterations must be ≥ 1".into()));
    }
    let alpha = params.alpha_for(k);
    let docs: Vec<Vec<u32>> = corpus.iter().map(|n| n.tokens.clone()).collect();
    let mut sampler = LdaSampler::new(docs, vocab_size, k, alpha, params.beta, seed)?;

    let samples = params.average_last.clamp(1, params.iterations);
    let mut doc_topic_sum = vec![0u64; sampler.doc_topic.len()];
    let mut topic_word_sum = vec![0u64; sampler.topic_word.len()];
    for it in 0..params.iterations {
        sampler.sweep();
        if it >= params.iterations - samples {
            for (acc, &c) in doc_topic_sum.iter_mut().zip(&sampler.doc_topic) {
                *acc += c as u64;
            }
            for (acc, &c) in topic_word_sum.iter_mut().zip(&sampler.topic_word) {
                *acc += c as u64;
            }
        }
    }

    Ok(LdaModel {
        k,
        alpha,
        beta: params.beta,
        seed,
        iterations: params.iterations,
        vocab_size,
        doc_ids: corpus.iter().map(|n| n.need_id.clone()).collect(),
        docs: sampler.docs,
        assignments: sampler.assignments,
        samples,
        doc_topic_sum,
        topic_word_sum,
    })
}

/// θ_d[t] = (n_dt + α) / (n_d + kα) for every document, with averaged counts.
pub fn infer_distributions(model: &LdaModel) -> Vec<TopicDistribution> {
    (0..model.num_docs())
        .map(|d| {
            let probs = model.theta(d);
            TopicDistribution { need_id: model.doc_ids[d].clone(), dominant_topic: argmax(&probs), probs }
        })
        .collect()
}
