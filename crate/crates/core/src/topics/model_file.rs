//! Versioned JSON layout for a fitted model.
//!
//! ```text
//! {
//!   "format": "needscope-lda", "format_version": 1,
//!   "header": { k, alpha, beta, seed, iterations, vocab_size, samples,
//!               tokenizer_version, prompt_version },
//!   "vocabulary": [term, ...],            // index = word id
//!   "doc_ids": [need_id, ...],
//!   "docs": [[word id, ...], ...],
//!   "assignments": [[topic, ...], ...],   // final sweep
//!   "doc_topic_sum": [...],               // D × k, row-major, summed over `samples` sweeps
//!   "topic_word_sum": [...],              // k × V, row-major
//!   "unmodeled": [need_id, ...],
//!   "topic_labels": [name, ...]           // optional, human-edited
//! }
//! ```
//!
//! Counts are integers and floats round-trip exactly, so θ and φ recomputed
//! from a loaded file are bit-identical to the in-memory model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LdaModel, TopicsError, Vocabulary};

pub const MODEL_FORMAT: &str = "needscope-lda";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: u32,
    pub vocab_size: usize,
    pub samples: u32,
    pub tokenizer_version: String,
    pub prompt_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u32,
    pub header: ModelHeader,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    pub docs: Vec<Vec<u32>>,
    pub assignments: Vec<Vec<u32>>,
    pub doc_topic_sum: Vec<u64>,
    pub topic_word_sum: Vec<u64>,
    #[serde(default)]
    pub unmodeled: Vec<String>,
    #[serde(default)]
    pub topic_labels: Vec<String>,
}

impl ModelFile {
    pub fn new(
        model: &LdaModel,
        vocab: &Vocabulary,
        unmodeled: Vec<String>,
        tokenizer_version: &str,
        prompt_version: &str,
    ) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_FORMAT_VERSION,
            header: ModelHeader {
                k: model.k,
                alpha: model.alpha,
                beta: model.beta,
                seed: model.seed,
                iterations: model.iterations,
                vocab_size: model.vocab_size,
                samples: model.samples,
                tokenizer_version: tokenizer_version.into(),
                prompt_version: prompt_version.into(),
            },
            vocabulary: vocab.terms().to_vec(),
            doc_ids: model.doc_ids.clone(),
            docs: model.docs.clone(),
            assignments: model.assignments.clone(),
            doc_topic_sum: model.doc_topic_sum.clone(),
            topic_word_sum: model.topic_word_sum.clone(),
            unmodeled,
            topic_labels: Vec::new(),
        }
    }

    pub fn model(&self) -> LdaModel {
        let h = &self.header;
        LdaModel {
            k: h.k,
            alpha: h.alpha,
            beta: h.beta,
            seed: h.seed,
            iterations: h.iterations,
            vocab_size: h.vocab_size,
            doc_ids: self.doc_ids.clone(),
            docs: self.docs.clone(),
            assignments: self.assignments.clone(),
            samples: h.samples,
            doc_topic_sum: self.doc_topic_sum.clone(),
            topic_word_sum: self.topic_word_sum.clone(),
        }
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_terms(self.vocabulary.clone())
    }

    /// Display name for topic `t`: the edited label if present, else "topic_<t>".
    pub fn topic_label(&self, t: usize) -> String {
        match self.topic_labels.get(t) {
            Some(l) if !l.trim().is_empty() => l.trim().to_string(),
            _ => format!("topic_{t}"),
        }
    }

    pub fn validate(&self) -> Result<(), TopicsError> {
        if self.format != MODEL_FORMAT {
            return Err(TopicsError::ModelFile(format!("unknown format {:?}", self.format)));
        }
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(TopicsError::ModelFile(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.vocabulary.len() != self.header.vocab_size {
            return Err(TopicsError::ModelFile("vocabulary length differs from header".into()));
        }
        if !self.topic_labels.is_empty() && self.topic_labels.len() != self.header.k {
            return Err(TopicsError::ModelFile(format!(
                "{} topic labels for k = {}",
                self.topic_labels.len(),
                self.header.k
            )));
        }
        self.model().check_consistency()
    }
}

pub fn write_model(path: &Path, file: &ModelFile) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string(file).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn read_model(path: &Path) -> Result<ModelFile, TopicsError> {
    let text = fs::read_to_string(path).map_err(|e| TopicsError::ModelFile(format!("{}: {e}", path.display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| TopicsError::ModelFile(format!("{}: {e}", path.display())))?;
    file.validate()?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::{gibbs_train, infer_distributions, tokenize, LdaParams};

    fn fitted() -> ModelFile {
        let texts = [
            ("a", "rent budget rent groceries"),
            ("b", "budget groceries rent"),
            ("c", "stock index fund stock"),
            ("d", "index fund retirement stock"),
            ("e", "solo"),
        ];
        let corpus = tokenize(texts).unwrap();
        let p = LdaParams { iterations: 50, average_last: 7, ..Default::default() };
        let model = gibbs_train(&corpus.needs, corpus.vocab.len(), 3, &p, 11).unwrap();
        ModelFile::new(&model, &corpus.vocab, corpus.excluded.clone(), "tok", "prompt")
    }

    #[test]
    fn round_trip_reproduces_theta_and_phi() {
        let file = fitted();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m/model.json");
        write_model(&path, &file).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back, file);
        let (a, b) = (file.model(), back.model());
        assert_eq!(infer_distributions(&a), infer_distributions(&b));
        for t in 0..a.k {
            assert_eq!(a.phi(t), b.phi(t));
        }
        assert_eq!(back.unmodeled, ["e"]);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let file = fitted();
        let mut bad = file.clone();
        bad.format_version = 99;
        assert!(bad.validate().is_err());
        let mut bad = file.clone();
        bad.doc_topic_sum[0] += 1;
        assert!(bad.validate().is_err());
        let mut bad = file.clone();
        bad.assignments[0][0] = 17;
        assert!(bad.validate().is_err());
        let mut bad = file.clone();
        bad.topic_labels = vec!["one".into()];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn labels() {
        let mut file = fitted();
        assert_eq!(file.topic_label(1), "topic_1");
        file.topic_labels = vec!["Emergency Fund".into(), " ".into(), "Debt".into()];
        assert_eq!(file.topic_label(0), "Emergency Fund");
        assert_eq!(file.topic_label(1), "topic_1");
    }
}
