use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::TopicsError;

/// Bumped whenever preprocessing or the stopword list changes.
pub const TOKENIZER_VERSION: &str = "tok-v1";

const MIN_TOKEN_CHARS: usize = 2;
const MIN_CORPUS_FREQUENCY: usize = 2;

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| include_str!("../../assets/stopwords.txt").lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

/// Lowercases, strips punctuation, drops stopwords and one-character tokens.
pub fn preprocess(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else if c == '\'' || c == '’' { '\0' } else { ' ' })
        .filter(|&c| c != '\0')
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS && !stopwords().contains(t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedNeed {
    pub need_id: String,
    pub tokens: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct TokenizedCorpus {
    pub vocab: Vocabulary,
    pub needs: Vec<TokenizedNeed>,
    /// Needs with no in-vocabulary token left; kept out of modeling.
    pub excluded: Vec<String>,
}

/// Builds the vocabulary (terms with corpus frequency ≥ 2, indexed in order of
/// first appearance) and maps each need onto it.
pub fn tokenize<'a, I>(needs: I) -> Result<TokenizedCorpus, TopicsError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let docs: Vec<(&str, Vec<String>)> = needs.into_iter().map(|(id, text)| (id, preprocess(text))).collect();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for (_, toks) in &docs {
        for t in toks {
            let c = freq.entry(t.as_str()).or_insert(0);
            if *c == 0 {
                order.push(t.as_str());
            }
            *c += 1;
        }
    }
    let terms: Vec<String> = order
        .into_iter()
        .filter(|t| freq[t] >= MIN_CORPUS_FREQUENCY)
        .map(str::to_string)
        .collect();
    if terms.is_empty() {
        return Err(TopicsError::CorpusTooSmall(format!(
            "no term occurs at least {MIN_CORPUS_FREQUENCY} times across {} needs",
            docs.len()
        )));
    }
    let vocab = Vocabulary::from_terms(terms);

    let mut out = TokenizedCorpus { vocab, ..Default::default() };
    for (id, toks) in docs {
        let tokens: Vec<u32> = toks.iter().filter_map(|t| out.vocab.id(t)).collect();
        if tokens.is_empty() {
            out.excluded.push(id.to_string());
        } else {
            out.needs.push(TokenizedNeed { need_id: id.to_string(), tokens });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preprocess_example() {
        assert_eq!(preprocess("Saving for emergency fund!"), ["saving", "emergency", "fund"]);
        assert_eq!(preprocess("I'm at a 401(k) crossroads, a b"), ["401", "crossroads"]);
    }

    #[test]
    fn disjoint_needs_get_disjoint_ranges() {
        let c = tokenize([("a", "rent budget rent budget"), ("b", "stock fund stock fund")]).unwrap();
        assert_eq!(c.vocab.terms(), ["rent", "budget", "stock", "fund"]);
        assert_eq!(c.needs[0].tokens, [0, 1, 0, 1]);
        assert_eq!(c.needs[1].tokens, [2, 3, 2, 3]);
    }

    #[test]
    fn singletons_are_dropped() {
        let texts = [("a", "rent budget lonely"), ("b", "rent budget"), ("c", "unique")];
        let c = tokenize(texts).unwrap();
        // Frequency oracle: count occurrences by hand over the preprocessed texts.
        let mut counts = HashMap::new();
        for (_, t) in texts {
            for w in preprocess(t) {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
        let mut expected: Vec<_> = counts.into_iter().filter(|(_, n)| *n >= 2).map(|(w, _)| w).collect();
        expected.sort();
        let mut got = c.vocab.terms().to_vec();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(c.excluded, ["c"]);
        assert_eq!(c.needs.len(), 2);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        assert!(matches!(tokenize([("a", "one two three")]), Err(TopicsError::CorpusTooSmall(_))));
        assert!(matches!(tokenize(std::iter::empty()), Err(TopicsError::CorpusTooSmall(_))));
    }
}
