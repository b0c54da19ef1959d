use serde::{Deserialize, Serialize};

use super::{gibbs_train, infer_distributions, skewness, LdaModel, LdaParams, TokenizedNeed, TopicsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionParams {
    pub k_min: usize,
    pub k_max: usize,
    /// Relative improvement in W_k below which a step counts as flat.
    pub epsilon: f64,
    /// Consecutive flat steps before stopping.
    pub patience: u32,
    #[serde(flatten)]
    pub lda: LdaParams,
    /// Root seed; each k gets its own chain seed via [`derive_seed`].
    pub seed: u64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams { k_min: 2, k_max: 20, epsilon: 0.01, patience: 2, lda: LdaParams::default(), seed: 0 }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<(), TopicsError> {
        if self.k_min < 2 || self.k_min >= self.k_max {
            return Err(TopicsError::InvalidParameter(format!(
                "need 2 ≤ k_min < k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(TopicsError::InvalidParameter(format!("epsilon must be ≥ 0, got {}", self.epsilon)));
        }
        if self.patience == 0 {
            return Err(TopicsError::InvalidParameter("patience must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewReport {
    pub k: usize,
    /// (need_id, skewness) in model document order.
    pub per_need: Vec<(String, f64)>,
    pub w_k: usize,
}

impl SkewReport {
    pub fn from_model(model: &LdaModel) -> Self {
        let per_need: Vec<(String, f64)> =
            infer_distributions(model).into_iter().map(|d| (d.need_id, skewness(&d.probs))).collect();
        let w_k = per_need.iter().filter(|(_, s)| *s < 0.0).count();
        SkewReport { k: model.k, per_need, w_k }
    }
}

#[derive(Debug, Clone)]
pub struct KSelection {
    pub chosen_k: usize,
    /// One report per visited k, ascending.
    pub reports: Vec<SkewReport>,
    pub model: LdaModel,
}

/// Chain seed for a given k, mixed from the root seed (splitmix64 finalizer).
pub fn derive_seed(root: u64, k: usize) -> u64 {
    let mut z = root ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Early-stopping state over the W_k sequence.
struct StopRule {
    epsilon: f64,
    patience: u32,
    flat: u32,
    prev: Option<usize>,
}

impl StopRule {
    fn new(epsilon: f64, patience: u32) -> Self {
        StopRule { epsilon, patience, flat: 0, prev: None }
    }

    /// Records the next W_k; true once the search should stop.
    fn observe(&mut self, w: usize) -> bool {
        if let Some(prev) = self.prev {
            let improvement = (prev as f64 - w as f64) / prev.max(1) as f64;
            self.flat = if improvement < self.epsilon { self.flat + 1 } else { 0 };
        }
        self.prev = Some(w);
        w == 0 || self.flat >= self.patience
    }
}

/// Trains k = k_min, k_min+1, … and returns the visited k with the fewest
/// negatively skewed needs (ties to the smallest k).
pub fn select_k(corpus: &[TokenizedNeed], vocab_size: usize, params: &SelectionParams) -> Result<KSelection, TopicsError> {
    params.validate()?;
    if params.k_min > corpus.len() {
        return Err(TopicsError::CorpusTooSmall(format!(
            "k_min = {} exceeds the {} modeled needs",
            params.k_min,
            corpus.len()
        )));
    }
    let k_max = params.k_max.min(corpus.len());

    let mut reports: Vec<SkewReport> = Vec::new();
    let mut best: Option<(usize, LdaModel)> = None;
    let mut stop = StopRule::new(params.epsilon, params.patience);
    for k in params.k_min..=k_max {
        let model = gibbs_train(corpus, vocab_size, k, &params.lda, derive_seed(params.seed, k))?;
        let report = SkewReport::from_model(&model);
        let w = report.w_k;
        log::info!("k = {k}: W_k = {w}");
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, model));
        }
        reports.push(report);
        if stop.observe(w) {
            break;
        }
    }
    let (_, model) = best.expect("at least one k visited");
    Ok(KSelection { chosen_k: model.k, reports, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> LdaParams {
        LdaParams { iterations: 20, average_last: 5, ..Default::default() }
    }

    #[test]
    fn validation() {
        let corpus = vec![TokenizedNeed { need_id: "a".into(), tokens: vec![0, 1] }];
        for (lo, hi) in [(1, 5), (3, 3), (4, 2)] {
            let p = SelectionParams { k_min: lo, k_max: hi, ..Default::default() };
            assert!(matches!(select_k(&corpus, 2, &p), Err(TopicsError::InvalidParameter(_))));
        }
        let p = SelectionParams { k_min: 2, k_max: 4, lda: quick(), ..Default::default() };
        assert!(matches!(select_k(&corpus, 2, &p), Err(TopicsError::CorpusTooSmall(_))));
    }

    #[test]
    fn two_topics_stop_immediately() {
        // A two-entry vector always has mean = median, so W_2 = 0.
        let corpus: Vec<_> = (0..20)
            .map(|i| TokenizedNeed { need_id: format!("n{i}"), tokens: vec![i % 4, (i + 1) % 4, 4] })
            .collect();
        let p = SelectionParams { k_min: 2, k_max: 6, lda: quick(), ..Default::default() };
        let sel = select_k(&corpus, 5, &p).unwrap();
        assert_eq!(sel.chosen_k, 2);
        assert_eq!(sel.reports.len(), 1);
        assert_eq!(sel.reports[0].w_k, 0);
    }

    #[test]
    fn recount_matches_report() {
        let corpus: Vec<_> = (0..30)
            .map(|i| TokenizedNeed { need_id: format!("n{i}"), tokens: vec![i % 7, (i * 3) % 7, (i + 2) % 7, 7] })
            .collect();
        let p = SelectionParams { k_min: 3, k_max: 6, lda: quick(), seed: 9, ..Default::default() };
        let sel = select_k(&corpus, 8, &p).unwrap();
        for r in &sel.reports {
            let brute = r.per_need.iter().filter(|(_, s)| *s < 0.0).count();
            assert_eq!(brute, r.w_k);
        }
        let min = sel.reports.iter().map(|r| r.w_k).min().unwrap();
        assert_eq!(sel.chosen_k, sel.reports.iter().find(|r| r.w_k == min).unwrap().k);
        assert_eq!(sel.model.k, sel.chosen_k);
    }

    fn visits(ws: &[usize], epsilon: f64, patience: u32) -> usize {
        let mut rule = StopRule::new(epsilon, patience);
        ws.iter().position(|&w| rule.observe(w)).map_or(ws.len(), |i| i + 1)
    }

    #[test]
    fn stop_rule() {
        assert_eq!(visits(&[0, 5, 3], 0.01, 2), 1);
        // Flat sequence: stops after `patience` flat steps.
        assert_eq!(visits(&[7, 7, 7, 7, 7], 0.01, 2), 3);
        assert_eq!(visits(&[7, 7, 7, 7, 7], 0.01, 3), 4);
        // An improving step resets the counter.
        assert_eq!(visits(&[10, 10, 5, 5, 5, 1], 0.01, 2), 5);
        // Relative improvement 1/200 is below epsilon.
        assert_eq!(visits(&[200, 199, 198, 100], 0.01, 2), 3);
        assert_eq!(visits(&[9, 8, 7, 6], 0.01, 2), 4);
    }

    #[test]
    fn seeds_differ_per_k() {
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
        assert_eq!(derive_seed(5, 7), derive_seed(5, 7));
    }
}
