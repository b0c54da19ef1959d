//! Aggregations over need records, user profiles and topic assignments.

mod cooccurrence;
mod correlation;
mod export;
mod paper;
mod tables;
mod topic_map;

pub use cooccurrence::{cooccurrence, cross_framework, edges, CooccurrenceKey, CooccurrenceMatrix, CrossMatrix, Edge};
pub use correlation::{behavior_correlations, phi_from_counts, Contingency, CorrelationRow, CorrelationTable, CORRELATION_COLUMNS};
pub use export::write_bundle;
pub use paper::{
    paper_fixture, reconcile_outputs, reconcile_paper, Check, CheckKind, PaperFixture, ReconciliationReport,
};
pub use tables::{
    build_age_table, build_income_bin_table, build_level_income_table, emotion_shares, framework_crosstab,
    hypothesis_checks, income_bin, AgeGroupTable, AgeRow, BehaviorRow, EmotionShares, FrameworkCrosstab,
    HypothesisChecks, IncomeBinTable, IncomeOrdering, LevelIncomeTable, LevelRow, PairCheck, INCOME_BIN_LABELS,
};
pub use topic_map::{map_topics_to_levels, TopicAssignment, TopicLevelMatrix, UNMODELED};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::attribution::UserProfile;
use crate::corpus::Post;
use crate::extraction::{NeedRecord, PostEmotion};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    /// Input violates an upstream guarantee, e.g. a need whose user has no income.
    #[error("attribution contract violated: {0}")]
    Contract(String),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type IncomeIndex<'a> = HashMap<&'a str, &'a UserProfile>;

fn income_index(profiles: &[UserProfile]) -> IncomeIndex<'_> {
    profiles.iter().map(|p| (p.user.as_str(), p)).collect()
}

fn need_income(index: &IncomeIndex<'_>, n: &NeedRecord) -> Result<f64, AnalyticsError> {
    let p = index
        .get(n.user.as_str())
        .ok_or_else(|| AnalyticsError::Contract(format!("need {} references unprofiled user {}", n.need_id, n.user)))?;
    p.income_for_year(n.year)
        .ok_or_else(|| AnalyticsError::Contract(format!("user {} has no income for {} (need {})", n.user, n.year, n.need_id)))
}

pub struct AnalyticsInput<'a> {
    pub profiles: &'a [UserProfile],
    pub posts: &'a [Post],
    pub needs: &'a [NeedRecord],
    pub emotions: &'a [PostEmotion],
    /// Absent when topic modeling was skipped; topic outputs are then omitted.
    pub topics: Option<&'a TopicAssignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsBundle {
    pub n_needs: usize,
    pub age: AgeGroupTable,
    pub levels: LevelIncomeTable,
    pub hypotheses: HypothesisChecks,
    pub topic_nhf5: Option<TopicLevelMatrix>,
    pub topic_npf: Option<TopicLevelMatrix>,
    pub cooc_topic: Option<CooccurrenceMatrix>,
    pub cooc_nhf5: CooccurrenceMatrix,
    pub cooc_npf: CooccurrenceMatrix,
    pub cooc_cross: CrossMatrix,
    pub crosstab: FrameworkCrosstab,
    pub correlations: CorrelationTable,
    pub behavior: IncomeBinTable,
    pub emotions: EmotionShares,
    pub reconciliation: ReconciliationReport,
}

pub fn analyze(input: &AnalyticsInput<'_>) -> Result<AnalyticsBundle, AnalyticsError> {
    let needs = input.needs;
    let levels = build_level_income_table(needs, input.profiles)?;
    let topic = |fw| input.topics.map(|t| map_topics_to_levels(needs, t, fw));
    let mut bundle = AnalyticsBundle {
        n_needs: needs.len(),
        age: build_age_table(input.profiles, input.posts, needs)?,
        hypotheses: hypothesis_checks(&levels),
        levels,
        topic_nhf5: topic(topic_map::Framework::Nhf5),
        topic_npf: topic(topic_map::Framework::Npf),
        cooc_topic: input.topics.map(|t| cooccurrence(needs, CooccurrenceKey::Topic(t))),
        cooc_nhf5: cooccurrence(needs, CooccurrenceKey::Nhf5),
        cooc_npf: cooccurrence(needs, CooccurrenceKey::Npf),
        cooc_cross: cross_framework(needs),
        crosstab: framework_crosstab(needs),
        correlations: behavior_correlations(needs),
        behavior: build_income_bin_table(needs, input.profiles)?,
        emotions: emotion_shares(input.emotions),
        reconciliation: ReconciliationReport::default(),
    };
    bundle.reconciliation = reconcile_outputs(&bundle);
    Ok(bundle)
}

#[cfg(test)]
pub(crate) mod testing {
    use std::collections::BTreeMap;

    use crate::attribution::{AgeCategory, UserProfile};
    use crate::corpus::Post;
    use crate::extraction::{NeedLabel, NeedRecord, NhfLevel5, NhfLevel7, NpfLevel, RiskLevel, StressLevel};

    pub fn profile(user: &str, age: u32, incomes: &[(i32, f64)]) -> UserProfile {
        UserProfile {
            user: user.into(),
            resolved_age: Some(age),
            age_category: Some(AgeCategory::of(age)),
            income_by_year: incomes.iter().copied().collect::<BTreeMap<_, _>>(),
        }
    }

    pub fn post(id: &str, author: &str, year: i32) -> Post {
        let ts = chrono::NaiveDate::from_ymd_opt(year, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        Post { post_id: id.into(), author: author.into(), created_at: ts, subreddit: "personalfinance".into(), text: String::new() }
    }

    pub fn need(id: &str, post_id: &str, user: &str, year: i32) -> NeedRecord {
        NeedRecord {
            need_id: id.into(),
            post_id: post_id.into(),
            user: user.into(),
            year,
            label: NeedLabel::new("emergency fund", "saving").unwrap(),
            core_query: String::new(),
            nhf7: NhfLevel7::Basic,
            nhf5: NhfLevel5::Basic,
            npf: NpfLevel::SavingsEmergencies,
            stress: StressLevel::Low,
            risk: RiskLevel::Cautious,
            engine: "test".into(),
            prompt_version: "test".into(),
        }
    }
}
