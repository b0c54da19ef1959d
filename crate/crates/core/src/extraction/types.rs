use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attribution::IncomePeriod;

/// Closed vocabulary parsed strictly from its canonical names (case-insensitive).
macro_rules! vocabulary {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                $(if s.eq_ignore_ascii_case($text) {
                    return Ok($name::$variant);
                })+
                Err(format!(
                    "`{}` is not one of [{}]",
                    s,
                    [$($text),+].join(", ")
                ))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

vocabulary! {
    /// Seven-level needs hierarchy as extracted.
    NhfLevel7 {
        Basic => "basic",
        SafetyL1 => "safety_l1",
        SafetyL2 => "safety_l2",
        LoveBelongingness => "love_belongingness",
        Esteem => "esteem",
        SelfTranscendence => "self_transcendence",
        SelfActualization => "self_actualization",
    }
}

vocabulary! {
    /// Five-level hierarchy used for analysis, in rank order.
    NhfLevel5 {
        Basic => "basic",
        Safety => "safety",
        LoveBelongingness => "love_belongingness",
        Esteem => "esteem",
        SelfActualization => "self_actualization",
    }
}

vocabulary! {
    /// Prioritization framework, in rank order.
    NpfLevel {
        ConsumptionImmediate => "consumption_immediate",
        SavingsEmergencies => "savings_emergencies",
        RetirementWealthLifestyle => "retirement_wealth_lifestyle",
    }
}

vocabulary! {
    StressLevel {
        Low => "low",
        Slight => "slight",
        Moderate => "moderate",
        High => "high",
    }
}

vocabulary! {
    RiskLevel {
        Cautious => "cautious",
        Calculative => "calculative",
        ChanceTaking => "chance_taking",
        Unassigned => "unassigned",
    }
}

vocabulary! {
    /// Emotion keys; declaration order is the tie-break order for the dominant emotion.
    Emotion {
        Fear => "fear",
        Sadness => "sadness",
        Surprise => "surprise",
        Happiness => "happiness",
        Anger => "anger",
    }
}

impl NhfLevel7 {
    pub fn collapse(self) -> NhfLevel5 {
        match self {
            NhfLevel7::Basic => NhfLevel5::Basic,
            NhfLevel7::SafetyL1 | NhfLevel7::SafetyL2 => NhfLevel5::Safety,
            NhfLevel7::LoveBelongingness => NhfLevel5::LoveBelongingness,
            NhfLevel7::Esteem => NhfLevel5::Esteem,
            NhfLevel7::SelfTranscendence | NhfLevel7::SelfActualization => NhfLevel5::SelfActualization,
        }
    }
}

impl NhfLevel5 {
    pub fn rank(self) -> u8 {
        self as u8 + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            NhfLevel5::Basic => "Basic Needs",
            NhfLevel5::Safety => "Safety Needs",
            NhfLevel5::LoveBelongingness => "Love & Belongingness",
            NhfLevel5::Esteem => "Esteem Needs",
            NhfLevel5::SelfActualization => "Self-Actualization",
        }
    }
}

impl NpfLevel {
    pub fn rank(self) -> u8 {
        self as u8 + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            NpfLevel::ConsumptionImmediate => "Consumption for Immediate Needs",
            NpfLevel::SavingsEmergencies => "Savings for Emergencies",
            NpfLevel::RetirementWealthLifestyle => "Retirement Savings, Wealth and Lifestyle Improvement",
        }
    }
}

impl StressLevel {
    pub fn rank(self) -> u8 {
        self as u8 + 1
    }
}

impl RiskLevel {
    pub const RANKED: [RiskLevel; 3] = [RiskLevel::Cautious, RiskLevel::Calculative, RiskLevel::ChanceTaking];

    pub fn rank(self) -> Option<u8> {
        match self {
            RiskLevel::Unassigned => None,
            r => Some(r as u8 + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub post_id: String,
    pub core_query: String,
    pub additional_queries: Vec<String>,
}

impl QuerySummary {
    pub fn validate(&self) -> Result<(), String> {
        if self.core_query.trim().is_empty() {
            return Err("core_query is empty".into());
        }
        if self.additional_queries.len() > 2 {
            return Err(format!("{} additional queries (max 2)", self.additional_queries.len()));
        }
        if self.additional_queries.iter().any(|q| q.trim().is_empty()) {
            return Err("empty additional query".into());
        }
        Ok(())
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.core_query.as_str()).chain(self.additional_queries.iter().map(String::as_str))
    }

    pub fn query_count(&self) -> usize {
        1 + self.additional_queries.len()
    }
}

/// A (purpose, financial process) pair; both parts lowercase and non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NeedLabel {
    pub purpose: String,
    pub process: String,
}

impl NeedLabel {
    pub fn new(purpose: &str, process: &str) -> Result<Self, String> {
        let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let (purpose, process) = (norm(purpose), norm(process));
        if purpose.is_empty() || process.is_empty() {
            return Err("need label parts must be non-empty".into());
        }
        Ok(NeedLabel { purpose, process })
    }
}

impl fmt::Display for NeedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.purpose, self.process)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionScores {
    pub fear: f64,
    pub sadness: f64,
    pub surprise: f64,
    pub happiness: f64,
    pub anger: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionProfile {
    pub scores: EmotionScores,
    pub dominant: Option<Emotion>,
}

impl EmotionScores {
    pub fn get(&self, e: Emotion) -> f64 {
        match e {
            Emotion::Fear => self.fear,
            Emotion::Sadness => self.sadness,
            Emotion::Surprise => self.surprise,
            Emotion::Happiness => self.happiness,
            Emotion::Anger => self.anger,
        }
    }

    fn slot(&mut self, e: Emotion) -> &mut f64 {
        match e {
            Emotion::Fear => &mut self.fear,
            Emotion::Sadness => &mut self.sadness,
            Emotion::Surprise => &mut self.surprise,
            Emotion::Happiness => &mut self.happiness,
            Emotion::Anger => &mut self.anger,
        }
    }

    pub fn sum(&self) -> f64 {
        Emotion::ALL.iter().map(|&e| self.get(e)).sum()
    }
}

impl EmotionProfile {
    /// Normalizes raw per-emotion counts into a profile.
    pub fn from_counts(counts: &[(Emotion, f64)]) -> Self {
        let mut scores = EmotionScores::default();
        for &(e, c) in counts {
            *scores.slot(e) += c;
        }
        let total = scores.sum();
        if total <= 0.0 {
            return EmotionProfile::default();
        }
        for &e in Emotion::ALL {
            *scores.slot(e) /= total;
        }
        let mut dominant = Emotion::Fear;
        for &e in Emotion::ALL {
            if scores.get(e) > scores.get(dominant) {
                dominant = e;
            }
        }
        EmotionProfile { scores, dominant: Some(dominant) }
    }
}

/// Age and income statements an engine found in one post, before attribution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectedMentions {
    pub ages: Vec<u32>,
    pub incomes: Vec<DetectedIncome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedIncome {
    pub amount: f64,
    pub period: IncomePeriod,
    pub currency: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedRecord {
    pub need_id: String,
    pub post_id: String,
    pub user: String,
    /// Calendar year of the post, used to look up the user's income.
    pub year: i32,
    pub label: NeedLabel,
    pub core_query: String,
    pub nhf7: NhfLevel7,
    pub nhf5: NhfLevel5,
    pub npf: NpfLevel,
    pub stress: StressLevel,
    pub risk: RiskLevel,
    pub engine: String,
    pub prompt_version: String,
}

impl NeedRecord {
    /// Text fed to the topic model: purpose, process and the post's core query.
    pub fn topic_text(&self) -> String {
        format!("{} {} {}", self.label.purpose, self.label.process, self.core_query)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostEmotion {
    pub post_id: String,
    pub user: String,
    pub emotion: EmotionProfile,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_is_surjective_and_order_preserving() {
        let images: std::collections::BTreeSet<_> = NhfLevel7::ALL.iter().map(|l| l.collapse()).collect();
        assert_eq!(images.len(), 5);
        for w in NhfLevel7::ALL.windows(2) {
            assert!(w[0].collapse().rank() <= w[1].collapse().rank());
        }
        assert_eq!(NhfLevel7::SafetyL2.collapse(), NhfLevel5::Safety);
        assert_eq!(NhfLevel7::SelfTranscendence.collapse(), NhfLevel5::SelfActualization);
    }

    #[test]
    fn vocabulary_is_strict() {
        assert_eq!("Safety_L1".parse::<NhfLevel7>(), Ok(NhfLevel7::SafetyL1));
        assert!("safety".parse::<NhfLevel7>().is_err());
        assert!("very stressed".parse::<StressLevel>().is_err());
        assert_eq!(RiskLevel::Unassigned.rank(), None);
        assert_eq!(RiskLevel::ChanceTaking.rank(), Some(3));
        assert_eq!(NpfLevel::RetirementWealthLifestyle.rank(), 3);
    }

    #[test]
    fn emotion_normalization() {
        let p = EmotionProfile::from_counts(&[(Emotion::Fear, 3.0), (Emotion::Sadness, 1.0)]);
        assert_eq!(p.scores.fear, 0.75);
        assert_eq!(p.scores.sadness, 0.25);
        assert_eq!(p.dominant, Some(Emotion::Fear));

        let tie = EmotionProfile::from_counts(&[(Emotion::Anger, 1.0), (Emotion::Surprise, 1.0)]);
        assert_eq!(tie.dominant, Some(Emotion::Surprise));

        let none = EmotionProfile::from_counts(&[]);
        assert_eq!(none.scores.sum(), 0.0);
        assert_eq!(none.dominant, None);
    }

    #[test]
    fn label_normalization() {
        let l = NeedLabel::new("  Medical   Expenses", "SAVING").unwrap();
        assert_eq!(l, NeedLabel { purpose: "medical expenses".into(), process: "saving".into() });
        assert!(NeedLabel::new("", "saving").is_err());
    }
}
