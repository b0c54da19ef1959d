use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{income_index, need_income, AnalyticsError};
use crate::attribution::{AgeCategory, UserProfile};
use crate::corpus::Post;
use crate::extraction::{NeedRecord, NhfLevel5, NpfLevel, RiskLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeRow {
    pub age_group: AgeCategory,
    pub n_users: usize,
    /// Mean over users of each user's across-years mean income; absent for an empty row.
    pub avg_monthly_income: Option<f64>,
    pub n_posts: usize,
    pub n_needs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgeGroupTable {
    pub rows: Vec<AgeRow>,
}

impl AgeGroupTable {
    pub fn total_users(&self) -> usize {
        self.rows.iter().map(|r| r.n_users).sum()
    }

    pub fn total_needs(&self) -> usize {
        self.rows.iter().map(|r| r.n_needs).sum()
    }

    pub fn row(&self, group: AgeCategory) -> &AgeRow {
        self.rows.iter().find(|r| r.age_group == group).expect("every age group has a row")
    }
}

/// One row per age group, always all six. Posts and needs must belong to profiled users.
pub fn build_age_table(profiles: &[UserProfile], posts: &[Post], needs: &[NeedRecord]) -> Result<AgeGroupTable, AnalyticsError> {
    let mut category: HashMap<&str, AgeCategory> = HashMap::new();
    for p in profiles {
        let c = p.age_category.ok_or_else(|| AnalyticsError::Contract(format!("profile {} has no age", p.user)))?;
        if p.mean_income().is_none() {
            return Err(AnalyticsError::Contract(format!("profile {} has no income", p.user)));
        }
        category.insert(p.user.as_str(), c);
    }
    let lookup = |user: &str| {
        category.get(user).copied().ok_or_else(|| AnalyticsError::Contract(format!("user {user} has no resolved profile")))
    };

    let mut users: BTreeMap<AgeCategory, Vec<f64>> = BTreeMap::new();
    for p in profiles {
        users.entry(lookup(&p.user)?).or_default().push(p.mean_income().unwrap_or_default());
    }
    let mut n_posts: BTreeMap<AgeCategory, usize> = BTreeMap::new();
    for p in posts {
        *n_posts.entry(lookup(&p.author)?).or_default() += 1;
    }
    let mut n_needs: BTreeMap<AgeCategory, usize> = BTreeMap::new();
    for n in needs {
        *n_needs.entry(lookup(&n.user)?).or_default() += 1;
    }

    let rows = AgeCategory::ALL
        .iter()
        .map(|&c| {
            let incomes = users.get(&c).map(Vec::as_slice).unwrap_or_default();
            AgeRow {
                age_group: c,
                n_users: incomes.len(),
                avg_monthly_income: mean(incomes),
                n_posts: n_posts.get(&c).copied().unwrap_or(0),
                n_needs: n_needs.get(&c).copied().unwrap_or(0),
            }
        })
        .collect();
    Ok(AgeGroupTable { rows })
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: String,
    pub title: String,
    /// Mean over needs of the poster's monthly income in the post's year.
    pub avg_monthly_income: Option<f64>,
    pub n_needs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelIncomeTable {
    /// Rank order, basic first.
    pub nhf5: Vec<LevelRow>,
    /// Rank order, consumption first.
    pub npf: Vec<LevelRow>,
}

impl LevelIncomeTable {
    pub fn nhf5_row(&self, level: NhfLevel5) -> Option<&LevelRow> {
        self.nhf5.iter().find(|r| r.level == level.as_str())
    }

    pub fn npf_row(&self, level: NpfLevel) -> Option<&LevelRow> {
        self.npf.iter().find(|r| r.level == level.as_str())
    }
}

pub fn build_level_income_table(needs: &[NeedRecord], profiles: &[UserProfile]) -> Result<LevelIncomeTable, AnalyticsError> {
    let index = income_index(profiles);
    let mut nhf: BTreeMap<NhfLevel5, Vec<f64>> = BTreeMap::new();
    let mut npf: BTreeMap<NpfLevel, Vec<f64>> = BTreeMap::new();
    for n in needs {
        let income = need_income(&index, n)?;
        nhf.entry(n.nhf5).or_default().push(income);
        npf.entry(n.npf).or_default().push(income);
    }
    let row = |level: &str, title: &str, xs: Option<&Vec<f64>>| {
        let xs = xs.map(Vec::as_slice).unwrap_or_default();
        LevelRow { level: level.into(), title: title.into(), avg_monthly_income: mean(xs), n_needs: xs.len() }
    };
    Ok(LevelIncomeTable {
        nhf5: NhfLevel5::ALL.iter().map(|l| row(l.as_str(), l.title(), nhf.get(l))).collect(),
        npf: NpfLevel::ALL.iter().map(|l| row(l.as_str(), l.title(), npf.get(l))).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeOrdering {
    Increasing,
    Equal,
    Decreasing,
    /// One side has no needs.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub lower: String,
    pub higher: String,
    pub lower_income: Option<f64>,
    pub higher_income: Option<f64>,
    pub ordering: IncomeOrdering,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisChecks {
    pub h1: Vec<PairCheck>,
    pub h2: Vec<PairCheck>,
}

impl HypothesisChecks {
    /// Higher-ranked levels whose income falls below the level beneath.
    pub fn h1_dips(&self) -> Vec<&str> {
        dips(&self.h1)
    }

    pub fn h2_dips(&self) -> Vec<&str> {
        dips(&self.h2)
    }

    pub fn h1_monotone(&self) -> bool {
        self.h1.iter().all(|p| p.ordering == IncomeOrdering::Increasing)
    }

    pub fn h2_monotone(&self) -> bool {
        self.h2.iter().all(|p| p.ordering == IncomeOrdering::Increasing)
    }
}

fn dips(pairs: &[PairCheck]) -> Vec<&str> {
    pairs.iter().filter(|p| p.ordering == IncomeOrdering::Decreasing).map(|p| p.higher.as_str()).collect()
}

fn adjacent(rows: &[LevelRow]) -> Vec<PairCheck> {
    rows.windows(2)
        .map(|w| {
            let (lo, hi) = (&w[0], &w[1]);
            let ordering = match (lo.avg_monthly_income, hi.avg_monthly_income) {
                (Some(a), Some(b)) if b > a => IncomeOrdering::Increasing,
                (Some(a), Some(b)) if b < a => IncomeOrdering::Decreasing,
                (Some(_), Some(_)) => IncomeOrdering::Equal,
                _ => IncomeOrdering::Undetermined,
            };
            PairCheck {
                lower: lo.level.clone(),
                higher: hi.level.clone(),
                lower_income: lo.avg_monthly_income,
                higher_income: hi.avg_monthly_income,
                ordering,
            }
        })
        .collect()
}

/// Income ordering between adjacent levels of each framework. No significance testing.
pub fn hypothesis_checks(table: &LevelIncomeTable) -> HypothesisChecks {
    HypothesisChecks { h1: adjacent(&table.nhf5), h2: adjacent(&table.npf) }
}

pub const INCOME_BIN_LABELS: [&str; 6] = ["0-4000", "4001-8000", "8001-12000", "12001-16000", "16001-20000", ">20000"];

/// Right-closed 4000-wide bins: 4000 falls in the first, 4000.01 in the second.
pub fn income_bin(monthly: f64) -> usize {
    const UPPER: [f64; 5] = [4000.0, 8000.0, 12000.0, 16000.0, 20000.0];
    UPPER.iter().position(|&u| monthly <= u).unwrap_or(UPPER.len())
}

/// Stress and risk counts for one slice of needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRow {
    pub category: String,
    /// low, slight, moderate, high
    pub stress: [usize; 4],
    /// cautious, calculative, chance_taking
    pub risk: [usize; 3],
    pub risk_unassigned: usize,
    pub n_needs: usize,
}

impl BehaviorRow {
    fn new(category: &str) -> Self {
        BehaviorRow { category: category.into(), stress: [0; 4], risk: [0; 3], risk_unassigned: 0, n_needs: 0 }
    }

    fn add(&mut self, n: &NeedRecord) {
        self.n_needs += 1;
        self.stress[n.stress as usize] += 1;
        match n.risk {
            RiskLevel::Unassigned => self.risk_unassigned += 1,
            r => self.risk[r as usize] += 1,
        }
    }

    pub fn stress_total(&self) -> usize {
        self.stress.iter().sum()
    }

    pub fn risk_total(&self) -> usize {
        self.risk.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncomeBinTable {
    /// One row per income bin, then one per NHF-5 level, then one per NPF level.
    pub income: Vec<BehaviorRow>,
    pub nhf5: Vec<BehaviorRow>,
    pub npf: Vec<BehaviorRow>,
}

pub fn build_income_bin_table(needs: &[NeedRecord], profiles: &[UserProfile]) -> Result<IncomeBinTable, AnalyticsError> {
    let index = income_index(profiles);
    let mut income: Vec<BehaviorRow> = INCOME_BIN_LABELS.iter().map(|l| BehaviorRow::new(l)).collect();
    let mut nhf5: Vec<BehaviorRow> = NhfLevel5::ALL.iter().map(|l| BehaviorRow::new(l.as_str())).collect();
    let mut npf: Vec<BehaviorRow> = NpfLevel::ALL.iter().map(|l| BehaviorRow::new(l.as_str())).collect();
    for n in needs {
        income[income_bin(need_income(&index, n)?)].add(n);
        nhf5[n.nhf5 as usize].add(n);
        npf[n.npf as usize].add(n);
    }
    Ok(IncomeBinTable { income, nhf5, npf })
}

/// Per-need NHF-5 × NPF counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkCrosstab {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

pub fn framework_crosstab(needs: &[NeedRecord]) -> FrameworkCrosstab {
    let mut counts = vec![vec![0usize; NpfLevel::ALL.len()]; NhfLevel5::ALL.len()];
    for n in needs {
        counts[n.nhf5 as usize][n.npf as usize] += 1;
    }
    FrameworkCrosstab {
        rows: NhfLevel5::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        columns: NpfLevel::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        counts,
    }
}

/// Dominant-emotion share over posts, in tie-break order. Posts with no
/// emotion cue at all are counted separately.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmotionShares {
    pub counts: BTreeMap<String, usize>,
    pub no_emotion: usize,
    pub n_posts: usize,
}

pub fn emotion_shares(emotions: &[crate::extraction::PostEmotion]) -> EmotionShares {
    let mut counts: BTreeMap<String, usize> =
        crate::extraction::Emotion::ALL.iter().map(|e| (e.as_str().to_string(), 0)).collect();
    let mut seen = BTreeSet::new();
    let mut no_emotion = 0;
    for e in emotions {
        if !seen.insert(e.post_id.as_str()) {
            continue;
        }
        match e.emotion.dominant {
            Some(d) => *counts.get_mut(d.as_str()).expect("all emotions present") += 1,
            None => no_emotion += 1,
        }
    }
    EmotionShares { counts, no_emotion, n_posts: seen.len() }
}
