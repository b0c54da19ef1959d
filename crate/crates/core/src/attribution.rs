//! Age and income attribution.
//!
//! Mentions are detected per post by an [`ExtractionEngine`] and then folded
//! per user. Age: the most recent year with a mention wins, and within that
//! year the lowest age. Income: the lowest monthly amount per mentioned year,
//! carried back to earlier unmentioned years and forward past the last
//! mention. Users without any income mention are excluded.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::extraction::{ExtractionEngine, ExtractionError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AttributionError {
    #[error("unknown income period `{0}`")]
    UnknownPeriod(String),
    #[error("income amount must be positive, got {0}")]
    NonPositiveAmount(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncomePeriod {
    Monthly,
    Annual,
    Hourly,
    Weekly,
    Biweekly,
}

impl FromStr for IncomePeriod {
    type Err = AttributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "monthly" | "month" | "mo" => IncomePeriod::Monthly,
            "annual" | "annually" | "yearly" | "year" | "yr" => IncomePeriod::Annual,
            "hourly" | "hour" | "hr" => IncomePeriod::Hourly,
            "weekly" | "week" | "wk" => IncomePeriod::Weekly,
            "biweekly" | "bi-weekly" | "fortnightly" => IncomePeriod::Biweekly,
            _ => return Err(AttributionError::UnknownPeriod(s.to_string())),
        })
    }
}

/// Constants used to turn hourly and weekly pay into monthly income.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomeConversion {
    pub hours_per_week: f64,
    pub weeks_per_year: f64,
}

impl Default for IncomeConversion {
    fn default() -> Self {
        IncomeConversion { hours_per_week: 40.0, weeks_per_year: 52.0 }
    }
}

pub fn normalize_income(
    amount: f64,
    period: IncomePeriod,
    conv: &IncomeConversion,
) -> Result<f64, AttributionError> {
    if !(amount > 0.0) || !amount.is_finite() {
        return Err(AttributionError::NonPositiveAmount(amount));
    }
    Ok(match period {
        IncomePeriod::Monthly => amount,
        IncomePeriod::Annual => amount / 12.0,
        IncomePeriod::Hourly => amount * conv.hours_per_week * conv.weeks_per_year / 12.0,
        IncomePeriod::Weekly => amount * conv.weeks_per_year / 12.0,
        IncomePeriod::Biweekly => amount * (conv.weeks_per_year / 2.0) / 12.0,
    })
}

/// Age bins, each closed on the right: `<21` is 1..=20, `21-30` is 21..=30, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeCategory {
    #[serde(rename = "<21")]
    Under21,
    #[serde(rename = "21-30")]
    Age21To30,
    #[serde(rename = "31-40")]
    Age31To40,
    #[serde(rename = "41-50")]
    Age41To50,
    #[serde(rename = "51-60")]
    Age51To60,
    #[serde(rename = ">60")]
    Over60,
}

impl AgeCategory {
    pub const ALL: [AgeCategory; 6] = [
        AgeCategory::Under21,
        AgeCategory::Age21To30,
        AgeCategory::Age31To40,
        AgeCategory::Age41To50,
        AgeCategory::Age51To60,
        AgeCategory::Over60,
    ];

    pub fn of(age: u32) -> AgeCategory {
        match age {
            0..=20 => AgeCategory::Under21,
            21..=30 => AgeCategory::Age21To30,
            31..=40 => AgeCategory::Age31To40,
            41..=50 => AgeCategory::Age41To50,
            51..=60 => AgeCategory::Age51To60,
            _ => AgeCategory::Over60,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeCategory::Under21 => "<21",
            AgeCategory::Age21To30 => "21-30",
            AgeCategory::Age31To40 => "31-40",
            AgeCategory::Age41To50 => "41-50",
            AgeCategory::Age51To60 => "51-60",
            AgeCategory::Over60 => ">60",
        }
    }
}

impl fmt::Display for AgeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeMention {
    pub post_id: String,
    pub year: i32,
    pub age_years: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeMention {
    pub post_id: String,
    pub year: i32,
    pub amount: f64,
    pub period: IncomePeriod,
    /// `amount` converted to monthly USD.
    pub monthly: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: String,
    pub resolved_age: Option<u32>,
    pub age_category: Option<AgeCategory>,
    pub income_by_year: BTreeMap<i32, f64>,
}

impl UserProfile {
    pub fn income_for_year(&self, year: i32) -> Option<f64> {
        self.income_by_year.get(&year).copied()
    }

    /// Mean of the per-year incomes; one value per user.
    pub fn mean_income(&self) -> Option<f64> {
        if self.income_by_year.is_empty() {
            return None;
        }
        Some(self.income_by_year.values().sum::<f64>() / self.income_by_year.len() as f64)
    }
}

pub fn resolve_age(mentions: &[AgeMention]) -> Option<(u32, AgeCategory)> {
    let latest = mentions.iter().map(|m| m.year).max()?;
    let age = mentions.iter().filter(|m| m.year == latest).map(|m| m.age_years).min()?;
    Some((age, AgeCategory::of(age)))
}

/// Maps every year in `post_years` (plus every mentioned year) to a monthly
/// income. A year without a mention takes the next later mentioned year's
/// value; years after the last mention carry that last value.
pub fn resolve_income(mentions: &[IncomeMention], post_years: &BTreeSet<i32>) -> BTreeMap<i32, f64> {
    let mut per_year: BTreeMap<i32, f64> = BTreeMap::new();
    for m in mentions {
        per_year
            .entry(m.year)
            .and_modify(|v| *v = v.min(m.monthly))
            .or_insert(m.monthly);
    }
    let Some((_, &last)) = per_year.iter().next_back() else {
        return BTreeMap::new();
    };

    let mut out = per_year.clone();
    for &y in post_years {
        if per_year.contains_key(&y) {
            continue;
        }
        let v = per_year.range(y..).next().map(|(_, v)| *v).unwrap_or(last);
        out.insert(y, v);
    }
    out
}

/// Age and income mentions found in one post.
pub fn detect_mentions(
    post: &Post,
    engine: &dyn ExtractionEngine,
    conv: &IncomeConversion,
) -> Result<(Vec<AgeMention>, Vec<IncomeMention>), ExtractionError> {
    let found = engine.detect_age_income(post).map_err(|e| e.for_post(&post.post_id))?;
    let year = post.year();
    let ages = found
        .ages
        .into_iter()
        .filter(|&a| (1..120).contains(&a))
        .map(|age_years| AgeMention { post_id: post.post_id.clone(), year, age_years })
        .collect();
    let mut incomes = Vec::new();
    for raw in found.incomes {
        if !raw.currency.eq_ignore_ascii_case("USD") {
            log::warn!("post {}: dropping non-USD income mention ({})", post.post_id, raw.currency);
            continue;
        }
        match normalize_income(raw.amount, raw.period, conv) {
            Ok(monthly) => incomes.push(IncomeMention {
                post_id: post.post_id.clone(),
                year,
                amount: raw.amount,
                period: raw.period,
                monthly,
            }),
            Err(e) => log::warn!("post {}: {e}", post.post_id),
        }
    }
    Ok((ages, incomes))
}

/// Per-post mentions for a whole corpus, kept so attribution can be re-run
/// without re-querying the engine.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PostMentions {
    pub post_id: String,
    pub author: String,
    pub ages: Vec<AgeMention>,
    pub incomes: Vec<IncomeMention>,
}

#[derive(Debug, Clone, Default)]
pub struct Attribution {
    /// Users with at least one age and one income mention.
    pub profiles: Vec<UserProfile>,
    /// Every author in the corpus → whether a profile was resolved.
    pub flags: HashMap<String, bool>,
}

/// Folds per-post mentions into profiles. `posts` supplies each user's post
/// years; profiles come out sorted by user name.
pub fn attribute_users(posts: &[Post], mentions: &[PostMentions]) -> Attribution {
    let mut years: BTreeMap<&str, BTreeSet<i32>> = BTreeMap::new();
    for p in posts {
        years.entry(p.author.as_str()).or_default().insert(p.year());
    }
    let mut ages: HashMap<&str, Vec<AgeMention>> = HashMap::new();
    let mut incomes: HashMap<&str, Vec<IncomeMention>> = HashMap::new();
    for m in mentions {
        ages.entry(m.author.as_str()).or_default().extend(m.ages.iter().cloned());
        incomes.entry(m.author.as_str()).or_default().extend(m.incomes.iter().cloned());
    }

    let mut out = Attribution::default();
    for (user, post_years) in &years {
        let age = ages.get(user).and_then(|m| resolve_age(m));
        let income = incomes
            .get(user)
            .map(|m| resolve_income(m, post_years))
            .unwrap_or_default();
        let eligible = age.is_some() && !income.is_empty();
        out.flags.insert(user.to_string(), eligible);
        if let (true, Some((age, category))) = (eligible, age) {
            out.profiles.push(UserProfile {
                user: user.to_string(),
                resolved_age: Some(age),
                age_category: Some(category),
                income_by_year: income,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn age(year: i32, a: u32) -> AgeMention {
        AgeMention { post_id: format!("p{year}{a}"), year, age_years: a }
    }

    fn inc(year: i32, monthly: f64) -> IncomeMention {
        IncomeMention { post_id: format!("p{year}"), year, amount: monthly, period: IncomePeriod::Monthly, monthly }
    }

    #[test]
    fn normalize_examples() {
        let c = IncomeConversion::default();
        assert_eq!(normalize_income(6000.0, IncomePeriod::Monthly, &c).unwrap(), 6000.0);
        assert_eq!(normalize_income(120000.0, IncomePeriod::Annual, &c).unwrap(), 10000.0);
        // 30 × 40 × 52 / 12
        assert!((normalize_income(30.0, IncomePeriod::Hourly, &c).unwrap() - 5200.0).abs() < 1e-9);
        assert!((normalize_income(1000.0, IncomePeriod::Weekly, &c).unwrap() - 52000.0 / 12.0).abs() < 1e-9);
        assert!((normalize_income(2000.0, IncomePeriod::Biweekly, &c).unwrap() - 52000.0 / 12.0).abs() < 1e-9);
        assert!(normalize_income(0.0, IncomePeriod::Monthly, &c).is_err());
        assert_eq!(
            "fortnight".parse::<IncomePeriod>(),
            Err(AttributionError::UnknownPeriod("fortnight".into()))
        );
    }

    proptest! {
        #[test]
        fn normalize_is_homogeneous(a in 1.0f64..1e6, scale in 0.01f64..100.0, p in 0usize..5) {
            let period = [IncomePeriod::Monthly, IncomePeriod::Annual, IncomePeriod::Hourly,
                          IncomePeriod::Weekly, IncomePeriod::Biweekly][p];
            let c = IncomeConversion::default();
            let lhs = normalize_income(scale * a, period, &c).unwrap();
            let rhs = scale * normalize_income(a, period, &c).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs());
        }

        #[test]
        fn age_categories_partition(a in 1u32..120) {
            let hits = AgeCategory::ALL.iter().filter(|&&c| {
                let (lo, hi) = match c {
                    AgeCategory::Under21 => (1, 20),
                    AgeCategory::Age21To30 => (21, 30),
                    AgeCategory::Age31To40 => (31, 40),
                    AgeCategory::Age41To50 => (41, 50),
                    AgeCategory::Age51To60 => (51, 60),
                    AgeCategory::Over60 => (61, 119),
                };
                (lo..=hi).contains(&a)
            }).count();
            prop_assert_eq!(hits, 1);
        }

        #[test]
        fn resolved_values_respect_min_semantics(
            raw in prop::collection::vec((2020i32..2024, 18u32..80, 1000.0f64..20000.0), 1..12)
        ) {
            let ages: Vec<_> = raw.iter().map(|&(y, a, _)| age(y, a)).collect();
            let (resolved, _) = resolve_age(&ages).unwrap();
            let latest = raw.iter().map(|r| r.0).max().unwrap();
            prop_assert!(raw.iter().filter(|r| r.0 == latest).all(|r| resolved <= r.1));

            let incomes: Vec<_> = raw.iter().map(|&(y, _, m)| inc(y, m)).collect();
            let years: BTreeSet<i32> = (2020..2024).collect();
            let map = resolve_income(&incomes, &years);
            for m in &incomes {
                prop_assert!(map[&m.year] <= m.monthly);
            }
            prop_assert!(map.values().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn age_boundaries() {
        assert_eq!(AgeCategory::of(20), AgeCategory::Under21);
        assert_eq!(AgeCategory::of(21), AgeCategory::Age21To30);
        assert_eq!(AgeCategory::of(30), AgeCategory::Age21To30);
        assert_eq!(AgeCategory::of(60), AgeCategory::Age51To60);
        assert_eq!(AgeCategory::of(61), AgeCategory::Over60);
    }

    #[test]
    fn resolve_age_examples() {
        assert_eq!(resolve_age(&[age(2022, 31), age(2023, 33), age(2023, 35)]), Some((33, AgeCategory::Age31To40)));
        assert_eq!(resolve_age(&[age(2022, 31)]), Some((31, AgeCategory::Age31To40)));
        assert_eq!(resolve_age(&[age(2021, 29), age(2023, 30)]), Some((30, AgeCategory::Age21To30)));
        assert_eq!(resolve_age(&[]), None);
    }

    #[test]
    fn resolve_income_examples() {
        let years: BTreeSet<i32> = [2021, 2022, 2023].into();
        assert_eq!(
            resolve_income(&[inc(2023, 7000.0)], &years),
            BTreeMap::from([(2021, 7000.0), (2022, 7000.0), (2023, 7000.0)])
        );
        assert_eq!(resolve_income(&[inc(2023, 7000.0), inc(2023, 5000.0)], &years)[&2023], 5000.0);
        assert_eq!(
            resolve_income(&[inc(2021, 4000.0), inc(2023, 6000.0)], &years),
            BTreeMap::from([(2021, 4000.0), (2022, 6000.0), (2023, 6000.0)])
        );
        assert!(resolve_income(&[], &years).is_empty());
    }

    #[test]
    fn later_years_carry_last_value() {
        let years: BTreeSet<i32> = [2020, 2021, 2022].into();
        let map = resolve_income(&[inc(2020, 3000.0)], &years);
        assert_eq!(map, BTreeMap::from([(2020, 3000.0), (2021, 3000.0), (2022, 3000.0)]));
    }

    #[test]
    fn users_without_income_are_excluded() {
        let post = |id: &str, author: &str| Post {
            post_id: id.into(),
            author: author.into(),
            created_at: 1_650_000_000,
            subreddit: "personalfinance".into(),
            text: String::new(),
        };
        let posts = vec![post("a1", "alice"), post("b1", "bob")];
        let mentions = vec![
            PostMentions { post_id: "a1".into(), author: "alice".into(), ages: vec![age(2022, 28)], incomes: vec![inc(2022, 5000.0)] },
            PostMentions { post_id: "b1".into(), author: "bob".into(), ages: vec![age(2022, 40)], incomes: vec![] },
        ];
        let out = attribute_users(&posts, &mentions);
        assert_eq!(out.profiles.len(), 1);
        assert_eq!(out.profiles[0].user, "alice");
        assert_eq!(out.flags["bob"], false);
        assert_eq!(out.flags["alice"], true);
    }
}
