//! Published reference tables, shipped as data, and cross-table sum checks
//! for both those tables and freshly computed outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgeRow, AnalyticsBundle, CorrelationTable, LevelIncomeTable, LevelRow, TopicLevelMatrix};

const PAPER_TABLES: &str = include_str!("../../data/paper_tables.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperBehaviorRow {
    pub category: String,
    pub stress: [u64; 4],
    pub risk: [u64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperBehavior {
    pub income: Vec<PaperBehaviorRow>,
    pub nhf5: Vec<PaperBehaviorRow>,
    pub npf: Vec<PaperBehaviorRow>,
}

/// A level total quoted in prose, as opposed to a table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatedTotal {
    pub framework: String,
    pub level: String,
    pub stated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperFixture {
    pub total_needs_stated: u64,
    pub age_groups: Vec<AgeRow>,
    pub levels: LevelIncomeTable,
    pub behavior: PaperBehavior,
    /// Reference range only; the estimator behind these values is unknown.
    pub correlations: CorrelationTable,
    pub text_level_totals: Vec<StatedTotal>,
}

pub fn paper_fixture() -> PaperFixture {
    serde_json::from_str(PAPER_TABLES).expect("shipped fixture parses")
}

impl PaperFixture {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Must hold; a failure fails the report.
    Exact,
    /// Surfaced for the reader; disagreement is reported, not fatal.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub expected: i64,
    pub actual: i64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationReport {
    pub checks: Vec<Check>,
}

impl ReconciliationReport {
    fn exact(&mut self, name: impl Into<String>, expected: u64, actual: u64) {
        self.push(name, CheckKind::Exact, expected, actual, String::new());
    }

    fn info(&mut self, name: impl Into<String>, expected: u64, actual: u64, note: impl Into<String>) {
        self.push(name, CheckKind::Informational, expected, actual, note.into());
    }

    fn push(&mut self, name: impl Into<String>, kind: CheckKind, expected: u64, actual: u64, note: String) {
        self.checks.push(Check {
            name: name.into(),
            kind,
            expected: expected as i64,
            actual: actual as i64,
            passed: expected == actual,
            note,
        });
    }

    /// True when every exact check holds.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.kind != CheckKind::Exact || c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.kind == CheckKind::Exact && !c.passed)
    }

    pub fn discrepancies(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.kind == CheckKind::Informational && !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn level_count(rows: &[LevelRow], level: &str) -> Option<u64> {
    rows.iter().find(|r| r.level == level).map(|r| r.n_needs as u64)
}

/// Cross-table sums over the published tables.
pub fn reconcile_paper(p: &PaperFixture) -> ReconciliationReport {
    let mut r = ReconciliationReport::default();
    let total = p.total_needs_stated;
    r.exact("age_groups.needs_sum", total, p.age_groups.iter().map(|a| a.n_needs as u64).sum());
    r.exact("levels.nhf5.needs_sum", total, p.levels.nhf5.iter().map(|l| l.n_needs as u64).sum());
    r.exact("levels.npf.needs_sum", total, p.levels.npf.iter().map(|l| l.n_needs as u64).sum());
    r.exact("behavior.income.stress_sum", total, p.behavior.income.iter().flat_map(|b| b.stress).sum());

    for (fw, rows, levels) in [("nhf5", &p.behavior.nhf5, &p.levels.nhf5), ("npf", &p.behavior.npf, &p.levels.npf)] {
        for b in rows {
            let Some(n) = level_count(levels, &b.category) else {
                r.exact(format!("behavior.{fw}.{}.known_level", b.category), 1, 0);
                continue;
            };
            r.exact(format!("behavior.{fw}.{}.stress_sum", b.category), n, b.stress.iter().sum());
            let risk: u64 = b.risk.iter().sum();
            r.info(
                format!("behavior.{fw}.{}.risk_sum", b.category),
                n,
                risk,
                format!("{} needs without a risk level", n as i64 - risk as i64),
            );
        }
    }
    for s in &p.text_level_totals {
        let rows = if s.framework == "nhf5" { &p.levels.nhf5 } else { &p.levels.npf };
        if let Some(n) = level_count(rows, &s.level) {
            r.info(
                format!("text_vs_table.{}.{}", s.framework, s.level),
                n,
                s.stated,
                "total quoted in the text against the level table; left as published",
            );
        }
    }
    r
}

fn topic_checks(r: &mut ReconciliationReport, m: &TopicLevelMatrix, levels: &[LevelRow], n: u64) {
    r.exact(format!("topic_{}.grand_total", m.framework), n, m.grand_total() as u64);
    for l in levels {
        r.exact(
            format!("topic_{}.{}.row_total", m.framework, l.level),
            l.n_needs as u64,
            m.row_total(&l.level).unwrap_or(0) as u64,
        );
    }
    r.info(
        format!("topic_{}.modeled_total", m.framework),
        n,
        m.modeled_total() as u64,
        format!("{} needs had no in-vocabulary token", m.unmodeled_total()),
    );
}

/// Conservation checks over a computed bundle.
pub fn reconcile_outputs(b: &AnalyticsBundle) -> ReconciliationReport {
    let mut r = ReconciliationReport::default();
    let n = b.n_needs as u64;
    r.exact("age.needs_sum", n, b.age.total_needs() as u64);
    r.exact("levels.nhf5.needs_sum", n, b.levels.nhf5.iter().map(|l| l.n_needs as u64).sum());
    r.exact("levels.npf.needs_sum", n, b.levels.npf.iter().map(|l| l.n_needs as u64).sum());
    r.exact("crosstab.total", n, b.crosstab.counts.iter().flatten().sum::<usize>() as u64);
    r.exact("behavior.income.needs_sum", n, b.behavior.income.iter().map(|x| x.n_needs as u64).sum());

    for (fw, rows, levels) in [("nhf5", &b.behavior.nhf5, &b.levels.nhf5), ("npf", &b.behavior.npf, &b.levels.npf)] {
        for (row, level) in rows.iter().zip(levels.iter()) {
            r.exact(format!("behavior.{fw}.{}.stress_sum", row.category), level.n_needs as u64, row.stress_total() as u64);
        }
    }
    for row in b.behavior.income.iter().chain(&b.behavior.nhf5).chain(&b.behavior.npf) {
        r.exact(
            format!("behavior.{}.risk_plus_unassigned", row.category),
            row.n_needs as u64,
            (row.risk_total() + row.risk_unassigned) as u64,
        );
    }
    if let Some(m) = &b.topic_nhf5 {
        topic_checks(&mut r, m, &b.levels.nhf5, n);
    }
    if let Some(m) = &b.topic_npf {
        topic_checks(&mut r, m, &b.levels.npf, n);
    }

    for m in [Some(&b.cooc_nhf5), Some(&b.cooc_npf), b.cooc_topic.as_ref()].into_iter().flatten() {
        r.exact(format!("cooc_{}.symmetric", m.key), 1, m.is_symmetric() as u64);
    }
    let pairs = b.cooc_nhf5.pair_total() as u64;
    r.exact("cooc_npf.pair_total", pairs, b.cooc_npf.pair_total() as u64);
    if let Some(t) = &b.cooc_topic {
        r.exact("cooc_topic.pair_total", pairs, t.pair_total() as u64);
    }
    for (i, row) in b.cooc_cross.counts.iter().enumerate() {
        r.exact(
            format!("cooc_cross.{}.row_sum", b.cooc_cross.rows[i]),
            b.cooc_cross.row_participation[i] as u64,
            row.iter().sum::<usize>() as u64,
        );
    }
    r.exact("cooc_cross.total", 2 * pairs, b.cooc_cross.counts.iter().flatten().sum::<usize>() as u64);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::hypothesis_checks;

    #[test]
    fn published_tables_reconcile() {
        let p = paper_fixture();
        let r = reconcile_paper(&p);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.get("age_groups.needs_sum").unwrap().actual, 18601);
        assert_eq!(r.get("behavior.nhf5.basic.stress_sum").unwrap().actual, 4709);
        assert_eq!(r.get("behavior.nhf5.safety.stress_sum").unwrap().actual, 11913);
        assert_eq!(r.get("behavior.npf.consumption_immediate.stress_sum").unwrap().actual, 2315);
        // Basic row of the stress table: 937 + 908 + 2143 + 721.
        assert_eq!(p.behavior.nhf5[0].stress.iter().sum::<u64>(), 937 + 908 + 2143 + 721);
    }

    #[test]
    fn text_discrepancy_is_surfaced() {
        let r = reconcile_paper(&paper_fixture());
        let c = r.get("text_vs_table.npf.savings_emergencies").unwrap();
        assert_eq!((c.expected, c.actual, c.passed), (9977, 9970, false));
        assert!(r.discrepancies().any(|c| c.name == "text_vs_table.npf.retirement_wealth_lifestyle"));
        assert!(r.get("text_vs_table.npf.consumption_immediate").unwrap().passed);
    }

    #[test]
    fn hypothesis_flags_on_published_levels() {
        let h = hypothesis_checks(&paper_fixture().levels);
        assert!(h.h2_monotone());
        assert_eq!(h.h1_dips(), ["esteem"]);
    }
}
