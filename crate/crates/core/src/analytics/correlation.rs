use serde::{Deserialize, Serialize};

use crate::extraction::{NeedRecord, NhfLevel5, NpfLevel, RiskLevel, StressLevel};

/// Stress levels then ranked risk levels.
pub const CORRELATION_COLUMNS: [&str; 7] = ["low", "slight", "moderate", "high", "cautious", "calculative", "chance_taking"];

/// 2×2 table of two binary indicators X and Y.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Contingency {
    /// X and Y
    pub a: u64,
    /// X, not Y
    pub b: u64,
    /// Y, not X
    pub c: u64,
    /// neither
    pub d: u64,
}

impl Contingency {
    pub fn add(&mut self, x: bool, y: bool) {
        match (x, y) {
            (true, true) => self.a += 1,
            (true, false) => self.b += 1,
            (false, true) => self.c += 1,
            (false, false) => self.d += 1,
        }
    }

    pub fn phi(&self) -> Option<f64> {
        phi_from_counts(self.a, self.b, self.c, self.d)
    }
}

/// φ = (ad − bc) / sqrt((a+b)(c+d)(a+c)(b+d)); `None` when either indicator is constant.
pub fn phi_from_counts(a: u64, b: u64, c: u64, d: u64) -> Option<f64> {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let denom = ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some(((a * d - b * c) / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub framework: String,
    pub level: String,
    /// One value per [`CORRELATION_COLUMNS`] entry.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub columns: Vec<String>,
    /// NHF-5 rows then NPF rows.
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationTable {
    pub fn get(&self, level: &str, column: &str) -> Option<f64> {
        let j = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| r.level == level)?.values[j]
    }
}

fn row(framework: &str, level: &str, needs: &[NeedRecord], is_level: impl Fn(&NeedRecord) -> bool) -> CorrelationRow {
    let mut values = Vec::with_capacity(CORRELATION_COLUMNS.len());
    for &s in StressLevel::ALL {
        let mut t = Contingency::default();
        for n in needs {
            t.add(is_level(n), n.stress == s);
        }
        values.push(t.phi());
    }
    for r in RiskLevel::RANKED {
        let mut t = Contingency::default();
        for n in needs.iter().filter(|n| n.risk != RiskLevel::Unassigned) {
            t.add(is_level(n), n.risk == r);
        }
        values.push(t.phi());
    }
    CorrelationRow { framework: framework.into(), level: level.into(), values }
}

/// φ between each need-level indicator and each stress/risk indicator.
/// Needs with unassigned risk are left out of the risk columns only.
pub fn behavior_correlations(needs: &[NeedRecord]) -> CorrelationTable {
    let mut rows = Vec::new();
    for &l in NhfLevel5::ALL {
        rows.push(row("nhf5", l.as_str(), needs, |n| n.nhf5 == l));
    }
    for &l in NpfLevel::ALL {
        rows.push(row("npf", l.as_str(), needs, |n| n.npf == l));
    }
    CorrelationTable { columns: CORRELATION_COLUMNS.iter().map(|c| c.to_string()).collect(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::testing::need;

    #[test]
    fn hand_contingency() {
        let phi = phi_from_counts(30, 10, 10, 50).unwrap();
        assert!((phi - 1400.0 / 2400.0).abs() < 1e-12);
        assert!((phi - 0.5833).abs() < 1e-4);
        assert_eq!(phi_from_counts(5, 0, 0, 0), None);
        assert_eq!(phi_from_counts(3, 0, 0, 4), Some(1.0));
        assert_eq!(phi_from_counts(0, 3, 4, 0), Some(-1.0));
    }

    #[test]
    fn perfect_association_and_absent_levels() {
        let needs: Vec<_> = (0..20)
            .map(|i| {
                let mut n = need(&format!("n{i}"), "p", "u", 2020);
                if i < 8 {
                    n.nhf5 = NhfLevel5::Basic;
                    n.stress = StressLevel::High;
                } else {
                    n.nhf5 = NhfLevel5::Safety;
                    n.stress = StressLevel::Low;
                }
                n.risk = if i % 2 == 0 { RiskLevel::Cautious } else { RiskLevel::Unassigned };
                n
            })
            .collect();
        let t = behavior_correlations(&needs);
        assert_eq!(t.get("basic", "high"), Some(1.0));
        assert_eq!(t.get("basic", "low"), Some(-1.0));
        // Level absent, attribute absent, attribute universal.
        assert_eq!(t.get("esteem", "high"), None);
        assert_eq!(t.get("basic", "moderate"), None);
        assert_eq!(t.get("basic", "cautious"), None);
        for r in &t.rows {
            assert!(r.values.iter().flatten().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)));
        }
    }
}
