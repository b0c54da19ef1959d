use std::fmt::Write;

use crate::analytics::{
    AnalyticsBundle, CheckKind, HypothesisChecks, IncomeOrdering, LevelRow, PairCheck, ReconciliationReport,
    CORRELATION_COLUMNS,
};

fn money(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

fn hypothesis_line(name: &str, framework: &str, pairs: &[PairCheck]) -> String {
    let dips: Vec<String> = pairs
        .iter()
        .filter(|p| p.ordering == IncomeOrdering::Decreasing)
        .map(|p| format!("{} ({} < {} at {})", p.higher, money(p.higher_income), money(p.lower_income), p.lower))
        .collect();
    let flat: Vec<&str> = pairs
        .iter()
        .filter(|p| matches!(p.ordering, IncomeOrdering::Equal | IncomeOrdering::Undetermined))
        .map(|p| p.higher.as_str())
        .collect();
    let mut line = if dips.is_empty() && flat.is_empty() {
        format!("{name} ({framework}): average income rises at every level")
    } else if dips.is_empty() {
        format!("{name} ({framework}): no dip")
    } else {
        format!("{name} ({framework}): {} dip(s): {}", dips.len(), dips.join("; "))
    };
    if !flat.is_empty() {
        let _ = write!(line, "; not increasing but not lower at: {}", flat.join(", "));
    }
    line
}

/// One line on the NHF income ordering, naming every level where income dips.
pub fn h1_line(h: &HypothesisChecks) -> String {
    hypothesis_line("H1", "NHF", &h.h1)
}

pub fn h2_line(h: &HypothesisChecks) -> String {
    hypothesis_line("H2", "NPF", &h.h2)
}

/// Levels sorted by mean income, e.g. `A (1.00) < B (2.00)`. Levels without
/// needs are left out.
pub fn ordering_statement(rows: &[LevelRow]) -> String {
    let mut rs: Vec<(&str, f64)> = rows.iter().filter_map(|r| r.avg_monthly_income.map(|v| (r.title.as_str(), v))).collect();
    rs.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out = String::new();
    for (i, (title, v)) in rs.iter().enumerate() {
        if i > 0 {
            out.push_str(if rs[i - 1].1 < *v { " < " } else { " = " });
        }
        let _ = write!(out, "{title} ({v:.2})");
    }
    out
}

fn level_table(out: &mut String, rows: &[LevelRow]) {
    out.push_str("| level | avg monthly income | needs |\n|---|---:|---:|\n");
    for r in rows {
        let _ = writeln!(out, "| {} | {} | {} |", r.title, money(r.avg_monthly_income), r.n_needs);
    }
}

/// Markdown summary of a run's analytics.
pub fn render_summary(b: &AnalyticsBundle, reference: &ReconciliationReport) -> String {
    let mut s = String::from("# Financial needs report\n\n");
    let users: usize = b.age.rows.iter().map(|r| r.n_users).sum();
    let posts: usize = b.age.rows.iter().map(|r| r.n_posts).sum();
    let _ = writeln!(s, "{} needs from {posts} posts by {users} users.\n", b.n_needs);

    s.push_str("## Age groups\n\n| age group | users | avg monthly income | posts | needs |\n|---|---:|---:|---:|---:|\n");
    for r in &b.age.rows {
        let _ = writeln!(s, "| {} | {} | {} | {} | {} |", r.age_group.label(), r.n_users, money(r.avg_monthly_income), r.n_posts, r.n_needs);
    }

    s.push_str("\n## Income by need level\n\n### NHF\n\n");
    level_table(&mut s, &b.levels.nhf5);
    s.push_str("\n### NPF\n\n");
    level_table(&mut s, &b.levels.npf);
    let _ = writeln!(s, "\n- {}", h1_line(&b.hypotheses));
    let _ = writeln!(s, "- {}", h2_line(&b.hypotheses));
    let _ = writeln!(s, "- NPF ordering by mean income: {}", ordering_statement(&b.levels.npf));
    let _ = writeln!(s, "- NHF ordering by mean income: {}", ordering_statement(&b.levels.nhf5));

    s.push_str("\n## Topics\n\n");
    match &b.topic_nhf5 {
        Some(m) => {
            let k = m.topics.len().saturating_sub(1);
            let _ = writeln!(s, "{k} topics; {} of {} needs modeled.\n", m.modeled_total(), m.grand_total());
            for t in &m.topics[..k] {
                let _ = writeln!(s, "- {t}");
            }
        }
        None => s.push_str("Topic model skipped; topic tables omitted.\n"),
    }

    s.push_str("\n## Co-occurrence\n\nUnit: unordered pairs of distinct needs within one post.\n\n");
    if let Some(m) = &b.cooc_topic {
        let _ = writeln!(s, "- topic: {} pairs", m.pair_total());
    }
    let _ = writeln!(s, "- nhf5: {} pairs", b.cooc_nhf5.pair_total());
    let _ = writeln!(s, "- npf: {} pairs", b.cooc_npf.pair_total());

    s.push_str("\n## Correlations (phi)\n\n| framework | level |");
    for c in CORRELATION_COLUMNS {
        let _ = write!(s, " {c} |");
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---:|".repeat(CORRELATION_COLUMNS.len()));
    s.push('\n');
    for r in &b.correlations.rows {
        let _ = write!(s, "| {} | {} |", r.framework, r.level);
        for v in &r.values {
            let _ = write!(s, " {} |", v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into()));
        }
        s.push('\n');
    }

    s.push_str("\n## Checks\n\n");
    let exact = b.reconciliation.checks.iter().filter(|c| c.kind == CheckKind::Exact).count();
    let failed: Vec<_> = b.reconciliation.failures().collect();
    let _ = writeln!(s, "- Output consistency: {} of {exact} checks pass", exact - failed.len());
    for c in failed {
        let _ = writeln!(s, "  - FAILED {}: expected {}, got {}", c.name, c.expected, c.actual);
    }
    let ref_exact = reference.checks.iter().filter(|c| c.kind == CheckKind::Exact).count();
    let _ = writeln!(
        s,
        "- Reference tables: {} of {ref_exact} cross-table sums agree",
        ref_exact - reference.failures().count()
    );
    for c in reference.discrepancies() {
        let _ = writeln!(s, "  - note {}: {} vs {}{}", c.name, c.expected, c.actual, if c.note.is_empty() { String::new() } else { format!(" ({})", c.note) });
    }
    s
}
