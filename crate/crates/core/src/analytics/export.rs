use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{AnalyticsBundle, AnalyticsError, CooccurrenceMatrix, Edge, TopicLevelMatrix, CORRELATION_COLUMNS};

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

fn io_err(path: &Path, source: std::io::Error) -> AnalyticsError {
    AnalyticsError::Io { path: path.display().to_string(), source }
}

impl Writer<'_> {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), AnalyticsError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e.into()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), AnalyticsError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e.into()))?;
        w.write_record(header).map_err(|e| io_err(&path, e.into()))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_err(&path, e.into()))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn edges(&mut self, name: &str, edges: &[Edge]) -> Result<(), AnalyticsError> {
        let rows: Vec<Vec<String>> =
            edges.iter().map(|e| vec![e.source.clone(), e.target.clone(), e.weight.to_string()]).collect();
        self.csv(name, &strings(&["source", "target", "weight"]), &rows)
    }

    fn matrix(&mut self, name: &str, corner: &str, rows: &[String], cols: &[String], counts: &[Vec<usize>]) -> Result<(), AnalyticsError> {
        let header: Vec<String> = std::iter::once(corner.to_string()).chain(cols.iter().cloned()).collect();
        let body: Vec<Vec<String>> = rows
            .iter()
            .zip(counts)
            .map(|(l, r)| std::iter::once(l.clone()).chain(r.iter().map(usize::to_string)).collect())
            .collect();
        self.csv(name, &header, &body)
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn money(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_default()
}

fn topic_matrix(w: &mut Writer<'_>, m: &TopicLevelMatrix) -> Result<(), AnalyticsError> {
    w.matrix(&format!("topic_map_{}.csv", m.framework), "level", &m.levels, &m.topics, &m.counts)
}

fn cooc(w: &mut Writer<'_>, m: &CooccurrenceMatrix) -> Result<(), AnalyticsError> {
    w.matrix(&format!("cooccurrence_{}.csv", m.key), m.key.as_str(), &m.labels, &m.labels, &m.counts)?;
    w.edges(&format!("cooccurrence_{}_edges.csv", m.key), &m.edges())
}

/// Writes every table as CSV plus a JSON record file, and returns the paths
/// in write order.
pub fn write_bundle(dir: &Path, b: &AnalyticsBundle) -> Result<Vec<PathBuf>, AnalyticsError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut w = Writer { dir, written: Vec::new() };

    let age: Vec<Vec<String>> = b
        .age
        .rows
        .iter()
        .map(|r| {
            vec![
                r.age_group.label().into(),
                r.n_users.to_string(),
                money(r.avg_monthly_income),
                r.n_posts.to_string(),
                r.n_needs.to_string(),
            ]
        })
        .collect();
    w.csv("age_groups.csv", &strings(&["age_group", "n_users", "avg_monthly_income", "n_posts", "n_needs"]), &age)?;
    w.json("age_groups.json", &b.age)?;

    for (name, rows) in [("nhf5", &b.levels.nhf5), ("npf", &b.levels.npf)] {
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r.level.clone(), r.title.clone(), money(r.avg_monthly_income), r.n_needs.to_string()])
            .collect();
        w.csv(&format!("level_income_{name}.csv"), &strings(&["level", "title", "avg_monthly_income", "n_needs"]), &body)?;
    }
    w.json("level_income.json", &b.levels)?;
    w.json("hypotheses.json", &b.hypotheses)?;

    if let Some(m) = &b.topic_nhf5 {
        topic_matrix(&mut w, m)?;
    }
    if let Some(m) = &b.topic_npf {
        topic_matrix(&mut w, m)?;
    }
    if let Some(m) = &b.cooc_topic {
        cooc(&mut w, m)?;
    }
    cooc(&mut w, &b.cooc_nhf5)?;
    cooc(&mut w, &b.cooc_npf)?;
    let c = &b.cooc_cross;
    w.matrix("cooccurrence_cross.csv", "nhf5", &c.rows, &c.columns, &c.counts)?;
    w.edges("cooccurrence_cross_edges.csv", &c.edges())?;
    w.json("cooccurrence.json", &(&b.cooc_topic, &b.cooc_nhf5, &b.cooc_npf, &b.cooc_cross))?;

    let x = &b.crosstab;
    w.matrix("framework_crosstab.csv", "nhf5", &x.rows, &x.columns, &x.counts)?;

    let header: Vec<String> = ["framework", "level"].iter().chain(CORRELATION_COLUMNS.iter()).map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = b
        .correlations
        .rows
        .iter()
        .map(|r| {
            [r.framework.clone(), r.level.clone()]
                .into_iter()
                .chain(r.values.iter().map(|v| v.map(|v| format!("{v:.4}")).unwrap_or_default()))
                .collect()
        })
        .collect();
    w.csv("correlations.csv", &header, &body)?;
    w.json("correlations.json", &b.correlations)?;

    let header = strings(&[
        "section", "category", "low", "slight", "moderate", "high", "cautious", "calculative", "chance_taking",
        "risk_unassigned", "n_needs",
    ]);
    let mut body = Vec::new();
    for (section, rows) in [("income", &b.behavior.income), ("nhf5", &b.behavior.nhf5), ("npf", &b.behavior.npf)] {
        for r in rows {
            let mut line = vec![section.to_string(), r.category.clone()];
            line.extend(r.stress.iter().chain(&r.risk).map(usize::to_string));
            line.push(r.risk_unassigned.to_string());
            line.push(r.n_needs.to_string());
            body.push(line);
        }
    }
    w.csv("stress_risk_distribution.csv", &header, &body)?;
    w.json("stress_risk_distribution.json", &b.behavior)?;
    w.json("emotions.json", &b.emotions)?;
    w.json("reconciliation.json", &b.reconciliation)?;
    Ok(w.written)
}
