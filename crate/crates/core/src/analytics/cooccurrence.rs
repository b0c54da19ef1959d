use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TopicAssignment;
use crate::extraction::{NeedRecord, NhfLevel5, NpfLevel};

/// Unit of co-occurrence: an unordered pair of distinct needs from the same post.
pub const PAIR_UNIT: &str = "unordered pair of distinct needs extracted from the same post";

#[derive(Debug, Clone, Copy)]
pub enum CooccurrenceKey<'a> {
    /// Dominant topic; needs without one go to the `unmodeled` axis entry.
    Topic(&'a TopicAssignment),
    Nhf5,
    Npf,
}

impl CooccurrenceKey<'_> {
    fn labels(&self) -> Vec<String> {
        match self {
            CooccurrenceKey::Topic(t) => t.columns(),
            CooccurrenceKey::Nhf5 => NhfLevel5::ALL.iter().map(|l| l.as_str().to_string()).collect(),
            CooccurrenceKey::Npf => NpfLevel::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        }
    }

    fn of(&self, n: &NeedRecord) -> usize {
        match self {
            CooccurrenceKey::Topic(t) => t.column(&n.need_id),
            CooccurrenceKey::Nhf5 => n.nhf5 as usize,
            CooccurrenceKey::Npf => n.npf as usize,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            CooccurrenceKey::Topic(_) => "topic",
            CooccurrenceKey::Nhf5 => "nhf5",
            CooccurrenceKey::Npf => "npf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub key: String,
    pub labels: Vec<String>,
    /// Symmetric. Off-diagonal (a, b) counts pairs keyed {a, b}; diagonal (a, a)
    /// counts pairs where both needs have key a.
    pub counts: Vec<Vec<usize>>,
    pub unit: String,
}

impl CooccurrenceMatrix {
    pub fn is_symmetric(&self) -> bool {
        let n = self.counts.len();
        (0..n).all(|i| (0..n).all(|j| self.counts[i][j] == self.counts[j][i]))
    }

    /// Number of pairs counted (upper triangle including the diagonal).
    pub fn pair_total(&self) -> usize {
        let n = self.counts.len();
        (0..n).map(|i| self.counts[i][i..].iter().sum::<usize>()).sum()
    }
}

/// NHF-5 × NPF over pairs: each pair adds one count per endpoint,
/// at (nhf5 of that need, npf of the other).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    pub unit: String,
    /// Per NHF-5 level: number of pair endpoints at that level.
    pub row_participation: Vec<usize>,
}

fn by_post(needs: &[NeedRecord]) -> BTreeMap<&str, Vec<&NeedRecord>> {
    let mut posts: BTreeMap<&str, Vec<&NeedRecord>> = BTreeMap::new();
    for n in needs {
        posts.entry(n.post_id.as_str()).or_default().push(n);
    }
    posts
}

fn for_each_pair<'a>(needs: &'a [NeedRecord], mut f: impl FnMut(&'a NeedRecord, &'a NeedRecord)) {
    for group in by_post(needs).values() {
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                f(group[i], group[j]);
            }
        }
    }
}

pub fn cooccurrence(needs: &[NeedRecord], key: CooccurrenceKey<'_>) -> CooccurrenceMatrix {
    let labels = key.labels();
    let mut counts = vec![vec![0usize; labels.len()]; labels.len()];
    for_each_pair(needs, |a, b| {
        let (x, y) = (key.of(a), key.of(b));
        counts[x][y] += 1;
        if x != y {
            counts[y][x] += 1;
        }
    });
    CooccurrenceMatrix { key: key.name().into(), labels, counts, unit: PAIR_UNIT.into() }
}

pub fn cross_framework(needs: &[NeedRecord]) -> CrossMatrix {
    let mut counts = vec![vec![0usize; NpfLevel::ALL.len()]; NhfLevel5::ALL.len()];
    let mut row_participation = vec![0usize; NhfLevel5::ALL.len()];
    for_each_pair(needs, |a, b| {
        counts[a.nhf5 as usize][b.npf as usize] += 1;
        counts[b.nhf5 as usize][a.npf as usize] += 1;
        row_participation[a.nhf5 as usize] += 1;
        row_participation[b.nhf5 as usize] += 1;
    });
    CrossMatrix {
        rows: NhfLevel5::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        columns: NpfLevel::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        counts,
        unit: PAIR_UNIT.into(),
        row_participation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub weight: usize,
}

/// Non-zero cells as edges; the upper triangle only for square symmetric input.
pub fn edges(labels_rows: &[String], labels_cols: &[String], counts: &[Vec<usize>], symmetric: bool) -> Vec<Edge> {
    let mut out = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        let start = if symmetric { i } else { 0 };
        for (j, &w) in row.iter().enumerate().skip(start) {
            if w > 0 {
                out.push(Edge { source: labels_rows[i].clone(), target: labels_cols[j].clone(), weight: w });
            }
        }
    }
    out
}

impl CooccurrenceMatrix {
    pub fn edges(&self) -> Vec<Edge> {
        edges(&self.labels, &self.labels, &self.counts, true)
    }
}

impl CrossMatrix {
    pub fn edges(&self) -> Vec<Edge> {
        edges(&self.rows, &self.columns, &self.counts, false)
    }
}
