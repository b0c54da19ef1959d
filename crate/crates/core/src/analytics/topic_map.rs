use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::extraction::{NeedRecord, NhfLevel5, NpfLevel};
use crate::topics::{dominant_topic_assignment, ModelFile};

/// Column for needs that never reached the topic model.
pub const UNMODELED: &str = "unmodeled";

/// Dominant topic per modeled need, plus display names for the topics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub labels: Vec<String>,
    pub topics: BTreeMap<String, usize>,
}

impl TopicAssignment {
    pub fn new(labels: Vec<String>) -> Self {
        TopicAssignment { labels, topics: BTreeMap::new() }
    }

    pub fn from_model_file(file: &ModelFile) -> Self {
        let dists = crate::topics::infer_distributions(&file.model());
        TopicAssignment {
            labels: (0..file.header.k).map(|t| file.topic_label(t)).collect(),
            topics: dominant_topic_assignment(&dists),
        }
    }

    pub fn assign(&mut self, need_id: &str, topic: usize) {
        assert!(topic < self.labels.len(), "topic {topic} out of range");
        self.topics.insert(need_id.to_string(), topic);
    }

    pub fn topic_of(&self, need_id: &str) -> Option<usize> {
        self.topics.get(need_id).copied()
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    /// Topic index for a need, with `k` standing for the unmodeled column.
    pub(crate) fn column(&self, need_id: &str) -> usize {
        self.topic_of(need_id).unwrap_or(self.k())
    }

    pub(crate) fn columns(&self) -> Vec<String> {
        self.labels.iter().cloned().chain(std::iter::once(UNMODELED.to_string())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Framework {
    Nhf5,
    Npf,
}

/// Level × topic counts; the last column holds unmodeled needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLevelMatrix {
    pub framework: String,
    pub levels: Vec<String>,
    pub topics: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl TopicLevelMatrix {
    pub fn row_total(&self, level: &str) -> Option<usize> {
        let i = self.levels.iter().position(|l| l == level)?;
        Some(self.counts[i].iter().sum())
    }

    /// Row total excluding the unmodeled column.
    pub fn modeled_row_total(&self, level: &str) -> Option<usize> {
        let i = self.levels.iter().position(|l| l == level)?;
        let row = &self.counts[i];
        Some(row[..row.len() - 1].iter().sum())
    }

    pub fn modeled_total(&self) -> usize {
        self.counts.iter().map(|r| r[..r.len() - 1].iter().sum::<usize>()).sum()
    }

    pub fn unmodeled_total(&self) -> usize {
        self.counts.iter().map(|r| r[r.len() - 1]).sum()
    }

    pub fn grand_total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

pub fn map_topics_to_levels(needs: &[NeedRecord], topics: &TopicAssignment, framework: Framework) -> TopicLevelMatrix {
    let (name, levels): (&str, Vec<String>) = match framework {
        Framework::Nhf5 => ("nhf5", NhfLevel5::ALL.iter().map(|l| l.as_str().to_string()).collect()),
        Framework::Npf => ("npf", NpfLevel::ALL.iter().map(|l| l.as_str().to_string()).collect()),
    };
    let mut counts = vec![vec![0usize; topics.k() + 1]; levels.len()];
    for n in needs {
        let row = match framework {
            Framework::Nhf5 => n.nhf5 as usize,
            Framework::Npf => n.npf as usize,
        };
        counts[row][topics.column(&n.need_id)] += 1;
    }
    TopicLevelMatrix { framework: name.into(), levels, topics: topics.columns(), counts }
}
