//! Per-case reports, per-team aggregation, and leaderboard ranking.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Which jaw a case belongs to. Registration metrics are summarized
/// separately per jaw and pooled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Jaw {
    Maxilla,
    Mandible,
}

impl Jaw {
    pub fn as_str(self) -> &'static str {
        match self {
            Jaw::Maxilla => "maxilla",
            Jaw::Mandible => "mandible",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "maxilla" => Ok(Jaw::Maxilla),
            "mandible" => Ok(Jaw::Mandible),
            other => Err(Error::Parse(format!(
                "jaw must be maxilla or mandible, got {other:?}"
            ))),
        }
    }
}

/// Which task a report belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Seg,
    Reg,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Seg => "seg",
            Task::Reg => "reg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "seg" => Ok(Task::Seg),
            "reg" => Ok(Task::Reg),
            other => Err(Error::Parse(format!(
                "task must be seg or reg, got {other:?}"
            ))),
        }
    }
}

/// Metric values for one evaluated case.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseReport {
    pub case_id: String,
    pub task: Task,
    /// Metric name → value. BTreeMap keeps serialization deterministic.
    pub metrics: BTreeMap<String, f64>,
    pub runtime_s: f64,
    /// Memory–time AUC in GB·s, when a trace was recorded.
    pub memory_auc: Option<f64>,
}

impl CaseReport {
    pub fn new(case_id: impl Into<String>, task: Task) -> Self {
        CaseReport {
            case_id: case_id.into(),
            task,
            metrics: BTreeMap::new(),
            runtime_s: 0.0,
            memory_auc: None,
        }
    }

    pub fn with_metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }
}

/// Arithmetic mean and population standard deviation (divide by M).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Population statistics of `values`. Errors on empty input.
pub fn mean_std(values: &[f64]) -> Result<MeanStd> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no values to summarize".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(MeanStd {
        mean,
        std: var.sqrt(),
    })
}

/// One team's aggregated row.
#[derive(Clone, Debug)]
pub struct LeaderboardEntry {
    pub team: String,
    /// Per-metric mean ± population std, including `runtime_s` and, when
    /// present, `auc_gb_s`.
    pub stats: BTreeMap<String, MeanStd>,
    /// 1-based rank; ranks always form a permutation of 1..=T.
    pub rank: usize,
}

/// Ranking direction for a metric: errors, runtimes, and memory AUC rank
/// ascending, scores rank descending.
pub fn lower_is_better(metric: &str) -> bool {
    metric.ends_with("_err")
        || metric == "runtime_s"
        || metric == "auc_gb_s"
        || metric.starts_with("auc_")
}

/// Aggregate per-team case reports into mean ± std and rank by `rank_by`.
///
/// Ties on the ranking metric break alphabetically by team name, so ranks
/// are a deterministic permutation of 1..=T.
pub fn leaderboard(
    teams: &[(String, Vec<CaseReport>)],
    rank_by: &str,
) -> Result<Vec<LeaderboardEntry>> {
    if teams.is_empty() {
        return Err(Error::EmptyInput("no team reports".into()));
    }
    let mut entries = Vec::with_capacity(teams.len());
    for (team, reports) in teams {
        if reports.is_empty() {
            return Err(Error::EmptyInput(format!("team {team} has no cases")));
        }
        let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in reports {
            for (name, value) in &r.metrics {
                columns.entry(name.clone()).or_default().push(*value);
            }
            columns
                .entry("runtime_s".into())
                .or_default()
                .push(r.runtime_s);
            if let Some(auc) = r.memory_auc {
                columns.entry("auc_gb_s".into()).or_default().push(auc);
            }
        }
        let mut stats = BTreeMap::new();
        for (name, values) in columns {
            stats.insert(name, mean_std(&values)?);
        }
        if !stats.contains_key(rank_by) {
            return Err(Error::UnknownMetric(format!(
                "team {team} has no metric {rank_by:?}"
            )));
        }
        entries.push(LeaderboardEntry {
            team: team.clone(),
            stats,
            rank: 0,
        });
    }
    let ascending = lower_is_better(rank_by);
    entries.sort_by(|a, b| {
        let (ma, mb) = (a.stats[rank_by].mean, b.stats[rank_by].mean);
        let ord = if ascending {
            ma.total_cmp(&mb)
        } else {
            mb.total_cmp(&ma)
        };
        ord.then_with(|| a.team.cmp(&b.team))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(entries)
}
