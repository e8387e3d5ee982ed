//! Result tables: a fixed column layout over core tasks, with the three
//! multi-choice subtasks broken out individually so counting, existence, and
//! classification stay separately comparable.

use serde::{Deserialize, Serialize};

use crate::metrics::{EvalResult, GroupScore};
use crate::qa::{CoreTask, Subtask};

/// One report column: either a whole core task or a single broken-out subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKey {
    Core(CoreTask),
    Sub(Subtask),
}

/// Column layout is fixed so reports from different runs line up.
const COLUMNS: [(&str, ColumnKey); 8] = [
    ("ST Grounding", ColumnKey::Core(CoreTask::StGrounding)),
    ("Ref. Int. Captioning", ColumnKey::Core(CoreTask::RefInteraction)),
    ("Velocity Est.", ColumnKey::Core(CoreTask::Velocity)),
    ("ST Rel. Comp.", ColumnKey::Core(CoreTask::StRelation)),
    ("MC Counting", ColumnKey::Sub(Subtask::McCounting)),
    ("MC Existence", ColumnKey::Sub(Subtask::McExistence)),
    ("MC Class", ColumnKey::Sub(Subtask::McClass)),
    ("CoT", ColumnKey::Core(CoreTask::Cot)),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub label: String,
    /// Absent when the dataset holds no samples for the column.
    pub mean: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub columns: Vec<ReportColumn>,
    pub overall: f64,
    pub total_samples: usize,
}

pub fn build_report(result: &EvalResult) -> TaskReport {
    let columns = COLUMNS
        .iter()
        .map(|(label, key)| {
            let group: Option<GroupScore> = match key {
                ColumnKey::Core(ct) => result.per_core_task.get(ct).copied(),
                ColumnKey::Sub(st) => result.per_subtask.get(st).copied(),
            };
            ReportColumn {
                label: (*label).to_string(),
                mean: group.map(|g| g.mean),
                count: group.map_or(0, |g| g.count),
            }
        })
        .collect();
    TaskReport {
        columns,
        overall: result.overall,
        total_samples: result.samples.len(),
    }
}

/// Two-line tab-separated table, scores at two decimals, "-" for empty
/// columns, with a trailing Overall column.
pub fn to_tsv(report: &TaskReport) -> String {
    let mut header: Vec<&str> = report.columns.iter().map(|c| c.label.as_str()).collect();
    header.push("Overall");
    let mut values: Vec<String> = report
        .columns
        .iter()
        .map(|c| c.mean.map_or_else(|| "-".to_string(), |m| format!("{m:.2}")))
        .collect();
    values.push(format!("{:.2}", report.overall));
    format!("{}\n{}\n", header.join("\t"), values.join("\t"))
}

pub fn to_json(report: &TaskReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::SampleScore;
    use std::collections::BTreeMap;

    fn result_with(groups: &[(CoreTask, Subtask, f64, usize)]) -> EvalResult {
        let mut samples = Vec::new();
        let mut per_subtask = BTreeMap::new();
        let mut per_core_task = BTreeMap::new();
        for (ct, st, mean, count) in groups {
            for i in 0..*count {
                samples.push(SampleScore {
                    sample_id: format!("c-{}-{i:03}", st.id()),
                    core_task: *ct,
                    subtask: *st,
                    score: *mean,
                    missing: false,
                    parse_failed: false,
                });
            }
            per_subtask.insert(*st, GroupScore { mean: *mean, count: *count });
            per_core_task
                .entry(*ct)
                .and_modify(|g: &mut GroupScore| {
                    let total = g.mean * g.count as f64 + mean * *count as f64;
                    g.count += count;
                    g.mean = total / g.count as f64;
                })
                .or_insert(GroupScore { mean: *mean, count: *count });
        }
        let overall = samples.iter().map(|s| s.score).sum::<f64>() / samples.len() as f64;
        EvalResult { samples, overall, per_subtask, per_core_task }
    }

    #[test]
    fn tsv_layout_is_stable() {
        let r = result_with(&[
            (CoreTask::StGrounding, Subtask::Locate, 60.0, 1),
            (CoreTask::StGrounding, Subtask::TemporalWindow, 85.0, 1),
            (CoreTask::Multichoice, Subtask::McCounting, 0.0, 2),
        ]);
        let report = build_report(&r);
        let tsv = to_tsv(&report);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(
            lines[0],
            "ST Grounding\tRef. Int. Captioning\tVelocity Est.\tST Rel. Comp.\tMC Counting\tMC Existence\tMC Class\tCoT\tOverall"
        );
        assert_eq!(lines[1], "72.50\t-\t-\t-\t0.00\t-\t-\t-\t36.25");
    }

    #[test]
    fn json_round_trips() {
        let r = result_with(&[(CoreTask::Velocity, Subtask::Velocity, 50.0, 4)]);
        let report = build_report(&r);
        let back: TaskReport = serde_json::from_str(&to_json(&report)).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.total_samples, 4);
        assert_eq!(back.columns[2].mean, Some(50.0));
        assert_eq!(back.columns[0].mean, None);
    }
}
