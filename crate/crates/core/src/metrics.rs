//! Deterministic scoring of parsed predictions against gold payloads, plus
//! dataset-level evaluation with micro-averaged aggregates.
//!
//! All scores live on [0, 100]. A field the parser could not find contributes
//! zero to its component; it never shrinks an error term.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{BBox, QuantBBox};
use crate::parse::{parse_prediction, ParsedAnswer, ParsedInteraction, ParsedWindowEntry};
use crate::qa::gold::{GoldPayload, WindowEntry};
use crate::qa::{CoreTask, QASample, Subtask};
use crate::vocab::Vocabulary;

/// Intersection-over-union on the [0,1000] integer grid.
pub fn iou_quant(a: &QuantBBox, b: &QuantBBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0);
    let inter = ix * iy;
    let area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    let area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    let union = area_a + area_b - inter;
    inter as f64 / union as f64
}

/// Intersection-over-union in unit coordinates.
pub fn iou_unit(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    let union = a.width() * a.height() + b.width() * b.height() - inter;
    inter / union
}

/// Center distance in unit coordinates, scaled so the frame diagonal is 1.
pub fn spatial_error(a: &QuantBBox, b: &QuantBBox) -> f64 {
    let (ax, ay) = a.center_unit();
    let (bx, by) = b.center_unit();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() / std::f64::consts::SQRT_2
}

/// Joint error of one spatio-temporal endpoint.
pub fn composite_st_error(dt: f64, ds: f64) -> f64 {
    (dt * dt + ds * ds).sqrt()
}

/// Component weights for the blended scores. Each pair sums to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricWeights {
    pub velocity_numeric: f64,
    pub velocity_categorical: f64,
    pub comparison_verdict: f64,
    pub comparison_pairs: f64,
    pub cot_conclusion: f64,
    pub cot_stages: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            velocity_numeric: 0.5,
            velocity_categorical: 0.5,
            comparison_verdict: 0.5,
            comparison_pairs: 0.5,
            cot_conclusion: 0.7,
            cot_stages: 0.3,
        }
    }
}

fn exact<T: PartialEq>(pred: &Option<T>, gold: &T) -> f64 {
    match pred {
        Some(p) if p == gold => 1.0,
        _ => 0.0,
    }
}

/// Mean endpoint error of one window entry; `None` when any field is absent.
fn window_entry_error(pred: &ParsedWindowEntry, gold: &WindowEntry) -> Option<f64> {
    let (start_t, end_t) = pred.window?;
    let sb = pred.start_bbox?;
    let eb = pred.end_bbox?;
    let start = composite_st_error((start_t - gold.start_t).abs(), spatial_error(&sb, &gold.start_bbox));
    let end = composite_st_error((end_t - gold.end_t).abs(), spatial_error(&eb, &gold.end_bbox));
    Some(0.5 * (start + end))
}

fn pair_correct(pred: &ParsedInteraction, verb: &str, target: &str) -> bool {
    pred.verb.as_deref() == Some(verb) && pred.target.as_deref() == Some(target)
}

/// Scores one sample on [0, 100].
pub fn score_sample(gold: &GoldPayload, parsed: &ParsedAnswer, weights: &MetricWeights) -> f64 {
    match (gold, parsed) {
        (GoldPayload::TemporalWindow { entries }, ParsedAnswer::TemporalWindow { entries: p }) => {
            let total: f64 = entries
                .iter()
                .zip(p)
                .map(|(g, p)| match window_entry_error(p, g) {
                    Some(e) => 100.0 * (1.0 - e).max(0.0),
                    None => 0.0,
                })
                .sum();
            total / entries.len() as f64
        }
        (GoldPayload::Locate { bbox, .. }, ParsedAnswer::Locate { bbox: p }) => match p {
            Some(p) => 100.0 * iou_quant(p, bbox),
            None => 0.0,
        },
        (GoldPayload::ClosestInstrument { name }, ParsedAnswer::ClosestInstrument { name: p }) => {
            100.0 * exact(p, name)
        }
        (
            GoldPayload::FrameSegment { horizontal, vertical, .. },
            ParsedAnswer::FrameSegment { horizontal: ph, vertical: pv },
        ) => 50.0 * (exact(ph, horizontal) + exact(pv, vertical)),
        (
            GoldPayload::TrajectoryExtreme { t, bbox, .. },
            ParsedAnswer::TrajectoryExtreme { t: pt, bbox: pb },
        ) => match (pt, pb) {
            (Some(pt), Some(pb)) => {
                let e = composite_st_error((pt - t).abs(), spatial_error(pb, bbox));
                100.0 * (1.0 - e).max(0.0)
            }
            _ => 0.0,
        },
        (
            GoldPayload::SequentialActions { next_verb, .. },
            ParsedAnswer::SequentialActions { next_verb: p },
        ) => 100.0 * exact(p, next_verb),
        (GoldPayload::ActionStatus { verb, .. }, ParsedAnswer::ActionStatus { verb: p }) => {
            100.0 * exact(p, verb)
        }
        (
            GoldPayload::TargetInteraction { target, .. },
            ParsedAnswer::TargetInteraction { target: p },
        ) => 100.0 * exact(p, target),
        (GoldPayload::InstrumentId { name }, ParsedAnswer::InstrumentId { name: p }) => {
            100.0 * exact(p, name)
        }
        (
            GoldPayload::RelativePosition { horizontal, vertical, .. },
            ParsedAnswer::RelativePosition { horizontal: ph, vertical: pv },
        ) => 50.0 * (exact(ph, horizontal) + exact(pv, vertical)),
        (GoldPayload::RelativeChange { change, .. }, ParsedAnswer::RelativeChange { change: p }) => {
            100.0 * exact(p, change)
        }
        (
            GoldPayload::InteractionComparison {
                verdict, verb1, target1, verb2, target2, ..
            },
            ParsedAnswer::InteractionComparison { verdict: pv, first, second },
        ) => {
            let pairs = (f64::from(pair_correct(first, verb1, target1))
                + f64::from(pair_correct(second, verb2, target2)))
                / 2.0;
            100.0 * (weights.comparison_verdict * exact(pv, verdict)
                + weights.comparison_pairs * pairs)
        }
        (
            GoldPayload::Velocity { min_speed, max_speed, mean_speed, descriptor, .. },
            ParsedAnswer::Velocity {
                min_speed: pmin,
                max_speed: pmax,
                mean_speed: pmean,
                descriptor: pd,
            },
        ) => {
            let accuracy = |pred: &Option<f64>, gold: f64| match pred {
                Some(p) => (1.0 - (p - gold).abs() / gold.max(0.001)).max(0.0),
                None => 0.0,
            };
            let numeric = (accuracy(pmin, *min_speed)
                + accuracy(pmax, *max_speed)
                + accuracy(pmean, *mean_speed))
                / 3.0;
            100.0
                * (weights.velocity_numeric * numeric
                    + weights.velocity_categorical * exact(pd, descriptor))
        }
        (GoldPayload::Multichoice { correct }, ParsedAnswer::Multichoice { letter }) => {
            100.0 * exact(letter, correct)
        }
        (
            GoldPayload::Cot { horizontal, vertical, descriptor, verb, target, .. },
            ParsedAnswer::Cot { horizontal: ph, vertical: pv, descriptor: pd, verbs, targets },
        ) => {
            let conclusion = verbs.contains(verb) && targets.contains(target);
            let stage_loc = *ph == Some(*horizontal) && *pv == Some(*vertical);
            let stage_kin = *pd == Some(*descriptor);
            let stages =
                (f64::from(stage_loc) + f64::from(stage_kin) + f64::from(conclusion)) / 3.0;
            100.0
                * (weights.cot_conclusion * f64::from(conclusion) + weights.cot_stages * stages)
        }
        _ => unreachable!("parsed answer always mirrors its gold schema"),
    }
}

/// Score result for one dataset sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub core_task: CoreTask,
    pub subtask: Subtask,
    pub score: f64,
    /// No prediction was supplied for this sample.
    pub missing: bool,
    /// A prediction was supplied but nothing parseable was found in it.
    pub parse_failed: bool,
}

/// Mean score and sample count for one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Per-sample scores, in dataset order.
    pub samples: Vec<SampleScore>,
    /// Micro-average over all samples.
    pub overall: f64,
    pub per_subtask: BTreeMap<Subtask, GroupScore>,
    pub per_core_task: BTreeMap<CoreTask, GroupScore>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction file names sample {0:?} more than once")]
    DuplicatePrediction(String),
    #[error("prediction names unknown sample {0:?}")]
    UnknownSampleId(String),
    #[error("dataset is empty")]
    EmptyDataset,
}

/// Scores predictions against a dataset. Every prediction must name a dataset
/// sample exactly once; dataset samples without a prediction score zero and
/// are flagged missing.
pub fn evaluate_predictions(
    samples: &[QASample],
    predictions: &[(String, String)],
    vocab: &Vocabulary,
    weights: &MetricWeights,
) -> Result<EvalResult, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let known: BTreeSet<&str> = samples.iter().map(|s| s.sample_id.as_str()).collect();
    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for (id, text) in predictions {
        if !known.contains(id.as_str()) {
            return Err(EvalError::UnknownSampleId(id.clone()));
        }
        if by_id.insert(id, text).is_some() {
            return Err(EvalError::DuplicatePrediction(id.clone()));
        }
    }

    let mut scored = Vec::with_capacity(samples.len());
    for s in samples {
        let (score, missing, parse_failed) = match by_id.get(s.sample_id.as_str()) {
            None => (0.0, true, false),
            Some(text) => {
                let parsed = parse_prediction(&s.gold, text, vocab);
                if parsed.is_empty() {
                    (0.0, false, true)
                } else {
                    (score_sample(&s.gold, &parsed, weights), false, false)
                }
            }
        };
        scored.push(SampleScore {
            sample_id: s.sample_id.clone(),
            core_task: s.core_task,
            subtask: s.subtask,
            score,
            missing,
            parse_failed,
        });
    }

    aggregate_scores(scored)
}

/// Folds per-sample scores into the micro-averaged result. Lets a stored
/// score file be re-aggregated without re-parsing predictions.
pub fn aggregate_scores(scored: Vec<SampleScore>) -> Result<EvalResult, EvalError> {
    if scored.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let overall = scored.iter().map(|s| s.score).sum::<f64>() / scored.len() as f64;
    let mut per_subtask: BTreeMap<Subtask, (f64, usize)> = BTreeMap::new();
    let mut per_core_task: BTreeMap<CoreTask, (f64, usize)> = BTreeMap::new();
    for s in &scored {
        let e = per_subtask.entry(s.subtask).or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
        let e = per_core_task.entry(s.core_task).or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
    }
    let fold = |(sum, count): (f64, usize)| GroupScore { mean: sum / count as f64, count };
    Ok(EvalResult {
        samples: scored,
        overall,
        per_subtask: per_subtask.into_iter().map(|(k, v)| (k, fold(v))).collect(),
        per_core_task: per_core_task.into_iter().map(|(k, v)| (k, fold(v))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::gold::{HorizontalRelation, HorizontalThird, VerticalRelation, VerticalThird};
    use crate::qa::Provenance;
    use crate::tracks::MotionDescriptor;
    use std::collections::BTreeMap as Map;

    fn qb(x1: i64, y1: i64, x2: i64, y2: i64) -> QuantBBox {
        QuantBBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn iou_on_the_integer_grid() {
        let a = qb(0, 0, 100, 100);
        assert_eq!(iou_quant(&a, &a), 1.0);
        assert_eq!(iou_quant(&a, &qb(100, 100, 200, 200)), 0.0);
        // Half-overlap: intersection 50x100 against union 150x100.
        let b = qb(50, 0, 150, 100);
        assert!((iou_quant(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spatial_error_is_diagonal_scaled() {
        let a = qb(0, 0, 100, 100);
        let b = qb(900, 900, 1000, 1000);
        // Centers (0.05, 0.05) and (0.95, 0.95): distance 0.9*sqrt(2).
        assert!((spatial_error(&a, &b) - 0.9).abs() < 1e-12);
        assert_eq!(spatial_error(&a, &a), 0.0);
    }

    #[test]
    fn velocity_blends_numeric_and_categorical() {
        let gold = GoldPayload::Velocity {
            name: "grasper".into(),
            min_speed: 0.1,
            max_speed: 0.3,
            mean_speed: 0.2,
            descriptor: MotionDescriptor::MovingActively,
        };
        let exact = ParsedAnswer::Velocity {
            min_speed: Some(0.1),
            max_speed: Some(0.3),
            mean_speed: Some(0.2),
            descriptor: Some(MotionDescriptor::MovingActively),
        };
        assert!((score_sample(&gold, &exact, &MetricWeights::default()) - 100.0).abs() < 1e-9);

        let wrong_descriptor = ParsedAnswer::Velocity {
            min_speed: Some(0.1),
            max_speed: Some(0.3),
            mean_speed: Some(0.2),
            descriptor: Some(MotionDescriptor::MovingSlowly),
        };
        assert!(
            (score_sample(&gold, &wrong_descriptor, &MetricWeights::default()) - 50.0).abs()
                < 1e-9
        );

        let nothing_numeric = ParsedAnswer::Velocity {
            min_speed: None,
            max_speed: None,
            mean_speed: None,
            descriptor: Some(MotionDescriptor::MovingActively),
        };
        assert!(
            (score_sample(&gold, &nothing_numeric, &MetricWeights::default()) - 50.0).abs() < 1e-9
        );
    }

    #[test]
    fn relative_position_scores_each_axis() {
        let gold = GoldPayload::RelativePosition {
            name1: "grasper".into(),
            name2: "hook".into(),
            horizontal: HorizontalRelation::Left,
            vertical: VerticalRelation::Above,
        };
        let one_axis = ParsedAnswer::RelativePosition {
            horizontal: Some(HorizontalRelation::Left),
            vertical: Some(VerticalRelation::Below),
        };
        assert_eq!(score_sample(&gold, &one_axis, &MetricWeights::default()), 50.0);
    }

    #[test]
    fn trajectory_extreme_composite_error() {
        let gold = GoldPayload::TrajectoryExtreme {
            name: "grasper".into(),
            direction: crate::tracks::ExtremeDirection::Left,
            t: 0.4,
            bbox: qb(100, 100, 200, 200),
        };
        let off_by_time = ParsedAnswer::TrajectoryExtreme {
            t: Some(0.5),
            bbox: Some(qb(100, 100, 200, 200)),
        };
        // dt 0.1, ds 0: score 90.
        assert!((score_sample(&gold, &off_by_time, &MetricWeights::default()) - 90.0).abs() < 1e-9);
        let missing_box = ParsedAnswer::TrajectoryExtreme { t: Some(0.4), bbox: None };
        assert_eq!(score_sample(&gold, &missing_box, &MetricWeights::default()), 0.0);
    }

    #[test]
    fn cot_weighs_conclusion_over_stages() {
        let gold = GoldPayload::Cot {
            name: "grasper".into(),
            horizontal: HorizontalThird::Left,
            vertical: VerticalThird::Top,
            bbox: qb(100, 100, 200, 200),
            descriptor: MotionDescriptor::Stationary,
            mean_speed: 0.01,
            verb: "retract".into(),
            target: "gallbladder".into(),
        };
        let conclusion_only = ParsedAnswer::Cot {
            horizontal: None,
            vertical: None,
            descriptor: None,
            verbs: BTreeSet::from(["retract".to_string()]),
            targets: BTreeSet::from(["gallbladder".to_string()]),
        };
        // Conclusion 1, stages 1/3: 70 + 30/3 = 80.
        assert!(
            (score_sample(&gold, &conclusion_only, &MetricWeights::default()) - 80.0).abs() < 1e-9
        );
    }

    fn mc_sample(id: &str, correct: char) -> QASample {
        QASample {
            sample_id: id.into(),
            clip_id: "c_clip000".into(),
            core_task: CoreTask::Multichoice,
            subtask: Subtask::McCounting,
            question: "How many?".into(),
            options: Some(vec!["1".into(), "2".into()]),
            answer: correct.to_string(),
            gold: GoldPayload::Multichoice { correct },
            provenance: Provenance {
                template_id: "t".into(),
                seed: 0,
                source_video_id: "c".into(),
                reconstructed: false,
            },
        }
    }

    fn vocab() -> Vocabulary {
        Vocabulary::new(
            vec!["grasper".into()],
            vec!["retract".into()],
            vec!["gallbladder".into()],
            Map::new(),
        )
        .unwrap()
    }

    #[test]
    fn evaluation_flags_missing_and_unparseable() {
        let samples = vec![mc_sample("s-mc_counting-000", 'A'), mc_sample("s-mc_counting-001", 'B')];
        let predictions = vec![("s-mc_counting-000".to_string(), "mumble mumble".to_string())];
        let r = evaluate_predictions(&samples, &predictions, &vocab(), &MetricWeights::default())
            .unwrap();
        assert!(r.samples[0].parse_failed && !r.samples[0].missing);
        assert!(r.samples[1].missing && !r.samples[1].parse_failed);
        assert_eq!(r.overall, 0.0);
    }

    #[test]
    fn evaluation_rejects_duplicate_and_unknown_ids() {
        let samples = vec![mc_sample("s-mc_counting-000", 'A')];
        let dup = vec![
            ("s-mc_counting-000".to_string(), "A".to_string()),
            ("s-mc_counting-000".to_string(), "B".to_string()),
        ];
        assert!(matches!(
            evaluate_predictions(&samples, &dup, &vocab(), &MetricWeights::default()),
            Err(EvalError::DuplicatePrediction(_))
        ));
        let unknown = vec![("nope-locate-000".to_string(), "A".to_string())];
        assert!(matches!(
            evaluate_predictions(&samples, &unknown, &vocab(), &MetricWeights::default()),
            Err(EvalError::UnknownSampleId(_))
        ));
    }

    #[test]
    fn correct_letters_score_full_marks() {
        let samples = vec![mc_sample("s-mc_counting-000", 'A'), mc_sample("s-mc_counting-001", 'B')];
        let predictions = vec![
            ("s-mc_counting-000".to_string(), "A".to_string()),
            ("s-mc_counting-001".to_string(), "The answer is B.".to_string()),
        ];
        let r = evaluate_predictions(&samples, &predictions, &vocab(), &MetricWeights::default())
            .unwrap();
        assert_eq!(r.overall, 100.0);
        assert_eq!(r.per_core_task[&CoreTask::Multichoice].count, 2);
    }
}
