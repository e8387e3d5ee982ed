//! Machine-readable gold payloads and the categorical vocabularies they use,
//! plus the numeric rendering rules shared by payloads and answer text.
//!
//! Payload numerics are stored at rendered precision (timestamps 2 decimals,
//! speeds 3 decimals, boxes as [0,1000] integers), so the payload and the
//! answer text always agree digit for digit and a parsed-back gold answer
//! reproduces its payload exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::events::QuantBBox;
use crate::tracks::{ExtremeDirection, MotionDescriptor};

/// Horizontal frame third, by centroid x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizontalThird {
    Left,
    Center,
    Right,
}

impl std::fmt::Display for HorizontalThird {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Left => "left",
            Self::Center => "center",
            Self::Right => "right",
        })
    }
}

/// Vertical frame third, by centroid y (image convention: top is small y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerticalThird {
    Top,
    Middle,
    Bottom,
}

impl std::fmt::Display for VerticalThird {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Top => "top",
            Self::Middle => "middle",
            Self::Bottom => "bottom",
        })
    }
}

/// Horizontal relation between two instruments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizontalRelation {
    Left,
    Right,
}

impl std::fmt::Display for HorizontalRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Left => "left",
            Self::Right => "right",
        })
    }
}

/// Vertical relation between two instruments (image convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerticalRelation {
    Above,
    Below,
}

impl std::fmt::Display for VerticalRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Above => "above",
            Self::Below => "below",
        })
    }
}

/// How the distance between two instruments evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceChange {
    Closer,
    Further,
    Unchanged,
}

impl DistanceChange {
    /// Phrase used in rendered answers ("ends up {phrase} the hook").
    pub fn phrase(&self) -> &'static str {
        match self {
            Self::Closer => "closer to",
            Self::Further => "further from",
            Self::Unchanged => "at an unchanged distance from",
        }
    }
}

impl std::fmt::Display for DistanceChange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Closer => "closer",
            Self::Further => "further",
            Self::Unchanged => "unchanged",
        })
    }
}

/// Whether two interactions are the same.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonVerdict {
    Same,
    Different,
}

impl ComparisonVerdict {
    pub fn phrase(&self) -> &'static str {
        match self {
            Self::Same => "the same",
            Self::Different => "different",
        }
    }
}

impl std::fmt::Display for ComparisonVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Same => "same",
            Self::Different => "different",
        })
    }
}

/// Rounds to `dp` decimal places, half away from zero.
pub fn round_dp(v: f64, dp: u32) -> f64 {
    let scale = 10f64.powi(dp as i32);
    (v * scale).round() / scale
}

/// Timestamp rendering: exactly 2 decimals.
pub fn fmt_ts(v: f64) -> String {
    format!("{v:.2}")
}

/// Speed rendering: exactly 3 decimals.
pub fn fmt_speed(v: f64) -> String {
    format!("{v:.3}")
}

/// Box rendering: `<x1, y1, x2, y2>` in [0,1000] integers.
pub fn fmt_qbox(b: &QuantBBox) -> String {
    format!("<{}, {}, {}, {}>", b.x1, b.y1, b.x2, b.y2)
}

/// One instrument's appearance/disappearance entry in a temporal window gold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub name: String,
    pub start_t: f64,
    pub end_t: f64,
    pub start_bbox: QuantBBox,
    pub end_bbox: QuantBBox,
}

/// The machine-readable answer, one variant per payload schema. Serialized
/// with a `schema` tag so dataset records are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schema", rename_all = "snake_case")]
pub enum GoldPayload {
    TemporalWindow {
        entries: Vec<WindowEntry>,
    },
    Locate {
        name: String,
        bbox: QuantBBox,
    },
    ClosestInstrument {
        name: String,
    },
    FrameSegment {
        name: String,
        horizontal: HorizontalThird,
        vertical: VerticalThird,
    },
    TrajectoryExtreme {
        name: String,
        direction: ExtremeDirection,
        t: f64,
        bbox: QuantBBox,
    },
    SequentialActions {
        name: String,
        next_verb: String,
    },
    ActionStatus {
        name: String,
        verb: String,
    },
    TargetInteraction {
        name: String,
        target: String,
    },
    InstrumentId {
        name: String,
    },
    RelativePosition {
        name1: String,
        name2: String,
        horizontal: HorizontalRelation,
        vertical: VerticalRelation,
    },
    RelativeChange {
        name1: String,
        name2: String,
        change: DistanceChange,
    },
    InteractionComparison {
        name1: String,
        name2: String,
        verdict: ComparisonVerdict,
        verb1: String,
        target1: String,
        verb2: String,
        target2: String,
    },
    Velocity {
        name: String,
        min_speed: f64,
        max_speed: f64,
        mean_speed: f64,
        descriptor: MotionDescriptor,
    },
    Multichoice {
        correct: char,
    },
    Cot {
        name: String,
        horizontal: HorizontalThird,
        vertical: VerticalThird,
        bbox: QuantBBox,
        descriptor: MotionDescriptor,
        mean_speed: f64,
        verb: String,
        target: String,
    },
}

impl GoldPayload {
    /// Placeholder values for the answer pattern. Multi-entry payloads return
    /// one map per entry; the rendered answer joins entry renderings with
    /// newlines.
    pub fn answer_field_maps(&self) -> Vec<BTreeMap<&'static str, String>> {
        fn m<const N: usize>(pairs: [(&'static str, String); N]) -> BTreeMap<&'static str, String> {
            pairs.into_iter().collect()
        }
        match self {
            Self::TemporalWindow { entries } => entries
                .iter()
                .map(|e| {
                    m([
                        ("name", e.name.clone()),
                        ("start_t", fmt_ts(e.start_t)),
                        ("end_t", fmt_ts(e.end_t)),
                        ("start_bbox", fmt_qbox(&e.start_bbox)),
                        ("end_bbox", fmt_qbox(&e.end_bbox)),
                    ])
                })
                .collect(),
            Self::Locate { name, bbox } => {
                vec![m([("name", name.clone()), ("bbox", fmt_qbox(bbox))])]
            }
            Self::ClosestInstrument { name } => vec![m([("name", name.clone())])],
            Self::FrameSegment { name, horizontal, vertical } => vec![m([
                ("name", name.clone()),
                ("horizontal", horizontal.to_string()),
                ("vertical", vertical.to_string()),
            ])],
            Self::TrajectoryExtreme { name, direction, t, bbox } => vec![m([
                ("name", name.clone()),
                ("direction", direction.to_string()),
                ("t", fmt_ts(*t)),
                ("bbox", fmt_qbox(bbox)),
            ])],
            Self::SequentialActions { name, next_verb } => {
                vec![m([("name", name.clone()), ("next_verb", next_verb.clone())])]
            }
            Self::ActionStatus { name, verb } => {
                vec![m([("name", name.clone()), ("verb", verb.clone())])]
            }
            Self::TargetInteraction { name, target } => {
                vec![m([("name", name.clone()), ("target", target.clone())])]
            }
            Self::InstrumentId { name } => vec![m([("name", name.clone())])],
            Self::RelativePosition { name1, name2, horizontal, vertical } => vec![m([
                ("name1", name1.clone()),
                ("name2", name2.clone()),
                ("horizontal", horizontal.to_string()),
                ("vertical", vertical.to_string()),
            ])],
            Self::RelativeChange { name1, name2, change } => vec![m([
                ("name1", name1.clone()),
                ("name2", name2.clone()),
                ("change", change.phrase().to_string()),
            ])],
            Self::InteractionComparison {
                name1,
                name2,
                verdict,
                verb1,
                target1,
                verb2,
                target2,
            } => vec![m([
                ("name1", name1.clone()),
                ("name2", name2.clone()),
                ("verdict", verdict.phrase().to_string()),
                ("verb1", verb1.clone()),
                ("target1", target1.clone()),
                ("verb2", verb2.clone()),
                ("target2", target2.clone()),
            ])],
            Self::Velocity { name, min_speed, max_speed, mean_speed, descriptor } => vec![m([
                ("name", name.clone()),
                ("min_speed", fmt_speed(*min_speed)),
                ("max_speed", fmt_speed(*max_speed)),
                ("mean_speed", fmt_speed(*mean_speed)),
                ("descriptor", descriptor.to_string()),
            ])],
            Self::Multichoice { correct } => vec![m([("letter", correct.to_string())])],
            Self::Cot {
                name,
                horizontal,
                vertical,
                bbox,
                descriptor,
                mean_speed,
                verb,
                target,
            } => vec![m([
                ("name", name.clone()),
                ("horizontal", horizontal.to_string()),
                ("vertical", vertical.to_string()),
                ("bbox", fmt_qbox(bbox)),
                ("descriptor", descriptor.to_string()),
                ("mean_speed", fmt_speed(*mean_speed)),
                ("verb", verb.clone()),
                ("target", target.clone()),
            ])],
        }
    }

    /// Renders the gold answer through an answer pattern. Multi-entry
    /// payloads render one line per entry.
    pub fn render_answer(&self, answer_pattern: &str) -> Result<String, String> {
        let maps = self.answer_field_maps();
        let mut lines = Vec::with_capacity(maps.len());
        for map in &maps {
            lines.push(super::templates::render_pattern(answer_pattern, map)?);
        }
        Ok(lines.join("\n"))
    }
}

/// Horizontal third of a unit-space x coordinate.
pub fn horizontal_third(cx: f64) -> HorizontalThird {
    if cx < 1.0 / 3.0 {
        HorizontalThird::Left
    } else if cx < 2.0 / 3.0 {
        HorizontalThird::Center
    } else {
        HorizontalThird::Right
    }
}

/// Vertical third of a unit-space y coordinate.
pub fn vertical_third(cy: f64) -> VerticalThird {
    if cy < 1.0 / 3.0 {
        VerticalThird::Top
    } else if cy < 2.0 / 3.0 {
        VerticalThird::Middle
    } else {
        VerticalThird::Bottom
    }
}
