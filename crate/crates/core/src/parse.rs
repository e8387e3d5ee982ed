//! Rule-based extraction of answer fields from free-text predictions.
//!
//! The parser is schema-driven: the gold payload decides which fields are
//! looked for, so unrelated numbers or labels elsewhere in the text cannot
//! change a field's meaning, only its value. Every extractor is deterministic
//! and none of them guesses: a field that cannot be found stays `None` and
//! scores zero, it is never defaulted.

use std::collections::BTreeSet;

use once_cell::sync::Lazy;
use regex::Regex;

use crate::events::QuantBBox;
use crate::qa::gold::{
    ComparisonVerdict, DistanceChange, GoldPayload, HorizontalRelation, HorizontalThird,
    VerticalRelation, VerticalThird,
};
use crate::tracks::MotionDescriptor;
use crate::vocab::{find_word, normalize_surface, LabelKind, Vocabulary};

static RE_LETTER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b[A-D]\b").unwrap());
static RE_GROUP: Lazy<Regex> = Lazy::new(|| Regex::new(r"[<\[]([^<>\[\]]*)[>\]]").unwrap());
static RE_DECIMAL: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d+\.\d+").unwrap());
static RE_PAIR: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(\d+\.\d+)\s*(?:-|to)\s*(\d+\.\d+)").unwrap());

/// First standalone capital letter A-D. Lowercase letters never match, so the
/// article "a" in prose cannot read as an option choice.
pub fn parse_mc_letter(text: &str) -> Option<char> {
    RE_LETTER.find(text).and_then(|m| m.as_str().chars().next())
}

/// All well-formed integer boxes, in text order. A box is a `<...>` or `[...]`
/// group holding exactly four integers on the [0,1000] grid with ordered
/// pairs; any other group is dropped, never repaired.
pub fn parse_boxes(text: &str) -> Vec<QuantBBox> {
    RE_GROUP
        .captures_iter(text)
        .filter_map(|c| {
            let parts: Vec<&str> = c.get(1).unwrap().as_str().split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return None;
            }
            let mut vals = [0i64; 4];
            for (i, p) in parts.iter().enumerate() {
                vals[i] = p.parse().ok()?;
            }
            QuantBBox::new(vals[0], vals[1], vals[2], vals[3]).ok()
        })
        .collect()
}

/// A normalized timestamp literal: integer part 0 or 1, one to four decimals,
/// value at most 1.
fn timestamp_value(lit: &str) -> Option<f64> {
    let (int, frac) = lit.split_once('.')?;
    if int != "0" && int != "1" {
        return None;
    }
    if frac.is_empty() || frac.len() > 4 {
        return None;
    }
    let v: f64 = lit.parse().ok()?;
    (v <= 1.0 + 1e-12).then_some(v)
}

/// A speed literal: any integer part, one to four decimals.
fn speed_value(lit: &str) -> Option<f64> {
    let (_, frac) = lit.split_once('.')?;
    if frac.is_empty() || frac.len() > 4 {
        return None;
    }
    lit.parse().ok()
}

/// All normalized timestamps, in text order.
pub fn parse_timestamps(text: &str) -> Vec<f64> {
    RE_DECIMAL.find_iter(text).filter_map(|m| timestamp_value(m.as_str())).collect()
}

/// Timestamp pairs written as "a - b" or "a to b", in text order.
pub fn parse_timestamp_pairs(text: &str) -> Vec<(f64, f64)> {
    RE_PAIR
        .captures_iter(text)
        .filter_map(|c| {
            let a = timestamp_value(c.get(1).unwrap().as_str())?;
            let b = timestamp_value(c.get(2).unwrap().as_str())?;
            Some((a, b))
        })
        .collect()
}

/// Binds each of (min, max, mean) to a decimal literal: the first literal
/// after the role keyword, falling back to the nearest one before it. Keyword
/// surfaces are matched on word boundaries.
pub fn bind_speeds(normalized: &str) -> (Option<f64>, Option<f64>, Option<f64>) {
    let decs: Vec<(usize, f64)> = RE_DECIMAL
        .find_iter(normalized)
        .filter_map(|m| speed_value(m.as_str()).map(|v| (m.start(), v)))
        .collect();
    let role = |surfaces: &[&str]| -> Option<f64> {
        let kw_end = surfaces
            .iter()
            .filter_map(|s| find_word(normalized, s).map(|p| (p, p + s.len())))
            .min()?
            .1;
        decs.iter()
            .find(|(p, _)| *p >= kw_end)
            .or_else(|| decs.iter().rev().find(|(p, _)| *p < kw_end))
            .map(|(_, v)| *v)
    };
    (role(&["minimum", "min"]), role(&["maximum", "max"]), role(&["mean", "average"]))
}

/// Earliest word-boundary occurrence among the surfaces wins; ties at the
/// same position prefer the longer surface.
fn find_term<T: Copy>(normalized: &str, surfaces: &[(&str, T)]) -> Option<T> {
    let mut best: Option<(usize, usize, T)> = None;
    for (s, v) in surfaces {
        if let Some(pos) = find_word(normalized, s) {
            best = Some(match best {
                None => (pos, s.len(), *v),
                Some(b) if pos < b.0 || (pos == b.0 && s.len() > b.1) => (pos, s.len(), *v),
                Some(b) => b,
            });
        }
    }
    best.map(|(_, _, v)| v)
}

pub fn parse_descriptor(normalized: &str) -> Option<MotionDescriptor> {
    find_term(
        normalized,
        &[
            ("moving slowly", MotionDescriptor::MovingSlowly),
            ("moving actively", MotionDescriptor::MovingActively),
            ("stationary", MotionDescriptor::Stationary),
            ("slowly", MotionDescriptor::MovingSlowly),
            ("actively", MotionDescriptor::MovingActively),
        ],
    )
}

fn parse_horizontal_third(normalized: &str) -> Option<HorizontalThird> {
    find_term(
        normalized,
        &[
            ("left", HorizontalThird::Left),
            ("center", HorizontalThird::Center),
            ("right", HorizontalThird::Right),
        ],
    )
}

fn parse_vertical_third(normalized: &str) -> Option<VerticalThird> {
    find_term(
        normalized,
        &[
            ("top", VerticalThird::Top),
            ("middle", VerticalThird::Middle),
            ("bottom", VerticalThird::Bottom),
        ],
    )
}

fn parse_horizontal_relation(normalized: &str) -> Option<HorizontalRelation> {
    find_term(
        normalized,
        &[("left", HorizontalRelation::Left), ("right", HorizontalRelation::Right)],
    )
}

fn parse_vertical_relation(normalized: &str) -> Option<VerticalRelation> {
    find_term(
        normalized,
        &[("above", VerticalRelation::Above), ("below", VerticalRelation::Below)],
    )
}

fn parse_distance_change(normalized: &str) -> Option<DistanceChange> {
    find_term(
        normalized,
        &[
            ("closer", DistanceChange::Closer),
            ("nearer", DistanceChange::Closer),
            ("further", DistanceChange::Further),
            ("farther", DistanceChange::Further),
            ("away", DistanceChange::Further),
            ("unchanged", DistanceChange::Unchanged),
            ("same distance", DistanceChange::Unchanged),
        ],
    )
}

fn parse_verdict(normalized: &str) -> Option<ComparisonVerdict> {
    find_term(
        normalized,
        &[("same", ComparisonVerdict::Same), ("different", ComparisonVerdict::Different)],
    )
}

/// Splits the text into one segment per name: from the name's first
/// word-boundary occurrence up to the next found name. Names that never occur
/// get no segment.
pub fn segment_by_names<'a>(normalized: &'a str, names: &[&str]) -> Vec<Option<&'a str>> {
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        if let Some(pos) = find_word(normalized, name) {
            found.push((pos, i));
        }
    }
    found.sort_unstable();
    let mut out = vec![None; names.len()];
    for (j, &(pos, idx)) in found.iter().enumerate() {
        let end = found.get(j + 1).map_or(normalized.len(), |f| f.0);
        out[idx] = Some(&normalized[pos..end]);
    }
    out
}

/// Fields recovered for one tracked instrument in a temporal-window answer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedWindowEntry {
    pub window: Option<(f64, f64)>,
    pub start_bbox: Option<QuantBBox>,
    pub end_bbox: Option<QuantBBox>,
}

impl ParsedWindowEntry {
    fn is_empty(&self) -> bool {
        self.window.is_none() && self.start_bbox.is_none() && self.end_bbox.is_none()
    }
}

/// Verb/target recovered from one name's segment of a comparison answer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedInteraction {
    pub verb: Option<String>,
    pub target: Option<String>,
}

impl ParsedInteraction {
    fn is_empty(&self) -> bool {
        self.verb.is_none() && self.target.is_none()
    }
}

/// Extracted prediction fields, shaped by the gold schema. Unfound fields are
/// `None`; a prediction where nothing was found at all counts as a parse
/// failure and the sample scores zero.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedAnswer {
    TemporalWindow {
        entries: Vec<ParsedWindowEntry>,
    },
    Locate {
        bbox: Option<QuantBBox>,
    },
    ClosestInstrument {
        name: Option<String>,
    },
    FrameSegment {
        horizontal: Option<HorizontalThird>,
        vertical: Option<VerticalThird>,
    },
    TrajectoryExtreme {
        t: Option<f64>,
        bbox: Option<QuantBBox>,
    },
    SequentialActions {
        next_verb: Option<String>,
    },
    ActionStatus {
        verb: Option<String>,
    },
    TargetInteraction {
        target: Option<String>,
    },
    InstrumentId {
        name: Option<String>,
    },
    RelativePosition {
        horizontal: Option<HorizontalRelation>,
        vertical: Option<VerticalRelation>,
    },
    RelativeChange {
        change: Option<DistanceChange>,
    },
    InteractionComparison {
        verdict: Option<ComparisonVerdict>,
        first: ParsedInteraction,
        second: ParsedInteraction,
    },
    Velocity {
        min_speed: Option<f64>,
        max_speed: Option<f64>,
        mean_speed: Option<f64>,
        descriptor: Option<MotionDescriptor>,
    },
    Multichoice {
        letter: Option<char>,
    },
    Cot {
        horizontal: Option<HorizontalThird>,
        vertical: Option<VerticalThird>,
        descriptor: Option<MotionDescriptor>,
        verbs: BTreeSet<String>,
        targets: BTreeSet<String>,
    },
}

impl ParsedAnswer {
    /// True when no field at all was recovered from the text.
    pub fn is_empty(&self) -> bool {
        match self {
            Self::TemporalWindow { entries } => entries.iter().all(ParsedWindowEntry::is_empty),
            Self::Locate { bbox } => bbox.is_none(),
            Self::ClosestInstrument { name } | Self::InstrumentId { name } => name.is_none(),
            Self::FrameSegment { horizontal, vertical } => {
                horizontal.is_none() && vertical.is_none()
            }
            Self::TrajectoryExtreme { t, bbox } => t.is_none() && bbox.is_none(),
            Self::SequentialActions { next_verb } => next_verb.is_none(),
            Self::ActionStatus { verb } => verb.is_none(),
            Self::TargetInteraction { target } => target.is_none(),
            Self::RelativePosition { horizontal, vertical } => {
                horizontal.is_none() && vertical.is_none()
            }
            Self::RelativeChange { change } => change.is_none(),
            Self::InteractionComparison { verdict, first, second } => {
                verdict.is_none() && first.is_empty() && second.is_empty()
            }
            Self::Velocity { min_speed, max_speed, mean_speed, descriptor } => {
                min_speed.is_none()
                    && max_speed.is_none()
                    && mean_speed.is_none()
                    && descriptor.is_none()
            }
            Self::Multichoice { letter } => letter.is_none(),
            Self::Cot { horizontal, vertical, descriptor, verbs, targets } => {
                horizontal.is_none()
                    && vertical.is_none()
                    && descriptor.is_none()
                    && verbs.is_empty()
                    && targets.is_empty()
            }
        }
    }
}

fn parse_interaction_segment(segment: Option<&str>, vocab: &Vocabulary) -> ParsedInteraction {
    match segment {
        None => ParsedInteraction::default(),
        Some(s) => ParsedInteraction {
            verb: vocab.find_first(LabelKind::Verb, s).map(str::to_string),
            target: vocab.find_first(LabelKind::Target, s).map(str::to_string),
        },
    }
}

/// Extracts the gold schema's fields from a free-text prediction.
pub fn parse_prediction(gold: &GoldPayload, text: &str, vocab: &Vocabulary) -> ParsedAnswer {
    let n = normalize_surface(text);
    match gold {
        GoldPayload::TemporalWindow { entries } => {
            let names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
            let parsed = segment_by_names(&n, &names)
                .into_iter()
                .map(|seg| match seg {
                    None => ParsedWindowEntry::default(),
                    Some(s) => {
                        let boxes = parse_boxes(s);
                        ParsedWindowEntry {
                            window: parse_timestamp_pairs(s).into_iter().next(),
                            start_bbox: boxes.first().copied(),
                            end_bbox: boxes.get(1).copied(),
                        }
                    }
                })
                .collect();
            ParsedAnswer::TemporalWindow { entries: parsed }
        }
        GoldPayload::Locate { .. } => {
            ParsedAnswer::Locate { bbox: parse_boxes(&n).into_iter().next() }
        }
        GoldPayload::ClosestInstrument { .. } => ParsedAnswer::ClosestInstrument {
            name: vocab.find_first(LabelKind::Instrument, &n).map(str::to_string),
        },
        GoldPayload::FrameSegment { .. } => ParsedAnswer::FrameSegment {
            horizontal: parse_horizontal_third(&n),
            vertical: parse_vertical_third(&n),
        },
        GoldPayload::TrajectoryExtreme { .. } => ParsedAnswer::TrajectoryExtreme {
            t: parse_timestamps(&n).into_iter().next(),
            bbox: parse_boxes(&n).into_iter().next(),
        },
        GoldPayload::SequentialActions { .. } => ParsedAnswer::SequentialActions {
            next_verb: vocab.find_first(LabelKind::Verb, &n).map(str::to_string),
        },
        GoldPayload::ActionStatus { .. } => ParsedAnswer::ActionStatus {
            verb: vocab.find_first(LabelKind::Verb, &n).map(str::to_string),
        },
        GoldPayload::TargetInteraction { .. } => ParsedAnswer::TargetInteraction {
            target: vocab.find_first(LabelKind::Target, &n).map(str::to_string),
        },
        GoldPayload::InstrumentId { .. } => ParsedAnswer::InstrumentId {
            name: vocab.find_first(LabelKind::Instrument, &n).map(str::to_string),
        },
        GoldPayload::RelativePosition { .. } => ParsedAnswer::RelativePosition {
            horizontal: parse_horizontal_relation(&n),
            vertical: parse_vertical_relation(&n),
        },
        GoldPayload::RelativeChange { .. } => {
            ParsedAnswer::RelativeChange { change: parse_distance_change(&n) }
        }
        GoldPayload::InteractionComparison { name1, name2, .. } => {
            let segs = segment_by_names(&n, &[name1, name2]);
            ParsedAnswer::InteractionComparison {
                verdict: parse_verdict(&n),
                first: parse_interaction_segment(segs[0], vocab),
                second: parse_interaction_segment(segs[1], vocab),
            }
        }
        GoldPayload::Velocity { .. } => {
            let (min_speed, max_speed, mean_speed) = bind_speeds(&n);
            ParsedAnswer::Velocity {
                min_speed,
                max_speed,
                mean_speed,
                descriptor: parse_descriptor(&n),
            }
        }
        GoldPayload::Multichoice { .. } => {
            ParsedAnswer::Multichoice { letter: parse_mc_letter(text) }
        }
        GoldPayload::Cot { .. } => ParsedAnswer::Cot {
            horizontal: parse_horizontal_third(&n),
            vertical: parse_vertical_third(&n),
            descriptor: parse_descriptor(&n),
            verbs: vocab.find_all(LabelKind::Verb, &n).into_iter().map(str::to_string).collect(),
            targets: vocab
                .find_all(LabelKind::Target, &n)
                .into_iter()
                .map(str::to_string)
                .collect(),
        },
    }
}
