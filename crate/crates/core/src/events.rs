//! Frame-level event model: validated annotation tuples, label broadcasting
//! onto a dense frame grid, clip segmentation, and geometry quantization.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{LabelKind, Vocabulary};

/// Axis-aligned box in unit coordinates, 0 <= x1 < x2 <= 1 and likewise for y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, String> {
        let b = Self { x1, y1, x2, y2 };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<(), String> {
        for (name, v) in [("x1", self.x1), ("y1", self.y1), ("x2", self.x2), ("y2", self.y2)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(format!("bbox: {name} out of [0,1]"));
            }
        }
        if self.x1 >= self.x2 {
            return Err("bbox: x1 >= x2".to_string());
        }
        if self.y1 >= self.y2 {
            return Err("bbox: y1 >= y2".to_string());
        }
        Ok(())
    }

    pub fn centroid(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = String;
    fn try_from(v: [f64; 4]) -> Result<Self, String> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

/// Box quantized to the integer grid [0, 1000], ordering preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct QuantBBox {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl QuantBBox {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Result<Self, String> {
        for (name, v) in [("x1", x1), ("y1", y1), ("x2", x2), ("y2", y2)] {
            if !(0..=1000).contains(&v) {
                return Err(format!("quantized bbox: {name} out of [0,1000]"));
            }
        }
        if x1 >= x2 {
            return Err("quantized bbox: x1 >= x2".to_string());
        }
        if y1 >= y2 {
            return Err("quantized bbox: y1 >= y2".to_string());
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Center in unit coordinates.
    pub fn center_unit(&self) -> (f64, f64) {
        (
            (self.x1 + self.x2) as f64 / 2000.0,
            (self.y1 + self.y2) as f64 / 2000.0,
        )
    }
}

impl TryFrom<[i64; 4]> for QuantBBox {
    type Error = String;
    fn try_from(v: [i64; 4]) -> Result<Self, String> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<QuantBBox> for [i64; 4] {
    fn from(b: QuantBBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

/// Quantizes unit coordinates to the [0,1000] grid with round-half-away-from-
/// zero. If rounding collapses a pair, the upper bound is widened by one step
/// (capped at 1000, pushing the lower bound down instead).
pub fn quantize_bbox(b: &BBox) -> QuantBBox {
    fn q(v: f64) -> i64 {
        (v * 1000.0).round() as i64
    }
    fn widen(lo: i64, hi: i64) -> (i64, i64) {
        if hi > lo {
            (lo, hi)
        } else if lo >= 1000 {
            (999, 1000)
        } else {
            (lo, lo + 1)
        }
    }
    let (x1, x2) = widen(q(b.x1), q(b.x2));
    let (y1, y2) = widen(q(b.y1), q(b.y2));
    QuantBBox { x1, y1, x2, y2 }
}

/// Verb/target pair describing what an instrument is doing. Absent entirely
/// when the frame carries no interaction label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interaction {
    pub verb: String,
    pub target: String,
}

/// One frame-level annotation: an instrument at a time with its box and an
/// optional interaction. `source_frame_index` is provenance only and takes no
/// part in equality-sensitive logic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTuple {
    pub time_s: f64,
    pub instrument: String,
    pub bbox: BBox,
    pub interaction: Option<Interaction>,
    pub source_frame_index: i64,
}

#[derive(Debug, Error)]
pub enum EventError {
    #[error("time {t} s outside clip [{start}, {end}] s")]
    TimeOutsideClip { t: f64, start: f64, end: f64 },
    #[error("clip {0:?}: end_s must exceed start_s")]
    EmptyClip(String),
    #[error("clip {0:?}: fps must be positive")]
    BadFps(String),
}

/// Contiguous slice of a source video. `start_s` is inclusive and `end_s`
/// exclusive for frame assignment; `normalize_time` accepts the closed
/// interval so a frame exactly at `end_s` maps to 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipManifest {
    pub clip_id: String,
    pub source_video_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub fps: f64,
}

impl ClipManifest {
    pub fn new(
        clip_id: impl Into<String>,
        source_video_id: impl Into<String>,
        start_s: f64,
        end_s: f64,
        fps: f64,
    ) -> Result<Self, EventError> {
        let clip_id = clip_id.into();
        if !(end_s > start_s) {
            return Err(EventError::EmptyClip(clip_id));
        }
        if !(fps > 0.0) {
            return Err(EventError::BadFps(clip_id));
        }
        Ok(Self { clip_id, source_video_id: source_video_id.into(), start_s, end_s, fps })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn sampling_period_s(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s - TIME_EPS && t < self.end_s - TIME_EPS
    }
}

/// Tolerance for frame-time comparisons throughout the pipeline.
pub const TIME_EPS: f64 = 1e-9;

/// Maps an absolute time to the clip's normalized [0,1] axis.
pub fn normalize_time(t: f64, clip: &ClipManifest) -> Result<f64, EventError> {
    if t < clip.start_s - TIME_EPS || t > clip.end_s + TIME_EPS {
        return Err(EventError::TimeOutsideClip { t, start: clip.start_s, end: clip.end_s });
    }
    let f = (t - clip.start_s) / clip.duration_s();
    Ok(f.clamp(0.0, 1.0))
}

/// Cuts `[0, video_duration_s)` into consecutive `max_len_s` clips; the final
/// remainder is kept only when it is at least `min_len_s` long.
pub fn segment_clips(
    video_id: &str,
    video_duration_s: f64,
    fps: f64,
    min_len_s: f64,
    max_len_s: f64,
) -> Vec<ClipManifest> {
    assert!(video_duration_s >= 0.0 && min_len_s > 0.0 && max_len_s >= min_len_s);
    let mut clips = Vec::new();
    let mut start = 0.0_f64;
    let mut index = 0usize;
    while video_duration_s - start >= max_len_s - TIME_EPS {
        let end = start + max_len_s;
        clips.push(
            ClipManifest::new(format!("{video_id}_clip{index:03}"), video_id, start, end, fps)
                .expect("segment bounds are valid by construction"),
        );
        start = end;
        index += 1;
    }
    let remainder = video_duration_s - start;
    if remainder >= min_len_s - TIME_EPS && remainder > TIME_EPS {
        clips.push(
            ClipManifest::new(
                format!("{video_id}_clip{index:03}"),
                video_id,
                start,
                video_duration_s,
                fps,
            )
            .expect("segment bounds are valid by construction"),
        );
    }
    clips
}

/// Raw JSONL annotation record as it appears in the input stream.
#[derive(Debug, Deserialize)]
struct RawAnnotation {
    video_id: String,
    #[serde(rename = "fn")]
    time_s: f64,
    instrument: String,
    bbox: [f64; 4],
    #[serde(default)]
    verb: Option<String>,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    source_frame_index: Option<i64>,
}

/// A record dropped at ingest, with its 1-based line number and the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct IngestResult {
    /// Accepted tuples per video, sorted by (time, instrument).
    pub videos: BTreeMap<String, Vec<EventTuple>>,
    pub rejected: Vec<RejectedRecord>,
    pub accepted: usize,
}

impl IngestResult {
    pub fn reject_rate(&self) -> f64 {
        let total = self.accepted + self.rejected.len();
        if total == 0 {
            0.0
        } else {
            self.rejected.len() as f64 / total as f64
        }
    }
}

/// Reads one JSONL annotation stream. Malformed lines and records violating
/// the tuple invariants are collected as rejections, never silently dropped;
/// only I/O failures abort.
pub fn ingest_annotations<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
) -> std::io::Result<IngestResult> {
    let mut out = IngestResult::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_annotation_line(&line, line_no, vocab) {
            Ok((video_id, tuple)) => {
                out.videos.entry(video_id).or_default().push(tuple);
                out.accepted += 1;
            }
            Err(reason) => out.rejected.push(RejectedRecord { line: line_no, reason }),
        }
    }
    for tuples in out.videos.values_mut() {
        tuples.sort_by(|a, b| {
            a.time_s.total_cmp(&b.time_s).then_with(|| a.instrument.cmp(&b.instrument))
        });
    }
    Ok(out)
}

fn parse_annotation_line(
    line: &str,
    line_no: usize,
    vocab: &Vocabulary,
) -> Result<(String, EventTuple), String> {
    let raw: RawAnnotation =
        serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    if !raw.time_s.is_finite() || raw.time_s < 0.0 {
        return Err("fn must be a non-negative time in seconds".to_string());
    }
    let bbox = BBox::new(raw.bbox[0], raw.bbox[1], raw.bbox[2], raw.bbox[3])?;
    let instrument = vocab
        .canonical_exact(LabelKind::Instrument, &raw.instrument)
        .ok_or_else(|| format!("unknown instrument {:?}", raw.instrument))?
        .to_string();
    let interaction = match (raw.verb, raw.target) {
        (None, None) => None,
        (Some(v), Some(t)) => {
            let verb = vocab
                .canonical_exact(LabelKind::Verb, &v)
                .ok_or_else(|| format!("unknown verb {v:?}"))?
                .to_string();
            let target = vocab
                .canonical_exact(LabelKind::Target, &t)
                .ok_or_else(|| format!("unknown target {t:?}"))?
                .to_string();
            Some(Interaction { verb, target })
        }
        _ => return Err("verb and target must be both null or both set".to_string()),
    };
    let tuple = EventTuple {
        time_s: raw.time_s,
        instrument,
        bbox,
        interaction,
        source_frame_index: raw.source_frame_index.unwrap_or(line_no as i64 - 1),
    };
    Ok((raw.video_id, tuple))
}

/// Copies each annotated frame's tuples onto every `target_fps` grid frame
/// within `half_window_s` (inclusive); a grid frame equidistant from two
/// annotated frames takes the earlier one. Grid indices never go below zero.
///
/// An input already dense at `target_fps` is returned unchanged whenever
/// `half_window_s` is below one grid period, since no unannotated grid frame
/// can then fall inside any window.
pub fn broadcast_sparse_labels(
    tuples: &[EventTuple],
    target_fps: f64,
    half_window_s: f64,
) -> Vec<EventTuple> {
    assert!(target_fps > 0.0 && half_window_s >= 0.0);
    if tuples.is_empty() {
        return Vec::new();
    }
    // Annotated frames, grouped by time; input order within a frame is kept.
    let mut frames: Vec<(f64, Vec<&EventTuple>)> = Vec::new();
    for t in tuples {
        match frames.last_mut() {
            Some((ft, group)) if (t.time_s - *ft).abs() <= TIME_EPS => group.push(t),
            _ => frames.push((t.time_s, vec![t])),
        }
    }
    let first = frames.first().map(|f| f.0).unwrap();
    let last = frames.last().map(|f| f.0).unwrap();
    let k_min = (((first - half_window_s) * target_fps) - TIME_EPS).ceil().max(0.0) as i64;
    let k_max = (((last + half_window_s) * target_fps) + TIME_EPS).floor() as i64;

    let mut out = Vec::new();
    let mut near = 0usize;
    for k in k_min..=k_max {
        let t = k as f64 / target_fps;
        // Frames are sorted; advance the cursor while the next annotated frame
        // is strictly nearer. Equal distance keeps the earlier frame.
        while near + 1 < frames.len()
            && (frames[near + 1].0 - t).abs() < (frames[near].0 - t).abs() - TIME_EPS
        {
            near += 1;
        }
        if (frames[near].0 - t).abs() <= half_window_s + TIME_EPS {
            for src in &frames[near].1 {
                out.push(EventTuple { time_s: t, ..(*src).clone() });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Vocabulary;
    use std::collections::BTreeMap;
    use std::io::Cursor;

    fn vocab() -> Vocabulary {
        Vocabulary::new(
            vec!["grasper".into(), "hook".into()],
            vec!["retract".into(), "dissect".into()],
            vec!["gallbladder".into(), "liver".into()],
            BTreeMap::from([("retracting".to_string(), "retract".to_string())]),
        )
        .unwrap()
    }

    fn tuple(t: f64, instrument: &str, verb: Option<&str>) -> EventTuple {
        EventTuple {
            time_s: t,
            instrument: instrument.to_string(),
            bbox: BBox::new(0.1, 0.2, 0.3, 0.4).unwrap(),
            interaction: verb.map(|v| Interaction {
                verb: v.to_string(),
                target: "gallbladder".to_string(),
            }),
            source_frame_index: 0,
        }
    }

    #[test]
    fn ingest_identity_parse() {
        let line = r#"{"video_id":"v1","fn":4.0,"instrument":"grasper","bbox":[0.1,0.2,0.3,0.4],"verb":"retract","target":"gallbladder"}"#;
        let r = ingest_annotations(Cursor::new(line), &vocab()).unwrap();
        assert!(r.rejected.is_empty());
        let t = &r.videos["v1"][0];
        assert_eq!(t.time_s, 4.0);
        assert_eq!(t.instrument, "grasper");
        assert_eq!(t.bbox, BBox::new(0.1, 0.2, 0.3, 0.4).unwrap());
        assert_eq!(
            t.interaction,
            Some(Interaction { verb: "retract".into(), target: "gallbladder".into() })
        );
    }

    #[test]
    fn ingest_empty_stream() {
        let r = ingest_annotations(Cursor::new(""), &vocab()).unwrap();
        assert!(r.videos.is_empty());
        assert_eq!(r.accepted, 0);
    }

    #[test]
    fn ingest_rejections_carry_line_and_reason() {
        let lines = [
            r#"{"video_id":"v1","fn":1.0,"instrument":"grasper","bbox":[0.3,0.2,0.1,0.4]}"#,
            r#"not json"#,
            r#"{"video_id":"v1","fn":1.0,"instrument":"laser","bbox":[0.1,0.2,0.3,0.4]}"#,
            r#"{"video_id":"v1","fn":1.0,"instrument":"grasper","bbox":[0.1,0.2,0.3,0.4],"verb":"retract"}"#,
            r#"{"video_id":"v1","fn":1.0,"instrument":"grasper","bbox":[0.1,0.2,0.3,0.4],"verb":"retracting","target":"liver"}"#,
        ]
        .join("\n");
        let r = ingest_annotations(Cursor::new(lines), &vocab()).unwrap();
        assert_eq!(r.accepted, 1);
        assert_eq!(r.rejected.len(), 4);
        assert_eq!(r.rejected[0].line, 1);
        assert!(r.rejected[0].reason.contains("x1 >= x2"));
        assert!(r.rejected[1].reason.contains("malformed"));
        assert!(r.rejected[2].reason.contains("unknown instrument"));
        assert!(r.rejected[3].reason.contains("both null or both set"));
        // The synonym-carrying record is the accepted one, canonicalized.
        assert_eq!(r.videos["v1"][0].interaction.as_ref().unwrap().verb, "retract");
    }

    #[test]
    fn ingest_sorts_by_time_then_instrument() {
        let lines = [
            r#"{"video_id":"v1","fn":2.0,"instrument":"hook","bbox":[0.1,0.2,0.3,0.4]}"#,
            r#"{"video_id":"v1","fn":1.0,"instrument":"hook","bbox":[0.1,0.2,0.3,0.4]}"#,
            r#"{"video_id":"v1","fn":1.0,"instrument":"grasper","bbox":[0.1,0.2,0.3,0.4]}"#,
        ]
        .join("\n");
        let r = ingest_annotations(Cursor::new(lines), &vocab()).unwrap();
        let order: Vec<_> =
            r.videos["v1"].iter().map(|t| (t.time_s, t.instrument.clone())).collect();
        assert_eq!(
            order,
            vec![(1.0, "grasper".to_string()), (1.0, "hook".to_string()), (2.0, "hook".to_string())]
        );
    }

    #[test]
    fn broadcast_single_label_covers_31_frames() {
        let dense = broadcast_sparse_labels(&[tuple(1.0, "grasper", None)], 30.0, 0.5);
        assert_eq!(dense.len(), 31);
        assert!((dense.first().unwrap().time_s - 0.5).abs() < 1e-12);
        assert!((dense.last().unwrap().time_s - 1.5).abs() < 1e-12);
    }

    #[test]
    fn broadcast_tie_takes_earlier_frame() {
        let sparse = vec![
            tuple(1.0, "grasper", Some("retract")),
            tuple(2.0, "grasper", Some("dissect")),
        ];
        let dense = broadcast_sparse_labels(&sparse, 2.0, 0.5);
        let mid = dense.iter().find(|t| (t.time_s - 1.5).abs() < 1e-12).unwrap();
        assert_eq!(mid.interaction.as_ref().unwrap().verb, "retract");
    }

    #[test]
    fn broadcast_empty_is_empty() {
        assert!(broadcast_sparse_labels(&[], 30.0, 0.5).is_empty());
    }

    #[test]
    fn broadcast_grid_never_goes_negative() {
        let dense = broadcast_sparse_labels(&[tuple(0.0, "grasper", None)], 30.0, 0.5);
        assert!((dense.first().unwrap().time_s - 0.0).abs() < 1e-12);
        assert_eq!(dense.len(), 16);
    }

    #[test]
    fn segment_65_55_15() {
        let c65 = segment_clips("v", 65.0, 30.0, 20.0, 30.0);
        assert_eq!(
            c65.iter().map(|c| (c.start_s, c.end_s)).collect::<Vec<_>>(),
            vec![(0.0, 30.0), (30.0, 60.0)]
        );
        assert_eq!(c65[0].clip_id, "v_clip000");
        assert_eq!(c65[1].clip_id, "v_clip001");

        let c55 = segment_clips("v", 55.0, 30.0, 20.0, 30.0);
        assert_eq!(
            c55.iter().map(|c| (c.start_s, c.end_s)).collect::<Vec<_>>(),
            vec![(0.0, 30.0), (30.0, 55.0)]
        );

        assert!(segment_clips("v", 15.0, 30.0, 20.0, 30.0).is_empty());
    }

    #[test]
    fn normalize_time_examples() {
        let clip = ClipManifest::new("c", "v", 0.0, 30.0, 30.0).unwrap();
        assert_eq!(normalize_time(7.5, &clip).unwrap(), 0.25);
        assert_eq!(normalize_time(0.0, &clip).unwrap(), 0.0);
        assert_eq!(normalize_time(30.0, &clip).unwrap(), 1.0);
        assert!(normalize_time(31.0, &clip).is_err());
        assert!(normalize_time(-1.0, &clip).is_err());
    }

    #[test]
    fn quantize_examples() {
        let q = |b: [f64; 4]| quantize_bbox(&BBox::new(b[0], b[1], b[2], b[3]).unwrap());
        assert_eq!(q([0.1, 0.2, 0.3, 0.4]), QuantBBox::new(100, 200, 300, 400).unwrap());
        assert_eq!(q([0.0, 0.0, 1.0, 1.0]), QuantBBox::new(0, 0, 1000, 1000).unwrap());
        let narrow = q([0.1004, 0.2, 0.1006, 0.4]);
        assert_eq!((narrow.x1, narrow.x2), (100, 101));
    }

    #[test]
    fn quantize_widens_collapsed_pairs() {
        let collapsed = quantize_bbox(&BBox::new(0.3001, 0.2, 0.3002, 0.4).unwrap());
        assert_eq!((collapsed.x1, collapsed.x2), (300, 301));
        let capped = quantize_bbox(&BBox::new(0.9996, 0.2, 0.9998, 0.4).unwrap());
        assert_eq!((capped.x1, capped.x2), (999, 1000));
    }
}
