//! Scripted scene synthesis and an analytic oracle over the scripts.
//!
//! A scene script places instruments on piecewise-linear paths with optional
//! interaction phases, all on a fixed frame grid. Rendering produces exactly
//! the event tuples the ingest path would, so the whole downstream pipeline
//! can be exercised against ground truth that is computable in closed form.
//! `oracle_check` re-derives every generated gold payload from the script
//! alone, sharing no code path with track building or candidate enumeration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{quantize_bbox, BBox, ClipManifest, EventTuple, Interaction, TIME_EPS};
use crate::metrics::iou_unit;
use crate::qa::gold::{
    horizontal_third, round_dp, vertical_third, ComparisonVerdict, DistanceChange, GoldPayload,
    HorizontalRelation, VerticalRelation,
};
use crate::qa::{GeneratedDataset, QASample, QueryInfo};
use crate::tracks::{classify_motion, ExtremeDirection, MotionThresholds};
use crate::vocab::{LabelKind, Vocabulary};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file")]
    Io(#[from] std::io::Error),
    #[error("scene file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("scene {scene:?}: {msg}")]
    Invalid { scene: String, msg: String },
}

/// Linear motion over `[t_start, t_end)`. The interval is closed on the right
/// only when it ends exactly at the scene end, so the final grid frame still
/// renders while abutting segments never double-render a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub from: [f64; 4],
    /// Box at `t_end`; omitted for a static segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<[f64; 4]>,
}

/// Constant verb/target phase over `[t_start, t_end)`, same edge rule as
/// motions. Phases outside motion coverage simply never render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub verb: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentScript {
    pub name: String,
    pub motions: Vec<MotionSegment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<InteractionSegment>,
}

/// One scripted single-clip scene on a fixed frame grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScript {
    pub id: String,
    pub duration_s: f64,
    pub fps: f64,
    #[serde(default)]
    pub instruments: Vec<InstrumentScript>,
}

impl SceneScript {
    pub fn from_toml_str(s: &str) -> Result<Self, SceneError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn clip_id(&self) -> String {
        format!("{}_clip000", self.id)
    }

    fn invalid(&self, msg: String) -> SceneError {
        SceneError::Invalid { scene: self.id.clone(), msg }
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), SceneError> {
        if self.id.is_empty() {
            return Err(self.invalid("id must not be empty".into()));
        }
        if !(self.duration_s > 0.0) || !(self.fps > 0.0) {
            return Err(self.invalid("duration_s and fps must be positive".into()));
        }
        let frames = self.duration_s * self.fps;
        if (frames - frames.round()).abs() > 1e-6 {
            return Err(self.invalid("duration_s must be a whole number of frames".into()));
        }
        for inst in &self.instruments {
            let at = |msg: String| self.invalid(format!("instrument {:?}: {msg}", inst.name));
            if !vocab.is_canonical(LabelKind::Instrument, &inst.name) {
                return Err(at("not a canonical instrument label".into()));
            }
            if inst.motions.is_empty() {
                return Err(at("needs at least one motion segment".into()));
            }
            for m in &inst.motions {
                if !(m.t_start < m.t_end) {
                    return Err(at("motion segment needs t_start < t_end".into()));
                }
                if m.t_start < -TIME_EPS || m.t_end > self.duration_s + TIME_EPS {
                    return Err(at("motion segment outside the scene".into()));
                }
                // Endpoint validity carries through the whole segment: every
                // in-between box is a convex combination of the endpoints.
                for b in [Some(m.from), m.to].into_iter().flatten() {
                    BBox::new(b[0], b[1], b[2], b[3]).map_err(|e| at(e.to_string()))?;
                }
            }
            for pair in inst.motions.windows(2) {
                if pair[1].t_start < pair[0].t_end - TIME_EPS {
                    return Err(at("motion segments must be sorted and non-overlapping".into()));
                }
            }
            for i in &inst.interactions {
                if !(i.t_start < i.t_end) {
                    return Err(at("interaction segment needs t_start < t_end".into()));
                }
                if i.t_start < -TIME_EPS || i.t_end > self.duration_s + TIME_EPS {
                    return Err(at("interaction segment outside the scene".into()));
                }
                if !vocab.is_canonical(LabelKind::Verb, &i.verb) {
                    return Err(at(format!("unknown verb {:?}", i.verb)));
                }
                if !vocab.is_canonical(LabelKind::Target, &i.target) {
                    return Err(at(format!("unknown target {:?}", i.target)));
                }
            }
            for pair in inst.interactions.windows(2) {
                if pair[1].t_start < pair[0].t_end - TIME_EPS {
                    return Err(at(
                        "interaction segments must be sorted and non-overlapping".into()
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Whether `t` lies in a segment, with the right edge closed only at the
/// scene end.
fn seg_contains(t_start: f64, t_end: f64, t: f64, scene_end: f64) -> bool {
    if t < t_start - TIME_EPS {
        return false;
    }
    if t < t_end - TIME_EPS {
        return true;
    }
    t_end >= scene_end - TIME_EPS && t <= t_end + TIME_EPS
}

fn lerp_box(seg: &MotionSegment, t: f64) -> BBox {
    let b = match seg.to {
        None => seg.from,
        Some(to) => {
            let u = ((t - seg.t_start) / (seg.t_end - seg.t_start)).clamp(0.0, 1.0);
            std::array::from_fn(|i| seg.from[i] + (to[i] - seg.from[i]) * u)
        }
    };
    BBox::new(b[0], b[1], b[2], b[3]).expect("validated endpoints keep interpolants valid")
}

/// Renders the script onto its frame grid: manifest spanning the whole scene
/// plus tuples sorted the way ingest sorts them.
pub fn render_scene(
    script: &SceneScript,
    vocab: &Vocabulary,
) -> Result<(ClipManifest, Vec<EventTuple>), SceneError> {
    script.validate(vocab)?;
    let clip = ClipManifest::new(script.clip_id(), &script.id, 0.0, script.duration_s, script.fps)
        .map_err(|e| SceneError::Invalid { scene: script.id.clone(), msg: e.to_string() })?;
    let oracle = SceneOracle::new(script);
    let frames = (script.duration_s * script.fps).round() as i64;
    let mut tuples = Vec::new();
    for k in 0..=frames {
        let t = k as f64 / script.fps;
        for inst in &script.instruments {
            let Some(bbox) = oracle.entry_bbox_at(inst, t) else { continue };
            let interaction = oracle
                .entry_interaction_at(inst, t)
                .map(|(v, g)| Interaction { verb: v.to_string(), target: g.to_string() });
            tuples.push(EventTuple {
                time_s: t,
                instrument: inst.name.clone(),
                bbox,
                interaction,
                source_frame_index: k,
            });
        }
    }
    tuples.sort_by(|a, b| a.time_s.total_cmp(&b.time_s).then_with(|| a.instrument.cmp(&b.instrument)));
    Ok((clip, tuples))
}

/// Closed-form view of a script: positions, presence, interactions, and
/// per-gap kinematics straight from the segment definitions.
pub struct SceneOracle<'a> {
    pub script: &'a SceneScript,
}

impl<'a> SceneOracle<'a> {
    pub fn new(script: &'a SceneScript) -> Self {
        Self { script }
    }

    fn period(&self) -> f64 {
        1.0 / self.script.fps
    }

    fn frame_count(&self) -> i64 {
        (self.script.duration_s * self.script.fps).round() as i64
    }

    fn key(&self, t: f64) -> i64 {
        (t * self.script.fps).round() as i64
    }

    fn entry_bbox_at(&self, inst: &InstrumentScript, t: f64) -> Option<BBox> {
        inst.motions
            .iter()
            .find(|m| seg_contains(m.t_start, m.t_end, t, self.script.duration_s))
            .map(|m| lerp_box(m, t))
    }

    fn entry_interaction_at<'s>(
        &self,
        inst: &'s InstrumentScript,
        t: f64,
    ) -> Option<(&'s str, &'s str)> {
        inst.interactions
            .iter()
            .find(|i| seg_contains(i.t_start, i.t_end, t, self.script.duration_s))
            .map(|i| (i.verb.as_str(), i.target.as_str()))
    }

    /// The entry scripting `name`, when exactly one does.
    pub fn entry(&self, name: &str) -> Option<&'a InstrumentScript> {
        let mut hits = self.script.instruments.iter().filter(|i| i.name == name);
        let first = hits.next()?;
        hits.next().is_none().then_some(first)
    }

    pub fn bbox_at(&self, name: &str, t: f64) -> Option<BBox> {
        self.entry_bbox_at(self.entry(name)?, t)
    }

    pub fn interaction_at(&self, name: &str, t: f64) -> Option<(&'a str, &'a str)> {
        let entry = self.entry(name)?;
        self.entry_interaction_at(entry, t)
    }

    /// Every scripted entry visible at `t`, with its box. Names can repeat.
    pub fn visible_at(&self, t: f64) -> Vec<(&'a str, BBox)> {
        self.script
            .instruments
            .iter()
            .filter_map(|i| self.entry_bbox_at(i, t).map(|b| (i.name.as_str(), b)))
            .collect()
    }

    pub fn count_at(&self, t: f64) -> usize {
        self.visible_at(t).len()
    }

    pub fn present(&self, class: &str, t: f64) -> bool {
        self.visible_at(t).iter().any(|(n, _)| *n == class)
    }

    /// First and last grid times at which `name` renders.
    pub fn presence_window(&self, name: &str) -> Option<(f64, f64)> {
        let entry = self.entry(name)?;
        let p = self.period();
        let mut first = None;
        let mut last = None;
        for k in 0..=self.frame_count() {
            let t = k as f64 * p;
            if self.entry_bbox_at(entry, t).is_some() {
                first.get_or_insert(t);
                last = Some(t);
            }
        }
        Some((first?, last?))
    }

    /// Per-gap speeds over the grid frames of `[a, b]`, in unit distance per
    /// second. `None` when the instrument misses a frame in the window.
    pub fn speeds_over(&self, name: &str, a: f64, b: f64) -> Option<Vec<f64>> {
        let entry = self.entry(name)?;
        let p = self.period();
        let (k1, k2) = (self.key(a), self.key(b));
        if k2 <= k1 {
            return None;
        }
        let mut centroids = Vec::with_capacity((k2 - k1 + 1) as usize);
        for k in k1..=k2 {
            centroids.push(self.entry_bbox_at(entry, k as f64 * p)?.centroid());
        }
        Some(
            centroids
                .windows(2)
                .map(|w| {
                    let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                    (dx * dx + dy * dy).sqrt() / p
                })
                .collect(),
        )
    }

    /// Extreme-position frame over the grid frames of `[a, b]`: strict
    /// improvements only, so ties keep the earliest frame. Top is the minimum
    /// y, per image convention.
    pub fn extreme(
        &self,
        name: &str,
        a: f64,
        b: f64,
        direction: ExtremeDirection,
    ) -> Option<(f64, BBox)> {
        let entry = self.entry(name)?;
        let p = self.period();
        let mut best: Option<(f64, f64, BBox)> = None;
        for k in self.key(a)..=self.key(b) {
            let t = k as f64 * p;
            let bbox = self.entry_bbox_at(entry, t)?;
            let (cx, cy) = bbox.centroid();
            let value = match direction {
                ExtremeDirection::Left => -cx,
                ExtremeDirection::Right => cx,
                ExtremeDirection::Top => -cy,
                ExtremeDirection::Bottom => cy,
            };
            let improves = best.as_ref().is_none_or(|(bv, _, _)| value > bv + 1e-12);
            if improves {
                best = Some((value, t, bbox));
            }
        }
        best.map(|(_, t, bbox)| (t, bbox))
    }
}

/// One mismatch between a generated payload and the script-derived value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub sample_id: String,
    pub field: String,
    pub detail: String,
}

struct Checker<'a> {
    sample_id: &'a str,
    out: Vec<Discrepancy>,
}

impl<'a> Checker<'a> {
    fn new(sample_id: &'a str) -> Self {
        Self { sample_id, out: Vec::new() }
    }

    fn fail(&mut self, field: &str, detail: String) {
        self.out.push(Discrepancy {
            sample_id: self.sample_id.to_string(),
            field: field.to_string(),
            detail,
        });
    }

    fn eq<T: PartialEq + std::fmt::Debug + ?Sized>(&mut self, field: &str, got: &T, want: &T) {
        if got != want {
            self.fail(field, format!("payload {got:?}, script says {want:?}"));
        }
    }

    fn num(&mut self, field: &str, got: f64, want: f64) {
        if (got - want).abs() > 1e-9 {
            self.fail(field, format!("payload {got}, script says {want}"));
        }
    }
}

fn norm2(t: f64, duration: f64) -> f64 {
    round_dp(t / duration, 2)
}

fn centroid_distance(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.centroid();
    let (bx, by) = b.centroid();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

/// Option text the correct letter points at.
fn correct_option(s: &QASample) -> Option<&str> {
    let GoldPayload::Multichoice { correct } = &s.gold else { return None };
    let idx = (*correct as u8).checked_sub(b'A')? as usize;
    s.options.as_ref()?.get(idx).map(String::as_str)
}

fn check_sample(
    s: &QASample,
    info: &QueryInfo,
    oracle: &SceneOracle,
    thresholds: &MotionThresholds,
) -> Vec<Discrepancy> {
    let mut c = Checker::new(&s.sample_id);
    let d = oracle.script.duration_s;
    // Shorthands; a query field the generator must have set for this schema.
    macro_rules! want {
        ($opt:expr, $field:literal) => {
            match &$opt {
                Some(v) => v,
                None => {
                    c.fail($field, "query info lacks this field".to_string());
                    return c.out;
                }
            }
        };
    }

    match &s.gold {
        GoldPayload::TemporalWindow { entries } => {
            for e in entries {
                match oracle.presence_window(&e.name) {
                    None => c.fail("entries", format!("{:?} not uniquely scripted", e.name)),
                    Some((t0, t1)) => {
                        c.num("start_t", e.start_t, norm2(t0, d));
                        c.num("end_t", e.end_t, norm2(t1, d));
                        let b0 = oracle.bbox_at(&e.name, t0).unwrap();
                        let b1 = oracle.bbox_at(&e.name, t1).unwrap();
                        c.eq("start_bbox", &e.start_bbox, &quantize_bbox(&b0));
                        c.eq("end_bbox", &e.end_bbox, &quantize_bbox(&b1));
                    }
                }
            }
        }
        GoldPayload::Locate { name, bbox } => {
            let t = want!(info.t_s, "t_s");
            match oracle.bbox_at(name, *t) {
                None => c.fail("bbox", format!("{name:?} not visible at {t}")),
                Some(b) => c.eq("bbox", bbox, &quantize_bbox(&b)),
            }
        }
        GoldPayload::ClosestInstrument { name } => {
            let t = want!(info.t_s, "t_s");
            let probe = want!(info.probe_bbox, "probe_bbox");
            let pc = probe.center_unit();
            let best = oracle
                .visible_at(*t)
                .into_iter()
                .min_by(|(_, a), (_, b)| {
                    let (ac, bc) = (a.centroid(), b.centroid());
                    let da = (pc.0 - ac.0).powi(2) + (pc.1 - ac.1).powi(2);
                    let db = (pc.0 - bc.0).powi(2) + (pc.1 - bc.1).powi(2);
                    da.total_cmp(&db)
                })
                .map(|(n, _)| n.to_string());
            match best {
                None => c.fail("name", format!("nothing visible at {t}")),
                Some(b) => c.eq("name", name, &b),
            }
        }
        GoldPayload::FrameSegment { name, horizontal, vertical } => {
            let t = want!(info.t_s, "t_s");
            match oracle.bbox_at(name, *t) {
                None => c.fail("name", format!("{name:?} not visible at {t}")),
                Some(b) => {
                    let (cx, cy) = b.centroid();
                    c.eq("horizontal", horizontal, &horizontal_third(cx));
                    c.eq("vertical", vertical, &vertical_third(cy));
                }
            }
        }
        GoldPayload::TrajectoryExtreme { name, direction, t, bbox } => {
            let (a, b) = *want!(info.window_s, "window_s");
            match oracle.extreme(name, a, b, *direction) {
                None => c.fail("t", format!("{name:?} misses frames in [{a}, {b}]")),
                Some((te, be)) => {
                    c.num("t", *t, norm2(te, d));
                    c.eq("bbox", bbox, &quantize_bbox(&be));
                }
            }
        }
        GoldPayload::SequentialActions { name, next_verb } => {
            let t1 = want!(info.t_s, "t_s");
            let t2 = want!(info.t2_s, "t2_s");
            match (oracle.interaction_at(name, *t1), oracle.interaction_at(name, *t2)) {
                (Some((v1, _)), Some((v2, _))) => {
                    c.eq("next_verb", next_verb.as_str(), v2);
                    if v1 == v2 {
                        c.fail("next_verb", format!("script verb does not change at {t2}"));
                    }
                }
                _ => c.fail("next_verb", format!("{name:?} lacks interactions at {t1}/{t2}")),
            }
        }
        GoldPayload::ActionStatus { name, verb } => {
            let (a, b) = *want!(info.window_s, "window_s");
            for t in [a, b] {
                match oracle.interaction_at(name, t) {
                    Some((v, _)) => c.eq("verb", verb.as_str(), v),
                    None => c.fail("verb", format!("{name:?} has no interaction at {t}")),
                }
            }
        }
        GoldPayload::TargetInteraction { name, target } => {
            let (a, b) = *want!(info.window_s, "window_s");
            for t in [a, b] {
                match oracle.interaction_at(name, t) {
                    Some((_, g)) => c.eq("target", target.as_str(), g),
                    None => c.fail("target", format!("{name:?} has no interaction at {t}")),
                }
            }
        }
        GoldPayload::InstrumentId { name } => {
            let t = want!(info.t_s, "t_s");
            let probe = want!(info.probe_bbox, "probe_bbox");
            let probe_unit = BBox::new(
                probe.x1 as f64 / 1000.0,
                probe.y1 as f64 / 1000.0,
                probe.x2 as f64 / 1000.0,
                probe.y2 as f64 / 1000.0,
            )
            .unwrap();
            let best = oracle
                .visible_at(*t)
                .into_iter()
                .max_by(|(_, a), (_, b)| {
                    iou_unit(&probe_unit, a).total_cmp(&iou_unit(&probe_unit, b))
                })
                .map(|(n, _)| n.to_string());
            match best {
                None => c.fail("name", format!("nothing visible at {t}")),
                Some(b) => c.eq("name", name, &b),
            }
        }
        GoldPayload::RelativePosition { name1, name2, horizontal, vertical } => {
            let t = want!(info.t_s, "t_s");
            match (oracle.bbox_at(name1, *t), oracle.bbox_at(name2, *t)) {
                (Some(b1), Some(b2)) => {
                    let (c1, c2) = (b1.centroid(), b2.centroid());
                    let h = if c1.0 > c2.0 {
                        HorizontalRelation::Right
                    } else {
                        HorizontalRelation::Left
                    };
                    let v = if c1.1 > c2.1 {
                        VerticalRelation::Below
                    } else {
                        VerticalRelation::Above
                    };
                    c.eq("horizontal", horizontal, &h);
                    c.eq("vertical", vertical, &v);
                }
                _ => c.fail("horizontal", format!("pair not visible at {t}")),
            }
        }
        GoldPayload::RelativeChange { name1, name2, change } => {
            let (a, b) = *want!(info.window_s, "window_s");
            let boxes = (
                oracle.bbox_at(name1, a),
                oracle.bbox_at(name2, a),
                oracle.bbox_at(name1, b),
                oracle.bbox_at(name2, b),
            );
            match boxes {
                (Some(a1), Some(a2), Some(b1), Some(b2)) => {
                    let d1 = centroid_distance(&a1, &a2);
                    let d2 = centroid_distance(&b1, &b2);
                    let want = if d2 < d1 - 0.02 {
                        DistanceChange::Closer
                    } else if d2 > d1 + 0.02 {
                        DistanceChange::Further
                    } else {
                        DistanceChange::Unchanged
                    };
                    c.eq("change", change, &want);
                }
                _ => c.fail("change", format!("pair not visible at {a} and {b}")),
            }
        }
        GoldPayload::InteractionComparison {
            name1,
            name2,
            verdict,
            verb1,
            target1,
            verb2,
            target2,
        } => {
            let (a, b) = *want!(info.window_s, "window_s");
            for t in [a, b] {
                match (oracle.interaction_at(name1, t), oracle.interaction_at(name2, t)) {
                    (Some((v1, g1)), Some((v2, g2))) => {
                        c.eq("verb1", verb1.as_str(), v1);
                        c.eq("target1", target1.as_str(), g1);
                        c.eq("verb2", verb2.as_str(), v2);
                        c.eq("target2", target2.as_str(), g2);
                        let want = if (v1, g1) == (v2, g2) {
                            ComparisonVerdict::Same
                        } else {
                            ComparisonVerdict::Different
                        };
                        c.eq("verdict", verdict, &want);
                    }
                    _ => c.fail("verdict", format!("pair lacks interactions at {t}")),
                }
            }
        }
        GoldPayload::Velocity { name, min_speed, max_speed, mean_speed, descriptor } => {
            let (a, b) = *want!(info.window_s, "window_s");
            match oracle.speeds_over(name, a, b) {
                None => c.fail("mean_speed", format!("{name:?} misses frames in [{a}, {b}]")),
                Some(speeds) => {
                    let min = speeds.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = speeds.iter().copied().fold(0.0, f64::max);
                    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
                    c.num("min_speed", *min_speed, round_dp(min, 3));
                    c.num("max_speed", *max_speed, round_dp(max, 3));
                    c.num("mean_speed", *mean_speed, round_dp(mean, 3));
                    c.eq("descriptor", descriptor, &classify_motion(mean, thresholds));
                }
            }
        }
        GoldPayload::Multichoice { .. } => {
            let t = want!(info.t_s, "t_s");
            let Some(text) = correct_option(s) else {
                c.fail("correct", "correct letter points outside the options".to_string());
                return c.out;
            };
            match s.subtask {
                crate::qa::Subtask::McExistence => {
                    let class = want!(info.instrument, "instrument");
                    let want = if oracle.present(class, *t) { "yes" } else { "no" };
                    c.eq("correct", &text, &want);
                }
                crate::qa::Subtask::McClass => {
                    let class = want!(info.instrument, "instrument");
                    c.eq("correct", &text, &class.as_str());
                    if !oracle.present(class, *t) {
                        c.fail("correct", format!("{class:?} not visible at {t}"));
                    }
                    for o in s.options.as_ref().unwrap() {
                        if o != class && oracle.present(o, *t) {
                            c.fail("options", format!("distractor {o:?} is visible at {t}"));
                        }
                    }
                }
                crate::qa::Subtask::McCounting => {
                    let count = oracle.count_at(*t);
                    c.eq("correct", &text, &count.to_string().as_str());
                    if info.true_count != Some(count) {
                        c.fail("true_count", format!("recorded {:?}, script says {count}", info.true_count));
                    }
                }
                other => c.fail("subtask", format!("unexpected multichoice subtask {}", other.id())),
            }
        }
        GoldPayload::Cot {
            name,
            horizontal,
            vertical,
            bbox,
            descriptor,
            mean_speed,
            verb,
            target,
        } => {
            let (a, b) = *want!(info.window_s, "window_s");
            match oracle.bbox_at(name, a) {
                None => c.fail("bbox", format!("{name:?} not visible at {a}")),
                Some(first) => {
                    let (cx, cy) = first.centroid();
                    c.eq("horizontal", horizontal, &horizontal_third(cx));
                    c.eq("vertical", vertical, &vertical_third(cy));
                    c.eq("bbox", bbox, &quantize_bbox(&first));
                }
            }
            match oracle.speeds_over(name, a, b) {
                None => c.fail("mean_speed", format!("{name:?} misses frames in [{a}, {b}]")),
                Some(speeds) => {
                    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
                    c.num("mean_speed", *mean_speed, round_dp(mean, 3));
                    c.eq("descriptor", descriptor, &classify_motion(mean, thresholds));
                }
            }
            for t in [a, b] {
                match oracle.interaction_at(name, t) {
                    Some((v, g)) => {
                        c.eq("verb", verb.as_str(), v);
                        c.eq("target", target.as_str(), g);
                    }
                    None => c.fail("verb", format!("{name:?} has no interaction at {t}")),
                }
            }
        }
    }
    c.out
}

/// Re-derives every sample's gold from its scene script. Samples from clips
/// without a script are skipped; an empty result means full agreement.
pub fn oracle_check(
    dataset: &GeneratedDataset,
    scripts: &[SceneScript],
    thresholds: &MotionThresholds,
) -> Vec<Discrepancy> {
    let oracles: BTreeMap<String, SceneOracle> =
        scripts.iter().map(|s| (s.clip_id(), SceneOracle::new(s))).collect();
    let mut out = Vec::new();
    for s in &dataset.samples {
        let Some(oracle) = oracles.get(&s.clip_id) else { continue };
        match dataset.query_info.get(&s.sample_id) {
            None => out.push(Discrepancy {
                sample_id: s.sample_id.clone(),
                field: "query_info".into(),
                detail: "no recorded query coordinates".into(),
            }),
            Some(info) => out.extend(check_sample(s, info, oracle, thresholds)),
        }
    }
    out
}
