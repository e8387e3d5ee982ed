//! Instrument tracks: greedy association of per-frame detections, continuity
//! checks, kinematics, interaction blocks, and trajectory queries.
//!
//! Box coordinates follow image convention: origin top-left, y grows downward.
//! "top" extremes and "above" relations therefore mean smaller y.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{BBox, ClipManifest, EventTuple, Interaction};

/// Frame-time tolerance for track logic (sample alignment, gap detection).
pub const FRAME_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("window too short: fewer than 2 samples")]
    WindowTooShort,
    #[error("no samples in window")]
    EmptyWindow,
    #[error("window bounds invalid: t_start must not exceed t_end")]
    BadWindow,
}

/// One tracked detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub bbox: BBox,
}

impl TrackSample {
    pub fn centroid(&self) -> (f64, f64) {
        self.bbox.centroid()
    }
}

/// Closed time interval a longitudinal query ranges over.
///
/// `new` enforces a strictly positive span; `span` additionally admits the
/// degenerate single-instant window that arises from one-sample interaction
/// blocks. Degenerate windows never back longitudinal queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryWindow {
    pub t_start: f64,
    pub t_end: f64,
}

impl QueryWindow {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self, TrackError> {
        if !(t_start < t_end) {
            return Err(TrackError::BadWindow);
        }
        Ok(Self { t_start, t_end })
    }

    pub fn span(t_start: f64, t_end: f64) -> Result<Self, TrackError> {
        if !(t_start <= t_end) {
            return Err(TrackError::BadWindow);
        }
        Ok(Self { t_start, t_end })
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start - FRAME_EPS && t <= self.t_end + FRAME_EPS
    }
}

/// Contiguous motion of one instrument instance at the clip frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentTrack {
    pub track_id: u32,
    pub instrument: String,
    pub samples: Vec<TrackSample>,
    pub sampling_period_s: f64,
}

impl InstrumentTrack {
    pub fn first_t(&self) -> f64 {
        self.samples.first().map(|s| s.t).unwrap_or(f64::NAN)
    }

    pub fn last_t(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(f64::NAN)
    }

    /// Samples with t inside the closed window.
    pub fn samples_in(&self, window: &QueryWindow) -> &[TrackSample] {
        let lo = self.samples.partition_point(|s| s.t < window.t_start - FRAME_EPS);
        let hi = self.samples.partition_point(|s| s.t <= window.t_end + FRAME_EPS);
        &self.samples[lo..hi]
    }

    /// Sample at frame time t, if the track covers it.
    pub fn sample_at(&self, t: f64) -> Option<&TrackSample> {
        let lo = self.samples.partition_point(|s| s.t < t - FRAME_EPS);
        self.samples.get(lo).filter(|s| (s.t - t).abs() <= FRAME_EPS)
    }
}

/// Greedy nearest-centroid association of detections into tracks.
///
/// Per frame and per instrument class, open tracks whose last sample sits one
/// sampling period back compete for this frame's detections in ascending
/// distance order; pairs farther apart than `assoc_gate` stay unmatched.
/// Unmatched detections open new tracks; a track that misses its expected
/// frame closes (zero gap tolerance).
pub fn build_tracks(
    tuples: &[EventTuple],
    clip: &ClipManifest,
    assoc_gate: f64,
) -> Vec<InstrumentTrack> {
    let period = clip.sampling_period_s();
    let mut open: Vec<InstrumentTrack> = Vec::new();
    let mut done: Vec<InstrumentTrack> = Vec::new();
    let mut next_id: u32 = 0;

    let mut i = 0;
    while i < tuples.len() {
        let t = tuples[i].time_s;
        let mut j = i;
        while j < tuples.len() && (tuples[j].time_s - t).abs() <= FRAME_EPS {
            j += 1;
        }
        let frame = &tuples[i..j];
        i = j;

        // Tracks that missed their expected frame close before matching.
        let (still_open, closed): (Vec<_>, Vec<_>) =
            open.into_iter().partition(|tr| t - tr.last_t() <= period + FRAME_EPS);
        open = still_open;
        done.extend(closed);

        // Frame detections per class, in input order.
        let mut classes: Vec<&str> = frame.iter().map(|d| d.instrument.as_str()).collect();
        classes.sort_unstable();
        classes.dedup();

        for class in classes {
            let dets: Vec<&EventTuple> =
                frame.iter().filter(|d| d.instrument == class).collect();
            let cands: Vec<usize> = open
                .iter()
                .enumerate()
                .filter(|(_, tr)| {
                    tr.instrument == class && (t - tr.last_t() - period).abs() <= FRAME_EPS
                })
                .map(|(idx, _)| idx)
                .collect();

            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (ci, &tr_idx) in cands.iter().enumerate() {
                let last = open[tr_idx].samples.last().unwrap().centroid();
                for (di, det) in dets.iter().enumerate() {
                    let c = det.bbox.centroid();
                    let d = ((c.0 - last.0).powi(2) + (c.1 - last.1).powi(2)).sqrt();
                    if d <= assoc_gate {
                        pairs.push((d, ci, di));
                    }
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

            let mut track_used = vec![false; cands.len()];
            let mut det_used = vec![false; dets.len()];
            for (_, ci, di) in pairs {
                if track_used[ci] || det_used[di] {
                    continue;
                }
                track_used[ci] = true;
                det_used[di] = true;
                open[cands[ci]].samples.push(TrackSample { t, bbox: dets[di].bbox });
            }
            for (di, det) in dets.iter().enumerate() {
                if !det_used[di] {
                    open.push(InstrumentTrack {
                        track_id: next_id,
                        instrument: class.to_string(),
                        samples: vec![TrackSample { t, bbox: det.bbox }],
                        sampling_period_s: period,
                    });
                    next_id += 1;
                }
            }
        }
    }
    done.extend(open);
    done.sort_by(|a, b| {
        a.instrument
            .cmp(&b.instrument)
            .then(a.first_t().total_cmp(&b.first_t()))
            .then(a.track_id.cmp(&b.track_id))
    });
    done
}

/// True iff every expected sample time in the window (stepping by the track's
/// sampling period from `t_start`) has a sample within [`FRAME_EPS`].
pub fn check_temporal_continuity(track: &InstrumentTrack, window: &QueryWindow) -> bool {
    let p = track.sampling_period_s;
    let mut expected = window.t_start;
    while expected <= window.t_end + FRAME_EPS {
        if track.sample_at(expected).is_none() {
            return false;
        }
        expected += p;
    }
    true
}

/// True iff every consecutive centroid displacement is at most `delta`
/// (boundary inclusive). Fewer than two samples pass vacuously.
pub fn check_spatial_continuity(track: &InstrumentTrack, delta: f64) -> bool {
    spatial_continuity_over(&track.samples, delta)
}

/// Slice form of [`check_spatial_continuity`], used on sub-windows.
pub fn spatial_continuity_over(samples: &[TrackSample], delta: f64) -> bool {
    samples.windows(2).all(|w| {
        let a = w[0].centroid();
        let b = w[1].centroid();
        let d = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        d <= delta + 1e-12
    })
}

/// How a mean speed reads in text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotionDescriptor {
    #[serde(rename = "stationary")]
    Stationary,
    #[serde(rename = "moving slowly")]
    MovingSlowly,
    #[serde(rename = "moving actively")]
    MovingActively,
}

impl std::fmt::Display for MotionDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Stationary => "stationary",
            Self::MovingSlowly => "moving slowly",
            Self::MovingActively => "moving actively",
        })
    }
}

/// Speed cut points for the motion descriptors, in unit distance per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionThresholds {
    /// Below this, motion reads as stationary.
    pub stationary_below: f64,
    /// At or above this, motion reads as moving actively.
    pub active_from: f64,
}

impl Default for MotionThresholds {
    fn default() -> Self {
        Self { stationary_below: 0.02, active_from: 0.10 }
    }
}

pub fn classify_motion(mean_speed: f64, thresholds: &MotionThresholds) -> MotionDescriptor {
    assert!(mean_speed >= 0.0);
    if mean_speed < thresholds.stationary_below {
        MotionDescriptor::Stationary
    } else if mean_speed < thresholds.active_from {
        MotionDescriptor::MovingSlowly
    } else {
        MotionDescriptor::MovingActively
    }
}

/// Speed statistics over a window, with the descriptor for the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSummary {
    pub min_speed: f64,
    pub max_speed: f64,
    pub mean_speed: f64,
    pub descriptor: MotionDescriptor,
}

/// Per consecutive in-window sample pair, speed = centroid displacement over
/// time gap; min/max/mean over the pairs.
pub fn compute_kinematics(
    track: &InstrumentTrack,
    window: &QueryWindow,
    thresholds: &MotionThresholds,
) -> Result<KinematicSummary, TrackError> {
    let samples = track.samples_in(window);
    if samples.len() < 2 {
        return Err(TrackError::WindowTooShort);
    }
    let mut min = f64::INFINITY;
    let mut max = 0.0_f64;
    let mut sum = 0.0_f64;
    let mut n = 0usize;
    for w in samples.windows(2) {
        let a = w[0].centroid();
        let b = w[1].centroid();
        let dt = w[1].t - w[0].t;
        let speed = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt() / dt;
        min = min.min(speed);
        max = max.max(speed);
        sum += speed;
        n += 1;
    }
    let mean = sum / n as f64;
    Ok(KinematicSummary {
        min_speed: min,
        max_speed: max,
        mean_speed: mean,
        descriptor: classify_motion(mean, thresholds),
    })
}

/// Maximal run of frames over which one instrument keeps one (verb, target)
/// pair; `interaction` is absent for unannotated (null) runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticBlock {
    pub instrument: String,
    pub interaction: Option<Interaction>,
    pub window: QueryWindow,
    pub sample_count: usize,
}

/// Groups one instrument's tuples into maximal constant-interaction runs.
/// A time gap larger than the sampling period breaks a run even when the
/// labels match.
pub fn group_semantic_blocks(
    tuples: &[EventTuple],
    sampling_period_s: f64,
) -> Vec<SemanticBlock> {
    let mut blocks: Vec<SemanticBlock> = Vec::new();
    for tuple in tuples {
        let extend = blocks.last().is_some_and(|b| {
            b.interaction == tuple.interaction
                && tuple.time_s - b.window.t_end <= sampling_period_s + FRAME_EPS
        });
        if extend {
            let b = blocks.last_mut().unwrap();
            b.window.t_end = tuple.time_s;
            b.sample_count += 1;
        } else {
            blocks.push(SemanticBlock {
                instrument: tuple.instrument.clone(),
                interaction: tuple.interaction.clone(),
                window: QueryWindow::span(tuple.time_s, tuple.time_s).unwrap(),
                sample_count: 1,
            });
        }
    }
    blocks
}

/// Direction of a trajectory-extreme query. Left/top minimize the respective
/// centroid coordinate; right/bottom maximize it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremeDirection {
    Left,
    Right,
    Top,
    Bottom,
}

impl std::fmt::Display for ExtremeDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Left => "left",
            Self::Right => "right",
            Self::Top => "top",
            Self::Bottom => "bottom",
        })
    }
}

/// In-window sample whose centroid is extreme in the given direction; ties go
/// to the earliest sample.
pub fn trajectory_extreme(
    track: &InstrumentTrack,
    window: &QueryWindow,
    direction: ExtremeDirection,
) -> Result<(f64, BBox), TrackError> {
    let samples = track.samples_in(window);
    let mut best: Option<&TrackSample> = None;
    for s in samples {
        let better = match best {
            None => true,
            Some(b) => {
                let (bc, sc) = (b.centroid(), s.centroid());
                match direction {
                    ExtremeDirection::Left => sc.0 < bc.0 - 1e-12,
                    ExtremeDirection::Right => sc.0 > bc.0 + 1e-12,
                    ExtremeDirection::Top => sc.1 < bc.1 - 1e-12,
                    ExtremeDirection::Bottom => sc.1 > bc.1 + 1e-12,
                }
            }
        };
        if better {
            best = Some(s);
        }
    }
    best.map(|s| (s.t, s.bbox)).ok_or(TrackError::EmptyWindow)
}

/// Timed boxes at both ends of a presence interval.
pub type WindowEndpoints = ((f64, BBox), (f64, BBox));

/// First and last samples of the track: appearance and disappearance.
pub fn temporal_window(track: &InstrumentTrack) -> Result<WindowEndpoints, TrackError> {
    let first = track.samples.first().ok_or(TrackError::EmptyWindow)?;
    let last = track.samples.last().unwrap();
    Ok(((first.t, first.bbox), (last.t, last.bbox)))
}

/// As [`temporal_window`] but restricted to the in-window portion.
pub fn temporal_window_in(
    track: &InstrumentTrack,
    window: &QueryWindow,
) -> Result<WindowEndpoints, TrackError> {
    let samples = track.samples_in(window);
    let first = samples.first().ok_or(TrackError::EmptyWindow)?;
    let last = samples.last().unwrap();
    Ok(((first.t, first.bbox), (last.t, last.bbox)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip() -> ClipManifest {
        ClipManifest::new("c0", "v0", 0.0, 30.0, 1.0).unwrap()
    }

    fn det(t: f64, instrument: &str, cx: f64, cy: f64) -> EventTuple {
        EventTuple {
            time_s: t,
            instrument: instrument.to_string(),
            bbox: BBox::new(cx - 0.02, cy - 0.02, cx + 0.02, cy + 0.02).unwrap(),
            interaction: None,
            source_frame_index: 0,
        }
    }

    fn track_from_centroids(centroids: &[(f64, f64)], period: f64) -> InstrumentTrack {
        InstrumentTrack {
            track_id: 0,
            instrument: "grasper".to_string(),
            samples: centroids
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| TrackSample {
                    t: i as f64 * period,
                    bbox: BBox::new(x - 0.02, y - 0.02, x + 0.02, y + 0.02).unwrap(),
                })
                .collect(),
            sampling_period_s: period,
        }
    }

    #[test]
    fn single_instrument_forms_one_track() {
        let tuples: Vec<_> = (0..10).map(|k| det(k as f64, "grasper", 0.5, 0.5)).collect();
        let tracks = build_tracks(&tuples, &clip(), 0.3);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].samples.len(), 10);
    }

    #[test]
    fn one_frame_absence_splits_track() {
        let mut tuples: Vec<_> = (0..4).map(|k| det(k as f64, "grasper", 0.5, 0.5)).collect();
        tuples.extend((5..8).map(|k| det(k as f64, "grasper", 0.5, 0.5)));
        let tracks = build_tracks(&tuples, &clip(), 0.3);
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].samples.len(), 4);
        assert_eq!(tracks[1].samples.len(), 3);
    }

    #[test]
    fn two_parallel_instances_keep_identity() {
        let mut tuples = Vec::new();
        for k in 0..10 {
            let t = k as f64;
            tuples.push(det(t, "grasper", 0.2 + 0.01 * t, 0.2));
            tuples.push(det(t, "grasper", 0.8 - 0.01 * t, 0.8));
        }
        let tracks = build_tracks(&tuples, &clip(), 0.3);
        assert_eq!(tracks.len(), 2);
        for tr in &tracks {
            assert_eq!(tr.samples.len(), 10);
            // Each track stays on its own side: y never jumps between paths.
            let y0 = tr.samples[0].centroid().1;
            assert!(tr.samples.iter().all(|s| (s.centroid().1 - y0).abs() < 1e-9));
        }
    }

    #[test]
    fn distant_detection_opens_new_track() {
        let tuples =
            vec![det(0.0, "grasper", 0.1, 0.1), det(1.0, "grasper", 0.9, 0.9)];
        let tracks = build_tracks(&tuples, &clip(), 0.3);
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn temporal_continuity_examples() {
        let track = track_from_centroids(&[(0.5, 0.5); 6], 1.0);
        assert!(check_temporal_continuity(&track, &QueryWindow::new(2.0, 5.0).unwrap()));

        let mut gappy = track.clone();
        gappy.samples.remove(3);
        assert!(!check_temporal_continuity(&gappy, &QueryWindow::new(2.0, 5.0).unwrap()));

        assert!(!check_temporal_continuity(&track, &QueryWindow::new(10.0, 12.0).unwrap()));
    }

    #[test]
    fn spatial_continuity_examples() {
        let delta = 0.3 * std::f64::consts::SQRT_2;
        let stationary = track_from_centroids(&[(0.5, 0.5); 4], 1.0);
        assert!(check_spatial_continuity(&stationary, delta));

        let jump = track_from_centroids(&[(0.05, 0.05), (0.95, 0.95)], 1.0);
        assert!(!check_spatial_continuity(&jump, delta));

        // Displacement exactly delta passes (closed boundary).
        let boundary = track_from_centroids(&[(0.1, 0.1), (0.1 + delta, 0.1)], 1.0);
        assert!(check_spatial_continuity(&boundary, delta));
    }

    #[test]
    fn kinematics_examples() {
        let th = MotionThresholds::default();
        let w = QueryWindow::new(0.0, 10.0).unwrap();

        let stationary = track_from_centroids(&[(0.5, 0.5); 4], 1.0);
        let k = compute_kinematics(&stationary, &w, &th).unwrap();
        assert_eq!((k.min_speed, k.max_speed, k.mean_speed), (0.0, 0.0, 0.0));
        assert_eq!(k.descriptor, MotionDescriptor::Stationary);

        let diagonal = track_from_centroids(&[(0.1, 0.1), (0.4, 0.5)], 1.0);
        let k = compute_kinematics(&diagonal, &w, &th).unwrap();
        assert!((k.mean_speed - 0.5).abs() < 1e-9);
        assert_eq!(k.descriptor, MotionDescriptor::MovingActively);

        let two_phase = track_from_centroids(&[(0.1, 0.5), (0.2, 0.5), (0.5, 0.5)], 1.0);
        let k = compute_kinematics(&two_phase, &w, &th).unwrap();
        assert!((k.min_speed - 0.1).abs() < 1e-9);
        assert!((k.max_speed - 0.3).abs() < 1e-9);
        assert!((k.mean_speed - 0.2).abs() < 1e-9);

        let single = track_from_centroids(&[(0.5, 0.5)], 1.0);
        assert!(matches!(
            compute_kinematics(&single, &w, &th),
            Err(TrackError::WindowTooShort)
        ));
    }

    #[test]
    fn classify_motion_thresholds() {
        let th = MotionThresholds::default();
        assert_eq!(classify_motion(0.0, &th), MotionDescriptor::Stationary);
        assert_eq!(classify_motion(0.05, &th), MotionDescriptor::MovingSlowly);
        assert_eq!(classify_motion(0.5, &th), MotionDescriptor::MovingActively);
        // Boundaries: 0.02 is already slow, 0.10 already active.
        assert_eq!(classify_motion(0.02, &th), MotionDescriptor::MovingSlowly);
        assert_eq!(classify_motion(0.10, &th), MotionDescriptor::MovingActively);
    }

    fn labeled(t: f64, verb: Option<&str>) -> EventTuple {
        EventTuple {
            time_s: t,
            instrument: "grasper".to_string(),
            bbox: BBox::new(0.4, 0.4, 0.6, 0.6).unwrap(),
            interaction: verb.map(|v| Interaction {
                verb: v.to_string(),
                target: "gallbladder".to_string(),
            }),
            source_frame_index: 0,
        }
    }

    #[test]
    fn blocks_group_constant_runs() {
        let tuples: Vec<_> = (0..10).map(|k| labeled(k as f64, Some("retract"))).collect();
        let blocks = group_semantic_blocks(&tuples, 1.0);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].sample_count, 10);
        assert_eq!(blocks[0].window.t_start, 0.0);
        assert_eq!(blocks[0].window.t_end, 9.0);
    }

    #[test]
    fn blocks_split_on_verb_flip() {
        let mut tuples: Vec<_> = (0..5).map(|k| labeled(k as f64, Some("retract"))).collect();
        tuples.extend((5..10).map(|k| labeled(k as f64, Some("dissect"))));
        let blocks = group_semantic_blocks(&tuples, 1.0);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].window.t_end, 4.0);
        assert_eq!(blocks[1].window.t_start, 5.0);
    }

    #[test]
    fn null_runs_become_null_blocks() {
        let mut tuples: Vec<_> = (0..3).map(|k| labeled(k as f64, Some("retract"))).collect();
        tuples.push(labeled(3.0, None));
        tuples.extend((4..7).map(|k| labeled(k as f64, Some("retract"))));
        let blocks = group_semantic_blocks(&tuples, 1.0);
        assert_eq!(blocks.len(), 3);
        assert!(blocks[0].interaction.is_some());
        assert!(blocks[1].interaction.is_none());
        assert!(blocks[2].interaction.is_some());
    }

    #[test]
    fn gap_breaks_a_run_despite_equal_labels() {
        let mut tuples: Vec<_> = (0..3).map(|k| labeled(k as f64, Some("retract"))).collect();
        tuples.extend((5..8).map(|k| labeled(k as f64, Some("retract"))));
        let blocks = group_semantic_blocks(&tuples, 1.0);
        assert_eq!(blocks.len(), 2);
    }

    #[test]
    fn trajectory_extreme_examples() {
        let w = QueryWindow::new(0.0, 10.0).unwrap();

        let leftward = track_from_centroids(&[(0.8, 0.5), (0.6, 0.5), (0.4, 0.5)], 1.0);
        let (t, _) = trajectory_extreme(&leftward, &w, ExtremeDirection::Left).unwrap();
        assert_eq!(t, 2.0);

        let stationary = track_from_centroids(&[(0.5, 0.5); 3], 1.0);
        let (t, _) = trajectory_extreme(&stationary, &w, ExtremeDirection::Left).unwrap();
        assert_eq!(t, 0.0);

        let zigzag = track_from_centroids(&[(0.5, 0.5), (0.2, 0.5), (0.4, 0.5)], 1.0);
        let (t, _) = trajectory_extreme(&zigzag, &w, ExtremeDirection::Left).unwrap();
        assert_eq!(t, 1.0);

        let empty = QueryWindow::new(20.0, 21.0).unwrap();
        assert!(trajectory_extreme(&zigzag, &empty, ExtremeDirection::Left).is_err());
    }

    #[test]
    fn temporal_window_examples() {
        let track = track_from_centroids(&[(0.1, 0.5), (0.2, 0.5), (0.3, 0.5)], 1.0);
        let ((t0, b0), (t1, b1)) = temporal_window(&track).unwrap();
        assert_eq!((t0, t1), (0.0, 2.0));
        assert_eq!(b0, track.samples[0].bbox);
        assert_eq!(b1, track.samples[2].bbox);

        let single = track_from_centroids(&[(0.1, 0.5)], 1.0);
        let ((t0, _), (t1, _)) = temporal_window(&single).unwrap();
        assert_eq!((t0, t1), (0.0, 0.0));

        let clipped = temporal_window_in(&track, &QueryWindow::new(0.5, 1.5).unwrap()).unwrap();
        assert_eq!((clipped.0 .0, clipped.1 .0), (1.0, 1.0));
    }
}
