//! Randomized invariants over the numeric building blocks.

use proptest::prelude::*;

use stqa_core::events::{
    broadcast_sparse_labels, normalize_time, quantize_bbox, segment_clips, BBox, EventTuple,
    Interaction, QuantBBox,
};
use stqa_core::metrics::{composite_st_error, iou_quant, spatial_error};
use stqa_core::parse::{parse_prediction, ParsedAnswer};
use stqa_core::qa::{round_dp, GoldPayload};
use stqa_core::vocab::Vocabulary;

fn unit_bbox() -> impl Strategy<Value = BBox> {
    (0.0..0.99f64, 0.001..1.0f64, 0.0..0.99f64, 0.001..1.0f64).prop_map(|(x1, w, y1, h)| {
        let x2 = (x1 + w).min(1.0);
        let y2 = (y1 + h).min(1.0);
        BBox::new(x1, y1, x2, y2).unwrap()
    })
}

fn quant_bbox() -> impl Strategy<Value = QuantBBox> {
    (0i64..1000, 0i64..1000, 1i64..=1000, 1i64..=1000).prop_map(|(x1, y1, dx, dy)| {
        let x2 = (x1 + dx).min(1000);
        let y2 = (y1 + dy).min(1000);
        QuantBBox::new(x1.min(x2 - 1), y1.min(y2 - 1), x2, y2).unwrap()
    })
}

fn test_vocab() -> Vocabulary {
    Vocabulary::load(std::path::Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/vocab.toml"
    )))
    .unwrap()
}

proptest! {
    #[test]
    fn clips_tile_the_video_within_bounds(duration in 0.0..400.0f64, fps in 1.0..60.0f64) {
        let clips = segment_clips("v", duration, fps, 20.0, 30.0);
        let mut cursor = 0.0;
        for c in &clips {
            prop_assert!((c.start_s - cursor).abs() <= 1e-9);
            let len = c.duration_s();
            prop_assert!((20.0 - 1e-9..=30.0 + 1e-9).contains(&len));
            prop_assert_eq!(c.fps, fps);
            cursor = c.end_s;
        }
        prop_assert!(cursor <= duration + 1e-9);
        // Whatever was dropped at the tail is too short to stand alone.
        prop_assert!(duration - cursor < 20.0 + 1e-9);
    }

    #[test]
    fn quantized_boxes_stay_valid_and_close(b in unit_bbox()) {
        let q = quantize_bbox(&b);
        prop_assert!(q.x1 < q.x2 && q.y1 < q.y2);
        for v in [q.x1, q.y1, q.x2, q.y2] {
            prop_assert!((0..=1000).contains(&v));
        }
        let (cx, cy) = b.centroid();
        let (qx, qy) = q.center_unit();
        prop_assert!(((cx - qx).powi(2) + (cy - qy).powi(2)).sqrt() <= 0.002);
    }

    #[test]
    fn rounding_is_idempotent_and_bounded(x in -1000.0..1000.0f64, dp in 0u32..4) {
        let once = round_dp(x, dp);
        prop_assert_eq!(round_dp(once, dp), once);
        let step = 10f64.powi(-(dp as i32));
        prop_assert!((once - x).abs() <= 0.5 * step + 1e-9);
    }

    #[test]
    fn normalized_times_stay_in_unit_range(start in 0.0..300.0f64, len in 20.0..30.0f64, u in 0.0..=1.0f64) {
        let clip = stqa_core::events::ClipManifest::new("c", "v", start, start + len, 5.0).unwrap();
        let t = start + u * len;
        let n = normalize_time(t, &clip).unwrap();
        prop_assert!((0.0..=1.0).contains(&n));
    }

    #[test]
    fn composite_error_respects_norm_bounds(dt in -2.0..2.0f64, ds in -2.0..2.0f64) {
        let e = composite_st_error(dt, ds);
        prop_assert!(e >= dt.abs().max(ds.abs()) - 1e-12);
        prop_assert!(e <= dt.abs() + ds.abs() + 1e-12);
        prop_assert_eq!(e, composite_st_error(-dt, ds));
        prop_assert_eq!(e, composite_st_error(dt, -ds));
    }

    #[test]
    fn spatial_error_is_bounded_and_symmetric(a in quant_bbox(), b in quant_bbox()) {
        let e = spatial_error(&a, &b);
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(e, spatial_error(&b, &a));
        prop_assert_eq!(spatial_error(&a, &a), 0.0);
    }

    #[test]
    fn iou_is_bounded_symmetric_and_reflexive(a in quant_bbox(), b in quant_bbox()) {
        let i = iou_quant(&a, &b);
        prop_assert!((0.0..=1.0).contains(&i));
        prop_assert_eq!(i, iou_quant(&b, &a));
        prop_assert_eq!(iou_quant(&a, &a), 1.0);
    }

    #[test]
    fn rendered_boxes_round_trip_through_the_parser(q in quant_bbox()) {
        let vocab = test_vocab();
        let gold = GoldPayload::Locate { name: "grasper".into(), bbox: q };
        let text = format!("the tool is at <{}, {}, {}, {}>", q.x1, q.y1, q.x2, q.y2);
        let ParsedAnswer::Locate { bbox } = parse_prediction(&gold, &text, &vocab) else {
            return Err(TestCaseError::fail("wrong parse shape"));
        };
        prop_assert_eq!(bbox, Some(q));
    }

    #[test]
    fn rendered_timestamps_round_trip_through_the_parser(units in 0i64..=100) {
        let vocab = test_vocab();
        let t = round_dp(units as f64 / 100.0, 2);
        let gold = GoldPayload::TrajectoryExtreme {
            name: "grasper".into(),
            direction: stqa_core::tracks::ExtremeDirection::Left,
            t,
            bbox: QuantBBox::new(0, 0, 100, 100).unwrap(),
        };
        let text = format!("reached at {t:.2} in <0, 0, 100, 100>");
        let ParsedAnswer::TrajectoryExtreme { t: parsed, .. } =
            parse_prediction(&gold, &text, &vocab)
        else {
            return Err(TestCaseError::fail("wrong parse shape"));
        };
        prop_assert_eq!(parsed, Some(t));
    }

    #[test]
    fn broadcast_frames_sit_on_the_grid_near_a_label(
        times in proptest::collection::btree_set(0u32..600, 1..8),
        half_window in 0.1..1.0f64,
    ) {
        let sparse: Vec<EventTuple> = times
            .iter()
            .map(|&d| EventTuple {
                time_s: d as f64 / 10.0,
                instrument: "grasper".into(),
                bbox: BBox::new(0.1, 0.1, 0.2, 0.2).unwrap(),
                interaction: Some(Interaction {
                    verb: "retract".into(),
                    target: "gallbladder".into(),
                }),
                source_frame_index: d as i64,
            })
            .collect();
        let fps = 30.0;
        let dense = broadcast_sparse_labels(&sparse, fps, half_window);
        prop_assert!(!dense.is_empty());
        for d in &dense {
            prop_assert!(d.time_s >= -1e-9);
            let k = d.time_s * fps;
            prop_assert!((k - k.round()).abs() <= 1e-6, "off-grid frame at {}", d.time_s);
            let near = sparse.iter().any(|s| (s.time_s - d.time_s).abs() <= half_window + 1e-9);
            prop_assert!(near, "frame at {} is outside every label window", d.time_s);
        }
        let mut sorted = dense.clone();
        sorted.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        prop_assert_eq!(&sorted, &dense);
    }
}
