//! JSONL persistence for every pipeline artifact. One JSON object per line,
//! written in a stable field order so reruns produce byte-identical files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{ClipManifest, EventTuple};
use crate::metrics::SampleScore;
use crate::qa::{ExemplarAssignment, QASample};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    BadLine { path: String, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StoreError + '_ {
    move |err| StoreError::Io { path: path.display().to_string(), err }
}

/// Writes one JSON object per line. Works for any row type; the typed
/// helpers below fix the row shapes of the named pipeline artifacts.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for item in items {
        serde_json::to_writer(&mut w, item)
            .map_err(std::io::Error::from)
            .map_err(io_err(path))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| StoreError::BadLine {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// One clip-relative tuple row in the tuple store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleRow {
    pub clip_id: String,
    #[serde(flatten)]
    pub tuple: EventTuple,
}

pub fn save_tuples(path: &Path, rows: &[TupleRow]) -> Result<(), StoreError> {
    write_jsonl(path, rows)
}

/// Loads clip-relative tuples grouped by clip, preserving file order within
/// each clip.
pub fn load_tuples(path: &Path) -> Result<BTreeMap<String, Vec<EventTuple>>, StoreError> {
    let rows: Vec<TupleRow> = read_jsonl(path)?;
    let mut by_clip: BTreeMap<String, Vec<EventTuple>> = BTreeMap::new();
    for r in rows {
        by_clip.entry(r.clip_id).or_default().push(r.tuple);
    }
    Ok(by_clip)
}

pub fn save_clips(path: &Path, clips: &[ClipManifest]) -> Result<(), StoreError> {
    write_jsonl(path, clips)
}

pub fn load_clips(path: &Path) -> Result<Vec<ClipManifest>, StoreError> {
    read_jsonl(path)
}

pub fn save_dataset(path: &Path, samples: &[QASample]) -> Result<(), StoreError> {
    write_jsonl(path, samples)
}

pub fn load_dataset(path: &Path) -> Result<Vec<QASample>, StoreError> {
    read_jsonl(path)
}

/// One model output row: the sample it answers and the raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sample_id: String,
    pub output: String,
}

pub fn load_predictions(path: &Path) -> Result<Vec<(String, String)>, StoreError> {
    let rows: Vec<PredictionRow> = read_jsonl(path)?;
    Ok(rows.into_iter().map(|r| (r.sample_id, r.output)).collect())
}

pub fn save_scores(path: &Path, scores: &[SampleScore]) -> Result<(), StoreError> {
    write_jsonl(path, scores)
}

pub fn load_scores(path: &Path) -> Result<Vec<SampleScore>, StoreError> {
    read_jsonl(path)
}

pub fn save_exemplars(path: &Path, rows: &[ExemplarAssignment]) -> Result<(), StoreError> {
    write_jsonl(path, rows)
}

pub fn load_exemplars(path: &Path) -> Result<Vec<ExemplarAssignment>, StoreError> {
    read_jsonl(path)
}

/// Split assignment row: which bench split a sample belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub sample_id: String,
    pub split: String,
}

pub fn load_split(path: &Path) -> Result<Vec<SplitRow>, StoreError> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::BBox;

    fn tuple(t: f64) -> EventTuple {
        EventTuple {
            time_s: t,
            instrument: "grasper".into(),
            bbox: BBox::new(0.1, 0.2, 0.3, 0.4).unwrap(),
            interaction: None,
            source_frame_index: 7,
        }
    }

    #[test]
    fn tuples_round_trip_grouped_by_clip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tuples.jsonl");
        let rows = vec![
            TupleRow { clip_id: "v_clip000".into(), tuple: tuple(0.2) },
            TupleRow { clip_id: "v_clip001".into(), tuple: tuple(0.0) },
            TupleRow { clip_id: "v_clip000".into(), tuple: tuple(0.4) },
        ];
        save_tuples(&path, &rows).unwrap();
        let by_clip = load_tuples(&path).unwrap();
        assert_eq!(by_clip.len(), 2);
        assert_eq!(by_clip["v_clip000"].len(), 2);
        assert_eq!(by_clip["v_clip000"][0].time_s, 0.2);
        assert_eq!(by_clip["v_clip001"][0].source_frame_index, 7);
    }

    #[test]
    fn tuple_rows_flatten_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tuples.jsonl");
        save_tuples(&path, &[TupleRow { clip_id: "c".into(), tuple: tuple(1.0) }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"clip_id\":\"c\""));
        assert!(text.contains("\"time_s\":1.0"));
        assert!(text.contains("\"bbox\":[0.1,0.2,0.3,0.4]"));
    }

    #[test]
    fn writes_are_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let clips = vec![ClipManifest::new("v_clip000", "v", 0.0, 30.0, 25.0).unwrap()];
        save_clips(&a, &clips).unwrap();
        save_clips(&b, &clips).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(load_clips(&a).unwrap(), clips);
    }

    #[test]
    fn bad_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(&path, "{\"sample_id\":\"s\",\"output\":\"ok\"}\nnot json\n").unwrap();
        let err = load_predictions(&path).unwrap_err();
        let StoreError::BadLine { line, .. } = err else { panic!() };
        assert_eq!(line, 2);
    }

    #[test]
    fn blank_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(&path, "\n{\"sample_id\":\"s\",\"output\":\"A\"}\n\n").unwrap();
        assert_eq!(load_predictions(&path).unwrap(), vec![("s".into(), "A".into())]);
    }
}
