//! In-context exemplar retrieval: for each test sample, a seeded choice from
//! the training pool, preferring samples of the same subtask from a different
//! source video, then the same core task.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::QASample;
use crate::stable_seed;

#[derive(Debug, thiserror::Error)]
pub enum ExemplarError {
    #[error("training pool is empty")]
    EmptyPool,
    #[error("no training sample shares core task '{core_task}' with '{sample_id}'")]
    NoCoreTaskMatch { sample_id: String, core_task: String },
}

/// How closely the retrieved exemplar matches the test sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLevel {
    /// Same subtask, different source video.
    Subtask,
    /// Same core task, different source video.
    CoreTask,
    /// Same core task, only same-video samples were available.
    CoreTaskSameVideo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExemplarAssignment {
    pub sample_id: String,
    pub exemplar_id: String,
    pub match_level: MatchLevel,
}

/// Retrieves one exemplar for `test` from `pool`. The choice is seeded per
/// test sample, so a fixed (pool, seed) always yields the same exemplar.
pub fn retrieve_icl_exemplar<'a>(
    test: &QASample,
    pool: &'a [QASample],
    seed: u64,
) -> Result<(&'a QASample, MatchLevel), ExemplarError> {
    if pool.is_empty() {
        return Err(ExemplarError::EmptyPool);
    }
    let eligible: Vec<&QASample> =
        pool.iter().filter(|s| s.sample_id != test.sample_id).collect();
    let cross_video =
        |s: &&QASample| s.provenance.source_video_id != test.provenance.source_video_id;

    let tiers: [(Vec<&QASample>, MatchLevel); 3] = [
        (
            eligible
                .iter()
                .copied()
                .filter(|s| s.subtask == test.subtask)
                .filter(cross_video)
                .collect(),
            MatchLevel::Subtask,
        ),
        (
            eligible
                .iter()
                .copied()
                .filter(|s| s.core_task == test.core_task)
                .filter(cross_video)
                .collect(),
            MatchLevel::CoreTask,
        ),
        (
            eligible.iter().copied().filter(|s| s.core_task == test.core_task).collect(),
            MatchLevel::CoreTaskSameVideo,
        ),
    ];
    for (mut candidates, level) in tiers {
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        let mut rng = ChaCha8Rng::seed_from_u64(stable_seed(seed, &test.sample_id));
        let idx = rng.random_range(0..candidates.len());
        return Ok((candidates[idx], level));
    }
    Err(ExemplarError::NoCoreTaskMatch {
        sample_id: test.sample_id.clone(),
        core_task: test.core_task.id().into(),
    })
}

/// Retrieves an exemplar for every test sample, in sample_id order.
pub fn build_exemplar_map(
    tests: &[QASample],
    pool: &[QASample],
    seed: u64,
) -> Result<Vec<ExemplarAssignment>, ExemplarError> {
    let mut order: Vec<&QASample> = tests.iter().collect();
    order.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let mut out = Vec::with_capacity(order.len());
    for test in order {
        let (ex, level) = retrieve_icl_exemplar(test, pool, seed)?;
        out.push(ExemplarAssignment {
            sample_id: test.sample_id.clone(),
            exemplar_id: ex.sample_id.clone(),
            match_level: level,
        });
    }
    Ok(out)
}
