//! Task catalog, gold payloads, template rendering, dataset generation, and
//! in-context exemplar retrieval.

pub mod exemplar;
pub mod generate;
pub mod gold;
pub mod templates;

use serde::{Deserialize, Serialize};

pub use exemplar::{build_exemplar_map, retrieve_icl_exemplar, ExemplarAssignment, MatchLevel};
pub use generate::{
    generate_dataset, ClipBundle, GeneratedDataset, GenerationParams, QueryInfo, Shortfall,
};
pub use gold::{round_dp, GoldPayload};
pub use templates::{TaskTemplate, TemplateRegistry};

/// The six core task families a sample can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreTask {
    StGrounding,
    RefInteraction,
    StRelation,
    Velocity,
    Multichoice,
    Cot,
}

impl CoreTask {
    pub fn id(&self) -> &'static str {
        match self {
            Self::StGrounding => "st_grounding",
            Self::RefInteraction => "ref_interaction",
            Self::StRelation => "st_relation",
            Self::Velocity => "velocity",
            Self::Multichoice => "multichoice",
            Self::Cot => "cot",
        }
    }

    pub const ALL: [CoreTask; 6] = [
        Self::StGrounding,
        Self::RefInteraction,
        Self::StRelation,
        Self::Velocity,
        Self::Multichoice,
        Self::Cot,
    ];
}

/// Concrete question types. Each belongs to exactly one [`CoreTask`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtask {
    TemporalWindow,
    Locate,
    ClosestInstrument,
    FrameSegment,
    TrajectoryExtreme,
    SequentialActions,
    ActionStatus,
    TargetInteraction,
    InstrumentId,
    RelativePosition,
    RelativeChange,
    InteractionComparison,
    Velocity,
    McExistence,
    McClass,
    McCounting,
    Cot,
}

impl Subtask {
    pub const ALL: [Subtask; 17] = [
        Self::TemporalWindow,
        Self::Locate,
        Self::ClosestInstrument,
        Self::FrameSegment,
        Self::TrajectoryExtreme,
        Self::SequentialActions,
        Self::ActionStatus,
        Self::TargetInteraction,
        Self::InstrumentId,
        Self::RelativePosition,
        Self::RelativeChange,
        Self::InteractionComparison,
        Self::Velocity,
        Self::McExistence,
        Self::McClass,
        Self::McCounting,
        Self::Cot,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::TemporalWindow => "temporal_window",
            Self::Locate => "locate",
            Self::ClosestInstrument => "closest_instrument",
            Self::FrameSegment => "frame_segment",
            Self::TrajectoryExtreme => "trajectory_extreme",
            Self::SequentialActions => "sequential_actions",
            Self::ActionStatus => "action_status",
            Self::TargetInteraction => "target_interaction",
            Self::InstrumentId => "instrument_id",
            Self::RelativePosition => "relative_position",
            Self::RelativeChange => "relative_change",
            Self::InteractionComparison => "interaction_comparison",
            Self::Velocity => "velocity",
            Self::McExistence => "mc_existence",
            Self::McClass => "mc_class",
            Self::McCounting => "mc_counting",
            Self::Cot => "cot",
        }
    }

    pub fn core_task(&self) -> CoreTask {
        match self {
            Self::TemporalWindow
            | Self::Locate
            | Self::ClosestInstrument
            | Self::FrameSegment
            | Self::TrajectoryExtreme => CoreTask::StGrounding,
            Self::SequentialActions
            | Self::ActionStatus
            | Self::TargetInteraction
            | Self::InstrumentId => CoreTask::RefInteraction,
            Self::RelativePosition | Self::RelativeChange | Self::InteractionComparison => {
                CoreTask::StRelation
            }
            Self::Velocity => CoreTask::Velocity,
            Self::McExistence | Self::McClass | Self::McCounting => CoreTask::Multichoice,
            Self::Cot => CoreTask::Cot,
        }
    }

    /// Identifier of the gold payload schema this subtask produces. The three
    /// multi-choice subtasks share one letter-only schema.
    pub fn payload_schema(&self) -> &'static str {
        match self {
            Self::McExistence | Self::McClass | Self::McCounting => "multichoice",
            other => other.id(),
        }
    }
}

/// Where a sample came from: enough to reproduce it and to retrieve
/// cross-video exemplars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub template_id: String,
    pub seed: u64,
    pub source_video_id: String,
    /// Marks question surface forms that are reconstructions rather than
    /// attested phrasings.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reconstructed: bool,
}

/// One generated question/answer pair with its machine-readable gold payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QASample {
    pub sample_id: String,
    pub clip_id: String,
    pub core_task: CoreTask,
    pub subtask: Subtask,
    pub question: String,
    /// Multi-choice only: option texts in presentation order; the correct one
    /// is named by the letter in the gold payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    pub answer: String,
    pub gold: GoldPayload,
    pub provenance: Provenance,
}

impl QASample {
    /// Option letter for a 0-based option index.
    pub fn letter_for(idx: usize) -> char {
        (b'A' + idx as u8) as char
    }
}
