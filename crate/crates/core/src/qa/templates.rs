//! Task template registry: question/answer patterns per subtask, loaded from
//! a TOML file so the registry can be swapped without recompilation.
//!
//! Patterns use `{field}` placeholders. Answer patterns must use exactly the
//! payload schema's answer fields; question patterns may use any subset of
//! the subtask's query fields. Both are validated at load time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoreTask, Subtask};

/// Default registry covering all subtasks, compiled into the binary.
pub const DEFAULT_TEMPLATES_TOML: &str = include_str!("default_templates.toml");

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("cannot read template file")]
    Io(#[from] std::io::Error),
    #[error("cannot read template file")]
    Toml(#[from] toml::de::Error),
    #[error("template '{template_id}': core task '{core_task}' does not own subtask '{subtask}'")]
    MismatchedCoreTask { template_id: String, core_task: String, subtask: String },
    #[error("template '{template_id}': schema '{schema}' but subtask '{subtask}' uses '{expected}'")]
    SchemaMismatch { template_id: String, schema: String, subtask: String, expected: String },
    #[error("template '{0}': {1}")]
    BadPattern(String, String),
    #[error("template '{template_id}': answer pattern must use exactly {expected:?}, got {got:?}")]
    AnswerFieldMismatch { template_id: String, expected: Vec<String>, got: Vec<String> },
    #[error("template '{template_id}': question placeholder '{field}' is not a query field of '{subtask}'")]
    UnknownQuestionField { template_id: String, field: String, subtask: String },
    #[error("duplicate template for subtask '{0}'")]
    DuplicateSubtask(String),
    #[error("duplicate template id '{0}'")]
    DuplicateId(String),
    #[error("template with empty id")]
    EmptyId,
}

fn default_true() -> bool {
    true
}

/// One question/answer template bound to a subtask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub id: String,
    pub core_task: CoreTask,
    pub subtask: Subtask,
    /// Payload schema id; must equal the subtask's schema.
    pub schema: String,
    pub question: String,
    pub answer: String,
    /// Surface form reconstructed rather than quoted; carried into provenance.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reconstructed: bool,
    #[serde(default = "default_true")]
    pub needs_bbox: bool,
    #[serde(default)]
    pub needs_interactions: bool,
    #[serde(default)]
    pub min_instruments: usize,
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(rename = "templates")]
    templates: Vec<TaskTemplate>,
}

/// Extracts `{field}` placeholder names in order of appearance.
pub fn extract_placeholders(pattern: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| "unterminated '{' in pattern".to_string())?;
        let name = &after[..close];
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !ok {
            return Err(format!("invalid placeholder '{{{name}}}'"));
        }
        out.push(name.to_string());
        rest = &after[close + 1..];
    }
    Ok(out)
}

/// Substitutes `{field}` placeholders from the map. Unknown field is an error.
pub fn render_pattern(pattern: &str, fields: &BTreeMap<&str, String>) -> Result<String, String> {
    let mut out = String::with_capacity(pattern.len());
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| "unterminated '{' in pattern".to_string())?;
        let name = &after[..close];
        match fields.get(name) {
            Some(v) => out.push_str(v),
            None => return Err(format!("no value for placeholder '{{{name}}}'")),
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Query-side fields the generator supplies for each subtask's question.
pub fn question_fields(subtask: Subtask) -> &'static [&'static str] {
    use Subtask::*;
    match subtask {
        TemporalWindow => &["t"],
        Locate => &["name", "t"],
        ClosestInstrument => &["bbox", "t"],
        FrameSegment => &["name", "t"],
        TrajectoryExtreme => &["name", "direction", "t1", "t2"],
        SequentialActions => &["name", "verb"],
        ActionStatus => &["name", "t1", "t2"],
        TargetInteraction => &["name", "t1", "t2"],
        InstrumentId => &["bbox", "t"],
        RelativePosition => &["name1", "name2", "t"],
        RelativeChange => &["name1", "name2", "t1", "t2"],
        InteractionComparison => &["name1", "name2", "t1", "t2"],
        Velocity => &["name", "t1", "t2"],
        McExistence => &["name", "t", "options"],
        McClass => &["t", "options"],
        McCounting => &["t", "options"],
        Cot => &["name", "t1", "t2"],
    }
}

/// Answer fields of each subtask's payload schema (per entry for
/// multi-entry schemas).
pub fn answer_fields(subtask: Subtask) -> &'static [&'static str] {
    use Subtask::*;
    match subtask {
        TemporalWindow => &["name", "start_t", "end_t", "start_bbox", "end_bbox"],
        Locate => &["name", "bbox"],
        ClosestInstrument => &["name"],
        FrameSegment => &["name", "horizontal", "vertical"],
        TrajectoryExtreme => &["name", "direction", "t", "bbox"],
        SequentialActions => &["name", "next_verb"],
        ActionStatus => &["name", "verb"],
        TargetInteraction => &["name", "target"],
        InstrumentId => &["name"],
        RelativePosition => &["name1", "name2", "horizontal", "vertical"],
        RelativeChange => &["name1", "name2", "change"],
        InteractionComparison => {
            &["name1", "name2", "verdict", "verb1", "target1", "verb2", "target2"]
        }
        Velocity => &["name", "min_speed", "max_speed", "mean_speed", "descriptor"],
        McExistence | McClass | McCounting => &["letter"],
        Cot => &[
            "name",
            "horizontal",
            "vertical",
            "bbox",
            "descriptor",
            "mean_speed",
            "verb",
            "target",
        ],
    }
}

/// Validated template set, at most one template per subtask.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    by_subtask: BTreeMap<Subtask, TaskTemplate>,
}

impl TemplateRegistry {
    pub fn from_toml_str(text: &str) -> Result<Self, TemplateError> {
        let file: RegistryFile = toml::from_str(text)?;
        let mut by_subtask: BTreeMap<Subtask, TaskTemplate> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for t in file.templates {
            if t.id.is_empty() {
                return Err(TemplateError::EmptyId);
            }
            if !ids.insert(t.id.clone()) {
                return Err(TemplateError::DuplicateId(t.id));
            }
            if t.subtask.core_task() != t.core_task {
                return Err(TemplateError::MismatchedCoreTask {
                    template_id: t.id,
                    core_task: t.core_task.id().into(),
                    subtask: t.subtask.id().into(),
                });
            }
            if t.schema != t.subtask.payload_schema() {
                return Err(TemplateError::SchemaMismatch {
                    template_id: t.id.clone(),
                    schema: t.schema,
                    subtask: t.subtask.id().into(),
                    expected: t.subtask.payload_schema().into(),
                });
            }
            let bad = |id: &str, e: String| TemplateError::BadPattern(id.into(), e);
            let q = extract_placeholders(&t.question).map_err(|e| bad(&t.id, e))?;
            let a = extract_placeholders(&t.answer).map_err(|e| bad(&t.id, e))?;
            let allowed_q: BTreeSet<&str> = question_fields(t.subtask).iter().copied().collect();
            for f in &q {
                if !allowed_q.contains(f.as_str()) {
                    return Err(TemplateError::UnknownQuestionField {
                        template_id: t.id,
                        field: f.clone(),
                        subtask: t.subtask.id().into(),
                    });
                }
            }
            let expected: BTreeSet<&str> = answer_fields(t.subtask).iter().copied().collect();
            let got: BTreeSet<&str> = a.iter().map(String::as_str).collect();
            if got != expected {
                return Err(TemplateError::AnswerFieldMismatch {
                    template_id: t.id,
                    expected: expected.into_iter().map(String::from).collect(),
                    got: got.into_iter().map(String::from).collect(),
                });
            }
            let subtask_id = t.subtask.id();
            if by_subtask.insert(t.subtask, t).is_some() {
                return Err(TemplateError::DuplicateSubtask(subtask_id.into()));
            }
        }
        Ok(Self { by_subtask })
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The compiled-in registry; covers every subtask.
    pub fn default_registry() -> Self {
        Self::from_toml_str(DEFAULT_TEMPLATES_TOML)
            .expect("embedded template registry must validate")
    }

    pub fn get(&self, subtask: Subtask) -> Option<&TaskTemplate> {
        self.by_subtask.get(&subtask)
    }

    pub fn templates(&self) -> impl Iterator<Item = &TaskTemplate> {
        self.by_subtask.values()
    }

    pub fn len(&self) -> usize {
        self.by_subtask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_subtask.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::QuantBBox;
    use crate::qa::gold::GoldPayload;

    #[test]
    fn default_registry_covers_every_subtask() {
        let reg = TemplateRegistry::default_registry();
        assert_eq!(reg.len(), Subtask::ALL.len());
        for s in Subtask::ALL {
            let t = reg.get(s).unwrap();
            assert_eq!(t.subtask, s);
            assert_eq!(t.core_task, s.core_task());
        }
    }

    #[test]
    fn only_counting_is_reconstructed() {
        let reg = TemplateRegistry::default_registry();
        for s in Subtask::ALL {
            let t = reg.get(s).unwrap();
            assert_eq!(t.reconstructed, s == Subtask::McCounting, "{}", s.id());
        }
    }

    #[test]
    fn render_and_extract() {
        let fields: BTreeMap<&str, String> =
            [("name", "hook".to_string()), ("t", "0.25".to_string())].into_iter().collect();
        assert_eq!(
            render_pattern("The {name} at {t}.", &fields).unwrap(),
            "The hook at 0.25."
        );
        assert_eq!(extract_placeholders("a {x} b {y}").unwrap(), vec!["x", "y"]);
        assert!(render_pattern("{missing}", &fields).is_err());
        assert!(extract_placeholders("dangling {").is_err());
        assert!(extract_placeholders("{BAD}").is_err());
    }

    #[test]
    fn gold_renders_through_default_templates() {
        let reg = TemplateRegistry::default_registry();
        let gold = GoldPayload::Locate {
            name: "grasper".into(),
            bbox: QuantBBox::new(100, 200, 300, 400).unwrap(),
        };
        let t = reg.get(Subtask::Locate).unwrap();
        assert_eq!(
            gold.render_answer(&t.answer).unwrap(),
            "The grasper is located at <100, 200, 300, 400>."
        );
    }

    #[test]
    fn answer_field_equality_is_enforced() {
        let toml = r#"
[[templates]]
id = "bad.v1"
core_task = "st_grounding"
subtask = "locate"
schema = "locate"
question = "Where is the {name} at {t}?"
answer = "The {name} is somewhere."
"#;
        match TemplateRegistry::from_toml_str(toml) {
            Err(TemplateError::AnswerFieldMismatch { .. }) => {}
            other => panic!("expected answer-field mismatch, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_core_task_is_rejected() {
        let toml = r#"
[[templates]]
id = "bad.v2"
core_task = "velocity"
subtask = "locate"
schema = "locate"
question = "Where is the {name} at {t}?"
answer = "The {name} is located at {bbox}."
"#;
        match TemplateRegistry::from_toml_str(toml) {
            Err(TemplateError::MismatchedCoreTask { .. }) => {}
            other => panic!("expected core-task mismatch, got {other:?}"),
        }
    }

    #[test]
    fn unknown_question_field_is_rejected() {
        let toml = r#"
[[templates]]
id = "bad.v3"
core_task = "st_grounding"
subtask = "locate"
schema = "locate"
question = "Where is the {name} at {frame}?"
answer = "The {name} is located at {bbox}."
"#;
        match TemplateRegistry::from_toml_str(toml) {
            Err(TemplateError::UnknownQuestionField { field, .. }) => assert_eq!(field, "frame"),
            other => panic!("expected unknown question field, got {other:?}"),
        }
    }
}
