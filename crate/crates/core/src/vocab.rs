//! Canonical label sets for instruments, verbs, and targets, plus the synonym
//! table that maps free-text surface forms back onto canonical labels.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Which label set a canonical label belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LabelKind {
    Instrument,
    Verb,
    Target,
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("cannot read vocabulary file")]
    Io(#[from] std::io::Error),
    #[error("vocabulary file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("label {0:?} is not lowercase")]
    NotLowercase(String),
    #[error("label {0:?} appears more than once")]
    Duplicate(String),
    #[error("synonym {0:?} maps to {1:?}, which is not a canonical label")]
    UnknownSynonymTarget(String, String),
    #[error("label set {0:?} is empty")]
    EmptyKind(&'static str),
}

#[derive(Debug, Deserialize)]
struct VocabFile {
    instruments: Vec<String>,
    verbs: Vec<String>,
    targets: Vec<String>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
}

/// Closed label vocabulary. Canonical labels are lowercase and unique across
/// all three kinds; every surface form (canonical labels included) maps to
/// exactly one canonical label.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    instruments: Vec<String>,
    verbs: Vec<String>,
    targets: Vec<String>,
    surface_to_canonical: BTreeMap<String, String>,
    kind_of: BTreeMap<String, LabelKind>,
}

/// Lowercases and collapses runs of whitespace to single spaces.
pub fn normalize_surface(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl Vocabulary {
    pub fn new(
        instruments: Vec<String>,
        verbs: Vec<String>,
        targets: Vec<String>,
        synonyms: BTreeMap<String, String>,
    ) -> Result<Self, VocabError> {
        if instruments.is_empty() {
            return Err(VocabError::EmptyKind("instruments"));
        }
        if verbs.is_empty() {
            return Err(VocabError::EmptyKind("verbs"));
        }
        if targets.is_empty() {
            return Err(VocabError::EmptyKind("targets"));
        }
        let mut kind_of = BTreeMap::new();
        let mut surface_to_canonical = BTreeMap::new();
        let sets: [(&[String], LabelKind); 3] = [
            (&instruments, LabelKind::Instrument),
            (&verbs, LabelKind::Verb),
            (&targets, LabelKind::Target),
        ];
        for (labels, kind) in sets {
            for label in labels {
                if *label != normalize_surface(label) {
                    return Err(VocabError::NotLowercase(label.clone()));
                }
                if kind_of.insert(label.clone(), kind).is_some() {
                    return Err(VocabError::Duplicate(label.clone()));
                }
                // Canonical labels map to themselves.
                surface_to_canonical.insert(label.clone(), label.clone());
            }
        }
        for (surface, canonical) in synonyms {
            let surface = normalize_surface(&surface);
            if !kind_of.contains_key(&canonical) {
                return Err(VocabError::UnknownSynonymTarget(surface, canonical));
            }
            if let Some(prev) = surface_to_canonical.get(&surface) {
                if *prev != canonical {
                    return Err(VocabError::Duplicate(surface));
                }
            }
            surface_to_canonical.insert(surface, canonical);
        }
        Ok(Self { instruments, verbs, targets, surface_to_canonical, kind_of })
    }

    pub fn from_toml_str(s: &str) -> Result<Self, VocabError> {
        let f: VocabFile = toml::from_str(s)?;
        Self::new(f.instruments, f.verbs, f.targets, f.synonyms)
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn labels(&self, kind: LabelKind) -> &[String] {
        match kind {
            LabelKind::Instrument => &self.instruments,
            LabelKind::Verb => &self.verbs,
            LabelKind::Target => &self.targets,
        }
    }

    pub fn kind_of(&self, canonical: &str) -> Option<LabelKind> {
        self.kind_of.get(canonical).copied()
    }

    pub fn is_canonical(&self, kind: LabelKind, label: &str) -> bool {
        self.kind_of(label) == Some(kind)
    }

    /// Exact lookup of a whole field value, restricted to one label kind.
    /// Used at ingest, where the value is a label, not prose.
    pub fn canonical_exact(&self, kind: LabelKind, value: &str) -> Option<&str> {
        let n = normalize_surface(value);
        let canonical = self.surface_to_canonical.get(&n)?;
        if self.kind_of[canonical] == kind { Some(canonical) } else { None }
    }

    /// Canonicalizes a free-text span: exact lookup first, then the longest
    /// surface form occurring in the span on a word boundary (ties broken by
    /// earliest position, then lexicographic surface order).
    pub fn canonicalize_span(&self, span: &str) -> Option<&str> {
        self.canonicalize_span_impl(span, None)
    }

    /// As [`canonicalize_span`](Self::canonicalize_span) but only considers
    /// surface forms of one label kind.
    pub fn canonicalize_span_in(&self, kind: LabelKind, span: &str) -> Option<&str> {
        self.canonicalize_span_impl(span, Some(kind))
    }

    fn canonicalize_span_impl(&self, span: &str, kind: Option<LabelKind>) -> Option<&str> {
        let n = normalize_surface(span);
        if let Some(canonical) = self.surface_to_canonical.get(&n) {
            if kind.is_none() || kind == Some(self.kind_of[canonical]) {
                return Some(canonical);
            }
        }
        // (surface length desc, position asc, surface asc); BTreeMap iteration
        // makes the scan order deterministic.
        let mut best: Option<(usize, usize, &str, &str)> = None;
        for (surface, canonical) in &self.surface_to_canonical {
            if let Some(k) = kind {
                if self.kind_of[canonical] != k {
                    continue;
                }
            }
            if let Some(pos) = find_word(&n, surface) {
                let cand = (surface.len(), pos, surface.as_str(), canonical.as_str());
                best = Some(match best {
                    None => cand,
                    Some(b) => {
                        if (cand.0, std::cmp::Reverse(cand.1), std::cmp::Reverse(cand.2))
                            > (b.0, std::cmp::Reverse(b.1), std::cmp::Reverse(b.2))
                        {
                            cand
                        } else {
                            b
                        }
                    }
                });
            }
        }
        best.map(|(_, _, _, canonical)| canonical)
    }

    /// Earliest surface form of `kind` occurring in the text on a word
    /// boundary (ties broken by longest surface). Returns the canonical label.
    /// The text is normalized before matching, so case and repeated
    /// whitespace do not matter.
    pub fn find_first(&self, kind: LabelKind, text: &str) -> Option<&str> {
        let n = normalize_surface(text);
        let mut best: Option<(usize, usize, &str, &str)> = None;
        for (surface, canonical) in &self.surface_to_canonical {
            if self.kind_of[canonical] != kind {
                continue;
            }
            if let Some(pos) = find_word(&n, surface) {
                let cand = (pos, surface.len(), surface.as_str(), canonical.as_str());
                best = Some(match best {
                    None => cand,
                    Some(b) => {
                        if (std::cmp::Reverse(cand.0), cand.1, std::cmp::Reverse(cand.2))
                            > (std::cmp::Reverse(b.0), b.1, std::cmp::Reverse(b.2))
                        {
                            cand
                        } else {
                            b
                        }
                    }
                });
            }
        }
        best.map(|(_, _, _, canonical)| canonical)
    }

    /// All canonical labels of `kind` whose surface forms occur in the text.
    pub fn find_all(&self, kind: LabelKind, text: &str) -> Vec<&str> {
        let n = normalize_surface(text);
        let mut found: Vec<&str> = Vec::new();
        for (surface, canonical) in &self.surface_to_canonical {
            if self.kind_of[canonical] != kind {
                continue;
            }
            if find_word(&n, surface).is_some() && !found.contains(&canonical.as_str()) {
                found.push(canonical);
            }
        }
        found.sort_unstable();
        found
    }
}

/// First word-boundary occurrence of `needle` in `haystack` (both already
/// normalized). A boundary is the string edge or a non-word character.
pub(crate) fn find_word(haystack: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let mut from = 0;
    while let Some(rel) = haystack[from..].find(needle) {
        let pos = from + rel;
        let before_ok =
            pos == 0 || !haystack[..pos].chars().next_back().is_some_and(is_word_char);
        let end = pos + needle.len();
        let after_ok =
            end == haystack.len() || !haystack[end..].chars().next().is_some_and(is_word_char);
        if before_ok && after_ok {
            return Some(pos);
        }
        from = pos + 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Vocabulary {
        let mut synonyms = BTreeMap::new();
        synonyms.insert("clipping".to_string(), "clip".to_string());
        synonyms.insert("clip applier".to_string(), "clipper".to_string());
        Vocabulary::new(
            vec!["grasper".into(), "clipper".into(), "hook".into()],
            vec!["clip".into(), "retract".into(), "dissect".into()],
            vec!["gallbladder".into(), "cystic_duct".into()],
            synonyms,
        )
        .unwrap()
    }

    #[test]
    fn canonical_labels_map_to_themselves() {
        let v = small();
        assert_eq!(v.canonical_exact(LabelKind::Verb, "clip"), Some("clip"));
        assert_eq!(v.canonical_exact(LabelKind::Verb, "Clipping"), Some("clip"));
        assert_eq!(v.canonical_exact(LabelKind::Instrument, "clip applier"), Some("clipper"));
        assert_eq!(v.canonical_exact(LabelKind::Instrument, "clip"), None);
        assert_eq!(v.canonical_exact(LabelKind::Verb, "cauterize"), None);
    }

    #[test]
    fn span_lookup_prefers_longest_surface() {
        let v = small();
        // "clip applier" wins over the shorter "clip" inside the same span.
        assert_eq!(v.canonicalize_span("the clip applier moves"), Some("clipper"));
        assert_eq!(v.canonicalize_span_in(LabelKind::Verb, "it is clipping now"), Some("clip"));
        assert_eq!(v.canonicalize_span("no labels here"), None);
    }

    #[test]
    fn word_boundaries_are_respected() {
        let v = small();
        // "hook" must not match inside "hooked".
        assert_eq!(v.find_first(LabelKind::Instrument, "the hooked wire"), None);
        assert_eq!(v.find_first(LabelKind::Instrument, "grab the hook now"), Some("hook"));
        assert_eq!(v.find_first(LabelKind::Instrument, "Grasper, then hook"), Some("grasper"));
    }

    #[test]
    fn find_all_collects_distinct_labels() {
        let v = small();
        assert_eq!(
            v.find_all(LabelKind::Instrument, "grasper near the hook and the grasper"),
            vec!["grasper", "hook"]
        );
    }

    #[test]
    fn synonym_to_unknown_label_is_rejected() {
        let mut synonyms = BTreeMap::new();
        synonyms.insert("snip".to_string(), "scissors".to_string());
        let err = Vocabulary::new(
            vec!["grasper".into()],
            vec!["cut".into()],
            vec!["liver".into()],
            synonyms,
        )
        .unwrap_err();
        assert!(matches!(err, VocabError::UnknownSynonymTarget(..)));
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let err = Vocabulary::new(
            vec!["grasper".into(), "grasper".into()],
            vec!["cut".into()],
            vec!["liver".into()],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, VocabError::Duplicate(..)));
    }
}
