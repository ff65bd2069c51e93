//! The annotated checklist: norms with transmission characteristics, the
//! role and attribute graphs, and the definition dictionary, plus versioned
//! JSON persistence.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::graphs::{AttributeGraph, RoleGraph};
use crate::regdoc::{DocumentTree, RegulationId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ChecklistError {
    #[error("annotation leaf `{0}` is not in the tree")]
    UnknownLeaf(String),
    #[error("annotation target `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("invalid annotation for `{leaf}`: {reason}")]
    InvalidAnnotation { leaf: String, reason: String },
}

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("schema version mismatch: found {found}, expected {expected}")]
    SchemaVersionMismatch { found: u64, expected: u32 },
    #[error("corrupt checklist payload: {0}")]
    CorruptPayload(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Three-way classification of a leaf specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormType {
    /// The clause permits an information transmission.
    Positive,
    /// The clause prohibits an information transmission.
    Negative,
    /// The clause clarifies norms without regulating a transmission itself.
    GeneralDefinition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConsentForm {
    #[default]
    None,
    Consent,
    Authorization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TernaryAnswer {
    Yes,
    No,
    #[default]
    NotSure,
}

/// The transmission tuple extracted from a norm or an event: the three
/// actors with their roles, the transmitted attribute, purpose, and consent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CICharacteristics {
    pub sender: Option<String>,
    pub sender_role: Option<String>,
    pub recipient: Option<String>,
    pub recipient_role: Option<String>,
    pub subject: Option<String>,
    pub subject_role: Option<String>,
    pub information_type: Option<String>,
    pub purpose: Option<String>,
    pub consent_form: ConsentForm,
    pub sender_is_subject: TernaryAnswer,
    pub recipient_is_subject: TernaryAnswer,
}

impl CICharacteristics {
    pub fn is_all_none(&self) -> bool {
        self.sender.is_none()
            && self.sender_role.is_none()
            && self.recipient.is_none()
            && self.recipient_role.is_none()
            && self.subject.is_none()
            && self.subject_role.is_none()
            && self.information_type.is_none()
            && self.purpose.is_none()
            && self.consent_form == ConsentForm::None
    }

    /// Soft-check warnings; these never reject an annotation.
    pub fn soft_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.consent_form == ConsentForm::Authorization && self.purpose.is_none() {
            flags.push("authorization consent without a stated purpose".to_string());
        }
        flags
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationKind {
    Support,
    Exception,
}

/// A cross-reference from a norm to another clause, annotated as supporting
/// the norm or carving out an exception. Targets that do not resolve against
/// the tree are kept with the `dangling` flag set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRelation {
    pub target: RegulationId,
    pub kind: RelationKind,
    #[serde(default)]
    pub dangling: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub annotator: String,
    pub transcript_key: String,
}

/// Per-leaf annotation: the norm classification, its transmission
/// characteristics (absent for general definitions), and reference relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormAnnotation {
    pub leaf: RegulationId,
    pub norm_type: NormType,
    pub characteristics: Option<CICharacteristics>,
    pub reference_relations: Vec<ReferenceRelation>,
    pub provenance: Provenance,
}

impl NormAnnotation {
    pub fn validate(&self) -> Result<(), String> {
        let has = self.characteristics.is_some();
        let wants = self.norm_type != NormType::GeneralDefinition;
        if has != wants {
            return Err(format!(
                "characteristics must be present iff the norm regulates a transmission \
                 (type {:?}, characteristics {})",
                self.norm_type,
                if has { "present" } else { "absent" }
            ));
        }
        Ok(())
    }
}

/// Case-normalized term-to-definition map.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DefinitionDictionary {
    entries: BTreeMap<String, String>,
}

impl DefinitionDictionary {
    pub fn insert(&mut self, term: &str, definition: &str) -> Option<String> {
        self.entries.insert(term.trim().to_lowercase(), definition.trim().to_string())
    }

    pub fn lookup(&self, term: &str) -> Option<&str> {
        self.entries.get(&term.trim().to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Two-column `term<TAB>definition` file; duplicate terms are rejected.
    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut dict = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, definition) = line
                .split_once('\t')
                .ok_or(format!("definitions line {}: expected `term<TAB>definition`", lineno + 1))?;
            if dict.insert(term, definition).is_some() {
                return Err(format!("definitions line {}: duplicate term `{term}`", lineno + 1));
            }
        }
        Ok(dict)
    }
}

/// The whole artifact: document tree, per-leaf annotations, both subsumption
/// graphs, and the definition dictionary. Immutable once built or loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checklist {
    pub tree: DocumentTree,
    /// Canonical leaf id to its annotation.
    pub annotations: BTreeMap<String, NormAnnotation>,
    pub role_graph: RoleGraph,
    pub attribute_graph: AttributeGraph,
    pub definitions: DefinitionDictionary,
}

impl Checklist {
    pub fn new(tree: DocumentTree) -> Self {
        Self {
            tree,
            annotations: BTreeMap::new(),
            role_graph: RoleGraph::default(),
            attribute_graph: AttributeGraph::default(),
            definitions: DefinitionDictionary::default(),
        }
    }

    /// True iff the canonical form of `id` names a node in the tree.
    pub fn verify_id(&self, id: &RegulationId) -> bool {
        self.tree.contains_id(id)
    }

    /// Parse-then-verify convenience for raw id strings.
    pub fn verify_id_str(&self, raw: &str) -> bool {
        crate::regdoc::parse_regulation_id(raw).map(|id| self.verify_id(&id)).unwrap_or(false)
    }

    /// Annotated leaves of the given norm type, in document order.
    pub fn norms_by_type(&self, norm_type: NormType) -> Vec<RegulationId> {
        self.tree
            .document_order()
            .into_iter()
            .filter_map(|key| self.annotations.get(&key))
            .filter(|ann| ann.norm_type == norm_type)
            .map(|ann| ann.leaf.clone())
            .collect()
    }

    /// Annotated norm leaves (positive and negative), in document order.
    pub fn norm_leaves(&self) -> Vec<RegulationId> {
        self.tree
            .document_order()
            .into_iter()
            .filter_map(|key| self.annotations.get(&key))
            .filter(|ann| ann.norm_type != NormType::GeneralDefinition)
            .map(|ann| ann.leaf.clone())
            .collect()
    }

    pub fn lookup_definition(&self, term: &str) -> Option<&str> {
        self.definitions.lookup(term)
    }

    /// Store an annotation, verifying its leaf against the tree and flagging
    /// dangling reference targets (never dropping them).
    pub fn insert_annotation(&mut self, mut annotation: NormAnnotation) -> Result<(), ChecklistError> {
        let key = annotation.leaf.canonical();
        if !self.tree.nodes.contains_key(&key) {
            return Err(ChecklistError::UnknownLeaf(key));
        }
        if !self.tree.is_leaf(&key) {
            return Err(ChecklistError::NotALeaf(key));
        }
        annotation
            .validate()
            .map_err(|reason| ChecklistError::InvalidAnnotation { leaf: key.clone(), reason })?;
        for relation in &mut annotation.reference_relations {
            relation.dangling = !self.tree.contains_id(&relation.target);
        }
        self.annotations.insert(key, annotation);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        self.tree.validate()?;
        for (key, annotation) in &self.annotations {
            if annotation.leaf.canonical() != *key {
                return Err(format!("annotation key {key} disagrees with its leaf id"));
            }
            if !self.tree.is_leaf(key) {
                return Err(format!("annotation target {key} is not a leaf of the tree"));
            }
            annotation.validate().map_err(|e| format!("annotation {key}: {e}"))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ChecklistFile {
    schema_version: u32,
    #[serde(flatten)]
    checklist: Checklist,
}

pub fn save_checklist(checklist: &Checklist, sink: &mut dyn Write) -> Result<(), PersistError> {
    let file = ChecklistFile { schema_version: SCHEMA_VERSION, checklist: checklist.clone() };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| PersistError::CorruptPayload(e.to_string()))?;
    sink.write_all(json.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_checklist(source: &mut dyn Read) -> Result<Checklist, PersistError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| PersistError::CorruptPayload(e.to_string()))?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| PersistError::CorruptPayload("missing schema_version".into()))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(PersistError::SchemaVersionMismatch { found, expected: SCHEMA_VERSION });
    }
    let file: ChecklistFile = serde_json::from_value(value)
        .map_err(|e| PersistError::CorruptPayload(e.to_string()))?;
    file.checklist
        .validate()
        .map_err(PersistError::CorruptPayload)?;
    Ok(file.checklist)
}

pub fn save_checklist_file(checklist: &Checklist, path: &std::path::Path) -> Result<(), PersistError> {
    let mut file = std::fs::File::create(path)?;
    save_checklist(checklist, &mut file)
}

pub fn load_checklist_file(path: &std::path::Path) -> Result<Checklist, PersistError> {
    let mut file = std::fs::File::open(path)?;
    load_checklist(&mut file)
}
