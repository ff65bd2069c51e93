//! Questionnaire-driven annotation: classify leaf specifications, extract
//! transmission characteristics, and annotate cross-reference relations.
//!
//! All questions for a subject are issued in one prompt and parsed
//! independently; any required answer that fails to parse re-asks the whole
//! prompt, up to the retry limit.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::checklist::{
    CICharacteristics, Checklist, ConsentForm, NormAnnotation, NormType, Provenance,
    ReferenceRelation, RelationKind, TernaryAnswer,
};
use crate::gateway::{ChatClient, GatewayError};
use crate::prompts::{questionnaire_prompt, AnnotationSubject, Question};
use crate::regdoc::{full_specification, RegulationId};

pub const DEFAULT_RETRY_LIMIT: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("annotation failed for `{subject}` after {attempts} attempts: {reason}")]
    AnnotationFailed { subject: String, attempts: u32, reason: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("answer parse failure: {0}")]
pub struct AnswerParseError(pub String);

/// Prompt/response pair kept for provenance; `attempts` counts every issue
/// of the prompt, bounded by the retry limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationTranscript {
    pub subject: String,
    pub prompt: String,
    pub raw_response: String,
    pub attempts: u32,
}

/// Q2's nine field answers before Q3/Q4 are folded in.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StakeholderAnswers {
    pub sender: Option<String>,
    pub sender_role: Option<String>,
    pub recipient: Option<String>,
    pub recipient_role: Option<String>,
    pub subject: Option<String>,
    pub subject_role: Option<String>,
    pub information_type: Option<String>,
    pub purpose: Option<String>,
    pub consent_form: ConsentForm,
}

/// A parsed answer for one questionnaire block.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    NormType(NormType),
    Stakeholders(Box<StakeholderAnswers>),
    Ternary(TernaryAnswer),
    Relations(Vec<RelationKind>),
}

fn letter_regex(question_number: u8) -> Regex {
    // Tolerates `Q1: B`, `Q1. [B]`, `q1 - (b) Permit`, etc.
    Regex::new(&format!(
        r"(?i)\bq\s*{question_number}\b[\s:.\-\)\]]*\[?\(?\s*([abc])\b"
    ))
    .expect("letter pattern compiles")
}

fn last_letter(raw: &str, question_number: u8) -> Option<char> {
    letter_regex(question_number)
        .captures_iter(raw)
        .last()
        .and_then(|c| c.get(1))
        .map(|m| m.as_str().to_ascii_lowercase().chars().next().unwrap())
}

fn normalize_field_key(key: &str) -> String {
    key.trim()
        .trim_start_matches(['-', '*', '#', '>', ' ', '\t'])
        .trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == ')' || c == ' ')
        .trim_matches(['"', '\'', '*', '_'])
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn normalize_field_value(value: &str) -> Option<String> {
    let cleaned = value.trim().trim_matches(['"', '\'', '*', '[', ']']).trim();
    let probe = cleaned.trim_end_matches('.').trim().to_lowercase();
    if probe.is_empty() || probe == "none" || probe == "n/a" {
        None
    } else {
        Some(cleaned.to_string())
    }
}

fn parse_consent(value: &Option<String>) -> Result<ConsentForm, AnswerParseError> {
    let Some(text) = value else {
        return Ok(ConsentForm::None);
    };
    let lower = text.to_lowercase();
    if lower.contains("authorization") {
        Ok(ConsentForm::Authorization)
    } else if lower.contains("consent") {
        Ok(ConsentForm::Consent)
    } else {
        Err(AnswerParseError(format!("unrecognized consent form `{text}`")))
    }
}

fn parse_stakeholders(raw: &str) -> Result<StakeholderAnswers, AnswerParseError> {
    let mut fields: BTreeMap<String, Option<String>> = BTreeMap::new();
    for line in raw.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = normalize_field_key(key);
        match key.as_str() {
            "sender" | "sender role" | "recipient" | "recipient role" | "subject"
            | "subject role" | "information type" | "consent form" | "purpose" => {
                // Later lines win: replies sometimes restate fields while reasoning.
                fields.insert(key, normalize_field_value(value));
            }
            _ => {}
        }
    }
    let required = [
        "sender",
        "sender role",
        "recipient",
        "recipient role",
        "subject",
        "subject role",
        "information type",
        "consent form",
        "purpose",
    ];
    let missing: Vec<&str> =
        required.iter().filter(|k| !fields.contains_key(**k)).copied().collect();
    if !missing.is_empty() {
        return Err(AnswerParseError(format!("missing fields: {}", missing.join(", "))));
    }
    let consent_form = parse_consent(&fields["consent form"])?;
    let take = |key: &str| fields[key].clone();
    Ok(StakeholderAnswers {
        sender: take("sender"),
        sender_role: take("sender role"),
        recipient: take("recipient"),
        recipient_role: take("recipient role"),
        subject: take("subject"),
        subject_role: take("subject role"),
        information_type: take("information type"),
        purpose: take("purpose"),
        consent_form,
    })
}

fn relation_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(support|exception)\b").expect("pattern compiles"))
}

fn parse_relations(raw: &str, expected: usize) -> Result<Vec<RelationKind>, AnswerParseError> {
    if expected == 0 {
        return Ok(Vec::new());
    }
    // Search after the final Q5 label when present; replies may echo the
    // question text, whose own wording contains both keywords, so the last
    // `expected` tokens are taken as the answers.
    let q5 = Regex::new(r"(?i)\bq\s*5\b").expect("pattern compiles");
    let region = match q5.find_iter(raw).last() {
        Some(m) => &raw[m.end()..],
        None => raw,
    };
    let kinds: Vec<RelationKind> = relation_regex()
        .find_iter(region)
        .map(|m| {
            if m.as_str().eq_ignore_ascii_case("support") {
                RelationKind::Support
            } else {
                RelationKind::Exception
            }
        })
        .collect();
    if kinds.len() < expected {
        return Err(AnswerParseError(format!(
            "expected {expected} support/exception answers, found {}",
            kinds.len()
        )));
    }
    Ok(kinds[kinds.len() - expected..].to_vec())
}

/// Parse one question's answer out of a raw reply. `expected_refs` is only
/// meaningful for the reference-relations block.
pub fn parse_annotation_block(
    raw: &str,
    question: Question,
    expected_refs: usize,
) -> Result<Answer, AnswerParseError> {
    match question {
        Question::Classification => match last_letter(raw, 1) {
            Some('a') => Ok(Answer::NormType(NormType::Negative)),
            Some('b') => Ok(Answer::NormType(NormType::Positive)),
            Some('c') => Ok(Answer::NormType(NormType::GeneralDefinition)),
            _ => Err(AnswerParseError("no Q1 answer letter found".into())),
        },
        Question::Stakeholders => {
            parse_stakeholders(raw).map(|s| Answer::Stakeholders(Box::new(s)))
        }
        Question::SenderIsSubject | Question::RecipientIsSubject => {
            let number = if question == Question::SenderIsSubject { 3 } else { 4 };
            match last_letter(raw, number) {
                Some('a') => Ok(Answer::Ternary(TernaryAnswer::Yes)),
                Some('b') => Ok(Answer::Ternary(TernaryAnswer::No)),
                Some('c') => Ok(Answer::Ternary(TernaryAnswer::NotSure)),
                _ => Err(AnswerParseError(format!("no Q{number} answer letter found"))),
            }
        }
        Question::ReferenceRelations => {
            parse_relations(raw, expected_refs).map(Answer::Relations)
        }
    }
}

fn ask_with_retries<T>(
    client: &ChatClient,
    subject: &str,
    prompt: &str,
    retry_limit: u32,
    parse: impl Fn(&str) -> Result<T, AnswerParseError>,
) -> Result<(T, AnnotationTranscript), AnnotateError> {
    let limit = retry_limit.max(1);
    let mut last_reason = String::new();
    let mut last_response = String::new();
    for attempt in 1..=limit {
        let response = client.ask(prompt)?;
        last_response = response.content.clone();
        match parse(&response.content) {
            Ok(value) => {
                let transcript = AnnotationTranscript {
                    subject: subject.to_string(),
                    prompt: prompt.to_string(),
                    raw_response: response.content,
                    attempts: attempt,
                };
                return Ok((value, transcript));
            }
            Err(e) => last_reason = e.0,
        }
    }
    let _ = last_response;
    Err(AnnotateError::AnnotationFailed {
        subject: subject.to_string(),
        attempts: limit,
        reason: last_reason,
    })
}

/// Three-way classification of a specification text (Q1).
pub fn classify_specification(
    client: &ChatClient,
    label: &str,
    spec_text: &str,
    retry_limit: u32,
) -> Result<(NormType, AnnotationTranscript), AnnotateError> {
    let prompt = questionnaire_prompt(
        AnnotationSubject::Regulation { id: label },
        spec_text,
        &[],
        &[Question::Classification],
    );
    ask_with_retries(client, label, &prompt, retry_limit, |raw| {
        match parse_annotation_block(raw, Question::Classification, 0)? {
            Answer::NormType(t) => Ok(t),
            _ => unreachable!("classification parser returns a norm type"),
        }
    })
}

fn characteristics_from_answers(
    stakeholders: StakeholderAnswers,
    sender_is_subject: TernaryAnswer,
    recipient_is_subject: TernaryAnswer,
) -> CICharacteristics {
    CICharacteristics {
        sender: stakeholders.sender,
        sender_role: stakeholders.sender_role,
        recipient: stakeholders.recipient,
        recipient_role: stakeholders.recipient_role,
        subject: stakeholders.subject,
        subject_role: stakeholders.subject_role,
        information_type: stakeholders.information_type,
        purpose: stakeholders.purpose,
        consent_form: stakeholders.consent_form,
        sender_is_subject,
        recipient_is_subject,
    }
}

fn parse_characteristics(raw: &str) -> Result<CICharacteristics, AnswerParseError> {
    let Answer::Stakeholders(stakeholders) =
        parse_annotation_block(raw, Question::Stakeholders, 0)?
    else {
        unreachable!()
    };
    let Answer::Ternary(sender_is_subject) =
        parse_annotation_block(raw, Question::SenderIsSubject, 0)?
    else {
        unreachable!()
    };
    let Answer::Ternary(recipient_is_subject) =
        parse_annotation_block(raw, Question::RecipientIsSubject, 0)?
    else {
        unreachable!()
    };
    Ok(characteristics_from_answers(*stakeholders, sender_is_subject, recipient_is_subject))
}

/// Extract the transmission characteristics (Q2-Q4) from a specification or
/// an incoming event; events reuse the same questionnaire subset.
pub fn extract_characteristics(
    client: &ChatClient,
    subject: AnnotationSubject<'_>,
    text: &str,
    retry_limit: u32,
) -> Result<(CICharacteristics, AnnotationTranscript), AnnotateError> {
    let questions =
        [Question::Stakeholders, Question::SenderIsSubject, Question::RecipientIsSubject];
    let prompt = questionnaire_prompt(subject, text, &[], &questions);
    let label = match subject {
        AnnotationSubject::Regulation { id } => id.to_string(),
        AnnotationSubject::Event => "event".to_string(),
    };
    ask_with_retries(client, &label, &prompt, retry_limit, parse_characteristics)
}

/// Classify each cross-reference as supporting the norm or an exception to
/// it (Q5). No references, no provider call.
pub fn annotate_reference_relations(
    client: &ChatClient,
    label: &str,
    spec_text: &str,
    references: &[RegulationId],
    retry_limit: u32,
) -> Result<(Vec<ReferenceRelation>, Option<AnnotationTranscript>), AnnotateError> {
    if references.is_empty() {
        return Ok((Vec::new(), None));
    }
    let prompt = questionnaire_prompt(
        AnnotationSubject::Regulation { id: label },
        spec_text,
        references,
        &[Question::ReferenceRelations],
    );
    let (kinds, transcript) = ask_with_retries(client, label, &prompt, retry_limit, |raw| {
        match parse_annotation_block(raw, Question::ReferenceRelations, references.len())? {
            Answer::Relations(kinds) => Ok(kinds),
            _ => unreachable!(),
        }
    })?;
    let relations = references
        .iter()
        .zip(kinds)
        .map(|(target, kind)| ReferenceRelation { target: target.clone(), kind, dangling: false })
        .collect();
    Ok((relations, Some(transcript)))
}

/// Annotate one leaf with a single multi-question prompt: classification,
/// characteristics when the leaf regulates a transmission, and reference
/// relations when the clause cross-references other ids.
pub fn annotate_leaf(
    client: &ChatClient,
    leaf: &RegulationId,
    full_spec: &str,
    references: &[RegulationId],
    retry_limit: u32,
) -> Result<(NormAnnotation, AnnotationTranscript), AnnotateError> {
    let label = leaf.canonical();
    let mut questions = vec![
        Question::Classification,
        Question::Stakeholders,
        Question::SenderIsSubject,
        Question::RecipientIsSubject,
    ];
    if !references.is_empty() {
        questions.push(Question::ReferenceRelations);
    }
    let prompt = questionnaire_prompt(
        AnnotationSubject::Regulation { id: &label },
        full_spec,
        references,
        &questions,
    );

    let parse = |raw: &str| -> Result<NormAnnotation, AnswerParseError> {
        let Answer::NormType(norm_type) =
            parse_annotation_block(raw, Question::Classification, 0)?
        else {
            unreachable!()
        };
        let characteristics = if norm_type == NormType::GeneralDefinition {
            None
        } else {
            Some(parse_characteristics(raw)?)
        };
        let Answer::Relations(kinds) =
            parse_annotation_block(raw, Question::ReferenceRelations, references.len())?
        else {
            unreachable!()
        };
        let reference_relations = references
            .iter()
            .zip(kinds)
            .map(|(target, kind)| ReferenceRelation {
                target: target.clone(),
                kind,
                dangling: false,
            })
            .collect();
        Ok(NormAnnotation {
            leaf: leaf.clone(),
            norm_type,
            characteristics,
            reference_relations,
            provenance: Provenance {
                annotator: client.model().to_string(),
                transcript_key: format!("leaf:{label}"),
            },
        })
    };
    ask_with_retries(client, &label, &prompt, retry_limit, parse)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnotationStatus {
    Annotated,
    Failed { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationReportEntry {
    pub leaf: String,
    pub status: AnnotationStatus,
    pub attempts: u32,
    pub flags: Vec<String>,
}

/// Per-leaf outcome listing for an annotation run: failures, attempt counts,
/// and soft-check flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub entries: Vec<AnnotationReportEntry>,
}

impl AnnotationReport {
    pub fn failures(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, AnnotationStatus::Failed { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AnnotateConfig {
    pub retry_limit: u32,
    pub parallelism: usize,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self { retry_limit: DEFAULT_RETRY_LIMIT, parallelism: 1 }
    }
}

/// Annotate every leaf of the checklist's tree. Leaves run independently up
/// to `parallelism` workers (the gateway still enforces its own in-flight
/// bound); results merge deterministically in document order.
pub fn annotate_checklist(
    client: &ChatClient,
    checklist: &mut Checklist,
    config: AnnotateConfig,
) -> Result<AnnotationReport, AnnotateError> {
    let leaves = checklist.tree.leaves();
    let mut slots: Vec<Option<(usize, Result<(NormAnnotation, AnnotationTranscript), AnnotateError>)>> =
        Vec::new();
    slots.resize_with(leaves.len(), || None);
    let slots = Mutex::new(slots);
    let cursor = AtomicUsize::new(0);
    let workers = config.parallelism.clamp(1, leaves.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                if index >= leaves.len() {
                    break;
                }
                let key = &leaves[index];
                let leaf = crate::regdoc::parse_regulation_id(key).expect("leaf keys are ids");
                let spec = full_specification(&checklist.tree, key).expect("leaf exists");
                let references = checklist.tree.nodes[key].references.clone();
                let outcome =
                    annotate_leaf(client, &leaf, &spec, &references, config.retry_limit);
                slots.lock().expect("slot lock")[index] = Some((index, outcome));
            });
        }
    });

    let mut report = AnnotationReport::default();
    for slot in slots.into_inner().expect("threads joined") {
        let (index, outcome) = slot.expect("every leaf processed");
        let leaf_key = leaves[index].clone();
        match outcome {
            Ok((annotation, transcript)) => {
                let mut flags = annotation
                    .characteristics
                    .as_ref()
                    .map(|c| c.soft_flags())
                    .unwrap_or_default();
                if annotation.norm_type == NormType::GeneralDefinition
                    && !annotation.reference_relations.is_empty()
                {
                    flags.push(
                        "general definition with annotated references (informational)".into(),
                    );
                }
                report.entries.push(AnnotationReportEntry {
                    leaf: leaf_key,
                    status: AnnotationStatus::Annotated,
                    attempts: transcript.attempts,
                    flags,
                });
                checklist
                    .insert_annotation(annotation)
                    .expect("leaf came from this tree");
            }
            Err(AnnotateError::AnnotationFailed { attempts, reason, .. }) => {
                report.entries.push(AnnotationReportEntry {
                    leaf: leaf_key,
                    status: AnnotationStatus::Failed { reason },
                    attempts,
                    flags: Vec::new(),
                });
            }
            Err(other) => return Err(other),
        }
    }
    Ok(report)
}
