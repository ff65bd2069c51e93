//! Event judgment: six strategies for classifying an event as permitted,
//! prohibited, or not applicable, with candidate retrieval, a per-candidate
//! relevance filter, and strict choice parsing. Provider failures become
//! parse failures with a note; the case is always counted.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::annotate::{extract_characteristics, AnnotateError};
use crate::checklist::{CICharacteristics, Checklist};
use crate::embedding::EmbeddingProvider;
use crate::gateway::{ChatClient, GatewayError};
use crate::prompts::{self, AnnotationSubject};
use crate::regdoc::{full_specification, RegulationId};
use crate::retrieve::{
    agent_retrieve, bm25_query, build_bm25_index, corpus_for, embedding_retrieve,
    llm_explanation, CorpusChoice, EmbeddingRetrieveConfig, RetrievalHit, RetrieveError,
    DEFAULT_ROLE_TAU, DEFAULT_TOP_K,
};

/// Maximum reference content characters embedded in a decision prompt.
pub const DEFAULT_MAX_REFERENCE_CHARS: usize = 4000;

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("method {0} requires a loaded checklist")]
    ChecklistRequired(Method),
    #[error("method {0} requires an embedding provider")]
    EmbeddingProviderRequired(Method),
}

/// Gold label of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Permit,
    Prohibit,
    #[serde(rename = "Not Applicable")]
    NotApplicable,
}

pub const LABELS: [Label; 3] = [Label::Permit, Label::Prohibit, Label::NotApplicable];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseKind {
    Real,
    Synthetic,
}

/// One event to judge, with its gold label and optional gold references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub context: String,
    pub gold: Label,
    pub kind: CaseKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<RegulationId>,
}

/// The six judgment strategies. The first three prompt directly; the last
/// three retrieve from the checklist first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "cot-auto")]
    CotAuto,
    #[serde(rename = "cot-manual")]
    CotManual,
    #[serde(rename = "agent-id")]
    AgentId,
    #[serde(rename = "bm25-content")]
    Bm25Content,
    #[serde(rename = "ci-es-content")]
    CiEsContent,
}

pub const METHODS: [Method; 6] = [
    Method::Dp,
    Method::CotAuto,
    Method::CotManual,
    Method::AgentId,
    Method::Bm25Content,
    Method::CiEsContent,
];

impl Method {
    pub fn slug(&self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::CotAuto => "cot-auto",
            Method::CotManual => "cot-manual",
            Method::AgentId => "agent-id",
            Method::Bm25Content => "bm25-content",
            Method::CiEsContent => "ci-es-content",
        }
    }

    pub fn is_rag(&self) -> bool {
        matches!(self, Method::AgentId | Method::Bm25Content | Method::CiEsContent)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "dp" => Ok(Method::Dp),
            "cot-auto" => Ok(Method::CotAuto),
            "cot-manual" => Ok(Method::CotManual),
            "agent-id" => Ok(Method::AgentId),
            "bm25-content" => Ok(Method::Bm25Content),
            "ci-es-content" => Ok(Method::CiEsContent),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// A prediction: one of the three labels, or a parse failure (scored as
/// incorrect).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicted {
    Permit,
    Prohibit,
    #[serde(rename = "Not Applicable")]
    NotApplicable,
    ParseFailure,
}

impl From<Label> for Predicted {
    fn from(label: Label) -> Self {
        match label {
            Label::Permit => Predicted::Permit,
            Label::Prohibit => Predicted::Prohibit,
            Label::NotApplicable => Predicted::NotApplicable,
        }
    }
}

impl Predicted {
    pub fn matches(&self, gold: Label) -> bool {
        *self == Predicted::from(gold)
    }
}

/// One judged case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub case_id: String,
    pub method: Method,
    pub predicted: Predicted,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hits: Vec<RetrievalHit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript_keys: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_note: Option<String>,
}

fn choice_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)choice\s*:\s*\[?\s*([abc])\b").expect("pattern compiles"))
}

/// Extract the final `Choice: [A|B|C]` answer; A maps to Prohibit, B to
/// Permit, C to Not Applicable. The last matching line wins.
pub fn parse_choice(raw: &str) -> Predicted {
    match choice_regex()
        .captures_iter(raw)
        .last()
        .and_then(|c| c.get(1))
        .map(|m| m.as_str().to_ascii_lowercase())
    {
        Some(letter) => match letter.as_str() {
            "a" => Predicted::Prohibit,
            "b" => Predicted::Permit,
            _ => Predicted::NotApplicable,
        },
        None => Predicted::ParseFailure,
    }
}

/// Relevance-filter outcome for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOutcome {
    Keep,
    Drop,
    /// The NONE reply: the event is unrelated to all offered candidates.
    Unrelated,
}

/// Screen one candidate regulation for relevance. The first yes/no/NONE
/// token of the reply decides; unparseable replies drop the candidate.
pub fn law_filter(
    client: &ChatClient,
    event: &str,
    candidate_text: &str,
) -> Result<FilterOutcome, GatewayError> {
    let prompt = prompts::law_filter_prompt(event, candidate_text);
    let reply = client.ask(&prompt)?.content;
    for token in reply.split(|c: char| !c.is_alphanumeric()) {
        if token.eq_ignore_ascii_case("yes") {
            return Ok(FilterOutcome::Keep);
        }
        if token.eq_ignore_ascii_case("no") {
            return Ok(FilterOutcome::Drop);
        }
        if token.eq_ignore_ascii_case("none") {
            return Ok(FilterOutcome::Unrelated);
        }
    }
    Ok(FilterOutcome::Drop)
}

#[derive(Debug, Clone)]
struct ReferenceEntry {
    id: String,
    content: Option<String>,
}

/// Render the reference block for a decision prompt, capping total content
/// at `max_chars`. When over budget every entry is cut to the largest common
/// cap that fits, so the longest contents lose characters first.
fn build_reference_block(entries: &[ReferenceEntry], max_chars: usize) -> String {
    if entries.is_empty() {
        return "no relevant regulations found".to_string();
    }
    let lengths: Vec<usize> =
        entries.iter().map(|e| e.content.as_ref().map_or(0, |c| c.chars().count())).collect();
    let total: usize = lengths.iter().sum();
    let cap = if total <= max_chars {
        usize::MAX
    } else {
        let mut low = 0usize;
        let mut high = *lengths.iter().max().expect("entries nonempty");
        while low < high {
            let mid = (low + high).div_ceil(2);
            let fitted: usize = lengths.iter().map(|l| (*l).min(mid)).sum();
            if fitted <= max_chars {
                low = mid;
            } else {
                high = mid - 1;
            }
        }
        low
    };
    entries
        .iter()
        .map(|entry| match &entry.content {
            Some(content) => {
                let truncated: String = content.chars().take(cap).collect();
                format!("{}: {}", entry.id, truncated)
            }
            None => entry.id.clone(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy)]
pub struct JudgeConfig {
    /// Retrieval depth and filter-survivor cap.
    pub k: usize,
    /// Nearest-role acceptance threshold for embedding retrieval.
    pub role_tau: f64,
    /// Reference content budget for decision prompts.
    pub max_reference_chars: usize,
    /// Retry limit for event characteristic extraction.
    pub retry_limit: u32,
    /// Which leaves back the lexical retrieval corpus.
    pub corpus: CorpusChoice,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_TOP_K,
            role_tau: DEFAULT_ROLE_TAU,
            max_reference_chars: DEFAULT_MAX_REFERENCE_CHARS,
            retry_limit: crate::annotate::DEFAULT_RETRY_LIMIT,
            corpus: CorpusChoice::default(),
        }
    }
}

/// Everything a judgment pipeline may need. Non-RAG methods run with no
/// checklist and no embedding provider; by construction they cannot read
/// either.
pub struct JudgeContext<'a> {
    pub chat: &'a ChatClient,
    pub embed: Option<&'a dyn EmbeddingProvider>,
    pub checklist: Option<&'a Checklist>,
    pub config: JudgeConfig,
}

impl<'a> JudgeContext<'a> {
    pub fn direct(chat: &'a ChatClient) -> Self {
        Self { chat, embed: None, checklist: None, config: JudgeConfig::default() }
    }

    fn require_checklist(&self, method: Method) -> Result<&'a Checklist, JudgeError> {
        self.checklist.ok_or(JudgeError::ChecklistRequired(method))
    }
}

struct PipelineFailure {
    note: String,
    hits: Vec<RetrievalHit>,
}

/// Judge one case with one method. Provider errors never abort the case:
/// they yield a parse-failure judgment carrying the error note.
pub fn judge(method: Method, ctx: &JudgeContext<'_>, case: &CaseRecord) -> Result<Judgment, JudgeError> {
    // RAG preconditions are programming errors, checked before any calls.
    let checklist = if method.is_rag() { Some(ctx.require_checklist(method)?) } else { None };
    if method == Method::CiEsContent && ctx.embed.is_none() {
        return Err(JudgeError::EmbeddingProviderRequired(method));
    }

    let mut transcript_keys = Vec::new();
    let outcome = match method {
        Method::Dp => decide(ctx, case, prompts::direct_prompt(&case.context), &mut transcript_keys),
        Method::CotAuto => {
            decide(ctx, case, prompts::cot_auto_prompt(&case.context), &mut transcript_keys)
        }
        Method::CotManual => {
            decide(ctx, case, prompts::cot_manual_prompt(&case.context), &mut transcript_keys)
        }
        Method::AgentId => {
            agent_pipeline(ctx, checklist.expect("checked above"), case, &mut transcript_keys)
        }
        Method::Bm25Content => {
            bm25_pipeline(ctx, checklist.expect("checked above"), case, &mut transcript_keys)
        }
        Method::CiEsContent => {
            ci_es_pipeline(ctx, checklist.expect("checked above"), case, &mut transcript_keys)
        }
    };

    let judgment = match outcome {
        Ok((predicted, hits)) => Judgment {
            case_id: case.id.clone(),
            method,
            predicted,
            hits,
            transcript_keys,
            error_note: None,
        },
        Err(failure) => Judgment {
            case_id: case.id.clone(),
            method,
            predicted: Predicted::ParseFailure,
            hits: failure.hits,
            transcript_keys,
            error_note: Some(failure.note),
        },
    };
    Ok(judgment)
}

type StageResult = Result<(Predicted, Vec<RetrievalHit>), PipelineFailure>;

fn decide(
    ctx: &JudgeContext<'_>,
    case: &CaseRecord,
    prompt: String,
    transcript_keys: &mut Vec<String>,
) -> StageResult {
    transcript_keys.push(format!("{}/decision", case.id));
    match ctx.chat.ask(&prompt) {
        Ok(resp) => Ok((parse_choice(&resp.content), Vec::new())),
        Err(e) => Err(PipelineFailure { note: format!("decision prompt failed: {e}"), hits: Vec::new() }),
    }
}

fn decide_with_references(
    ctx: &JudgeContext<'_>,
    case: &CaseRecord,
    hits: Vec<RetrievalHit>,
    entries: &[ReferenceEntry],
    with_content: bool,
    transcript_keys: &mut Vec<String>,
) -> StageResult {
    let block = build_reference_block(entries, ctx.config.max_reference_chars);
    let prompt = if with_content {
        prompts::decision_with_content_prompt(&case.context, &block)
    } else {
        prompts::decision_with_ids_prompt(&case.context, &block)
    };
    transcript_keys.push(format!("{}/decision", case.id));
    match ctx.chat.ask(&prompt) {
        Ok(resp) => Ok((parse_choice(&resp.content), hits)),
        Err(e) => Err(PipelineFailure { note: format!("decision prompt failed: {e}"), hits }),
    }
}

/// Run the relevance filter over the hits, returning the survivors in
/// retrieval-score order.
fn filter_hits(
    ctx: &JudgeContext<'_>,
    checklist: &Checklist,
    case: &CaseRecord,
    hits: &[RetrievalHit],
    transcript_keys: &mut Vec<String>,
) -> Result<Vec<RetrievalHit>, PipelineFailure> {
    let mut survivors = Vec::new();
    for hit in hits {
        let key = hit.leaf.canonical();
        let spec = full_specification(&checklist.tree, &key)
            .unwrap_or_else(|_| "(content unavailable)".to_string());
        transcript_keys.push(format!("{}/filter/{}", case.id, key));
        let outcome = law_filter(ctx.chat, &case.context, &format!("{key}: {spec}"))
            .map_err(|e| PipelineFailure {
                note: format!("law filter failed on {key}: {e}"),
                hits: hits.to_vec(),
            })?;
        if outcome == FilterOutcome::Keep {
            survivors.push(hit.clone());
        }
    }
    Ok(survivors)
}

fn reference_entries(
    checklist: &Checklist,
    survivors: &[RetrievalHit],
    with_content: bool,
) -> Vec<ReferenceEntry> {
    survivors
        .iter()
        .map(|hit| {
            let key = hit.leaf.canonical();
            let content = with_content.then(|| {
                full_specification(&checklist.tree, &key)
                    .unwrap_or_else(|_| "(content unavailable)".to_string())
            });
            ReferenceEntry { id: key, content }
        })
        .collect()
}

fn agent_pipeline(
    ctx: &JudgeContext<'_>,
    checklist: &Checklist,
    case: &CaseRecord,
    transcript_keys: &mut Vec<String>,
) -> StageResult {
    transcript_keys.push(format!("{}/agent-ids", case.id));
    let hits = agent_retrieve(ctx.chat, checklist, &case.context, ctx.config.k).map_err(|e| {
        PipelineFailure { note: format!("agent retrieval failed: {e}"), hits: Vec::new() }
    })?;
    let survivors = filter_hits(ctx, checklist, case, &hits, transcript_keys)?;
    let entries = reference_entries(checklist, &survivors, false);
    decide_with_references(ctx, case, hits, &entries, false, transcript_keys)
}

fn bm25_pipeline(
    ctx: &JudgeContext<'_>,
    checklist: &Checklist,
    case: &CaseRecord,
    transcript_keys: &mut Vec<String>,
) -> StageResult {
    transcript_keys.push(format!("{}/explanation", case.id));
    let explanation = llm_explanation(ctx.chat, &case.context).map_err(|e| PipelineFailure {
        note: format!("explanation prompt failed: {e}"),
        hits: Vec::new(),
    })?;
    let corpus = corpus_for(checklist, ctx.config.corpus);
    let hits = if corpus.is_empty() {
        Vec::new()
    } else {
        let index = build_bm25_index(&corpus).expect("corpus is nonempty");
        bm25_query(&index, &explanation, ctx.config.k)
    };
    let survivors = filter_hits(ctx, checklist, case, &hits, transcript_keys)?;
    let entries = reference_entries(checklist, &survivors, true);
    decide_with_references(ctx, case, hits, &entries, true, transcript_keys)
}

fn ci_es_pipeline(
    ctx: &JudgeContext<'_>,
    checklist: &Checklist,
    case: &CaseRecord,
    transcript_keys: &mut Vec<String>,
) -> StageResult {
    transcript_keys.push(format!("{}/extract", case.id));
    let characteristics = match extract_characteristics(
        ctx.chat,
        AnnotationSubject::Event,
        &case.context,
        ctx.config.retry_limit,
    ) {
        Ok((characteristics, _)) => characteristics,
        Err(AnnotateError::AnnotationFailed { .. }) => {
            // Unparseable extraction still allows the whole-text fallback.
            CICharacteristics::default()
        }
        Err(AnnotateError::Gateway(e)) => {
            return Err(PipelineFailure {
                note: format!("characteristic extraction failed: {e}"),
                hits: Vec::new(),
            })
        }
    };
    let embed = ctx.embed.expect("checked in judge()");
    let retrieval = embedding_retrieve(
        checklist,
        &case.context,
        &characteristics,
        embed,
        ctx.config.k,
        EmbeddingRetrieveConfig { role_tau: ctx.config.role_tau, ..Default::default() },
    )
    .map_err(|e: RetrieveError| PipelineFailure {
        note: format!("embedding retrieval failed: {e}"),
        hits: Vec::new(),
    })?;
    let survivors = filter_hits(ctx, checklist, case, &retrieval.hits, transcript_keys)?;
    let entries = reference_entries(checklist, &survivors, true);
    decide_with_references(ctx, case, retrieval.hits, &entries, true, transcript_keys)
}

/// Judge a batch of cases with one method, up to `parallelism` workers; the
/// per-case pipeline stays sequential and results come back ordered by case
/// id.
pub fn judge_cases(
    method: Method,
    ctx: &JudgeContext<'_>,
    cases: &[CaseRecord],
    parallelism: usize,
) -> Result<Vec<Judgment>, JudgeError> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let slots: Mutex<Vec<Option<Result<Judgment, JudgeError>>>> =
        Mutex::new((0..cases.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = parallelism.clamp(1, cases.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                if index >= cases.len() {
                    break;
                }
                let outcome = judge(method, ctx, &cases[index]);
                slots.lock().expect("slot lock")[index] = Some(outcome);
            });
        }
    });

    let mut judgments = Vec::with_capacity(cases.len());
    for slot in slots.into_inner().expect("threads joined") {
        judgments.push(slot.expect("every case processed")?);
    }
    judgments.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(judgments)
}
