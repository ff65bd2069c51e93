//! Checklist retrieval: lexical BM25 ranking, embedding-similarity ranking
//! with role matching, and agent-generated candidate ids verified against
//! the tree.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::checklist::Checklist;
use crate::embedding::{cosine, EmbedError, EmbeddingProvider, SimilarityError};
use crate::gateway::{ChatClient, GatewayError};
use crate::prompts;
use crate::regdoc::{extract_references, full_specification, RegulationId};

pub const DEFAULT_K1: f64 = 1.5;
pub const DEFAULT_B: f64 = 0.75;
/// Default number of candidates returned by ranking queries.
pub const DEFAULT_TOP_K: usize = 5;
/// Default cosine threshold below which a surface role stays unmatched.
pub const DEFAULT_ROLE_TAU: f64 = 0.6;

#[derive(Debug, thiserror::Error)]
pub enum RetrieveError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("document `{0}` is not in the index")]
    UnknownDoc(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Lowercase and split on any non-alphanumeric character, dropping empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone)]
struct DocEntry {
    term_freq: HashMap<String, usize>,
    len: usize,
}

/// Term statistics for BM25 scoring over leaf specifications.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    docs: BTreeMap<RegulationId, DocEntry>,
    doc_freq: HashMap<String, usize>,
    avgdl: f64,
    k1: f64,
    b: f64,
}

impl Bm25Index {
    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_freq(&self, token: &str) -> usize {
        self.doc_freq.get(token).copied().unwrap_or(0)
    }

    pub fn doc_len(&self, doc: &RegulationId) -> Option<usize> {
        self.docs.get(doc).map(|d| d.len)
    }

    pub fn contains_doc(&self, doc: &RegulationId) -> bool {
        self.docs.contains_key(doc)
    }
}

pub fn build_bm25_index(
    corpus: &BTreeMap<RegulationId, String>,
) -> Result<Bm25Index, RetrieveError> {
    build_bm25_index_with(corpus, DEFAULT_K1, DEFAULT_B)
}

pub fn build_bm25_index_with(
    corpus: &BTreeMap<RegulationId, String>,
    k1: f64,
    b: f64,
) -> Result<Bm25Index, RetrieveError> {
    if corpus.is_empty() {
        return Err(RetrieveError::EmptyCorpus);
    }
    let mut docs = BTreeMap::new();
    let mut doc_freq: HashMap<String, usize> = HashMap::new();
    let mut total_len = 0usize;
    for (id, text) in corpus {
        let tokens = tokenize(text);
        total_len += tokens.len();
        let mut term_freq: HashMap<String, usize> = HashMap::new();
        for token in &tokens {
            *term_freq.entry(token.clone()).or_insert(0) += 1;
        }
        for token in term_freq.keys() {
            *doc_freq.entry(token.clone()).or_insert(0) += 1;
        }
        docs.insert(id.clone(), DocEntry { term_freq, len: tokens.len() });
    }
    let avgdl = total_len as f64 / docs.len() as f64;
    Ok(Bm25Index { docs, doc_freq, avgdl, k1, b })
}

/// Per-word relevance of `token` to one indexed document:
///
/// ```text
/// s(w,E) = IDF(w) * f(w,E) * (k1 + 1) / (f(w,E) + k1 * (1 - b + b * |E|/avgdl))
/// ```
///
/// with the smoothed nonnegative IDF form
/// `ln(1 + (N - n(w) + 0.5) / (n(w) + 0.5))`. Zero when the word does not
/// occur in the document.
pub fn bm25_word_score(
    index: &Bm25Index,
    token: &str,
    doc: &RegulationId,
) -> Result<f64, RetrieveError> {
    let entry = index
        .docs
        .get(doc)
        .ok_or_else(|| RetrieveError::UnknownDoc(doc.canonical()))?;
    let freq = entry.term_freq.get(token).copied().unwrap_or(0);
    if freq == 0 {
        return Ok(0.0);
    }
    let n = index.doc_freq(token) as f64;
    let total = index.doc_count() as f64;
    let idf = (1.0 + (total - n + 0.5) / (n + 0.5)).ln();
    let f = freq as f64;
    let norm = entry.len as f64 / index.avgdl;
    Ok(idf * f * (index.k1 + 1.0) / (f + index.k1 * (1.0 - index.b + index.b * norm)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RetrievalMethod {
    BM25,
    Embedding,
    Agent,
}

/// One ranked candidate. Result lists sort by score descending, ties broken
/// by ascending id, which makes every ranking a total order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub leaf: RegulationId,
    pub score: f64,
    pub method: RetrievalMethod,
}

pub fn sort_hits(hits: &mut [RetrievalHit]) {
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.leaf.cmp(&b.leaf)));
}

/// Query similarity is the sum of per-word scores over the query token
/// sequence; duplicate query tokens contribute once per occurrence. Returns
/// the top `k` documents (all documents rank, including zero scores); an
/// empty query yields an empty list.
pub fn bm25_query(index: &Bm25Index, query: &str, k: usize) -> Vec<RetrievalHit> {
    let tokens = tokenize(query);
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut hits: Vec<RetrievalHit> = index
        .docs
        .keys()
        .map(|id| {
            let score = tokens
                .iter()
                .map(|t| bm25_word_score(index, t, id).expect("doc key from index"))
                .sum();
            RetrievalHit { leaf: id.clone(), score, method: RetrievalMethod::BM25 }
        })
        .collect();
    sort_hits(&mut hits);
    hits.truncate(k);
    hits
}

/// Which leaves back the retrieval corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusChoice {
    /// Positive and negative norm leaves (the default). General definitions
    /// clarify norms but are not ranked.
    #[default]
    Norms,
    /// Every leaf in the tree.
    AllLeaves,
}

impl std::str::FromStr for CorpusChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "norms" => Ok(CorpusChoice::Norms),
            "all" | "all-leaves" => Ok(CorpusChoice::AllLeaves),
            other => Err(format!("unknown corpus `{other}` (expected `norms` or `all`)")),
        }
    }
}

/// The corpus for a choice: leaf id to full specification text.
pub fn corpus_for(checklist: &Checklist, choice: CorpusChoice) -> BTreeMap<RegulationId, String> {
    match choice {
        CorpusChoice::Norms => norm_corpus(checklist),
        CorpusChoice::AllLeaves => all_leaf_corpus(checklist),
    }
}

/// Full specifications of the positive and negative norm leaves — the
/// default retrieval corpus.
pub fn norm_corpus(checklist: &Checklist) -> BTreeMap<RegulationId, String> {
    checklist
        .norm_leaves()
        .into_iter()
        .map(|id| {
            let text = full_specification(&checklist.tree, &id.canonical())
                .expect("norm leaves exist in the tree");
            (id, text)
        })
        .collect()
}

/// Full specifications of every leaf, for corpora configured beyond norms.
pub fn all_leaf_corpus(checklist: &Checklist) -> BTreeMap<RegulationId, String> {
    checklist
        .tree
        .leaves()
        .into_iter()
        .map(|key| {
            let text =
                full_specification(&checklist.tree, &key).expect("leaf keys come from the tree");
            (crate::regdoc::parse_regulation_id(&key).expect("leaf keys are ids"), text)
        })
        .collect()
}

/// Ask the provider to restate the event with regulation terminology; the
/// returned text is used verbatim as the lexical query.
pub fn llm_explanation(client: &ChatClient, event: &str) -> Result<String, GatewayError> {
    let prompt = prompts::explanation_prompt(event);
    Ok(client.ask(&prompt)?.content)
}

/// Ask the provider for applicable regulation ids, then keep only ids that
/// verify against the tree: parse every id-grammar match from the reply,
/// canonicalize, deduplicate preserving order, drop unverified ids, truncate
/// to `max_n`. Scores are 1/rank.
pub fn agent_retrieve(
    client: &ChatClient,
    checklist: &Checklist,
    event: &str,
    max_n: usize,
) -> Result<Vec<RetrievalHit>, RetrieveError> {
    let prompt = prompts::agent_id_generation_prompt(event, max_n);
    let reply = client.ask(&prompt)?.content;
    let mut seen = BTreeSet::new();
    let mut hits = Vec::new();
    for id in extract_references(&reply) {
        if !seen.insert(id.clone()) {
            continue;
        }
        if !checklist.verify_id(&id) {
            continue;
        }
        let rank = hits.len() + 1;
        hits.push(RetrievalHit {
            leaf: id,
            score: 1.0 / rank as f64,
            method: RetrievalMethod::Agent,
        });
        if hits.len() == max_n {
            break;
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, Copy)]
pub struct EmbeddingRetrieveConfig {
    /// Cosine threshold for accepting a nearest-role match.
    pub role_tau: f64,
    /// When true (the default), matched roles filter the candidate set down
    /// to role-related norms before ranking; when false they only inform the
    /// diagnostics and every norm ranks.
    pub restrict_to_matched_roles: bool,
}

impl Default for EmbeddingRetrieveConfig {
    fn default() -> Self {
        Self { role_tau: DEFAULT_ROLE_TAU, restrict_to_matched_roles: true }
    }
}

/// Outcome of embedding retrieval, with diagnostics for reports.
#[derive(Debug, Clone)]
pub struct EmbeddingRetrieval {
    pub hits: Vec<RetrievalHit>,
    /// Checklist roles the event roles were matched to.
    pub matched_roles: Vec<String>,
    /// True when no usable role survived and the ranking fell back to the
    /// whole norm corpus.
    pub fallback: bool,
    pub notes: Vec<String>,
}

/// Rank norm leaves against an annotated event. Event roles are mapped to
/// checklist roles via nearest-embedding match; candidates are the norms
/// whose annotated sender or recipient role is related to a matched role in
/// the subsumption order; candidates rank by cosine similarity between the
/// event text and each leaf's full specification. With no usable roles the
/// ranking falls back to the whole norm corpus.
pub fn embedding_retrieve(
    checklist: &Checklist,
    event_text: &str,
    characteristics: &crate::checklist::CICharacteristics,
    embed: &dyn EmbeddingProvider,
    k: usize,
    config: EmbeddingRetrieveConfig,
) -> Result<EmbeddingRetrieval, RetrieveError> {
    let mut notes = Vec::new();
    let event_roles: Vec<&String> = [
        &characteristics.sender_role,
        &characteristics.recipient_role,
        &characteristics.subject_role,
    ]
    .into_iter()
    .flatten()
    .filter(|r| !r.trim().is_empty())
    .collect();

    let mut matched: BTreeSet<String> = BTreeSet::new();
    for role in &event_roles {
        match crate::graphs::nearest_role(&checklist.role_graph, role, embed) {
            Ok((label, score)) if score >= config.role_tau => {
                matched.insert(label);
            }
            Ok((label, score)) => {
                notes.push(format!(
                    "role `{role}` best match `{label}` scored {score:.3}, below threshold"
                ));
            }
            Err(crate::graphs::GraphError::EmptyGraph) => {
                notes.push(format!("role `{role}` unmatched: role graph is empty"));
            }
            Err(crate::graphs::GraphError::Similarity(SimilarityError::ZeroVector)) => {
                notes.push(format!("role `{role}` unmatched: no tokens to embed"));
            }
            Err(crate::graphs::GraphError::Embed(e)) => return Err(e.into()),
            Err(crate::graphs::GraphError::Similarity(e)) => return Err(e.into()),
            Err(other) => {
                notes.push(format!("role `{role}` unmatched: {other}"));
            }
        }
    }

    let norms = checklist.norm_leaves();
    let fallback = matched.is_empty();
    let candidates: Vec<RegulationId> = if fallback || !config.restrict_to_matched_roles {
        norms
    } else {
        norms
            .into_iter()
            .filter(|id| {
                let annotation = &checklist.annotations[&id.canonical()];
                let Some(characteristics) = &annotation.characteristics else {
                    return false;
                };
                [&characteristics.sender_role, &characteristics.recipient_role]
                    .into_iter()
                    .flatten()
                    .any(|norm_role| {
                        let norm_role = norm_role.to_lowercase();
                        matched.iter().any(|m| {
                            checklist.role_graph.is_subsumed_by(m, &norm_role)
                                || checklist.role_graph.is_subsumed_by(&norm_role, m)
                        })
                    })
            })
            .collect()
    };

    let mut texts = Vec::with_capacity(candidates.len() + 1);
    texts.push(event_text.to_string());
    for id in &candidates {
        texts.push(
            full_specification(&checklist.tree, &id.canonical())
                .expect("candidates are tree leaves"),
        );
    }
    let vectors = embed.embed(&texts)?;
    let (event_vector, spec_vectors) = vectors.split_first().expect("embed returns all rows");

    let mut hits = Vec::new();
    for (id, vector) in candidates.iter().zip(spec_vectors) {
        match cosine(event_vector, vector) {
            Ok(score) => hits.push(RetrievalHit {
                leaf: id.clone(),
                score,
                method: RetrievalMethod::Embedding,
            }),
            Err(SimilarityError::ZeroVector) => {
                notes.push(format!("candidate {} skipped: zero embedding", id.canonical()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    sort_hits(&mut hits);
    hits.truncate(k);
    Ok(EmbeddingRetrieval { hits, matched_roles: matched.into_iter().collect(), fallback, notes })
}
