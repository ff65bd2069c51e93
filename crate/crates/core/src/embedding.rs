//! Text-embedding providers and cosine similarity.
//!
//! The HTTP provider posts `{texts: [...]}` and expects `{vectors: [[...]]}`
//! with equal-dimension rows. The mock provider is a deterministic
//! L2-normalized hashed-token bag used throughout the test suites.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::retrieve::tokenize;

/// Dimension of the mock embedding space.
pub const MOCK_DIMENSION: usize = 64;
/// Fixed hash seed for the mock embedding, shared with test oracles.
pub const MOCK_HASH_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, thiserror::Error)]
pub enum EmbedError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("embedding provider error (status {status}): {body}")]
    Provider { status: u16, body: String },
    #[error("bad embedding response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimilarityError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
}

/// Batch text embedder; rows come back aligned with the input order.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Cosine similarity of two equal-dimension nonzero vectors, clamped to
/// [-1, 1] against floating-point drift.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Seeded FNV-1a over the token bytes; buckets tokens into the mock space.
fn mock_bucket(token: &str) -> usize {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = FNV_OFFSET ^ MOCK_HASH_SEED;
    for byte in token.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    (hash % MOCK_DIMENSION as u64) as usize
}

/// Deterministic mock: tokenize, count tokens into 64 hash buckets, then
/// L2-normalize. Texts with no tokens embed to the zero vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEmbeddingProvider;

impl MockEmbeddingProvider {
    pub fn embed_one(text: &str) -> Vec<f64> {
        let mut vector = vec![0.0f64; MOCK_DIMENSION];
        for token in tokenize(text) {
            vector[mock_bucket(&token)] += 1.0;
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut vector {
                *x /= norm;
            }
        }
        vector
    }
}

impl EmbeddingProvider for MockEmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}

#[derive(Debug, Serialize)]
struct WireEmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Debug, Deserialize)]
struct WireEmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// HTTP embedding provider for real sentence-embedding backends.
pub struct HttpEmbeddingProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), client })
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&WireEmbedRequest { texts })
            .send()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| EmbedError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(EmbedError::Provider { status: status.as_u16(), body });
        }
        let wire: WireEmbedResponse =
            serde_json::from_str(&body).map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        if wire.vectors.len() != texts.len() {
            return Err(EmbedError::BadResponse(format!(
                "expected {} vectors, got {}",
                texts.len(),
                wire.vectors.len()
            )));
        }
        if let Some(first) = wire.vectors.first() {
            let dim = first.len();
            if wire.vectors.iter().any(|v| v.len() != dim) {
                return Err(EmbedError::BadResponse("vectors have mixed dimensions".into()));
            }
        }
        Ok(wire.vectors)
    }
}
