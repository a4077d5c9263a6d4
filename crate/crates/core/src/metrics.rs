//! Corpus diversity scoring: Self-BLEU and embedding similarity, with the
//! seeded subsampling protocol.
//!
//! Diversity is always 1 - similarity. Tokenization is lowercase split on
//! non-alphanumerics; BLEU smoothing adds a small epsilon to zero n-gram
//! matches. Both are documented defaults: BLEU is tokenizer-sensitive and
//! no external convention is assumed here.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least 2 texts, got {0}")]
    TooFewTexts(usize),
    #[error("sample_size {sample_size} exceeds corpus size {corpus_size}")]
    SampleTooLarge {
        sample_size: usize,
        corpus_size: usize,
    },
    #[error("embedder failure: {0}")]
    Embedder(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Additive smoothing for zero n-gram matches.
pub const BLEU_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub texts: Vec<String>,
    pub source_label: String,
}

impl Corpus {
    /// One description per line; blank lines are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Corpus {
            texts: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
            source_label: path.display().to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    SelfBleu,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub metric: MetricKind,
    pub mean: f64,
    pub std: f64,
    pub sample_size: usize,
    pub repeats: usize,
    pub seed: u64,
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU of one candidate against multiple references: modified n-gram
/// precision with uniform 1..max_n weights, epsilon smoothing for zero
/// matches, and the closest-reference brevity penalty.
fn bleu_multi_ref(candidate: &[String], references: &[Vec<String>], max_n: usize) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    // Only n-gram orders the candidate actually has.
    let effective_n = max_n.min(candidate.len());
    let weight = 1.0 / effective_n as f64;
    let mut log_sum = 0.0;
    for n in 1..=effective_n {
        let cand_counts = ngram_counts(candidate, n);
        let total: usize = cand_counts.values().sum();
        let mut matched = 0usize;
        for (gram, &count) in &cand_counts {
            let best_ref = references
                .iter()
                .map(|r| ngram_counts(r, n).get(gram).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            matched += count.min(best_ref);
        }
        let precision = if matched == 0 {
            BLEU_EPSILON / total as f64
        } else {
            matched as f64 / total as f64
        };
        log_sum += weight * precision.ln();
    }
    // Brevity penalty against the closest reference length (shorter wins ties).
    let c = candidate.len() as f64;
    let r = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| ((len as i64 - candidate.len() as i64).abs(), len))
        .unwrap_or(0) as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}

/// Mean BLEU of each text against all the others. Returns similarity in
/// [0, 1]; diversity is 1 - similarity.
pub fn self_bleu(texts: &[String], max_n: usize) -> Result<f64, MetricsError> {
    if texts.len() < 2 {
        return Err(MetricsError::TooFewTexts(texts.len()));
    }
    let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let mut total = 0.0;
    for i in 0..tokenized.len() {
        let references: Vec<Vec<String>> = tokenized
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, t)| t.clone())
            .collect();
        total += bleu_multi_ref(&tokenized[i], &references, max_n);
    }
    Ok(total / texts.len() as f64)
}

pub fn self_bleu_diversity(texts: &[String], max_n: usize) -> Result<f64, MetricsError> {
    Ok(1.0 - self_bleu(texts, max_n)?)
}

/// Text embedding provider.
pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError>;
}

/// Deterministic feature-hashing embedder: token counts hashed into a
/// fixed-dimension vector. Offline stand-in for a sentence-embedding
/// service.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 256 }
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        let mut v = vec![0.0; self.dim];
        for token in tokenize(text) {
            let idx = (crate::hash::fnv1a64(token.as_bytes()) % self.dim as u64) as usize;
            v[idx] += 1.0;
        }
        Ok(v)
    }
}

/// Remote embedding endpoint (`REGEN_EMBED_URL`): POST {"input": text},
/// expects {"embedding": [..]}.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub url: String,
}

impl RemoteEmbedder {
    pub fn from_env() -> Result<Self, MetricsError> {
        std::env::var("REGEN_EMBED_URL")
            .map(|url| RemoteEmbedder { url })
            .map_err(|_| MetricsError::Embedder("REGEN_EMBED_URL unset".into()))
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        let mut response = ureq::post(&self.url)
            .send_json(serde_json::json!({ "input": text }))
            .map_err(|e| MetricsError::Embedder(e.to_string()))?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| MetricsError::Embedder(e.to_string()))?;
        value["embedding"]
            .as_array()
            .map(|xs| xs.iter().filter_map(|x| x.as_f64()).collect())
            .ok_or_else(|| MetricsError::Embedder("response missing 'embedding'".into()))
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// 1 - mean pairwise cosine similarity over all unordered pairs, summed in
/// fixed index order. Similarity is clamped into [0, 1] so diversity stays
/// in range for any embedder.
pub fn embedding_diversity(
    texts: &[String],
    embedder: &dyn Embedder,
) -> Result<f64, MetricsError> {
    if texts.len() < 2 {
        return Err(MetricsError::TooFewTexts(texts.len()));
    }
    let vectors: Vec<Vec<f64>> = texts
        .iter()
        .map(|t| embedder.embed(t))
        .collect::<Result<_, _>>()?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            total += cosine(&vectors[i], &vectors[j]);
            pairs += 1;
        }
    }
    let mean = (total / pairs as f64).clamp(0.0, 1.0);
    Ok(1.0 - mean)
}

/// Seeded sampling-without-replacement protocol: draw `sample_size` texts,
/// score diversity, repeat, report mean and (population) std.
pub fn sampled_diversity(
    corpus: &Corpus,
    metric: MetricKind,
    sample_size: usize,
    repeats: usize,
    seed: u64,
    max_n: usize,
    embedder: &dyn Embedder,
) -> Result<DiversityReport, MetricsError> {
    if sample_size > corpus.texts.len() {
        return Err(MetricsError::SampleTooLarge {
            sample_size,
            corpus_size: corpus.texts.len(),
        });
    }
    if sample_size < 2 {
        return Err(MetricsError::TooFewTexts(sample_size));
    }
    let mut scores = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_add(rep as u64));
        let mut indices: Vec<usize> = (0..corpus.texts.len()).collect();
        for i in 0..sample_size {
            let j = rng.random_range(i..indices.len());
            indices.swap(i, j);
        }
        // Canonical corpus order within the sample pins floating-point
        // summation, so identical sample sets score identically.
        let mut chosen: Vec<usize> = indices[..sample_size].to_vec();
        chosen.sort_unstable();
        let sample: Vec<String> = chosen.iter().map(|&i| corpus.texts[i].clone()).collect();
        let diversity = match metric {
            MetricKind::SelfBleu => self_bleu_diversity(&sample, max_n)?,
            MetricKind::Embedding => embedding_diversity(&sample, embedder)?,
        };
        scores.push(diversity);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    // Identical samples must report exactly zero spread; the general path
    // can pick up an ulp from the mean division.
    let std = if scores.iter().all(|s| *s == scores[0]) {
        0.0
    } else {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64).sqrt()
    };
    Ok(DiversityReport {
        metric,
        mean,
        std,
        sample_size,
        repeats,
        seed,
    })
}
