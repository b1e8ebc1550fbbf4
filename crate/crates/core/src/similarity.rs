//! Sentence similarity: TF-IDF cosine plus a uniform dispatcher over the
//! ROUGE variants used to build labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rouge::{self, TokenSeq};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("cannot fit TF-IDF on a corpus without tokens")]
    EmptyCorpus,
    #[error("tfidf-cosine needs a fitted TF-IDF model")]
    MissingModel,
    #[error("unknown similarity measure {0:?}")]
    UnknownMeasure(String),
}

/// Smoothed TF-IDF over a small corpus of sentences, each sentence being
/// one pseudo-document: `idf(t) = ln((1 + S) / (1 + df(t))) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdfModel {
    pub fn fit<'a, I>(sentences: I) -> Result<Self, SimilarityError>
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        let mut vocabulary: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        let mut count = 0usize;
        for sentence in sentences {
            count += 1;
            let mut seen = HashSet::new();
            for token in sentence.tokens() {
                if !seen.insert(token.as_str()) {
                    continue;
                }
                let next = vocabulary.len();
                let ix = *vocabulary.entry(token.clone()).or_insert(next);
                if ix == df.len() {
                    df.push(0);
                }
                df[ix] += 1;
            }
        }
        if vocabulary.is_empty() {
            return Err(SimilarityError::EmptyCorpus);
        }
        let total = count as f64;
        let idf = df
            .into_iter()
            .map(|d| ((1.0 + total) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(TfIdfModel { vocabulary, idf })
    }

    pub fn vocabulary_size(&self) -> usize {
        self.idf.len()
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&ix| self.idf[ix])
    }

    /// Raw term counts times idf; out-of-vocabulary tokens are dropped.
    pub fn vectorize(&self, seq: &TokenSeq) -> BTreeMap<usize, f64> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for token in seq.tokens() {
            if let Some(&ix) = self.vocabulary.get(token) {
                *counts.entry(ix).or_insert(0) += 1;
            }
        }
        counts
            .into_iter()
            .map(|(ix, c)| (ix, c as f64 * self.idf[ix]))
            .collect()
    }

    pub fn cosine(&self, a: &TokenSeq, b: &TokenSeq) -> f64 {
        let (va, vb) = (self.vectorize(a), self.vectorize(b));
        let norm = |v: &BTreeMap<usize, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
        let (na, nb) = (norm(&va), norm(&vb));
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let dot: f64 = va
            .iter()
            .filter_map(|(ix, x)| vb.get(ix).map(|y| x * y))
            .sum();
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Which sentences the per-sample TF-IDF model is fitted on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TfIdfScope {
    #[default]
    DocumentAndReference,
    DocumentOnly,
}

impl FromStr for TfIdfScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "doc+ref" | "document-and-reference" => Ok(TfIdfScope::DocumentAndReference),
            "doc" | "document-only" => Ok(TfIdfScope::DocumentOnly),
            other => Err(format!("unknown tfidf scope {other:?} (expected doc or doc+ref)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SimilarityMeasure {
    Rouge1F1,
    Rouge2F1,
    RougeLRecall,
    RougeLPrecision,
    RougeLF1,
    RougeAvgF1,
    TfIdfCosine,
}

impl SimilarityMeasure {
    pub const ALL: [SimilarityMeasure; 7] = [
        SimilarityMeasure::TfIdfCosine,
        SimilarityMeasure::Rouge1F1,
        SimilarityMeasure::Rouge2F1,
        SimilarityMeasure::RougeLRecall,
        SimilarityMeasure::RougeLPrecision,
        SimilarityMeasure::RougeLF1,
        SimilarityMeasure::RougeAvgF1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimilarityMeasure::Rouge1F1 => "rouge1-f1",
            SimilarityMeasure::Rouge2F1 => "rouge2-f1",
            SimilarityMeasure::RougeLRecall => "rougel-recall",
            SimilarityMeasure::RougeLPrecision => "rougel-precision",
            SimilarityMeasure::RougeLF1 => "rougel-f1",
            SimilarityMeasure::RougeAvgF1 => "rouge-avg-f1",
            SimilarityMeasure::TfIdfCosine => "tfidf",
        }
    }

    pub fn needs_model(self) -> bool {
        self == SimilarityMeasure::TfIdfCosine
    }
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityMeasure {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let m = match key.as_str() {
            "rouge1-f1" | "rouge-1-f1" => SimilarityMeasure::Rouge1F1,
            "rouge2-f1" | "rouge-2-f1" => SimilarityMeasure::Rouge2F1,
            "rougel-recall" | "rouge-l-recall" => SimilarityMeasure::RougeLRecall,
            "rougel-precision" | "rouge-l-precision" => SimilarityMeasure::RougeLPrecision,
            "rougel-f1" | "rouge-l-f1" => SimilarityMeasure::RougeLF1,
            "rouge-avg-f1" | "rougeavg-f1" => SimilarityMeasure::RougeAvgF1,
            "tfidf" | "tfidf-cosine" | "tf-idf" => SimilarityMeasure::TfIdfCosine,
            _ => return Err(SimilarityError::UnknownMeasure(s.to_string())),
        };
        Ok(m)
    }
}

/// Similarity of `candidate` (a document sentence) to `reference` (a facet).
pub fn score(
    measure: SimilarityMeasure,
    candidate: &TokenSeq,
    reference: &TokenSeq,
    model: Option<&TfIdfModel>,
) -> Result<f64, SimilarityError> {
    let value = match measure {
        SimilarityMeasure::Rouge1F1 => rouge::rouge_n(candidate, reference, 1).f1,
        SimilarityMeasure::Rouge2F1 => rouge::rouge_n(candidate, reference, 2).f1,
        SimilarityMeasure::RougeLRecall => rouge::rouge_l_sentence(candidate, reference).recall,
        SimilarityMeasure::RougeLPrecision => rouge::rouge_l_sentence(candidate, reference).precision,
        SimilarityMeasure::RougeLF1 => rouge::rouge_l_sentence(candidate, reference).f1,
        SimilarityMeasure::RougeAvgF1 => rouge::rouge_avg(&[candidate], &[reference]),
        SimilarityMeasure::TfIdfCosine => model
            .ok_or(SimilarityError::MissingModel)?
            .cosine(candidate, reference),
    };
    Ok(value)
}
