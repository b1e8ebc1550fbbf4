//! ROUGE-N, ROUGE-L and the ROUGE-AVG composite, computed from scratch.
//!
//! All scores use the same zero-denominator convention: any precision,
//! recall or F1 whose denominator is zero is reported as 0. Multi-sentence
//! inputs never form n-grams across a sentence boundary.

use std::collections::HashMap;
use std::fmt;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// A tokenized sentence: lowercase tokens with leading and trailing
/// punctuation removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence from already-normalized tokens. Empty tokens are
    /// dropped so the invariant holds regardless of the caller.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation of two sequences (used for duplicated-input checks).
    pub fn concat(&self, other: &TokenSeq) -> TokenSeq {
        let mut out = self.0.clone();
        out.extend(other.0.iter().cloned());
        TokenSeq(out)
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Precision / recall / F1 triple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Builds a score from a hit count and the two denominators.
    pub fn from_counts(hits: usize, candidate_total: usize, reference_total: usize) -> Self {
        let precision = ratio(hits, candidate_total);
        let recall = ratio(hits, reference_total);
        RougeScore {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn strip_punctuation(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Lowercases, splits on whitespace and trims punctuation from both ends of
/// every token. With `stemming`, each token is reduced with the English
/// Porter stemmer.
pub fn tokenize(text: &str, stemming: bool) -> TokenSeq {
    let stemmer = stemming.then(|| Stemmer::create(Algorithm::English));
    let tokens = text
        .split_whitespace()
        .map(|raw| strip_punctuation(&raw.to_lowercase()).to_string())
        .filter(|t| !t.is_empty())
        .map(|t| match &stemmer {
            Some(s) => s.stem(&t).into_owned(),
            None => t,
        })
        .filter(|t| !t.is_empty())
        .collect();
    TokenSeq(tokens)
}

fn ngram_counts<'a>(sentences: &[&'a TokenSeq], n: usize) -> HashMap<&'a [String], usize> {
    let mut counts = HashMap::new();
    for sentence in sentences {
        if sentence.len() < n {
            continue;
        }
        for gram in sentence.0.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn ngram_total(sentences: &[&TokenSeq], n: usize) -> usize {
    sentences
        .iter()
        .map(|s| (s.len() + 1).saturating_sub(n))
        .sum()
}

/// Clipped n-gram overlap between two multi-sentence texts. N-grams are
/// collected per sentence, so no n-gram spans a sentence boundary.
pub fn rouge_n_multi(candidate: &[&TokenSeq], reference: &[&TokenSeq], n: usize) -> RougeScore {
    assert!(n >= 1, "rouge_n requires n >= 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let hits: usize = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    RougeScore::from_counts(hits, ngram_total(candidate, n), ngram_total(reference, n))
}

/// ROUGE-N between two single token sequences.
pub fn rouge_n(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> RougeScore {
    rouge_n_multi(&[candidate], &[reference], n)
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Positions in `reference` that take part in one longest common
/// subsequence with `candidate`. The traceback prefers skipping a candidate
/// token over skipping a reference token, so the result is deterministic.
fn lcs_reference_positions(candidate: &[String], reference: &[String]) -> Vec<usize> {
    let (m, n) = (candidate.len(), reference.len());
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let mut table = vec![vec![0usize; n + 1]; m + 1];
    for i in 0..m {
        for j in 0..n {
            table[i + 1][j + 1] = if candidate[i] == reference[j] {
                table[i][j] + 1
            } else {
                table[i][j + 1].max(table[i + 1][j])
            };
        }
    }
    let mut positions = Vec::with_capacity(table[m][n]);
    let (mut i, mut j) = (m, n);
    while i > 0 && j > 0 {
        if candidate[i - 1] == reference[j - 1] {
            positions.push(j - 1);
            i -= 1;
            j -= 1;
        } else if table[i - 1][j] >= table[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    positions.reverse();
    positions
}

/// Sentence-level ROUGE-L.
pub fn rouge_l_sentence(candidate: &TokenSeq, reference: &TokenSeq) -> RougeScore {
    let lcs = lcs_length(&candidate.0, &reference.0);
    RougeScore::from_counts(lcs, candidate.len(), reference.len())
}

/// Summary-level ROUGE-L with the union-LCS formulation.
///
/// For every reference sentence the positions matched by the LCS against
/// each candidate sentence are unioned. Hits are then clipped so a token is
/// never counted more often than it occurs in either the candidate summary or
/// the reference summary.
pub fn rouge_l_summary(candidate: &[&TokenSeq], reference: &[&TokenSeq]) -> RougeScore {
    let candidate_total: usize = candidate.iter().map(|s| s.len()).sum();
    let reference_total: usize = reference.iter().map(|s| s.len()).sum();

    let mut cand_budget: HashMap<&str, usize> = HashMap::new();
    for token in candidate.iter().flat_map(|s| s.0.iter()) {
        *cand_budget.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut ref_budget: HashMap<&str, usize> = HashMap::new();
    for token in reference.iter().flat_map(|s| s.0.iter()) {
        *ref_budget.entry(token.as_str()).or_insert(0) += 1;
    }

    let mut hits = 0usize;
    for ref_sentence in reference {
        let mut matched = vec![false; ref_sentence.len()];
        for cand_sentence in candidate {
            for pos in lcs_reference_positions(&cand_sentence.0, &ref_sentence.0) {
                matched[pos] = true;
            }
        }
        for (pos, _) in matched.iter().enumerate().filter(|(_, m)| **m) {
            let token = ref_sentence.0[pos].as_str();
            let c = cand_budget.get_mut(token);
            let r = ref_budget.get_mut(token);
            if let (Some(c), Some(r)) = (c, r) {
                if *c > 0 && *r > 0 {
                    *c -= 1;
                    *r -= 1;
                    hits += 1;
                }
            }
        }
    }
    RougeScore::from_counts(hits, candidate_total, reference_total)
}

/// ROUGE-1/2/L for a multi-sentence candidate against a multi-sentence
/// reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

pub fn rouge_triple(candidate: &[&TokenSeq], reference: &[&TokenSeq]) -> RougeTriple {
    RougeTriple {
        rouge1: rouge_n_multi(candidate, reference, 1),
        rouge2: rouge_n_multi(candidate, reference, 2),
        rouge_l: rouge_l_summary(candidate, reference),
    }
}

/// Mean of the ROUGE-1, ROUGE-2 and ROUGE-L F1 scores.
pub fn rouge_avg(candidate: &[&TokenSeq], reference: &[&TokenSeq]) -> f64 {
    let t = rouge_triple(candidate, reference);
    (t.rouge1.f1 + t.rouge2.f1 + t.rouge_l.f1) / 3.0
}
