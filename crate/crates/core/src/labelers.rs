//! Sentence-regression labelers that build machine FAMs from a
//! document/reference pair without human input.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, IndexSet, Sample, SupportGroup};
use crate::rouge::{rouge_n_multi, TokenSeq};
use crate::similarity::{score, SimilarityError, SimilarityMeasure, TfIdfModel, TfIdfScope};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("top-n must be at least 1")]
    ZeroTopN,
    #[error("lead-k needs k >= 1")]
    ZeroK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    /// Greedy whole-summary selection by ROUGE-1 F1.
    GreedyRouge1,
    /// The `top_n` most similar document sentences of every facet, each as
    /// its own singleton group.
    PerFacetTopN { measure: SimilarityMeasure, top_n: usize },
    /// The first `k` document sentences.
    LeadK { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelerConfig {
    #[serde(flatten)]
    pub strategy: Strategy,
    pub stemming: bool,
    pub tfidf_scope: TfIdfScope,
}

impl LabelerConfig {
    pub fn new(strategy: Strategy) -> Self {
        LabelerConfig {
            strategy,
            stemming: false,
            tfidf_scope: TfIdfScope::default(),
        }
    }

    pub fn top_n(measure: SimilarityMeasure, top_n: usize) -> Self {
        Self::new(Strategy::PerFacetTopN { measure, top_n })
    }

    pub fn validate(&self) -> Result<(), LabelError> {
        match self.strategy {
            Strategy::PerFacetTopN { top_n: 0, .. } => Err(LabelError::ZeroTopN),
            Strategy::LeadK { k: 0 } => Err(LabelError::ZeroK),
            _ => Ok(()),
        }
    }

    /// Short label such as `rouge-avg-f1@3`, `greedy-rouge1` or `lead-3`.
    pub fn name(&self) -> String {
        match self.strategy {
            Strategy::GreedyRouge1 => "greedy-rouge1".to_string(),
            Strategy::PerFacetTopN { measure, top_n } => format!("{measure}@{top_n}"),
            Strategy::LeadK { k } => format!("lead-{k}"),
        }
    }
}

impl fmt::Display for LabelerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Support groups a labeler assigns to one facet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MachineFam {
    pub groups: Vec<SupportGroup>,
}

fn unigram_f1(selection: &[&TokenSeq], reference: &[&TokenSeq]) -> f64 {
    rouge_n_multi(selection, reference, 1).f1
}

/// Greedily adds the document sentence that most increases ROUGE-1 F1 of
/// the selection against the whole reference, stopping as soon as no
/// sentence gives a strict improvement. Returns indices in selection order.
pub fn greedy_select(document: &[TokenSeq], reference: &[TokenSeq]) -> Vec<usize> {
    let reference: Vec<&TokenSeq> = reference.iter().collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut current = 0.0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, _) in document.iter().enumerate() {
            if selected.contains(&i) {
                continue;
            }
            let trial: Vec<&TokenSeq> = selected
                .iter()
                .chain(std::iter::once(&i))
                .map(|&j| &document[j])
                .collect();
            let f1 = unigram_f1(&trial, &reference);
            if best.is_none_or(|(_, b)| f1 > b) {
                best = Some((i, f1));
            }
        }
        match best {
            Some((i, f1)) if f1 > current => {
                selected.push(i);
                current = f1;
            }
            _ => return selected,
        }
    }
}

/// All document indices ordered by similarity to `facet`, best first; ties
/// keep the lower index first.
pub fn per_facet_rank(
    document: &[TokenSeq],
    facet: &TokenSeq,
    measure: SimilarityMeasure,
    model: Option<&TfIdfModel>,
) -> Result<Vec<(usize, f64)>, SimilarityError> {
    let mut scored = document
        .iter()
        .enumerate()
        .map(|(i, sentence)| Ok((i, score(measure, sentence, facet, model)?)))
        .collect::<Result<Vec<_>, SimilarityError>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// Builds the per-facet machine mapping of one sample.
pub fn make_machine_fams(sample: &Sample, config: &LabelerConfig) -> Result<Vec<MachineFam>, LabelError> {
    config.validate()?;
    let facets = sample.reference.len();
    let shared = |indices: Vec<usize>| -> Vec<MachineFam> {
        let group = SupportGroup::new(indices.into_iter().collect());
        let groups: Vec<SupportGroup> = group.into_iter().collect();
        vec![MachineFam { groups }; facets]
    };
    match config.strategy {
        Strategy::LeadK { k } => Ok(shared((0..k.min(sample.document.len())).collect())),
        Strategy::GreedyRouge1 => {
            let doc = sample.document_tokens(config.stemming);
            let reference = sample.reference_tokens(config.stemming);
            Ok(shared(greedy_select(&doc, &reference)))
        }
        Strategy::PerFacetTopN { measure, top_n } => {
            let doc = sample.document_tokens(config.stemming);
            let reference = sample.reference_tokens(config.stemming);
            let model = if measure.needs_model() {
                let fitted = match config.tfidf_scope {
                    TfIdfScope::DocumentAndReference => TfIdfModel::fit(doc.iter().chain(&reference)),
                    TfIdfScope::DocumentOnly => TfIdfModel::fit(&doc),
                };
                match fitted {
                    Ok(m) => Some(m),
                    // nothing to compare: every cosine is zero
                    Err(SimilarityError::EmptyCorpus) => None,
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            };
            reference
                .iter()
                .map(|facet| {
                    let ranked = match (&model, measure.needs_model()) {
                        (None, true) => (0..doc.len()).map(|i| (i, 0.0)).collect(),
                        _ => per_facet_rank(&doc, facet, measure, model.as_ref())?,
                    };
                    Ok(MachineFam {
                        groups: ranked
                            .into_iter()
                            .take(top_n)
                            .map(|(i, _)| SupportGroup::singleton(i))
                            .collect(),
                    })
                })
                .collect()
        }
    }
}

/// Union of every index across facets and groups.
pub fn predicted_support_set(fams: &[MachineFam]) -> IndexSet {
    fams.iter()
        .flat_map(|f| f.groups.iter())
        .flat_map(|g| g.indices().iter().copied())
        .collect()
}

/// Copy of `sample` with its gold mappings replaced by machine ones.
pub fn label_sample(sample: &Sample, config: &LabelerConfig) -> Result<Sample, LabelError> {
    let fams = make_machine_fams(sample, config)?;
    Ok(sample.with_fams(fams.into_iter().map(|f| f.groups).collect())?)
}

/// Labels a whole dataset in parallel; output order follows the input.
pub fn label_dataset(dataset: &[Sample], config: &LabelerConfig) -> Result<Vec<Sample>, LabelError> {
    dataset.par_iter().map(|s| label_sample(s, config)).collect()
}
