//! Facet-aware metrics over index-valued extractions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Fam, IndexSet, Sample, SystemOutput};
use crate::rouge::{harmonic_mean, ratio, rouge_triple, RougeTriple, TokenSeq};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("sample {id}: extracted index {index} out of range for {len} document sentences")]
    InvalidIndex { id: String, index: usize, len: usize },
    #[error("sample {0} has no support sentences")]
    NoSupport(String),
    #[error("no prediction or extraction for sample {0}")]
    MissingSample(String),
    #[error("unknown sample id {0}")]
    UnknownSample(String),
    #[error("facet count mismatch: {0} vs {1}")]
    FacetCountMismatch(usize, usize),
}

/// Which facets enter the FAR denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetScope {
    /// Only facets with at least one support group.
    #[default]
    MappableOnly,
    /// Every facet; unmappable ones count as uncovered.
    AllFacets,
}

impl fmt::Display for FacetScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FacetScope::MappableOnly => "mappable",
            FacetScope::AllFacets => "all",
        })
    }
}

impl FromStr for FacetScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mappable" | "mappable_only" => Ok(FacetScope::MappableOnly),
            "all" | "all_facets" => Ok(FacetScope::AllFacets),
            other => Err(format!("unknown scope {other:?} (expected mappable or all)")),
        }
    }
}

fn check(sample: &Sample, extracted: &IndexSet) -> Result<(), MetricsError> {
    sample
        .check_indices(extracted)
        .map_err(|index| MetricsError::InvalidIndex {
            id: sample.id.clone(),
            index,
            len: sample.document.len(),
        })
}

fn facet_covered(fam: &Fam, extracted: &IndexSet) -> bool {
    fam.groups.iter().any(|g| g.covered_by(extracted))
}

/// (covered facets, facets in scope)
fn far_counts(sample: &Sample, extracted: &IndexSet, scope: FacetScope) -> (usize, usize) {
    let scoped = match scope {
        FacetScope::MappableOnly => sample.fams.iter().filter(|f| f.is_mappable()).count(),
        FacetScope::AllFacets => sample.fams.len(),
    };
    let covered = sample
        .fams
        .iter()
        .filter(|f| facet_covered(f, extracted))
        .count();
    (covered, scoped)
}

/// Facet-Aware Recall: the fraction of in-scope facets for which some
/// support group lies entirely inside the extraction.
pub fn far(sample: &Sample, extracted: &IndexSet, scope: FacetScope) -> Result<f64, MetricsError> {
    check(sample, extracted)?;
    let (covered, scoped) = far_counts(sample, extracted, scope);
    Ok(ratio(covered, scoped))
}

/// FAR divided by the number of extracted sentences.
pub fn length_normalized(far: f64, extracted_len: usize) -> f64 {
    if extracted_len == 0 {
        0.0
    } else {
        far / extracted_len as f64
    }
}

/// Support-Aware Recall: the extracted share of the pooled support sentences.
pub fn sar(sample: &Sample, extracted: &IndexSet) -> Result<f64, MetricsError> {
    check(sample, extracted)?;
    let support = sample.support_union();
    if support.is_empty() {
        return Err(MetricsError::NoSupport(sample.id.clone()));
    }
    Ok(ratio(support.intersection(extracted).count(), support.len()))
}

/// True when some facet has two or more distinct support groups that are
/// each fully extracted.
pub fn redundancy(sample: &Sample, extracted: &IndexSet) -> Result<bool, MetricsError> {
    check(sample, extracted)?;
    Ok(sample
        .fams
        .iter()
        .any(|f| f.groups.iter().filter(|g| g.covered_by(extracted)).count() >= 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub far: f64,
    /// `None` when the sample has no support sentences.
    pub sar: Option<f64>,
    pub covered_facets: usize,
    pub scoped_facets: usize,
    pub support_hit: usize,
    pub support_total: usize,
    pub redundant: bool,
}

pub fn coverage(sample: &Sample, extracted: &IndexSet, scope: FacetScope) -> Result<CoverageResult, MetricsError> {
    check(sample, extracted)?;
    let (covered, scoped) = far_counts(sample, extracted, scope);
    let support = sample.support_union();
    let hit = support.intersection(extracted).count();
    Ok(CoverageResult {
        far: ratio(covered, scoped),
        sar: (!support.is_empty()).then(|| ratio(hit, support.len())),
        covered_facets: covered,
        scoped_facets: scoped,
        support_hit: hit,
        support_total: support.len(),
        redundant: redundancy(sample, extracted)?,
    })
}

/// First `min(k, D)` document sentences.
pub fn lead_k(sample: &Sample, k: usize) -> IndexSet {
    (0..k.min(sample.document.len())).collect()
}

/// Searches all extractions of at most `k` support sentences for the one
/// with the highest FAR. Among equally good extractions the
/// lexicographically smallest sorted index list wins.
///
/// The depth-first walk visits subsets in lexicographic order, so the first
/// set reaching a given FAR is the tie-break winner. A branch is pruned when
/// even taking every remaining candidate could not beat the incumbent.
pub fn oracle_extract(sample: &Sample, k: usize, scope: FacetScope) -> (IndexSet, f64) {
    let candidates: Vec<usize> = sample.support_union().into_iter().collect();
    let (_, scoped) = far_counts(sample, &IndexSet::new(), scope);
    // groups as positions into `candidates`
    let facets: Vec<Vec<Vec<usize>>> = sample
        .fams
        .iter()
        .filter(|f| f.is_mappable())
        .map(|f| {
            f.groups
                .iter()
                .map(|g| {
                    g.indices()
                        .iter()
                        .map(|ix| candidates.binary_search(ix).unwrap())
                        .collect()
                })
                .collect()
        })
        .collect();

    struct Search<'a> {
        facets: &'a [Vec<Vec<usize>>],
        k: usize,
        n: usize,
        ceiling: usize,
        chosen: Vec<bool>,
        path: Vec<usize>,
        best: usize,
        best_path: Vec<usize>,
    }

    impl Search<'_> {
        fn covered(&self, from: usize) -> usize {
            // counts facets covered by `chosen` plus every candidate >= from
            let on = |p: usize| self.chosen[p] || p >= from;
            self.facets
                .iter()
                .filter(|groups| groups.iter().any(|g| g.iter().all(|&p| on(p))))
                .count()
        }

        fn visit(&mut self, next: usize) {
            let here = self.covered(self.n);
            if here > self.best {
                self.best = here;
                self.best_path = self.path.clone();
            }
            if self.best == self.ceiling || self.path.len() == self.k {
                return;
            }
            for p in next..self.n {
                if self.best == self.ceiling {
                    return;
                }
                self.chosen[p] = true;
                self.path.push(p);
                // optimistic bound: current choice plus everything after p
                let bound = self.covered(p + 1);
                if bound > self.best {
                    self.visit(p + 1);
                }
                self.path.pop();
                self.chosen[p] = false;
            }
        }
    }

    let n = candidates.len();
    let mut search = Search {
        facets: &facets,
        k,
        n,
        ceiling: facets.len(),
        chosen: vec![false; n],
        path: Vec::new(),
        best: 0,
        best_path: Vec::new(),
    };
    if k > 0 {
        search.visit(0);
    }
    let set: IndexSet = search.best_path.iter().map(|&p| candidates[p]).collect();
    (set, ratio(search.best, scoped))
}

/// Micro-averaged precision / recall / F1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Support-sentence discovery scores. Every dataset sample contributes its
/// gold support union to the recall denominator; samples without a
/// prediction count as predicting nothing.
pub fn support_prf(predictions: &BTreeMap<String, IndexSet>, dataset: &[Sample]) -> Result<Prf, MetricsError> {
    if let Some(unknown) = predictions
        .keys()
        .find(|id| !dataset.iter().any(|s| &s.id == *id))
    {
        return Err(MetricsError::UnknownSample(unknown.clone()));
    }
    let (mut hit, mut predicted, mut gold_total) = (0usize, 0usize, 0usize);
    for sample in dataset {
        let gold = sample.support_union();
        gold_total += gold.len();
        if let Some(pred) = predictions.get(&sample.id) {
            predicted += pred.len();
            hit += pred.intersection(&gold).count();
        }
    }
    let precision = ratio(hit, predicted);
    let recall = ratio(hit, gold_total);
    Ok(Prf {
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
    })
}

/// Mean per-facet Jaccard index between two annotations of the same
/// sample. Facets where neither side has support are skipped; if every
/// facet is skipped the annotations agree trivially and 1.0 is returned.
pub fn fam_jaccard(a: &[Fam], b: &[Fam]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::FacetCountMismatch(a.len(), b.len()));
    }
    let scores: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(fa, fb)| {
            let (ua, ub) = (fa.support_union(), fb.support_union());
            let union = ua.union(&ub).count();
            (union > 0).then(|| ua.intersection(&ub).count() as f64 / union as f64)
        })
        .collect();
    if scores.is_empty() {
        return Ok(1.0);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub scope: FacetScope,
    pub stemming: bool,
    /// Divide each sample's FAR by its extraction size.
    pub normalize_far: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    #[serde(flatten)]
    pub coverage: CoverageResult,
    pub extracted: usize,
    pub rouge: RougeTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub system: String,
    pub samples: usize,
    pub aggregate: BTreeMap<String, f64>,
    pub per_sample: BTreeMap<String, SampleScore>,
}

/// Aggregate metric names in reporting order.
pub const AGGREGATE_KEYS: [&str; 12] = [
    "far",
    "sar",
    "redundancy_rate",
    "rouge1_p",
    "rouge1_r",
    "rouge1_f1",
    "rouge2_p",
    "rouge2_r",
    "rouge2_f1",
    "rougeL_p",
    "rougeL_r",
    "rougeL_f1",
];

/// Scores one sample's extraction: coverage metrics plus summary-level
/// ROUGE of the extracted sentences against the reference.
pub fn score_sample(sample: &Sample, extracted: &IndexSet, options: &EvalOptions) -> Result<SampleScore, MetricsError> {
    let mut cov = coverage(sample, extracted, options.scope)?;
    if options.normalize_far {
        cov.far = length_normalized(cov.far, extracted.len());
    }
    let doc: Vec<TokenSeq> = extracted
        .iter()
        .map(|&i| sample.document[i].tokens(options.stemming))
        .collect();
    let reference = sample.reference_tokens(options.stemming);
    let rouge = rouge_triple(&doc.iter().collect::<Vec<_>>(), &reference.iter().collect::<Vec<_>>());
    Ok(SampleScore {
        coverage: cov,
        extracted: extracted.len(),
        rouge,
    })
}

/// Unweighted means over samples, summed in dataset order.
fn aggregate(scores: &[&SampleScore]) -> BTreeMap<String, f64> {
    let mean = |f: &dyn Fn(&SampleScore) -> f64| {
        if scores.is_empty() {
            0.0
        } else {
            scores.iter().map(|s| f(s)).sum::<f64>() / scores.len() as f64
        }
    };
    let with_sar: Vec<f64> = scores.iter().filter_map(|s| s.coverage.sar).collect();
    let sar = if with_sar.is_empty() {
        0.0
    } else {
        with_sar.iter().sum::<f64>() / with_sar.len() as f64
    };
    let entries: [(&str, f64); 12] = [
        ("far", mean(&|s| s.coverage.far)),
        ("sar", sar),
        ("redundancy_rate", mean(&|s| f64::from(u8::from(s.coverage.redundant)))),
        ("rouge1_p", mean(&|s| s.rouge.rouge1.precision)),
        ("rouge1_r", mean(&|s| s.rouge.rouge1.recall)),
        ("rouge1_f1", mean(&|s| s.rouge.rouge1.f1)),
        ("rouge2_p", mean(&|s| s.rouge.rouge2.precision)),
        ("rouge2_r", mean(&|s| s.rouge.rouge2.recall)),
        ("rouge2_f1", mean(&|s| s.rouge.rouge2.f1)),
        ("rougeL_p", mean(&|s| s.rouge.rouge_l.precision)),
        ("rougeL_r", mean(&|s| s.rouge.rouge_l.recall)),
        ("rougeL_f1", mean(&|s| s.rouge.rouge_l.f1)),
    ];
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Evaluates a system on every dataset sample. Per-sample work runs in
/// parallel; aggregation is sequential in dataset order so results do not
/// depend on the thread count.
pub fn evaluate_system(
    dataset: &[Sample],
    system: &SystemOutput,
    options: &EvalOptions,
) -> Result<ScoreReport, MetricsError> {
    let scored: Vec<(String, SampleScore)> = dataset
        .par_iter()
        .map(|sample| {
            let extracted = system
                .extraction(&sample.id)
                .ok_or_else(|| MetricsError::MissingSample(sample.id.clone()))?;
            Ok((sample.id.clone(), score_sample(sample, &extracted, options)?))
        })
        .collect::<Result<_, MetricsError>>()?;
    let aggregate = aggregate(&scored.iter().map(|(_, s)| s).collect::<Vec<_>>());
    Ok(ScoreReport {
        system: system.system_name.clone(),
        samples: scored.len(),
        aggregate,
        per_sample: scored.into_iter().collect(),
    })
}
