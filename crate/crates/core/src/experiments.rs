//! Dataset-level experiments built from the metric, labeler and statistics
//! primitives: labeler benchmarking, estimated-vs-gold FAR correlation,
//! AutoFAR regression and category breakdowns.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{IndexSet, Sample, SampleCategory, SystemOutput};
use crate::labelers::{label_dataset, make_machine_fams, predicted_support_set, LabelError, LabelerConfig};
use crate::metrics::{far, support_prf, FacetScope, MetricsError, Prf};
use crate::rouge::{rouge_l_summary, rouge_n_multi, tokenize, TokenSeq};
use crate::stats::{correlations, ols_fit, ols_predict, Correlations, OlsModel, PairedSeries, StatsError};
use crate::Error;

/// Micro P/R/F1 of a labeler's merged support sets against the gold unions.
pub fn bench_labeler(dataset: &[Sample], config: &LabelerConfig) -> Result<Prf, Error> {
    let predictions = dataset
        .par_iter()
        .map(|s| Ok((s.id.clone(), predicted_support_set(&make_machine_fams(s, config)?))))
        .collect::<Result<BTreeMap<String, IndexSet>, LabelError>>()?;
    Ok(support_prf(&predictions, dataset)?)
}

/// Same as [`bench_labeler`] for mappings that were created elsewhere.
pub fn bench_machine(dataset: &[Sample], machine: &[Sample]) -> Result<Prf, Error> {
    let predictions = machine
        .iter()
        .map(|s| (s.id.clone(), s.support_union()))
        .collect();
    Ok(support_prf(&predictions, dataset)?)
}

/// Per-sample FAR of a system, in dataset order.
pub fn per_sample_far(dataset: &[Sample], system: &SystemOutput, scope: FacetScope) -> Result<Vec<f64>, MetricsError> {
    dataset
        .par_iter()
        .map(|s| {
            let e = system
                .extraction(&s.id)
                .ok_or_else(|| MetricsError::MissingSample(s.id.clone()))?;
            far(s, &e, scope)
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Reorders `machine` to follow `gold`, failing if a sample is missing.
pub fn align<'a>(gold: &[Sample], machine: &'a [Sample]) -> Result<Vec<&'a Sample>, Error> {
    let by_id: BTreeMap<&str, &Sample> = machine.iter().map(|s| (s.id.as_str(), s)).collect();
    gold.iter()
        .map(|g| {
            by_id
                .get(g.id.as_str())
                .copied()
                .ok_or_else(|| MetricsError::MissingSample(g.id.clone()).into())
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemFar {
    pub system: String,
    pub gold_far: f64,
    pub estimated_far: f64,
}

#[derive(Debug, Clone)]
pub struct CorrelationResult {
    pub systems: Vec<SystemFar>,
    /// Across per-system aggregate FAR values.
    pub system_level: Result<Correlations, StatsError>,
    /// Across every (system, sample) pair.
    pub sample_level: Result<Correlations, StatsError>,
}

/// Correlates FAR computed on gold mappings with FAR computed on machine
/// mappings of the same samples.
pub fn correlate_far(
    gold: &[Sample],
    machine: &[Sample],
    systems: &[SystemOutput],
    scope: FacetScope,
) -> Result<CorrelationResult, Error> {
    let machine: Vec<Sample> = align(gold, machine)?.into_iter().cloned().collect();
    let mut rows = Vec::with_capacity(systems.len());
    let (mut gold_points, mut est_points) = (Vec::new(), Vec::new());
    for system in systems {
        let g = per_sample_far(gold, system, scope)?;
        let e = per_sample_far(&machine, system, scope)?;
        rows.push(SystemFar {
            system: system.system_name.clone(),
            gold_far: mean(&g),
            estimated_far: mean(&e),
        });
        gold_points.extend(g);
        est_points.extend(e);
    }
    let system_level = PairedSeries::new(
        rows.iter().map(|r| r.gold_far).collect(),
        rows.iter().map(|r| r.estimated_far).collect(),
    )
    .and_then(|s| correlations(&s));
    let sample_level = PairedSeries::new(gold_points, est_points).and_then(|s| correlations(&s));
    Ok(CorrelationResult {
        systems: rows,
        system_level,
        sample_level,
    })
}

/// Labels `dataset` once per configuration.
pub fn machine_sets(dataset: &[Sample], labelers: &[LabelerConfig]) -> Result<Vec<Vec<Sample>>, Error> {
    labelers
        .iter()
        .map(|c| label_dataset(dataset, c).map_err(Error::from))
        .collect()
}

/// Feature rows for one system: estimated FAR of each sample under every
/// machine mapping set, in dataset order.
pub fn autofar_features(
    dataset: &[Sample],
    machine: &[Vec<Sample>],
    system: &SystemOutput,
    scope: FacetScope,
) -> Result<Vec<Vec<f64>>, Error> {
    let columns = machine
        .iter()
        .map(|set| {
            let aligned: Vec<Sample> = align(dataset, set)?.into_iter().cloned().collect();
            Ok(per_sample_far(&aligned, system, scope)?)
        })
        .collect::<Result<Vec<Vec<f64>>, Error>>()?;
    Ok((0..dataset.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct AutoFarSystem {
    pub system: String,
    pub far: f64,
    pub autofar: f64,
    /// Mean prediction on the unannotated split, when one was given.
    pub autofar_l: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AutoFarReport {
    pub labelers: Vec<String>,
    pub model: OlsModel,
    pub training_points: usize,
    pub systems: Vec<AutoFarSystem>,
    pub far_vs_autofar: Result<Correlations, StatsError>,
    pub far_vs_autofar_l: Option<Result<Correlations, StatsError>>,
}

/// Fits AutoFAR on (system, sample) points of the annotated split and, if a
/// second split is supplied, extrapolates to it (AutoFAR-L). Systems of the
/// prediction split are matched to training systems by name.
pub fn autofar(
    train: &[Sample],
    train_systems: &[SystemOutput],
    predict: Option<(&[Sample], &[SystemOutput])>,
    labelers: &[LabelerConfig],
    scope: FacetScope,
) -> Result<AutoFarReport, Error> {
    let train_machine = machine_sets(train, labelers)?;
    let mut features = Vec::new();
    let mut target = Vec::new();
    let mut per_system = Vec::new();
    for system in train_systems {
        let rows = autofar_features(train, &train_machine, system, scope)?;
        let gold = per_sample_far(train, system, scope)?;
        features.extend(rows.iter().cloned());
        target.extend(gold.iter().copied());
        per_system.push((system.system_name.clone(), rows, mean(&gold)));
    }
    let model = ols_fit(&features, &target)?;

    let predict_machine = match predict {
        Some((samples, _)) => Some(machine_sets(samples, labelers)?),
        None => None,
    };
    let mut systems = Vec::new();
    for (name, rows, gold) in per_system {
        let autofar = mean(&ols_predict(&model, &rows)?);
        let autofar_l = match (predict, &predict_machine) {
            (Some((samples, outputs)), Some(machine)) => {
                match outputs.iter().find(|o| o.system_name == name) {
                    Some(output) => {
                        let rows = autofar_features(samples, machine, output, scope)?;
                        Some(mean(&ols_predict(&model, &rows)?))
                    }
                    None => None,
                }
            }
            _ => None,
        };
        systems.push(AutoFarSystem {
            system: name,
            far: gold,
            autofar,
            autofar_l,
        });
    }

    let series = |f: &dyn Fn(&AutoFarSystem) -> Option<f64>| -> Option<Result<Correlations, StatsError>> {
        let pairs: Vec<(f64, f64)> = systems.iter().filter_map(|s| f(s).map(|v| (s.far, v))).collect();
        if pairs.is_empty() {
            return None;
        }
        Some(
            PairedSeries::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
                .and_then(|s| correlations(&s)),
        )
    };
    let far_vs_autofar = series(&|s| Some(s.autofar)).unwrap_or(Err(StatsError::TooShort(0)));
    let far_vs_autofar_l = series(&|s| s.autofar_l);
    Ok(AutoFarReport {
        labelers: labelers.iter().map(LabelerConfig::name).collect(),
        model,
        training_points: target.len(),
        systems,
        far_vs_autofar,
        far_vs_autofar_l,
    })
}

/// What a system provides for a breakdown.
#[derive(Debug, Clone)]
pub enum SystemSummaries {
    Extractive(SystemOutput),
    /// Free text keyed by sample id; only text metrics apply.
    Abstractive { name: String, texts: BTreeMap<String, Vec<String>> },
}

impl SystemSummaries {
    pub fn name(&self) -> &str {
        match self {
            SystemSummaries::Extractive(o) => &o.system_name,
            SystemSummaries::Abstractive { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownMetric {
    Rouge1F1,
    Rouge2F1,
    RougeLF1,
    Far,
    Sar,
}

impl BreakdownMetric {
    pub fn name(self) -> &'static str {
        match self {
            BreakdownMetric::Rouge1F1 => "rouge1-f1",
            BreakdownMetric::Rouge2F1 => "rouge2-f1",
            BreakdownMetric::RougeLF1 => "rougel-f1",
            BreakdownMetric::Far => "far",
            BreakdownMetric::Sar => "sar",
        }
    }

    pub fn needs_indices(self) -> bool {
        matches!(self, BreakdownMetric::Far | BreakdownMetric::Sar)
    }
}

impl std::str::FromStr for BreakdownMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rouge1-f1" | "rouge1" => Ok(BreakdownMetric::Rouge1F1),
            "rouge2-f1" | "rouge2" => Ok(BreakdownMetric::Rouge2F1),
            "rougel-f1" | "rougel" => Ok(BreakdownMetric::RougeLF1),
            "far" => Ok(BreakdownMetric::Far),
            "sar" => Ok(BreakdownMetric::Sar),
            other => Err(format!("unknown breakdown metric {other:?}")),
        }
    }
}

/// The category subsets reported by a breakdown, in column order.
pub fn breakdown_columns() -> Vec<(String, BTreeSet<SampleCategory>)> {
    use SampleCategory::*;
    vec![
        ("N".into(), BTreeSet::from([N])),
        ("L".into(), BTreeSet::from([L])),
        ("H".into(), BTreeSet::from([H])),
        ("L+H".into(), BTreeSet::from([L, H])),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownRow {
    pub system: String,
    /// column → (mean value, samples); `None` when the metric does not
    /// apply or the column has no samples.
    pub cells: BTreeMap<String, Option<(f64, usize)>>,
}

fn text_metric(metric: BreakdownMetric, candidate: &[TokenSeq], reference: &[TokenSeq]) -> f64 {
    let c: Vec<&TokenSeq> = candidate.iter().collect();
    let r: Vec<&TokenSeq> = reference.iter().collect();
    match metric {
        BreakdownMetric::Rouge1F1 => rouge_n_multi(&c, &r, 1).f1,
        BreakdownMetric::Rouge2F1 => rouge_n_multi(&c, &r, 2).f1,
        BreakdownMetric::RougeLF1 => rouge_l_summary(&c, &r).f1,
        BreakdownMetric::Far | BreakdownMetric::Sar => unreachable!("index metric"),
    }
}

/// Per-sample metric values of one system; `None` for samples where the
/// metric is undefined (SAR without support sentences).
fn breakdown_values(
    dataset: &[Sample],
    system: &SystemSummaries,
    metric: BreakdownMetric,
    scope: FacetScope,
    stemming: bool,
) -> Result<Option<Vec<Option<f64>>>, Error> {
    if metric.needs_indices() && matches!(system, SystemSummaries::Abstractive { .. }) {
        return Ok(None);
    }
    let values = dataset
        .par_iter()
        .map(|sample| -> Result<Option<f64>, Error> {
            let reference = sample.reference_tokens(stemming);
            match system {
                SystemSummaries::Extractive(output) => {
                    let e = output
                        .extraction(&sample.id)
                        .ok_or_else(|| MetricsError::MissingSample(sample.id.clone()))?;
                    Ok(match metric {
                        BreakdownMetric::Far => Some(far(sample, &e, scope)?),
                        BreakdownMetric::Sar => {
                            sample.check_indices(&e).map_err(|index| MetricsError::InvalidIndex {
                                id: sample.id.clone(),
                                index,
                                len: sample.document.len(),
                            })?;
                            let support = sample.support_union();
                            (!support.is_empty())
                                .then(|| support.intersection(&e).count() as f64 / support.len() as f64)
                        }
                        _ => {
                            let cand: Vec<TokenSeq> = e.iter().map(|&i| sample.document[i].tokens(stemming)).collect();
                            Some(text_metric(metric, &cand, &reference))
                        }
                    })
                }
                SystemSummaries::Abstractive { texts, .. } => {
                    let summary = texts
                        .get(&sample.id)
                        .ok_or_else(|| MetricsError::MissingSample(sample.id.clone()))?;
                    let cand: Vec<TokenSeq> = summary.iter().map(|t| tokenize(t, stemming)).collect();
                    Ok(Some(text_metric(metric, &cand, &reference)))
                }
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Some(values))
}

/// Mean metric value of every system on each category subset.
pub fn breakdown(
    dataset: &[Sample],
    systems: &[SystemSummaries],
    metric: BreakdownMetric,
    scope: FacetScope,
    stemming: bool,
) -> Result<Vec<BreakdownRow>, Error> {
    let columns = breakdown_columns();
    systems
        .iter()
        .map(|system| {
            let values = breakdown_values(dataset, system, metric, scope, stemming)?;
            let cells = columns
                .iter()
                .map(|(name, cats)| {
                    let cell = values.as_ref().and_then(|vals| {
                        let picked: Vec<f64> = dataset
                            .iter()
                            .zip(vals)
                            .filter(|(s, _)| cats.contains(&s.category()))
                            .filter_map(|(_, v)| *v)
                            .collect();
                        (!picked.is_empty()).then(|| (mean(&picked), picked.len()))
                    });
                    (name.clone(), cell)
                })
                .collect();
            Ok(BreakdownRow {
                system: system.name().to_string(),
                cells,
            })
        })
        .collect()
}
