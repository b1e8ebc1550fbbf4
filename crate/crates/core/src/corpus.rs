//! Data model for annotated document/reference pairs, ingestion of the
//! line-delimited dataset and system-output files, and dataset statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rouge::{tokenize, TokenSeq};

/// Ordered set of 0-based document sentence indices.
pub type IndexSet = BTreeSet<usize>;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("sample {id}: invalid {field}: {reason}")]
    Invariant {
        id: String,
        field: &'static str,
        reason: String,
    },
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error("unknown sample id {0}")]
    UnknownSample(String),
    #[error("no document sentence matches: {}", .0.join(" | "))]
    NoMatch(Vec<String>),
    #[error("dataset is empty")]
    EmptyDataset,
}

impl CorpusError {
    fn invariant(id: &str, field: &'static str, reason: impl Into<String>) -> Self {
        CorpusError::Invariant {
            id: id.to_string(),
            field,
            reason: reason.into(),
        }
    }
}

/// One sentence of a document or reference summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    raw: String,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Option<Self> {
        let raw = raw.into();
        (!raw.trim().is_empty()).then_some(Sentence { raw })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self, stemming: bool) -> TokenSeq {
        tokenize(&self.raw, stemming)
    }
}

/// A set of document sentences that together cover one facet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupportGroup(IndexSet);

impl SupportGroup {
    /// Returns `None` for an empty group.
    pub fn new(indices: IndexSet) -> Option<Self> {
        (!indices.is_empty()).then_some(SupportGroup(indices))
    }

    pub fn singleton(index: usize) -> Self {
        SupportGroup(IndexSet::from([index]))
    }

    pub fn indices(&self) -> &IndexSet {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Non-strict subset test against an extraction.
    pub fn covered_by(&self, extracted: &IndexSet) -> bool {
        self.0.is_subset(extracted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetCategory {
    Noise,
    Low,
    High,
}

/// Facet-aware mapping of one reference sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fam {
    pub groups: Vec<SupportGroup>,
    pub category: FacetCategory,
}

impl Fam {
    /// Mapping without an explicit category: low when it has groups, high
    /// otherwise.
    pub fn unlabeled(groups: Vec<SupportGroup>) -> Self {
        let category = if groups.is_empty() {
            FacetCategory::High
        } else {
            FacetCategory::Low
        };
        Fam { groups, category }
    }

    pub fn is_mappable(&self) -> bool {
        !self.groups.is_empty()
    }

    pub fn support_union(&self) -> IndexSet {
        self.groups.iter().flat_map(|g| g.0.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SampleCategory {
    N,
    L,
    H,
}

impl SampleCategory {
    pub const ALL: [SampleCategory; 3] = [SampleCategory::N, SampleCategory::L, SampleCategory::H];

    /// Noise wins over high abstraction, which wins over low abstraction.
    pub fn derive(fams: &[Fam]) -> Self {
        if fams.iter().any(|f| f.category == FacetCategory::Noise) {
            SampleCategory::N
        } else if fams.iter().any(|f| f.category == FacetCategory::High) {
            SampleCategory::H
        } else {
            SampleCategory::L
        }
    }
}

impl fmt::Display for SampleCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleCategory::N => "N",
            SampleCategory::L => "L",
            SampleCategory::H => "H",
        })
    }
}

impl FromStr for SampleCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N" | "n" => Ok(SampleCategory::N),
            "L" | "l" => Ok(SampleCategory::L),
            "H" | "h" => Ok(SampleCategory::H),
            other => Err(format!("unknown category {other:?} (expected N, L or H)")),
        }
    }
}

/// Parses a comma-separated category list such as `L,H`.
pub fn parse_categories(spec: &str) -> Result<BTreeSet<SampleCategory>, String> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(SampleCategory::from_str)
        .collect()
}

/// One annotated document/reference pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub document: Vec<Sentence>,
    pub reference: Vec<Sentence>,
    pub fams: Vec<Fam>,
    category: SampleCategory,
}

impl Sample {
    /// Validates and assembles a sample; the category is derived from the
    /// facet labels.
    pub fn new(
        id: impl Into<String>,
        document: Vec<Sentence>,
        reference: Vec<Sentence>,
        fams: Vec<Fam>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if document.is_empty() {
            return Err(CorpusError::invariant(&id, "document", "no sentences"));
        }
        if reference.is_empty() {
            return Err(CorpusError::invariant(&id, "reference", "no sentences"));
        }
        if fams.len() != reference.len() {
            return Err(CorpusError::invariant(
                &id,
                "fams",
                format!("{} mappings for {} reference sentences", fams.len(), reference.len()),
            ));
        }
        for (i, fam) in fams.iter().enumerate() {
            match fam.category {
                FacetCategory::High if fam.is_mappable() => {
                    return Err(CorpusError::invariant(
                        &id,
                        "facet_categories",
                        format!("facet {i} is high abstraction but has support groups"),
                    ))
                }
                FacetCategory::Low if !fam.is_mappable() => {
                    return Err(CorpusError::invariant(
                        &id,
                        "facet_categories",
                        format!("facet {i} is low abstraction but has no support groups"),
                    ))
                }
                _ => {}
            }
            for group in &fam.groups {
                if let Some(&bad) = group.0.iter().find(|&&ix| ix >= document.len()) {
                    return Err(CorpusError::invariant(
                        &id,
                        "fams",
                        format!(
                            "facet {i} support index {bad} out of range for {} document sentences",
                            document.len()
                        ),
                    ));
                }
            }
        }
        let category = SampleCategory::derive(&fams);
        Ok(Sample {
            id,
            document,
            reference,
            fams,
            category,
        })
    }

    pub fn category(&self) -> SampleCategory {
        self.category
    }

    /// Replaces the mappings, e.g. with machine-created ones. Facet
    /// categories are re-derived from the new groups.
    pub fn with_fams(&self, groups: Vec<Vec<SupportGroup>>) -> Result<Sample, CorpusError> {
        let fams = groups.into_iter().map(Fam::unlabeled).collect();
        Sample::new(
            self.id.clone(),
            self.document.clone(),
            self.reference.clone(),
            fams,
        )
    }

    /// Union of all support sentences across facets and groups.
    pub fn support_union(&self) -> IndexSet {
        self.fams.iter().flat_map(|f| f.support_union()).collect()
    }

    pub fn document_tokens(&self, stemming: bool) -> Vec<TokenSeq> {
        self.document.iter().map(|s| s.tokens(stemming)).collect()
    }

    pub fn reference_tokens(&self, stemming: bool) -> Vec<TokenSeq> {
        self.reference.iter().map(|s| s.tokens(stemming)).collect()
    }

    pub fn check_indices(&self, extracted: &IndexSet) -> Result<(), usize> {
        match extracted.iter().next_back() {
            Some(&max) if max >= self.document.len() => Err(max),
            _ => Ok(()),
        }
    }

    /// On-disk representation of this sample.
    pub fn to_record(&self) -> DatasetRecord {
        DatasetRecord {
            id: self.id.clone(),
            document: self.document.iter().map(|s| s.raw.clone()).collect(),
            reference: self.reference.iter().map(|s| s.raw.clone()).collect(),
            fams: self
                .fams
                .iter()
                .map(|f| f.groups.iter().map(|g| g.0.iter().copied().collect()).collect())
                .collect(),
            facet_categories: Some(self.fams.iter().map(|f| f.category).collect()),
        }
    }
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub document: Vec<String>,
    pub reference: Vec<String>,
    pub fams: Vec<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet_categories: Option<Vec<FacetCategory>>,
}

impl DatasetRecord {
    pub fn into_sample(self) -> Result<Sample, CorpusError> {
        let id = self.id;
        let document = to_sentences(&id, "document", self.document)?;
        let reference = to_sentences(&id, "reference", self.reference)?;
        if let Some(cats) = &self.facet_categories {
            if cats.len() != self.fams.len() {
                return Err(CorpusError::invariant(
                    &id,
                    "facet_categories",
                    format!("{} labels for {} mappings", cats.len(), self.fams.len()),
                ));
            }
        }
        let mut fams = Vec::with_capacity(self.fams.len());
        for (i, raw_groups) in self.fams.into_iter().enumerate() {
            let mut groups = Vec::with_capacity(raw_groups.len());
            for raw in raw_groups {
                let len = raw.len();
                let set: IndexSet = raw.into_iter().collect();
                if set.len() != len {
                    return Err(CorpusError::invariant(
                        &id,
                        "fams",
                        format!("facet {i} has a support group with duplicate indices"),
                    ));
                }
                let group = SupportGroup::new(set).ok_or_else(|| {
                    CorpusError::invariant(&id, "fams", format!("facet {i} has an empty support group"))
                })?;
                groups.push(group);
            }
            let fam = match &self.facet_categories {
                Some(cats) => Fam {
                    groups,
                    category: cats[i],
                },
                None => Fam::unlabeled(groups),
            };
            fams.push(fam);
        }
        Sample::new(id, document, reference, fams)
    }
}

fn to_sentences(id: &str, field: &'static str, raw: Vec<String>) -> Result<Vec<Sentence>, CorpusError> {
    raw.into_iter()
        .enumerate()
        .map(|(i, text)| {
            Sentence::new(text)
                .ok_or_else(|| CorpusError::invariant(id, field, format!("sentence {i} is blank")))
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path).map(BufReader::new).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-blank lines with their 1-based line numbers.
fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), CorpusError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, line)| {
            line.map(|l| (i + 1, l)).map_err(|e| CorpusError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<Sample>, CorpusError> {
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for item in records(reader) {
        let (line, text) = item?;
        let record: DatasetRecord = serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let sample = record.into_sample()?;
        if !seen.insert(sample.id.clone()) {
            return Err(CorpusError::DuplicateId(sample.id));
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Loads and validates a dataset file, preserving file order.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Sample>, CorpusError> {
    parse_dataset(open(path.as_ref())?)
}

pub fn write_dataset<W: Write>(mut out: W, samples: &[Sample]) -> std::io::Result<()> {
    for sample in samples {
        serde_json::to_writer(&mut out, &sample.to_record())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Lowercase, punctuation removed, whitespace collapsed.
pub fn normalize_text(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Maps verbatim sentence texts back to document indices by exact
/// normalized equality, taking the first matching sentence. The result
/// keeps the order of `texts` and drops repeated indices.
pub fn match_text_to_indices<S: AsRef<str>>(
    texts: &[S],
    document: &[Sentence],
) -> Result<Vec<usize>, CorpusError> {
    let normalized: Vec<String> = document.iter().map(|s| normalize_text(&s.raw)).collect();
    let mut out = Vec::with_capacity(texts.len());
    let mut missing = Vec::new();
    for text in texts {
        let key = normalize_text(text.as_ref());
        match normalized.iter().position(|n| *n == key) {
            Some(ix) if !out.contains(&ix) => out.push(ix),
            Some(_) => {}
            None => missing.push(text.as_ref().to_string()),
        }
    }
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(CorpusError::NoMatch(missing))
    }
}

/// One line of a system-output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<String>>,
}

/// Extracted sentence indices of one named system. Each extraction keeps
/// the order in which the system emitted its sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemOutput {
    pub system_name: String,
    pub extractions: BTreeMap<String, Vec<usize>>,
}

impl SystemOutput {
    pub fn extraction(&self, id: &str) -> Option<IndexSet> {
        self.extractions.get(id).map(|v| v.iter().copied().collect())
    }

    /// Keeps only the first `k` indices of every extraction.
    pub fn truncated(&self, k: usize) -> SystemOutput {
        SystemOutput {
            system_name: self.system_name.clone(),
            extractions: self
                .extractions
                .iter()
                .map(|(id, v)| (id.clone(), v.iter().copied().take(k).collect()))
                .collect(),
        }
    }

    /// Builds an output by applying an extractor to every sample.
    pub fn from_fn<F>(name: impl Into<String>, dataset: &[Sample], f: F) -> SystemOutput
    where
        F: Fn(&Sample) -> Vec<usize>,
    {
        SystemOutput {
            system_name: name.into(),
            extractions: dataset.iter().map(|s| (s.id.clone(), f(s))).collect(),
        }
    }
}

fn dedup_in_order(indices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut seen = HashSet::new();
    indices.into_iter().filter(|i| seen.insert(*i)).collect()
}

pub fn parse_system_output<R: BufRead>(
    reader: R,
    name: &str,
    dataset: &[Sample],
) -> Result<SystemOutput, CorpusError> {
    let by_id: BTreeMap<&str, &Sample> = dataset.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut extractions = BTreeMap::new();
    for item in records(reader) {
        let (line, text) = item?;
        let record: SystemRecord = serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let sample = by_id
            .get(record.id.as_str())
            .ok_or_else(|| CorpusError::UnknownSample(record.id.clone()))?;
        let indices = match (record.indices, record.sentences) {
            (Some(indices), _) => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= sample.document.len()) {
                    return Err(CorpusError::invariant(
                        &record.id,
                        "indices",
                        format!("index {bad} out of range for {} document sentences", sample.document.len()),
                    ));
                }
                dedup_in_order(indices)
            }
            (None, Some(texts)) => match_text_to_indices(&texts, &sample.document)?,
            (None, None) => {
                return Err(CorpusError::Parse {
                    line,
                    reason: "record has neither `indices` nor `sentences`".into(),
                })
            }
        };
        if extractions.insert(record.id.clone(), indices).is_some() {
            return Err(CorpusError::DuplicateId(record.id));
        }
    }
    Ok(SystemOutput {
        system_name: name.to_string(),
        extractions,
    })
}

/// Loads an extractive system's output. Records carrying sentence texts are
/// resolved against the document.
pub fn load_system_output(
    path: impl AsRef<Path>,
    name: &str,
    dataset: &[Sample],
) -> Result<SystemOutput, CorpusError> {
    parse_system_output(open(path.as_ref())?, name, dataset)
}

/// Summary texts of a (possibly abstractive) system, keyed by sample id.
/// Index records are resolved to the corresponding document sentences.
pub fn load_summary_texts(
    path: impl AsRef<Path>,
    dataset: &[Sample],
) -> Result<BTreeMap<String, Vec<String>>, CorpusError> {
    let by_id: BTreeMap<&str, &Sample> = dataset.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut out = BTreeMap::new();
    for item in records(open(path.as_ref())?) {
        let (line, text) = item?;
        let record: SystemRecord = serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let sample = by_id
            .get(record.id.as_str())
            .ok_or_else(|| CorpusError::UnknownSample(record.id.clone()))?;
        let texts = match (record.sentences, record.indices) {
            (Some(texts), _) => texts,
            (None, Some(indices)) => indices
                .iter()
                .map(|&i| {
                    sample.document.get(i).map(|s| s.raw.clone()).ok_or_else(|| {
                        CorpusError::invariant(&record.id, "indices", format!("index {i} out of range"))
                    })
                })
                .collect::<Result<_, _>>()?,
            (None, None) => {
                return Err(CorpusError::Parse {
                    line,
                    reason: "record has neither `indices` nor `sentences`".into(),
                })
            }
        };
        if out.insert(record.id.clone(), texts).is_some() {
            return Err(CorpusError::DuplicateId(record.id));
        }
    }
    Ok(out)
}

pub fn filter_by_category(dataset: &[Sample], categories: &BTreeSet<SampleCategory>) -> Vec<Sample> {
    dataset
        .iter()
        .filter(|s| categories.contains(&s.category))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub sample_count: usize,
    pub samples_per_category: BTreeMap<SampleCategory, usize>,
    pub facet_count: usize,
    pub facets_per_category: BTreeMap<String, usize>,
    /// Facets of the samples in each sample category.
    pub facets_per_sample_category: BTreeMap<SampleCategory, usize>,
    pub non_empty_fams: usize,
    pub avg_support_sentences_unique: f64,
    pub avg_support_sentences_nonunique: f64,
    pub avg_groups_per_facet: f64,
    /// Rounded mean group size of each mappable facet → facet count.
    pub rounded_mean_support_histogram: BTreeMap<usize, usize>,
}

pub fn dataset_stats(dataset: &[Sample]) -> Result<DatasetStats, CorpusError> {
    if dataset.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let mut samples_per_category: BTreeMap<SampleCategory, usize> =
        SampleCategory::ALL.iter().map(|c| (*c, 0)).collect();
    let mut facets_per_sample_category = samples_per_category.clone();
    let mut facets_per_category: BTreeMap<String, usize> = ["noise", "low", "high"]
        .iter()
        .map(|c| (c.to_string(), 0))
        .collect();
    let mut histogram = BTreeMap::new();
    let (mut unique_total, mut nonunique_total) = (0usize, 0usize);
    let (mut group_total, mut mappable) = (0usize, 0usize);
    let mut facet_count = 0usize;

    for sample in dataset {
        *samples_per_category.get_mut(&sample.category).unwrap() += 1;
        *facets_per_sample_category.get_mut(&sample.category).unwrap() += sample.fams.len();
        facet_count += sample.fams.len();
        unique_total += sample.support_union().len();
        for fam in &sample.fams {
            let key = match fam.category {
                FacetCategory::Noise => "noise",
                FacetCategory::Low => "low",
                FacetCategory::High => "high",
            };
            *facets_per_category.get_mut(key).unwrap() += 1;
            let sizes: usize = fam.groups.iter().map(SupportGroup::len).sum();
            nonunique_total += sizes;
            if fam.is_mappable() {
                mappable += 1;
                group_total += fam.groups.len();
                let mean = sizes as f64 / fam.groups.len() as f64;
                *histogram.entry(mean.round() as usize).or_insert(0) += 1;
            }
        }
    }
    let n = dataset.len() as f64;
    Ok(DatasetStats {
        sample_count: dataset.len(),
        samples_per_category,
        facet_count,
        facets_per_category,
        facets_per_sample_category,
        non_empty_fams: mappable,
        avg_support_sentences_unique: unique_total as f64 / n,
        avg_support_sentences_nonunique: nonunique_total as f64 / n,
        avg_groups_per_facet: if mappable == 0 {
            0.0
        } else {
            group_total as f64 / mappable as f64
        },
        rounded_mean_support_histogram: histogram,
    })
}
