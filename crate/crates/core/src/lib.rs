//! Facet-aware evaluation for extractive summarization.
//!
//! Each reference sentence is a facet; a facet is mapped to groups of
//! document sentences (support groups) that together express it. Extracted
//! summaries are scored by comparing sentence indices:
//!
//! * [`metrics::far`]: share of facets with at least one fully extracted
//!   support group.
//! * [`metrics::sar`]: share of the pooled support sentences that were
//!   extracted.
//!
//! The crate also ships a from-scratch ROUGE engine ([`rouge`]), TF-IDF
//! similarity ([`similarity`]), sentence-regression labelers that build
//! mappings automatically ([`labelers`]), correlation and least-squares
//! utilities ([`stats`]) and the dataset-level experiments that combine
//! them ([`experiments`]).

use thiserror::Error;

pub mod corpus;
pub mod experiments;
pub mod labelers;
pub mod metrics;
pub mod rouge;
pub mod similarity;
pub mod stats;

pub use corpus::{IndexSet, Sample, SampleCategory, SystemOutput};
pub use metrics::FacetScope;

/// Any error raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Label(#[from] labelers::LabelError),
    #[error(transparent)]
    Similarity(#[from] similarity::SimilarityError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
}

impl Error {
    /// Whether the failure comes from the inputs (files, records, ids)
    /// rather than from a metric being undefined on valid inputs.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Corpus(_) | Error::Similarity(_) => true,
            Error::Label(labelers::LabelError::Corpus(_)) => true,
            Error::Label(_) => true,
            Error::Metrics(e) => !matches!(e, metrics::MetricsError::NoSupport(_)),
            Error::Stats(_) => false,
        }
    }
}
