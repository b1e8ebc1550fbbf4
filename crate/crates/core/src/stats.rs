//! Correlation statistics, ordinary least squares and human-ranking
//! agreement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("need at least {needed} points for {features} features, got {got}")]
    InsufficientPoints { needed: usize, features: usize, got: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no sample has two or more systems with both a score and a rank")]
    NoValidSample,
}

/// Two equally long, finite series.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(StatsError::TooShort(x.len()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(PairedSeries { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson_raw(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation.
pub fn pearson(series: &PairedSeries) -> Result<f64, StatsError> {
    pearson_raw(&series.x, &series.y)
}

/// 1-based fractional ranks; tied values share the mean of their ranks.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &ix in &order[start..end] {
            ranks[ix] = shared;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of fractional ranks.
pub fn spearman(series: &PairedSeries) -> Result<f64, StatsError> {
    pearson_raw(&fractional_ranks(&series.x), &fractional_ranks(&series.y))
}

/// Kendall's tau-b by pair counting.
pub fn kendall_tau_b(series: &PairedSeries) -> Result<f64, StatsError> {
    let (x, y) = (&series.x, &series.y);
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            if dx == 0 {
                ties_x += 1;
            }
            if dy == 0 {
                ties_y += 1;
            }
            match dx * dy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - ties_x) * (pairs - ties_y)) as f64).sqrt();
    if denom == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub pearson: f64,
    pub spearman: f64,
    pub kendall: f64,
}

pub fn correlations(series: &PairedSeries) -> Result<Correlations, StatsError> {
    Ok(Correlations {
        pearson: pearson(series)?,
        spearman: spearman(series)?,
        kendall: kendall_tau_b(series)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Least-squares fit with an intercept.
///
/// The normal equations are formed on mean-centred features, which leaves
/// the solution unchanged and keeps the system well conditioned; the
/// intercept is recovered from the means.
pub fn ols_fit(features: &[Vec<f64>], target: &[f64]) -> Result<OlsModel, StatsError> {
    let n = features.len();
    if n != target.len() {
        return Err(StatsError::LengthMismatch(n, target.len()));
    }
    let p = features.first().map_or(0, Vec::len);
    if let Some(row) = features.iter().find(|r| r.len() != p) {
        return Err(StatsError::DimensionMismatch { expected: p, got: row.len() });
    }
    if n < p + 1 || n == 0 {
        return Err(StatsError::InsufficientPoints { needed: p + 1, features: p, got: n });
    }
    if features.iter().flatten().chain(target).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let y_mean = mean(target);
    let x_mean: Vec<f64> = (0..p)
        .map(|j| features.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();

    // augmented [XᵀX | Xᵀy] on centred data
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &y) in features.iter().zip(target) {
        let yc = y - y_mean;
        for i in 0..p {
            let xi = row[i] - x_mean[i];
            for j in 0..p {
                a[i][j] += xi * (row[j] - x_mean[j]);
            }
            a[i][p] += xi * yc;
        }
    }

    let scale = (0..p).map(|i| a[i][i]).fold(0.0, f64::max);
    let tol = scale * 1e-12;
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= tol || scale == 0.0 {
            return Err(StatsError::RankDeficient);
        }
        a.swap(col, pivot);
        for r in 0..p {
            if r == col {
                continue;
            }
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..=p {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    let coefficients: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsModel { coefficients, intercept })
}

pub fn ols_predict(model: &OlsModel, features: &[Vec<f64>]) -> Result<Vec<f64>, StatsError> {
    features
        .iter()
        .map(|row| {
            if row.len() != model.coefficients.len() {
                return Err(StatsError::DimensionMismatch {
                    expected: model.coefficients.len(),
                    got: row.len(),
                });
            }
            Ok(model.intercept + row.iter().zip(&model.coefficients).map(|(x, b)| x * b).sum::<f64>())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAgreement {
    pub mean_spearman: f64,
    pub samples_used: usize,
    /// Samples whose metric scores (or human ranks) were all tied.
    pub samples_tied: usize,
    /// system → fraction of its samples at metric rank position 1, 2, ...
    pub rank_proportions: BTreeMap<String, Vec<f64>>,
}

/// Agreement between a metric and human system rankings.
///
/// For each sample, Spearman's rho is computed between the metric scores
/// and the negated human ranks (rank 1 = best). Samples with fewer than two
/// scored-and-ranked systems are ignored; all-tied samples are skipped and
/// counted. Rank positions under the metric use competition ranking, so
/// tied systems share the better position.
pub fn human_rank_agreement(
    metric_scores: &BTreeMap<String, BTreeMap<String, f64>>,
    human_ranks: &BTreeMap<String, BTreeMap<String, u32>>,
) -> Result<HumanAgreement, StatsError> {
    let mut rhos = Vec::new();
    let mut tied = 0usize;
    let mut positions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut appearances: BTreeMap<String, usize> = BTreeMap::new();
    let mut width = 0usize;

    for (id, ranks) in human_ranks {
        let Some(scores) = metric_scores.get(id) else { continue };
        let systems: Vec<(&String, f64, f64)> = ranks
            .iter()
            .filter_map(|(sys, &rank)| scores.get(sys).map(|&s| (sys, s, -(rank as f64))))
            .collect();
        if systems.len() < 2 {
            continue;
        }
        width = width.max(systems.len());
        for (sys, score, _) in &systems {
            let position = 1 + systems.iter().filter(|(_, other, _)| other > score).count();
            let slots = positions.entry((*sys).clone()).or_default();
            if slots.len() < position {
                slots.resize(position, 0);
            }
            slots[position - 1] += 1;
            *appearances.entry((*sys).clone()).or_insert(0) += 1;
        }
        let series = PairedSeries::new(
            systems.iter().map(|s| s.1).collect(),
            systems.iter().map(|s| s.2).collect(),
        )?;
        match spearman(&series) {
            Ok(rho) => rhos.push(rho),
            Err(StatsError::ZeroVariance) => tied += 1,
            Err(e) => return Err(e),
        }
    }
    if rhos.is_empty() {
        return Err(StatsError::NoValidSample);
    }
    let rank_proportions = positions
        .into_iter()
        .map(|(sys, mut counts)| {
            counts.resize(width, 0);
            let total = appearances[&sys] as f64;
            (sys, counts.into_iter().map(|c| c as f64 / total).collect())
        })
        .collect();
    Ok(HumanAgreement {
        mean_spearman: mean(&rhos),
        samples_used: rhos.len(),
        samples_tied: tied,
        rank_proportions,
    })
}
