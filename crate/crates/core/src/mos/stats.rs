use serde::{Deserialize, Serialize};

use crate::error::StatsError;

/// Per-subject location and scale used to standardize that subject's ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub subject_id: String,
    pub mu: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub sigma: f64,
    pub n: usize,
}

impl SubjectStats {
    /// All ratings identical: z-scores are undefined.
    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation around `mu`; requires `values.len() >= 2`.
pub fn sample_std(values: &[f64], mu: f64) -> f64 {
    let ss: f64 = values.iter().map(|v| (v - mu).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn subject_stats(subject_id: &str, ratings: &[f64]) -> Result<SubjectStats, StatsError> {
    if ratings.len() < 2 {
        return Err(StatsError::TooFewValues(ratings.len()));
    }
    let mu = mean(ratings);
    Ok(SubjectStats {
        subject_id: subject_id.to_string(),
        mu,
        sigma: sample_std(ratings, mu),
        n: ratings.len(),
    })
}

/// Standardizes `raw` against the subject's stats and maps z ∈ [-3, 3] onto
/// [0, 100]. Values outside that range are not clamped.
pub fn zscore_rescale(raw: f64, stats: &SubjectStats) -> Result<f64, StatsError> {
    if stats.is_degenerate() {
        return Err(StatsError::ZeroVariance(stats.mu));
    }
    let z = (raw - stats.mu) / stats.sigma;
    Ok(100.0 * (z + 3.0) / 6.0)
}

/// Non-excess kurtosis `m4 / m2²` from population central moments
/// (≈ 3 for a normal distribution).
pub fn kurtosis(values: &[f64]) -> Result<f64, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues(values.len()));
    }
    let n = values.len() as f64;
    let mu = mean(values);
    let m2 = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(StatsError::ZeroVariance(mu));
    }
    let m4 = values.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2))
}

pub const NORMAL_COEFFICIENT: f64 = 2.0;

/// `√20`, used when the score distribution is far from normal.
pub fn wide_coefficient() -> f64 {
    20f64.sqrt()
}

/// Rejection band half-width multiplier: 2 for roughly normal score
/// distributions (2 ≤ β ≤ 4), √20 otherwise.
pub fn threshold_coefficient(beta: f64) -> f64 {
    if (2.0..=4.0).contains(&beta) {
        NORMAL_COEFFICIENT
    } else {
        wide_coefficient()
    }
}

/// Statistics of one item (a video on one dimension) across its raters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemStats {
    pub video_id: String,
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    /// `None` when the item's scores have zero variance.
    pub beta: Option<f64>,
    pub k: f64,
}

impl ItemStats {
    /// Requires at least two scores.
    pub fn from_scores(video_id: &str, scores: &[f64]) -> Result<ItemStats, StatsError> {
        if scores.len() < 2 {
            return Err(StatsError::TooFewValues(scores.len()));
        }
        let mu = mean(scores);
        let sigma = sample_std(scores, mu);
        let beta = kurtosis(scores).ok();
        let k = beta.map_or_else(wide_coefficient, threshold_coefficient);
        Ok(ItemStats {
            video_id: video_id.to_string(),
            n: scores.len(),
            mu,
            sigma,
            beta,
            k,
        })
    }

    pub fn upper(&self) -> f64 {
        self.mu + self.k * self.sigma
    }

    pub fn lower(&self) -> f64 {
        self.mu - self.k * self.sigma
    }

    pub fn within_band(&self, score: f64) -> bool {
        self.lower() <= score && score <= self.upper()
    }
}
