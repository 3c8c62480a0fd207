//! Correlation, error and classification statistics.

use std::cmp::Ordering;

use crate::error::MetricsError;

/// Paired observations, e.g. predictions against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Option<Vec<String>>,
}

impl PairedSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, MetricsError> {
        check_pair(&x, &y, 0)?;
        Ok(PairedSeries { x, y, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn srcc(&self) -> Result<f64, MetricsError> {
        srcc(&self.x, &self.y)
    }

    pub fn plcc(&self) -> Result<f64, MetricsError> {
        plcc(&self.x, &self.y)
    }

    pub fn krcc(&self) -> Result<f64, MetricsError> {
        krcc(&self.x, &self.y)
    }

    pub fn rmse(&self) -> Result<f64, MetricsError> {
        rmse(&self.x, &self.y)
    }
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<(), MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min_len {
        return Err(MetricsError::TooShort {
            needed: min_len,
            got: x.len(),
        });
    }
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    Ok(())
}

/// Pearson linear correlation.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::Constant);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of average ranks, so ties
/// are handled. Equals `1 − 6Σd²/(N(N²−1))` when there are no ties.
pub fn srcc(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y, 2)?;
    plcc(&rank(x, RankMode::Average), &rank(y, RankMode::Average))
}

/// Kendall tau-a: `(C − D) / (N(N−1)/2)`. Pairs tied in either series count
/// as neither concordant nor discordant.
pub fn krcc(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y, 2)?;
    let n = x.len();
    let mut balance: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if s > 0.0 {
                balance += 1;
            } else if s < 0.0 {
                balance -= 1;
            }
        }
    }
    Ok(balance as f64 / (n * (n - 1) / 2) as f64)
}

/// Root mean squared difference.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y, 1)?;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Fraction of positions where the two label vectors agree.
pub fn accuracy(pred: &[bool], truth: &[bool]) -> Result<f64, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::TooShort { needed: 1, got: 0 });
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    /// Ties share the mean of the positions they occupy.
    Average,
    /// Ties share the best position they occupy; the next rank skips.
    Competition,
}

/// 1-based ranks with the largest value ranked first.
pub fn rank(values: &[f64], mode: RankMode) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = match mode {
            RankMode::Average => (start + 1 + end) as f64 / 2.0,
            RankMode::Competition => (start + 1) as f64,
        };
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Splits scores into a low (`false`) and high (`true`) group by 1-D
/// two-means clustering.
///
/// In one dimension the optimal two-means partition is a threshold split of
/// the sorted values, so every boundary between distinct values is scored by
/// its within-cluster sum of squares (from prefix sums) and the best one is
/// kept. The result is deterministic and is a fixed point of Lloyd's
/// iteration.
pub fn binarize_kmeans(scores: &[f64]) -> Result<Vec<bool>, MetricsError> {
    if scores.len() < 2 {
        return Err(MetricsError::TooShort {
            needed: 2,
            got: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(MetricsError::Constant);
    }

    // Center first to keep the prefix sums well conditioned.
    let n = sorted.len();
    let center = sorted.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = sorted.iter().map(|v| v - center).collect();
    let total: f64 = centered.iter().sum();

    let mut best: Option<(f64, f64)> = None;
    let mut left = 0.0;
    for i in 1..n {
        left += centered[i - 1];
        if sorted[i - 1] == sorted[i] {
            continue;
        }
        let right = total - left;
        // SSE = Σx² − L²/i − R²/(n−i); Σx² is constant, so maximize the rest.
        let gain = left * left / i as f64 + right * right / (n - i) as f64;
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, sorted[i - 1]));
        }
    }
    let (_, threshold) = best.expect("at least two distinct values");
    Ok(scores.iter().map(|&v| v > threshold).collect())
}

/// Closed-form Spearman coefficient for tie-free data.
pub fn srcc_tie_free(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y, 2)?;
    let rx = rank(x, RankMode::Average);
    let ry = rank(y, RankMode::Average);
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn srcc_examples() {
        assert!((srcc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < EPS);
        assert!((srcc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < EPS);
        assert_eq!(srcc(&[1.0, 1.0], &[1.0, 2.0]), Err(MetricsError::Constant));
        assert!(matches!(srcc(&[1.0], &[1.0]), Err(MetricsError::TooShort { .. })));
    }

    #[test]
    fn plcc_examples() {
        let x = [0.3, 1.0, 4.5, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((plcc(&x, &y).unwrap() - 1.0).abs() < EPS);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((plcc(&x, &neg).unwrap() + 1.0).abs() < EPS);
        // cov = 3 (sum of centered products), denom = √2·√(42/9)·... → 0.98198
        let r = plcc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.981981).abs() < 1e-6, "{r}");
        assert_eq!(plcc(&[2.0, 2.0], &[1.0, 3.0]), Err(MetricsError::Constant));
    }

    #[test]
    fn krcc_examples() {
        assert!((krcc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < EPS);
        assert!((krcc(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < EPS);
        assert!((krcc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < EPS);
        assert!(krcc(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < EPS);
        assert!((rmse(&[1.0], &[4.0]).unwrap() - 3.0).abs() < EPS);
        assert_eq!(rmse(&[1.0], &[4.0, 1.0]), Err(MetricsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn kmeans_examples() {
        assert_eq!(
            binarize_kmeans(&[10.0, 11.0, 90.0, 91.0]).unwrap(),
            vec![false, false, true, true]
        );
        assert_eq!(binarize_kmeans(&[0.0, 100.0]).unwrap(), vec![false, true]);
        assert_eq!(binarize_kmeans(&[91.0, 10.0, 90.0, 10.0]).unwrap(), vec![true, false, true, false]);
        assert_eq!(binarize_kmeans(&[5.0, 5.0, 5.0]), Err(MetricsError::Constant));
        assert!(binarize_kmeans(&[5.0]).is_err());
    }

    #[test]
    fn kmeans_escapes_lloyd_local_optimum() {
        // Lloyd from the min/max extremes stops at {2.76, 40.92} | rest
        let x = [2.75591132, 40.91991364, 53.81433132, 54.95936877, 75.35131087, 82.77025938];
        assert_eq!(
            binarize_kmeans(&x).unwrap(),
            vec![false, true, true, true, true, true]
        );
    }

    #[test]
    fn accuracy_examples() {
        let t = [true, false, true, true];
        assert_eq!(accuracy(&t, &t).unwrap(), 1.0);
        let c: Vec<bool> = t.iter().map(|b| !b).collect();
        assert_eq!(accuracy(&c, &t).unwrap(), 0.0);
        assert_eq!(accuracy(&[true, false, true, false], &t).unwrap(), 0.75);
        assert!(accuracy(&[true], &t).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[65.25, 63.81, 62.09], RankMode::Competition), vec![1.0, 2.0, 3.0]);
        assert_eq!(rank(&[10.0, 10.0, 5.0], RankMode::Competition), vec![1.0, 1.0, 3.0]);
        assert_eq!(rank(&[10.0, 10.0, 5.0], RankMode::Average), vec![1.5, 1.5, 3.0]);
        assert!(rank(&[], RankMode::Average).is_empty());
    }

    #[test]
    fn paired_series_checks_lengths() {
        assert!(PairedSeries::new(vec![1.0], vec![]).is_err());
        assert!(matches!(
            PairedSeries::new(vec![1.0, f64::NAN], vec![1.0, 2.0]),
            Err(MetricsError::NonFinite(1))
        ));
        let s = PairedSeries::new(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0])
            .unwrap()
            .with_labels(vec!["a".into(), "b".into(), "c".into()]);
        assert_eq!(s.len(), 3);
        assert!((s.krcc().unwrap() - 1.0 / 3.0).abs() < EPS);
        assert!(s.srcc().unwrap() > 0.0 && s.plcc().unwrap() > 0.0 && s.rmse().unwrap() > 0.0);
    }
    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn series(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            n.prop_flat_map(|n| {
                (
                    prop::collection::vec(-100.0f64..100.0, n),
                    prop::collection::vec(-100.0f64..100.0, n),
                )
            })
        }

        fn has_spread(v: &[f64]) -> bool {
            v.iter().any(|x| *x != v[0])
        }

        /// Tau-a summed over ordered pairs.
        fn tau_a(x: &[f64], y: &[f64]) -> f64 {
            let n = x.len();
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += ((x[i] - x[j]).signum() * (y[i] - y[j]).signum()) * f64::from(x[i] != x[j] && y[i] != y[j]);
                    }
                }
            }
            s / (n * (n - 1)) as f64
        }

        fn sse(v: &[f64]) -> f64 {
            if v.is_empty() {
                return 0.0;
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum()
        }

        /// Brute force over every 2-partition of the points.
        fn best_partition_cost(x: &[f64]) -> f64 {
            let n = x.len();
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << n) - 1 {
                let (a, b): (Vec<f64>, Vec<f64>) = (0..n).map(|i| (mask >> i & 1 == 1, x[i])).fold(
                    (vec![], vec![]),
                    |(mut a, mut b), (side, v)| {
                        if side { a.push(v) } else { b.push(v) }
                        (a, b)
                    },
                );
                best = best.min(sse(&a) + sse(&b));
            }
            best
        }

        proptest! {
            #[test]
            fn rank_stats_ignore_monotone_transforms((x, y) in series(3..30)) {
                prop_assume!(has_spread(&x) && has_spread(&y));
                let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 5.0 * v).collect();
                prop_assert!((srcc(&tx, &y).unwrap() - srcc(&x, &y).unwrap()).abs() < 1e-12);
                prop_assert!((krcc(&tx, &y).unwrap() - krcc(&x, &y).unwrap()).abs() < 1e-12);
                let ax: Vec<f64> = x.iter().map(|v| 3.5 * v - 2.0).collect();
                prop_assert!((plcc(&ax, &y).unwrap() - plcc(&x, &y).unwrap()).abs() < 1e-9);
            }

            #[test]
            fn correlations_are_bounded_and_symmetric((x, y) in series(2..30)) {
                prop_assume!(has_spread(&x) && has_spread(&y));
                for f in [srcc, plcc, krcc] {
                    let r = f(&x, &y).unwrap();
                    prop_assert!((-1.0..=1.0).contains(&r));
                    prop_assert!((r - f(&y, &x).unwrap()).abs() < 1e-12);
                }
            }

            #[test]
            fn krcc_matches_pair_enumeration(x in prop::collection::vec(0i32..4, 2..7), y in prop::collection::vec(0i32..4, 7)) {
                let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
                let y: Vec<f64> = y[..x.len()].iter().map(|&v| v as f64).collect();
                prop_assert!((krcc(&x, &y).unwrap() - tau_a(&x, &y)).abs() < 1e-12);
            }

            #[test]
            fn srcc_matches_closed_form_without_ties(n in 2usize..40, seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
                let mut y = x.clone();
                y.shuffle(&mut rng);
                prop_assert!((srcc(&x, &y).unwrap() - srcc_tie_free(&x, &y).unwrap()).abs() < 1e-12);
            }

            #[test]
            fn kmeans_split_is_optimal(x in prop::collection::vec(0.0f64..100.0, 2..12)) {
                prop_assume!(has_spread(&x));
                let labels = binarize_kmeans(&x).unwrap();
                let hi: Vec<f64> = x.iter().zip(&labels).filter(|(_, &l)| l).map(|(v, _)| *v).collect();
                let lo: Vec<f64> = x.iter().zip(&labels).filter(|(_, &l)| !l).map(|(v, _)| *v).collect();
                prop_assert!(!hi.is_empty() && !lo.is_empty());
                let lo_max = lo.iter().cloned().fold(f64::MIN, f64::max);
                prop_assert!(hi.iter().all(|&v| v > lo_max));
                let cost = sse(&hi) + sse(&lo);
                prop_assert!(cost <= best_partition_cost(&x) * (1.0 + 1e-9) + 1e-9);

                // Lloyd fixed point: every value sits closer to its own centroid.
                let (ch, cl) = (hi.iter().sum::<f64>() / hi.len() as f64, lo.iter().sum::<f64>() / lo.len() as f64);
                for (v, l) in x.iter().zip(&labels) {
                    let (own, other) = if *l { (ch, cl) } else { (cl, ch) };
                    prop_assert!((v - own).abs() <= (v - other).abs() + 1e-9);
                }
            }
        }
    }
}
