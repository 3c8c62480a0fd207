//! Independent transcription of the MOS processing rules, used to check
//! the library pipeline.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mosbench_core::model::{Dimension, Study};
use mosbench_core::mos::{compute_mos, MosConfig};

/// Direct transcription of the processing rules, written without any of the
/// library's helpers.
pub struct Oracle {
    pub mos: BTreeMap<(String, Dimension), (f64, usize)>,
    pub rejected: BTreeMap<Dimension, BTreeSet<String>>,
    pub qa: BTreeMap<String, bool>,
}

fn moments(v: &[f64]) -> (f64, f64, Option<f64>) {
    let n = v.len() as f64;
    let mu = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let m2 = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / n;
    (mu, sd, (m2 > 0.0).then(|| m4 / (m2 * m2)))
}

fn coefficient(beta: Option<f64>) -> f64 {
    match beta {
        Some(b) if (2.0..=4.0).contains(&b) => 2.0,
        _ => 20f64.sqrt(),
    }
}

pub fn oracle(study: &Study) -> Oracle {
    let mut mos = BTreeMap::new();
    let mut rejected = BTreeMap::new();
    for d in Dimension::ALL {
        let mut items: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for r in study.ratings().iter().filter(|r| r.dimension == d) {
            items
                .entry(r.video_id.clone())
                .or_default()
                .push((r.subject_id.clone(), r.raw_score as f64));
        }

        let mut pqn: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
        for scores in items.values() {
            let v: Vec<f64> = scores.iter().map(|s| s.1).collect();
            let band = (v.len() >= 2).then(|| moments(&v));
            for (subject, x) in scores {
                let e = pqn.entry(subject.clone()).or_default();
                e.2 += 1;
                if let Some((mu, sd, beta)) = band {
                    if sd > 0.0 {
                        let k = coefficient(beta);
                        if *x >= mu + k * sd {
                            e.0 += 1;
                        }
                        if *x <= mu - k * sd {
                            e.1 += 1;
                        }
                    }
                }
            }
        }
        let out: BTreeSet<String> = pqn
            .iter()
            .filter(|(_, &(p, q, n))| {
                let ratio = (p + q) as f64 / n as f64;
                ratio > 0.05 && p + q > 0 && (p as f64 - q as f64).abs() / ((p + q) as f64) < 0.3
            })
            .map(|(s, _)| s.clone())
            .collect();

        let mut kept: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (video, scores) in &items {
            let live: Vec<&(String, f64)> = scores.iter().filter(|s| !out.contains(&s.0)).collect();
            let v: Vec<f64> = live.iter().map(|s| s.1).collect();
            for (subject, x) in live {
                let keep = if v.len() < 2 {
                    true
                } else {
                    let (mu, sd, beta) = moments(&v);
                    let k = coefficient(beta);
                    mu - k * sd <= *x && *x <= mu + k * sd
                };
                if keep {
                    kept.entry(subject.clone()).or_default().push((video.clone(), *x));
                }
            }
        }

        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for ratings in kept.values() {
            if ratings.len() < 2 {
                continue;
            }
            let v: Vec<f64> = ratings.iter().map(|r| r.1).collect();
            let (mu, sd, _) = moments(&v);
            if sd == 0.0 {
                continue;
            }
            for (video, x) in ratings {
                let e = sums.entry(video.clone()).or_default();
                e.0 += 100.0 * ((x - mu) / sd + 3.0) / 6.0;
                e.1 += 1;
            }
        }
        for (video, (s, n)) in sums {
            mos.insert((video, d), (s / n as f64, n));
        }
        rejected.insert(d, out);
    }

    let dropped: BTreeSet<&String> = rejected.values().flatten().collect();
    let mut tallies: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for ((subject, video), votes) in &study.votes {
        if dropped.contains(subject) {
            continue;
        }
        let t = tallies.entry(video.clone()).or_insert_with(|| vec![(0, 0); votes.len()]);
        for (slot, v) in t.iter_mut().zip(votes) {
            if *v {
                slot.0 += 1;
            } else {
                slot.1 += 1;
            }
        }
    }
    let qa = tallies
        .into_iter()
        .filter(|(_, t)| t.iter().any(|(y, n)| y + n > 0))
        .map(|(v, t)| (v, t.iter().filter(|(y, n)| y + n > 0).all(|(y, n)| y > n)))
        .collect();
    Oracle { mos, rejected, qa }
}

pub fn check_against_oracle(study: &Study) {
    let out = compute_mos(study, &MosConfig::default());
    let o = oracle(study);
    assert_eq!(out.records.len(), study.videos.len());
    for report in &out.reports {
        let expected: Vec<String> = o.rejected[&report.dimension].iter().cloned().collect();
        assert_eq!(report.rejected_subjects, expected, "{:?}", report.dimension);
    }
    for rec in &out.records {
        for d in Dimension::ALL {
            match (rec.mos(d), o.mos.get(&(rec.video_id.clone(), d))) {
                (Some(got), Some(&(want, n))) => {
                    assert!((got - want).abs() < 1e-9, "{} {d}: {got} vs {want}", rec.video_id);
                    assert_eq!(rec.contributing_counts.get(d), n);
                }
                (None, None) => {}
                other => panic!("{} {d}: {other:?}", rec.video_id),
            }
        }
        if let (Some(p), Some(c)) = (rec.perception_mos, rec.correspondence_mos) {
            assert!((rec.overall_avg.unwrap() - (p + c) / 2.0).abs() < 1e-12);
        }
        assert_eq!(rec.qa_answer, o.qa.get(&rec.video_id).copied(), "{}", rec.video_id);
    }
}

