use serde::{Deserialize, Serialize};

use super::DistanceScore;
use crate::error::{Result, SfwError};

/// ROC curve of a "lower score means watermarked" detector.
///
/// `fpr[0] = tpr[0] = 0` is the reject-everything operating point; entry
/// `i + 1` belongs to `thresholds[i]`, where a score `<= threshold` is called
/// positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auc: f64,
    pub tpr_at_1pct_fpr: f64,
    pub max_accuracy: f64,
}

pub fn verify_batch(pos: &[DistanceScore], neg: &[DistanceScore]) -> Result<RocSummary> {
    if pos.is_empty() || neg.is_empty() {
        return Err(SfwError::Empty("positive and negative score lists"));
    }
    if pos.iter().chain(neg).any(|v| !v.is_finite()) {
        return Err(SfwError::NonFinite("scores"));
    }
    let mut scored: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (p, n) = (pos.len() as f64, neg.len() as f64);
    let mut thresholds = Vec::new();
    let mut tpr = vec![0.0];
    let mut fpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best_acc = n / (p + n);
    let mut i = 0;
    while i < scored.len() {
        let t = scored[i].0;
        while i < scored.len() && scored[i].0 == t {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(t);
        tpr.push(tp as f64 / p);
        fpr.push(fp as f64 / n);
        best_acc = best_acc.max((tp as f64 + (n - fp as f64)) / (p + n));
    }

    let auc = fpr
        .windows(2)
        .zip(tpr.windows(2))
        .map(|(f, t)| (f[1] - f[0]) * (t[1] + t[0]) / 2.0)
        .sum();
    let tpr_at_1pct_fpr = fpr
        .iter()
        .zip(&tpr)
        .filter(|(f, _)| **f <= 0.01)
        .map(|(_, t)| *t)
        .fold(0.0, f64::max);
    Ok(RocSummary {
        thresholds,
        tpr,
        fpr,
        auc,
        tpr_at_1pct_fpr,
        max_accuracy: best_acc,
    })
}

/// `P(pos < neg) + P(pos == neg) / 2` by counting pairs.
pub fn mann_whitney_auc(pos: &[DistanceScore], neg: &[DistanceScore]) -> f64 {
    let mut wins = 0.0;
    for &a in pos {
        for &b in neg {
            if a < b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Rows `method,attack,fpr,tpr` for one curve, without a header line.
pub fn roc_points_csv(method: &str, attack: &str, roc: &RocSummary) -> String {
    let mut out = String::new();
    for (f, t) in roc.fpr.iter().zip(&roc.tpr) {
        out.push_str(&format!("{method},{attack},{f:.6},{t:.6}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn perfect_separation() {
        let r = verify_batch(&[1.0, 2.0, 3.0], &[4.0, 5.0]).unwrap();
        assert_eq!((r.auc, r.tpr_at_1pct_fpr, r.max_accuracy), (1.0, 1.0, 1.0));
        assert_eq!(r.tpr.len(), r.thresholds.len() + 1);
    }

    #[test]
    fn reversed_scores() {
        let r = verify_batch(&[4.0, 5.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.auc, 0.0);
        assert_eq!(r.tpr_at_1pct_fpr, 0.0);
        assert_eq!(r.max_accuracy, 0.5);
    }

    #[test]
    fn ties_count_half() {
        let r = verify_batch(&[1.0], &[1.0]).unwrap();
        assert_eq!(r.auc, 0.5);
    }

    #[test]
    fn same_distribution_gives_chance_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut draw = || -> Vec<f64> { (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let (a, b) = (draw(), draw());
        let r = verify_batch(&a, &b).unwrap();
        assert!((r.auc - 0.5).abs() < 0.05);
    }

    #[test]
    fn empty_and_nan_rejected() {
        assert!(verify_batch(&[], &[1.0]).is_err());
        assert!(verify_batch(&[1.0], &[]).is_err());
        assert!(verify_batch(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn csv_rows() {
        let r = verify_batch(&[1.0], &[2.0]).unwrap();
        let csv = roc_points_csv("hsqr", "identity", &r);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("hsqr,identity,0.000000,0.000000\n"));
    }

    fn scores() -> impl Strategy<Value = Vec<f64>> {
        // coarse grid so ties actually happen
        prop::collection::vec((0i32..40).prop_map(|v| v as f64 / 4.0), 1..200)
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_oracle(pos in scores(), neg in scores()) {
            let r = verify_batch(&pos, &neg).unwrap();
            prop_assert!((r.auc - mann_whitney_auc(&pos, &neg)).abs() < 1e-9);
            prop_assert!(r.tpr.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(r.fpr.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((0.0..=1.0).contains(&r.max_accuracy));
            prop_assert_eq!(*r.tpr.last().unwrap(), 1.0);
        }

        #[test]
        fn tpr_at_low_fpr_grows_with_separation(pos in scores(), neg in scores(), shift in 0.0f64..5.0) {
            let base = verify_batch(&pos, &neg).unwrap();
            let moved: Vec<f64> = neg.iter().map(|v| v + shift).collect();
            let shifted = verify_batch(&pos, &moved).unwrap();
            prop_assert!(shifted.tpr_at_1pct_fpr >= base.tpr_at_1pct_fpr);
            prop_assert!(shifted.auc >= base.auc - 1e-12);
        }
    }
}
