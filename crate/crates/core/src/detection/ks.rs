use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;

pub const DEFAULT_KS_ALPHA: f64 = 0.05;
const MIN_SAMPLES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Kolmogorov survival function `P(K > lambda)`.
///
/// Uses `2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)` for `lambda >= 1`, and the
/// Jacobi theta form `1 - sqrt(2 pi) / lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))`
/// below, where the alternating series converges slowly.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        let mut sum = 0.0;
        for k in 1..=200 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * PI * PI / (8.0 * lambda * lambda)).exp();
            sum += term;
            if k >= 3 && term < 1e-16 {
                break;
            }
        }
        return (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against `N(0, 1)`, asymptotic p-value at
/// `sqrt(n) * D`.
pub fn ks_test(samples: &[f64]) -> Result<KsResult> {
    if samples.len() < MIN_SAMPLES {
        return Err(SfwError::InvalidParameter(format!(
            "ks_test needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(SfwError::NonFinite("ks samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
    })
}

/// Fraction of latents whose flattened values fail the KS test at `alpha`
/// (`p <= alpha`).
pub fn ks_failure_rate(latents: &[LatentTensor], alpha: f64) -> Result<f64> {
    if latents.is_empty() {
        return Err(SfwError::Empty("latent batch"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SfwError::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let mut failures = 0usize;
    for l in latents {
        if ks_test(l.values())?.p_value <= alpha {
            failures += 1;
        }
    }
    Ok(failures as f64 / latents.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn survival_known_values() {
        // classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn both_series_agree_where_they_meet() {
        for lambda in [0.9, 1.0, 1.1] {
            let mut alt = 0.0;
            for k in 1..200 {
                let kf = k as f64;
                alt += if k % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * kf * kf * lambda * lambda).exp();
            }
            assert!((kolmogorov_survival(lambda) - 2.0 * alt).abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_matches_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-10);
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-10);
    }

    #[test]
    fn degenerate_and_shifted_samples_fail() {
        let zeros = vec![0.0; 10_000];
        let r = ks_test(&zeros).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-12);
        let shifted: Vec<f64> = normals(10_000, 2).into_iter().map(|v| v + 0.5).collect();
        assert!(ks_test(&shifted).unwrap().p_value < 1e-6);
    }

    #[test]
    fn gaussian_samples_pass() {
        let r = ks_test(&normals(100_000, 3)).unwrap();
        assert!(r.p_value > 0.001);
        assert!(ks_test(&[0.0; 7]).is_err());
    }

    #[test]
    fn statistic_matches_brute_force_sup() {
        let s = normals(50, 4);
        let r = ks_test(&s).unwrap();
        // sup over a fine grid of |F_n(x) - Phi(x)| approaches D from below
        let mut best = 0.0f64;
        for i in 0..=40_000 {
            let x = -5.0 + i as f64 * 2.5e-4;
            let fn_x = s.iter().filter(|&&v| v <= x).count() as f64 / 50.0;
            best = best.max((fn_x - normal_cdf(x)).abs());
        }
        assert!(best <= r.statistic + 1e-12);
        assert!(r.statistic - best < 1e-3);
    }

    #[test]
    fn failure_rate_calibration() {
        let batch: Vec<LatentTensor> = (0..200).map(|i| LatentTensor::gaussian(1000 + i)).collect();
        let rate = ks_failure_rate(&batch, 0.05).unwrap();
        assert!((rate - 0.05).abs() <= 0.03, "rate {rate}");
        assert_eq!(ks_failure_rate(&batch[..5], 1.0).unwrap(), 1.0);
        assert!(ks_failure_rate(&[], 0.05).is_err());
        assert!(ks_failure_rate(&batch[..1], 0.0).is_err());
    }
}
