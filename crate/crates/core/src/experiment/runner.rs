use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Method};
use crate::channel::{channel_roundtrip, AttackSpec, ChannelConfig};
use crate::detection::{bit_accuracy, decoded_bits, query_spectrum, verify_batch, KeyPool, RocSummary};
use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;
use crate::seed::{derive, stream};
use crate::watermark::{embed_keys, make_key, WatermarkKey};

/// Metrics of one attack over all samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub attack: AttackSpec,
    pub roc: RocSummary,
    pub ident_acc: f64,
    /// Mean payload bit accuracy; HSQR only.
    pub bit_acc: Option<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub method_label: String,
    pub pool_size: usize,
    pub attacks: Vec<AttackResult>,
}

impl ExperimentResults {
    pub fn mean_ident_acc(&self) -> f64 {
        self.attacks.iter().map(|a| a.ident_acc).sum::<f64>() / self.attacks.len() as f64
    }
}

struct SampleOutcome {
    pos: f64,
    neg: f64,
    identified: bool,
    bit_acc: Option<f64>,
}

struct Setup {
    pool: KeyPool,
    noise: Option<WatermarkKey>,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let noise = if cfg.uses_noise_key() {
        Some(make_key(cfg.noise_template(), derive(cfg.seed, &[stream::NOISE_KEY]))?)
    } else {
        None
    };
    let pool = KeyPool::generate(&cfg.key_template(), cfg.pool_size, cfg.seed, noise.as_ref(), cfg.detect())?;
    Ok(Setup { pool, noise })
}

/// Runs sample `i` through every attack. Depends only on the config and `i`.
fn run_sample(cfg: &ExperimentConfig, s: &Setup, i: usize) -> Result<Vec<SampleOutcome>> {
    let index = (derive(cfg.seed, &[stream::KEY_INDEX, i as u64]) % cfg.pool_size as u64) as usize;
    let key = s.pool.key(index)?;
    let mut keys = vec![&key];
    if let Some(n) = &s.noise {
        keys.push(n);
    }
    let clean = LatentTensor::gaussian(derive(cfg.seed, &[stream::LATENT, i as u64]));
    let marked = embed_keys(&clean, &keys)?;
    let null = LatentTensor::gaussian(derive(cfg.seed, &[stream::NULL_LATENT, i as u64]));

    cfg.attacks
        .iter()
        .enumerate()
        .map(|(j, attack)| {
            let channel = |latent: &LatentTensor, which: u64| {
                channel_roundtrip(
                    latent,
                    attack,
                    &ChannelConfig {
                        inversion_noise_sigma: cfg.inversion_noise_sigma,
                        seed: derive(cfg.seed, &[stream::CHANNEL, j as u64, i as u64, which]),
                    },
                )
            };
            let received = channel(&marked, 0)?;
            let received_null = channel(&null, 1)?;
            let q = s.pool.query(&received)?;
            let q_null = s.pool.query(&received_null)?;
            let bit_acc = if cfg.method == Method::Hsqr {
                let bits = decoded_bits(&query_spectrum(&received, &key)?, &key)?;
                Some(bit_accuracy(&bits, key.payload().expect("hsqr key")))
            } else {
                None
            };
            Ok(SampleOutcome {
                pos: s.pool.distance(index, &q),
                neg: s.pool.distance(index, &q_null),
                identified: s.pool.identify(&q).0 == index,
                bit_acc,
            })
        })
        .collect()
}

fn run_all(cfg: &ExperimentConfig, s: &Setup) -> Result<Vec<Vec<SampleOutcome>>> {
    (0..cfg.n_samples).into_par_iter().map(|i| run_sample(cfg, s, i)).collect()
}

/// Runs the full protocol. Results depend only on `cfg`; `threads` (0 = rayon
/// default) changes wall time, not output.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentResults> {
    cfg.validate()?;
    let s = setup(cfg)?;
    let samples = if threads == 0 {
        run_all(cfg, &s)?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SfwError::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| run_all(cfg, &s))?
    };

    let n = cfg.n_samples;
    let mut attacks = Vec::with_capacity(cfg.attacks.len());
    for (j, attack) in cfg.attacks.iter().enumerate() {
        let column = samples.iter().map(|row| &row[j]);
        let pos: Vec<f64> = column.clone().map(|o| o.pos).collect();
        let neg: Vec<f64> = column.clone().map(|o| o.neg).collect();
        let hits = column.clone().filter(|o| o.identified).count();
        let bit_acc = if cfg.method == Method::Hsqr {
            Some(column.filter_map(|o| o.bit_acc).sum::<f64>() / n as f64)
        } else {
            None
        };
        attacks.push(AttackResult {
            attack: *attack,
            roc: verify_batch(&pos, &neg)?,
            ident_acc: hits as f64 / n as f64,
            bit_acc,
            n,
        });
    }
    Ok(ExperimentResults {
        config: cfg.resolved(),
        method_label: cfg.method_label(),
        pool_size: cfg.pool_size,
        attacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_sample_single_key() {
        let mut c = ExperimentConfig::new(Method::Hsqr);
        c.n_samples = 1;
        c.pool_size = 1;
        let r = run_experiment(&c, 1).unwrap();
        assert_eq!(r.attacks.len(), 1);
        assert_eq!(r.attacks[0].ident_acc, 1.0);
        assert_eq!(r.attacks[0].n, 1);
    }

    #[test]
    fn clean_hstr_small_run_is_perfect() {
        let mut c = ExperimentConfig::new(Method::Hstr);
        c.n_samples = 20;
        c.pool_size = 64;
        c.seed = 5;
        let r = run_experiment(&c, 0).unwrap();
        let a = &r.attacks[0];
        assert_eq!((a.ident_acc, a.roc.tpr_at_1pct_fpr), (1.0, 1.0));
        assert_eq!(a.bit_acc, None);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut c = ExperimentConfig::new(Method::TreeRing);
        c.n_samples = 12;
        c.pool_size = 32;
        c.attacks = vec![AttackSpec::Noise { sigma: 0.05 }, AttackSpec::CropRandom { scale: 0.7, seed: None }];
        let a = run_experiment(&c, 1).unwrap();
        let b = run_experiment(&c, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_fails_before_work() {
        let mut c = ExperimentConfig::new(Method::Hsqr);
        c.n_samples = 0;
        assert!(run_experiment(&c, 1).is_err());
    }
}
