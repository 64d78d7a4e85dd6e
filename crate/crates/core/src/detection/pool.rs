use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gather, l1, DetectMode, DistanceScore};
use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;
use crate::qr::{Payload72, DATA_LEN};
use crate::seed::{derive, stream};
use crate::watermark::{extract_spectrum, make_key, reference_pattern, EmbedRegion, KeyRegionMask, KeySpec, WatermarkKey};

#[derive(Clone, Debug)]
struct NoiseReference {
    channel: usize,
    region: EmbedRegion,
    mask: KeyRegionMask,
    active: Vec<usize>,
    reference: Vec<f64>,
}

/// Candidate keys sharing one mask geometry, with references stored as one
/// contiguous row per key. Index order is message identity.
#[derive(Clone, Debug)]
pub struct KeyPool {
    specs: Vec<(KeySpec, u64)>,
    mode: DetectMode,
    channel: usize,
    region: EmbedRegion,
    mask: KeyRegionMask,
    active: Vec<usize>,
    references: Vec<f64>,
    noise: Option<NoiseReference>,
}

/// Masked components of one query latent, ready for scoring against a pool.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryBundle {
    pattern: Vec<f64>,
    noise: Option<Vec<f64>>,
}

fn active_positions(mask: &KeyRegionMask, mode: DetectMode) -> Vec<usize> {
    mask.entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| mode.keeps(e.component))
        .map(|(i, _)| i)
        .collect()
}

fn pick(values: &[f64], active: &[usize]) -> Vec<f64> {
    active.iter().map(|&i| values[i]).collect()
}

/// Payload of pool entry `index`: nine bytes drawn from the entry's seed.
pub(crate) fn pool_payload(entry_seed: u64) -> Payload72 {
    let mut rng = ChaCha8Rng::seed_from_u64(entry_seed);
    let mut bytes = [0u8; DATA_LEN];
    rng.fill_bytes(&mut bytes);
    Payload72::from_bytes(bytes)
}

impl KeyPool {
    /// Builds a pool from explicit keys. All keys must share channel, region
    /// and mask; `noise` adds a shared noise-key term to every distance.
    pub fn new(keys: &[WatermarkKey], noise: Option<&WatermarkKey>, mode: DetectMode) -> Result<Self> {
        let first = keys.first().ok_or(SfwError::Empty("key pool"))?;
        let mask = first.mask().clone();
        let active = active_positions(&mask, mode);
        let mut references = Vec::with_capacity(keys.len() * active.len());
        let mut specs = Vec::with_capacity(keys.len());
        let mut seen = HashSet::new();
        for key in keys {
            if key.mask() != &mask || key.channel() != first.channel() || key.region() != first.region() {
                return Err(SfwError::MaskMismatch("pool keys must share one mask geometry".into()));
            }
            if !seen.insert(key.to_json()) {
                return Err(SfwError::InvalidParameter(format!(
                    "duplicate key (seed {}) in pool",
                    key.seed()
                )));
            }
            references.extend(pick(&reference_pattern(key), &active));
            specs.push((key.spec().clone(), key.seed()));
        }
        let noise = noise.map(|n| {
            let active = active_positions(n.mask(), mode);
            NoiseReference {
                channel: n.channel(),
                region: n.region(),
                mask: n.mask().clone(),
                reference: pick(&reference_pattern(n), &active),
                active,
            }
        });
        Ok(Self {
            specs,
            mode,
            channel: first.channel(),
            region: first.region(),
            mask,
            active,
            references,
            noise,
        })
    }

    /// `size` keys built from `template` with seeds derived from `seed`.
    /// QR templates get a fresh seeded payload per entry.
    pub fn generate(template: &KeySpec, size: usize, seed: u64, noise: Option<&WatermarkKey>, mode: DetectMode) -> Result<Self> {
        if size == 0 {
            return Err(SfwError::Empty("key pool"));
        }
        let keys = (0..size as u64)
            .map(|i| {
                let entry_seed = derive(seed, &[stream::POOL, i]);
                make_key(template.with_payload(pool_payload(entry_seed)), entry_seed)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&keys, noise, mode)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn mode(&self) -> DetectMode {
        self.mode
    }

    pub fn region(&self) -> EmbedRegion {
        self.region
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn has_noise_key(&self) -> bool {
        self.noise.is_some()
    }

    /// Regenerates the key at `index`.
    pub fn key(&self, index: usize) -> Result<WatermarkKey> {
        let (spec, seed) = self
            .specs
            .get(index)
            .ok_or_else(|| SfwError::InvalidParameter(format!("index {index} outside pool of {}", self.len())))?;
        make_key(spec.clone(), *seed)
    }

    pub fn reference(&self, index: usize) -> &[f64] {
        let w = self.active.len();
        &self.references[index * w..(index + 1) * w]
    }

    pub fn query(&self, latent: &LatentTensor) -> Result<QueryBundle> {
        let spec = extract_spectrum(latent, self.channel, self.region)?;
        let pattern = pick(&gather(&spec, &self.mask)?, &self.active);
        let noise = match &self.noise {
            Some(n) => {
                let s = extract_spectrum(latent, n.channel, n.region)?;
                Some(pick(&gather(&s, &n.mask)?, &n.active))
            }
            None => None,
        };
        Ok(QueryBundle { pattern, noise })
    }

    fn noise_term(&self, q: &QueryBundle) -> f64 {
        match (&self.noise, &q.noise) {
            (Some(n), Some(v)) => l1(v, &n.reference),
            _ => 0.0,
        }
    }

    /// Distance of the query to key `index`, including the noise-key term.
    pub fn distance(&self, index: usize, q: &QueryBundle) -> DistanceScore {
        l1(&q.pattern, self.reference(index)) + self.noise_term(q)
    }

    pub fn distances(&self, q: &QueryBundle) -> Vec<DistanceScore> {
        let noise = self.noise_term(q);
        (0..self.len()).map(|i| l1(&q.pattern, self.reference(i)) + noise).collect()
    }

    /// Argmin over the pool; the lowest index wins ties.
    pub fn identify(&self, q: &QueryBundle) -> (usize, DistanceScore) {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.len() {
            let d = l1(&q.pattern, self.reference(i));
            if d < best.1 {
                best = (i, d);
            }
        }
        (best.0, best.1 + self.noise_term(q))
    }
}

pub fn identify(latent: &LatentTensor, pool: &KeyPool) -> Result<(usize, DistanceScore)> {
    Ok(pool.identify(&pool.query(latent)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::embed_keys;

    fn hstr() -> KeySpec {
        KeySpec::Hstr {
            channel: 3,
            radius: 14,
            center_aware: true,
        }
    }

    fn hsqr() -> KeySpec {
        KeySpec::Hsqr {
            channel: 3,
            payload: Payload72::default(),
            cell_px: 2,
            amplitude: 45.0,
            center_aware: true,
            mask_id: 0,
        }
    }

    fn noise_key() -> WatermarkKey {
        make_key(
            KeySpec::Noise {
                channel: 0,
                center_aware: true,
            },
            99,
        )
        .unwrap()
    }

    #[test]
    fn pool_of_one_returns_zero() {
        let pool = KeyPool::generate(&hstr(), 1, 5, None, DetectMode::Both).unwrap();
        let (i, _) = identify(&LatentTensor::gaussian(1), &pool).unwrap();
        assert_eq!(i, 0);
        assert!(KeyPool::generate(&hstr(), 0, 5, None, DetectMode::Both).is_err());
        assert!(KeyPool::new(&[], None, DetectMode::Both).is_err());
    }

    #[test]
    fn finds_embedded_key_against_brute_force_scan() {
        let nk = noise_key();
        let pool = KeyPool::generate(&hsqr(), 2048, 7, Some(&nk), DetectMode::Both).unwrap();
        let key = pool.key(137).unwrap();
        let latent = embed_keys(&LatentTensor::gaussian(3), &[&key, &nk]).unwrap();
        let (i, d) = identify(&latent, &pool).unwrap();
        assert_eq!(i, 137);

        // independent scan: regenerate each key and sum distances on the spectrum
        let spec = extract_spectrum(&latent, 3, EmbedRegion::CenterAware).unwrap();
        let mut best = (usize::MAX, f64::INFINITY);
        for idx in [0usize, 136, 137, 138, 2047] {
            let k = pool.key(idx).unwrap();
            let dist = crate::detection::l1_distance(&spec, &reference_pattern(&k), k.mask(), DetectMode::Both).unwrap();
            if dist < best.1 {
                best = (idx, dist);
            }
        }
        assert_eq!(best.0, 137);
        let noise_spec = extract_spectrum(&latent, 0, EmbedRegion::CenterAware).unwrap();
        let noise_d =
            crate::detection::l1_distance(&noise_spec, &reference_pattern(&nk), nk.mask(), DetectMode::Both).unwrap();
        assert!((d - (best.1 + noise_d)).abs() < 1e-6 * d.max(1.0));
    }

    #[test]
    fn argmin_is_invariant_under_monotone_maps() {
        let pool = KeyPool::generate(&hstr(), 64, 8, None, DetectMode::Both).unwrap();
        let key = pool.key(10).unwrap();
        let latent = crate::watermark::embed(&LatentTensor::gaussian(4), &key).unwrap();
        let q = pool.query(&latent).unwrap();
        let d = pool.distances(&q);
        let argmin = |v: &[f64]| {
            v.iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (i, &x)| if x < b.1 { (i, x) } else { b })
                .0
        };
        let transformed: Vec<f64> = d.iter().map(|x| (x + 1.0).ln() * 3.0 + 7.0).collect();
        assert_eq!(argmin(&d), argmin(&transformed));
        assert_eq!(pool.identify(&q).0, argmin(&d));
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        let key = make_key(hstr(), 1).unwrap();
        let other = make_key(hstr(), 2).unwrap();
        let pool = KeyPool::new(&[other.clone(), key.clone()], None, DetectMode::Both).unwrap();
        assert!(KeyPool::new(&[key.clone(), key.clone()], None, DetectMode::Both).is_err());
        let q = QueryBundle {
            pattern: vec![0.0; pool.reference(0).len()],
            noise: None,
        };
        let d = pool.distances(&q);
        if d[0] == d[1] {
            assert_eq!(pool.identify(&q).0, 0);
        }
        let equal = KeyPool {
            references: [pool.reference(0).to_vec(), pool.reference(0).to_vec()].concat(),
            ..pool
        };
        assert_eq!(equal.identify(&q).0, 0);
    }

    #[test]
    fn real_only_mode_halves_the_components() {
        let both = KeyPool::generate(&hstr(), 2, 1, None, DetectMode::Both).unwrap();
        let real = KeyPool::generate(&hstr(), 2, 1, None, DetectMode::RealOnly).unwrap();
        assert_eq!(both.reference(0).len(), 2 * real.reference(0).len());
    }

    #[test]
    fn mixed_geometry_is_rejected() {
        let a = make_key(hstr(), 1).unwrap();
        let b = make_key(hsqr(), 1).unwrap();
        assert!(KeyPool::new(&[a, b], None, DetectMode::Both).is_err());
    }

    /// Expected `|X - a|` and `||X| - a|` for `X ~ N(0, s^2)`.
    fn folded_expectations(s: f64, a: f64) -> (f64, f64) {
        let phi = crate::detection::normal_cdf(a / s);
        let null = s * (2.0 / std::f64::consts::PI).sqrt() * (-a * a / (2.0 * s * s)).exp() + a * (2.0 * phi - 1.0);
        let positive_half = s / (2.0 * std::f64::consts::PI).sqrt() + a / 2.0;
        (null, 2.0 * (null - positive_half))
    }

    #[test]
    fn hsqr_clean_distance_is_far_below_null() {
        for center_aware in [false, true] {
            let template = KeySpec::Hsqr {
                channel: 3,
                payload: Payload72::default(),
                cell_px: 2,
                amplitude: 45.0,
                center_aware,
                mask_id: 0,
            };
            let pool = KeyPool::generate(&template, 1, 3, None, DetectMode::Both).unwrap();
            let key = pool.key(0).unwrap();
            let region = key.region();
            let (mut on_total, mut off_total) = (0.0, 0.0);
            for s in 0..20 {
                let latent = LatentTensor::gaussian(100 + s);
                let marked = crate::watermark::embed(&latent, &key).unwrap();
                let on = pool.distance(0, &pool.query(&marked).unwrap());
                let off = pool.distance(0, &pool.query(&latent).unwrap());
                // clean distance equals the sum of | |F| - amplitude | over the mask
                let spec = extract_spectrum(&marked, 3, region).unwrap();
                let expected: f64 = gather(&spec, key.mask()).unwrap().iter().map(|v| (v.abs() - 45.0).abs()).sum();
                assert!((on - expected).abs() < 1e-6 * expected);
                assert!(on > 0.0);
                on_total += on;
                off_total += off;
            }
            let side = region.side() as f64;
            let (null, clean) = folded_expectations(side / 2f64.sqrt(), 45.0);
            let ratio = off_total / on_total;
            assert!((ratio / (null / clean) - 1.0).abs() < 0.05, "ratio {ratio} oracle {}", null / clean);
            if !center_aware {
                assert!(ratio > 2.0);
            }
        }
    }
}
