//! Surrogate generation, attack and inversion channel.
//!
//! A latent is "rendered" to an image by the affine map `(x + 4) / 8` clamped
//! to `[0, 1]`, attacked in image space, "inverted" by `8y - 4`, and perturbed
//! by Gaussian inversion noise.

mod attacks;
mod jpeg;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;
use crate::seed::{derive, stream};

pub use attacks::{apply_attack, regen_alpha, regen_surrogate, AttackSpec};

pub const DEFAULT_INVERSION_NOISE_SIGMA: f64 = 0.1;

/// Image-space grid with every value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateImage {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl SurrogateImage {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(SfwError::Size {
                what: "image values",
                expected: channels * height * width,
                actual: values.len(),
            });
        }
        if channels == 0 || height == 0 || width == 0 {
            return Err(SfwError::Dimension("image dimensions must be positive".into()));
        }
        if !values.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(SfwError::InvalidParameter("image values must lie in [0, 1]".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            values,
        })
    }

    /// Constant image, e.g. the 0.5 canvas used by crops.
    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(channels, height, width, vec![value; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[c * n..(c + 1) * n]
    }

    /// Rebuilds an image of the same shape, clamping every value to `[0, 1]`.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            values: values.into_iter().map(clamp01).collect(),
        }
    }
}

pub(crate) fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.5
    } else {
        v.clamp(0.0, 1.0)
    }
}

pub fn render(latent: &LatentTensor) -> SurrogateImage {
    SurrogateImage {
        channels: latent.channels(),
        height: latent.height(),
        width: latent.width(),
        values: latent.values().iter().map(|&x| clamp01((x + 4.0) / 8.0)).collect(),
    }
}

pub fn unrender(image: &SurrogateImage) -> LatentTensor {
    let values = image.values.iter().map(|&y| 8.0 * y - 4.0).collect();
    LatentTensor::new(image.channels, image.height, image.width, values).expect("shape preserved")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Standard deviation of the additive noise modelling inversion error.
    pub inversion_noise_sigma: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            inversion_noise_sigma: DEFAULT_INVERSION_NOISE_SIGMA,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.inversion_noise_sigma.is_finite() || self.inversion_noise_sigma < 0.0 {
            return Err(SfwError::InvalidParameter(format!(
                "inversion_noise_sigma must be finite and >= 0, got {}",
                self.inversion_noise_sigma
            )));
        }
        Ok(())
    }
}

fn add_gaussian(latent: &mut LatentTensor, sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in latent.values_mut() {
        *v += normal.sample(&mut rng);
    }
}

/// Full channel: render, attack, unrender, then inversion noise. The
/// regeneration attack acts on the latent directly.
pub fn channel_roundtrip(latent: &LatentTensor, spec: &AttackSpec, cfg: &ChannelConfig) -> Result<LatentTensor> {
    cfg.validate()?;
    spec.validate()?;
    latent.check_finite()?;
    let attack_seed = derive(cfg.seed, &[stream::ATTACK]);
    let mut out = match *spec {
        AttackSpec::Regen { t_star, steps_total } => regen_surrogate(latent, t_star, steps_total, attack_seed)?,
        _ => unrender(&apply_attack(&render(latent), spec, attack_seed)?),
    };
    add_gaussian(&mut out, cfg.inversion_noise_sigma, derive(cfg.seed, &[stream::INVERSION]));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_endpoints() {
        let l = LatentTensor::new(1, 1, 5, vec![0.0, 4.0, -4.0, 9.0, -9.0]).unwrap();
        assert_eq!(render(&l).values(), &[0.5, 1.0, 0.0, 1.0, 0.0]);
        let back = unrender(&render(&l));
        assert_eq!(&back.values()[..3], &[0.0, 4.0, -4.0]);
    }

    #[test]
    fn roundtrip_inside_clamp_range() {
        let l = LatentTensor::gaussian(1);
        let back = unrender(&render(&l));
        for (a, b) in l.values().iter().zip(back.values()) {
            if a.abs() < 4.0 {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_channel_without_noise_is_exact_up_to_clamp() {
        let l = LatentTensor::gaussian(2);
        let cfg = ChannelConfig {
            inversion_noise_sigma: 0.0,
            seed: 3,
        };
        let out = channel_roundtrip(&l, &AttackSpec::Identity, &cfg).unwrap();
        for (a, b) in l.values().iter().zip(out.values()) {
            assert!((a.clamp(-4.0, 4.0) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_noise_has_the_configured_spread() {
        let l = LatentTensor::gaussian(4);
        let cfg = ChannelConfig {
            inversion_noise_sigma: 0.1,
            seed: 9,
        };
        let out = channel_roundtrip(&l, &AttackSpec::Identity, &cfg).unwrap();
        let d: Vec<f64> = l
            .values()
            .iter()
            .zip(out.values())
            .filter(|(a, _)| a.abs() < 3.5)
            .map(|(a, b)| b - a)
            .collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.005);
        assert!((sd - 0.1).abs() < 0.005, "sd {sd}");
    }

    #[test]
    fn channel_is_deterministic_and_seed_sensitive() {
        let l = LatentTensor::gaussian(5);
        let spec = AttackSpec::Noise { sigma: 0.05 };
        let cfg = ChannelConfig {
            inversion_noise_sigma: 0.1,
            seed: 1,
        };
        let a = channel_roundtrip(&l, &spec, &cfg).unwrap();
        assert_eq!(a, channel_roundtrip(&l, &spec, &cfg).unwrap());
        let other = ChannelConfig { seed: 2, ..cfg };
        assert_ne!(a, channel_roundtrip(&l, &spec, &other).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        let l = LatentTensor::gaussian(5);
        let cfg = ChannelConfig {
            inversion_noise_sigma: -1.0,
            seed: 1,
        };
        assert!(channel_roundtrip(&l, &AttackSpec::Identity, &cfg).is_err());
        let bad = AttackSpec::Brightness { factor: 0.0 };
        assert!(channel_roundtrip(&l, &bad, &ChannelConfig::default()).is_err());
    }

    #[test]
    fn image_constructor_checks_range() {
        assert!(SurrogateImage::new(1, 1, 2, vec![0.0, 1.5]).is_err());
        assert!(SurrogateImage::new(1, 1, 2, vec![0.0]).is_err());
        assert!(SurrogateImage::filled(4, 64, 64, 0.5).is_ok());
    }
}
