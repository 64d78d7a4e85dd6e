use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::jpeg::compress_channel;
use super::{clamp01, SurrogateImage};
use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;

const CANVAS: f64 = 0.5;

/// One attack with its parameters. Serialized with a `kind` tag, e.g.
/// `{"kind": "jpeg", "quality": 25}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    Identity,
    Brightness {
        factor: f64,
    },
    Contrast {
        factor: f64,
    },
    Jpeg {
        quality: u8,
    },
    Blur {
        radius: usize,
    },
    Noise {
        sigma: f64,
    },
    CropCenter {
        scale: f64,
    },
    CropRandom {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Regen {
        t_star: u32,
        steps_total: u32,
    },
}

fn invalid(msg: String) -> SfwError {
    SfwError::InvalidParameter(msg)
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("crop scale must lie in (0, 1], got {scale}")))
    }
}

impl AttackSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::Identity => "identity",
            AttackSpec::Brightness { .. } => "brightness",
            AttackSpec::Contrast { .. } => "contrast",
            AttackSpec::Jpeg { .. } => "jpeg",
            AttackSpec::Blur { .. } => "blur",
            AttackSpec::Noise { .. } => "noise",
            AttackSpec::CropCenter { .. } => "crop_center",
            AttackSpec::CropRandom { .. } => "crop_random",
            AttackSpec::Regen { .. } => "regen",
        }
    }

    /// Attack name with parameters, e.g. `regen(t_star=60;steps_total=1000)`.
    pub fn label(&self) -> String {
        match *self {
            AttackSpec::Identity => "identity".into(),
            AttackSpec::Brightness { factor } => format!("brightness(factor={factor})"),
            AttackSpec::Contrast { factor } => format!("contrast(factor={factor})"),
            AttackSpec::Jpeg { quality } => format!("jpeg(quality={quality})"),
            AttackSpec::Blur { radius } => format!("blur(radius={radius})"),
            AttackSpec::Noise { sigma } => format!("noise(sigma={sigma})"),
            AttackSpec::CropCenter { scale } => format!("crop_center(scale={scale})"),
            AttackSpec::CropRandom { scale, seed: None } => format!("crop_random(scale={scale})"),
            AttackSpec::CropRandom { scale, seed: Some(s) } => format!("crop_random(scale={scale};seed={s})"),
            AttackSpec::Regen { t_star, steps_total } => format!("regen(t_star={t_star};steps_total={steps_total})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackSpec::Identity => Ok(()),
            AttackSpec::Brightness { factor } | AttackSpec::Contrast { factor } => {
                if factor.is_finite() && factor > 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("{} factor must be > 0, got {factor}", self.name())))
                }
            }
            AttackSpec::Jpeg { quality } => {
                if (1..=100).contains(&quality) {
                    Ok(())
                } else {
                    Err(invalid(format!("jpeg quality must lie in 1..=100, got {quality}")))
                }
            }
            AttackSpec::Blur { .. } => Ok(()),
            AttackSpec::Noise { sigma } => {
                if sigma.is_finite() && sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("noise sigma must be >= 0, got {sigma}")))
                }
            }
            AttackSpec::CropCenter { scale } | AttackSpec::CropRandom { scale, .. } => check_scale(scale),
            AttackSpec::Regen { t_star, steps_total } => {
                if steps_total > 0 && t_star <= steps_total {
                    Ok(())
                } else {
                    Err(invalid(format!(
                        "regen needs 0 <= t_star <= steps_total and steps_total > 0, got {t_star}/{steps_total}"
                    )))
                }
            }
        }
    }
}

/// Normalized Gaussian taps for radius `r` with `sigma = r / 2`.
fn gaussian_kernel(radius: usize) -> Vec<f64> {
    let sigma = radius as f64 / 2.0;
    let taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Mirror-reflect an out-of-range index without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

fn blur_channel(values: &mut [f64], h: usize, w: usize, kernel: &[f64]) {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, t)| t * values[y * w + reflect(x as isize + k as isize - r, w)])
                .sum();
        }
    }
    for y in 0..h {
        for x in 0..w {
            values[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[reflect(y as isize + k as isize - r, h) * w + x])
                .sum();
        }
    }
}

/// Side of the kept window: `round(n * sqrt(scale))`, at least one pixel.
pub(crate) fn crop_side(n: usize, scale: f64) -> usize {
    ((n as f64 * scale.sqrt()).round() as usize).clamp(1, n)
}

fn keep_window(image: &SurrogateImage, row0: usize, col0: usize, side_h: usize, side_w: usize) -> Vec<f64> {
    let (h, w) = (image.height(), image.width());
    let mut out = vec![CANVAS; image.values().len()];
    for c in 0..image.channels() {
        let src = image.channel(c);
        for r in row0..row0 + side_h {
            let base = c * h * w + r * w;
            out[base + col0..base + col0 + side_w].copy_from_slice(&src[r * w + col0..r * w + col0 + side_w]);
        }
    }
    out
}

/// Applies `spec` in image space. Randomized attacks draw from `rng_seed`
/// (or the spec's own seed for random crops when present).
pub fn apply_attack(image: &SurrogateImage, spec: &AttackSpec, rng_seed: u64) -> Result<SurrogateImage> {
    spec.validate()?;
    let (h, w) = (image.height(), image.width());
    let n = h * w;
    let values = image.values();
    let out = match *spec {
        AttackSpec::Identity => return Ok(image.clone()),
        AttackSpec::Brightness { factor } => values.iter().map(|v| v * factor).collect(),
        AttackSpec::Contrast { factor } => {
            let mut out = Vec::with_capacity(values.len());
            for c in 0..image.channels() {
                let ch = image.channel(c);
                let mean = ch.iter().sum::<f64>() / n as f64;
                out.extend(ch.iter().map(|v| (v - mean) * factor + mean));
            }
            out
        }
        AttackSpec::Jpeg { quality } => {
            let mut out = values.to_vec();
            for chunk in out.chunks_mut(n) {
                compress_channel(chunk, h, w, quality);
            }
            out
        }
        AttackSpec::Blur { radius } => {
            if radius == 0 {
                return Ok(image.clone());
            }
            let kernel = gaussian_kernel(radius);
            let mut out = values.to_vec();
            for chunk in out.chunks_mut(n) {
                blur_channel(chunk, h, w, &kernel);
            }
            out
        }
        AttackSpec::Noise { sigma } => {
            if sigma == 0.0 {
                return Ok(image.clone());
            }
            let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            values.iter().map(|v| v + normal.sample(&mut rng)).collect()
        }
        AttackSpec::CropCenter { scale } => {
            let (sh, sw) = (crop_side(h, scale), crop_side(w, scale));
            keep_window(image, (h - sh) / 2, (w - sw) / 2, sh, sw)
        }
        AttackSpec::CropRandom { scale, seed } => {
            let (sh, sw) = (crop_side(h, scale), crop_side(w, scale));
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(rng_seed));
            let row0 = rng.random_range(0..=h - sh);
            let col0 = rng.random_range(0..=w - sw);
            keep_window(image, row0, col0, sh, sw)
        }
        AttackSpec::Regen { .. } => {
            return Err(invalid("regen acts on latents; use regen_surrogate".into()));
        }
    };
    Ok(image.with_values(out.into_iter().map(clamp01).collect()))
}

/// Cosine schedule `alpha(t) = cos^2((t / T) * pi / 2)`.
pub fn regen_alpha(t_star: u32, steps_total: u32) -> f64 {
    let c = (t_star as f64 / steps_total as f64 * FRAC_PI_2).cos();
    c * c
}

/// Forward-noises a latent to step `t_star`: `sqrt(a) z + sqrt(1 - a) eps`.
pub fn regen_surrogate(latent: &LatentTensor, t_star: u32, steps_total: u32, rng_seed: u64) -> Result<LatentTensor> {
    AttackSpec::Regen { t_star, steps_total }.validate()?;
    let alpha = regen_alpha(t_star, steps_total);
    if t_star == 0 {
        return Ok(latent.clone());
    }
    let (a, b) = (alpha.sqrt(), (1.0 - alpha).max(0.0).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let values = latent
        .values()
        .iter()
        .map(|z| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            a * z + b * eps
        })
        .collect();
    LatentTensor::new(latent.channels(), latent.height(), latent.width(), values)
}
