use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mask::{mask_for_spec, ring_of, Component, KeyRegionMask};
use super::{EmbedRegion, MASK_VERSION};
use crate::error::{Result, SfwError};
use crate::latent::LATENT_CHANNELS;
use crate::qr::{cell_upsample, qr_build, CellGrid, Payload72, SIZE as QR_SIZE};
use crate::spectral::{centered, dft2, RealPlane, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyKind {
    /// Ring pattern written without symmetry; the imaginary residue is
    /// discarded after the inverse transform.
    TreeRing,
    /// Ring pattern confined to the free half-region with its conjugate mirror.
    Hstr,
    /// Sign-encoded QR code split over real and imaginary parts.
    Hsqr,
    /// Seeded Gaussian pattern overwriting a whole channel.
    Noise,
}

impl KeyKind {
    pub fn name(self) -> &'static str {
        match self {
            KeyKind::TreeRing => "tree_ring",
            KeyKind::Hstr => "hstr",
            KeyKind::Hsqr => "hsqr",
            KeyKind::Noise => "noise",
        }
    }

    /// Whether the embedding keeps the spectrum Hermitian.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, KeyKind::TreeRing)
    }
}

/// Parameters of a key, without the seeded material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KeySpec {
    TreeRing {
        channel: usize,
        radius: usize,
        center_aware: bool,
    },
    Hstr {
        channel: usize,
        radius: usize,
        center_aware: bool,
    },
    Hsqr {
        channel: usize,
        payload: Payload72,
        cell_px: usize,
        amplitude: f64,
        center_aware: bool,
        mask_id: u8,
    },
    Noise {
        channel: usize,
        center_aware: bool,
    },
}

impl KeySpec {
    pub fn kind(&self) -> KeyKind {
        match self {
            KeySpec::TreeRing { .. } => KeyKind::TreeRing,
            KeySpec::Hstr { .. } => KeyKind::Hstr,
            KeySpec::Hsqr { .. } => KeyKind::Hsqr,
            KeySpec::Noise { .. } => KeyKind::Noise,
        }
    }

    pub fn channel(&self) -> usize {
        match *self {
            KeySpec::TreeRing { channel, .. }
            | KeySpec::Hstr { channel, .. }
            | KeySpec::Hsqr { channel, .. }
            | KeySpec::Noise { channel, .. } => channel,
        }
    }

    pub fn center_aware(&self) -> bool {
        match *self {
            KeySpec::TreeRing { center_aware, .. }
            | KeySpec::Hstr { center_aware, .. }
            | KeySpec::Hsqr { center_aware, .. }
            | KeySpec::Noise { center_aware, .. } => center_aware,
        }
    }

    pub fn region(&self) -> EmbedRegion {
        EmbedRegion::from_center_aware(self.center_aware())
    }

    /// Same geometry, new payload. Non-QR specs are returned unchanged.
    pub fn with_payload(&self, new_payload: Payload72) -> KeySpec {
        let mut s = self.clone();
        if let KeySpec::Hsqr { payload, .. } = &mut s {
            *payload = new_payload;
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Material {
    Rings(Vec<Complex64>),
    Qr(CellGrid),
    Noise(Spectrum),
}

/// A fully materialized key: parameters, seed, derived pattern and mask.
#[derive(Clone, Debug, PartialEq)]
pub struct WatermarkKey {
    spec: KeySpec,
    seed: u64,
    material: Material,
    mask: KeyRegionMask,
}

fn invalid(msg: impl Into<String>) -> SfwError {
    SfwError::InvalidParameter(msg.into())
}

/// Builds a key deterministically from its parameters and seed.
///
/// Ring values are one complex draw per ring radius `1..=radius` from
/// `CN(0, S^2)` where `S` is the side of the transformed window, matching the
/// per-bin statistics of a standard normal plane's spectrum.
pub fn make_key(spec: KeySpec, seed: u64) -> Result<WatermarkKey> {
    let channel = spec.channel();
    if channel >= LATENT_CHANNELS {
        return Err(invalid(format!("channel {channel} not in 0..{LATENT_CHANNELS}")));
    }
    let side = spec.region().side();
    let material = match &spec {
        KeySpec::TreeRing { radius, .. } | KeySpec::Hstr { radius, .. } => {
            if *radius >= side / 2 {
                return Err(invalid(format!(
                    "radius {radius} does not fit a {side}x{side} spectrum"
                )));
            }
            let sigma = ((side * side) as f64 / 2.0).sqrt();
            let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..*radius)
                .map(|_| {
                    let re = normal.sample(&mut rng);
                    let im = normal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect();
            Material::Rings(values)
        }
        KeySpec::Hsqr {
            payload,
            cell_px,
            amplitude,
            mask_id,
            ..
        } => {
            if !(amplitude.is_finite() && *amplitude > 0.0) {
                return Err(invalid(format!("amplitude must be positive, got {amplitude}")));
            }
            if *cell_px == 0 || (QR_SIZE * cell_px) % 2 != 0 {
                return Err(invalid(format!(
                    "cell_px {cell_px} must be positive and give an even QR pixel width"
                )));
            }
            let matrix = qr_build(payload, *mask_id)?;
            Material::Qr(cell_upsample(&matrix, *cell_px)?)
        }
        KeySpec::Noise { .. } => {
            let plane = RealPlane::gaussian(side, side, 1.0, seed)?;
            Material::Noise(centered(&dft2(&plane)?))
        }
    };
    let mask = mask_for_spec(&spec, spec.region())?;
    Ok(WatermarkKey {
        spec,
        seed,
        material,
        mask,
    })
}

impl WatermarkKey {
    pub fn spec(&self) -> &KeySpec {
        &self.spec
    }

    pub fn kind(&self) -> KeyKind {
        self.spec.kind()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel(&self) -> usize {
        self.spec.channel()
    }

    pub fn region(&self) -> EmbedRegion {
        self.spec.region()
    }

    /// Key-region mask in the key's own region.
    pub fn mask(&self) -> &KeyRegionMask {
        &self.mask
    }

    pub fn ring_values(&self) -> Option<&[Complex64]> {
        match &self.material {
            Material::Rings(v) => Some(v),
            _ => None,
        }
    }

    pub fn payload(&self) -> Option<&Payload72> {
        match &self.spec {
            KeySpec::Hsqr { payload, .. } => Some(payload),
            _ => None,
        }
    }

    pub fn amplitude(&self) -> Option<f64> {
        match self.spec {
            KeySpec::Hsqr { amplitude, .. } => Some(amplitude),
            _ => None,
        }
    }

    pub fn cell_grid(&self) -> Option<&CellGrid> {
        match &self.material {
            Material::Qr(g) => Some(g),
            _ => None,
        }
    }

    /// Centered noise spectrum of a [`KeyKind::Noise`] key.
    pub fn noise_spectrum(&self) -> Option<&Spectrum> {
        match &self.material {
            Material::Noise(s) => Some(s),
            _ => None,
        }
    }

    /// Complex value a ring key writes at centered bin `(row, col)`.
    /// The DC bin belongs to the innermost ring.
    pub(crate) fn ring_value_at(&self, row: usize, col: usize, side: usize) -> Option<Complex64> {
        let values = self.ring_values()?;
        let ring = ring_of(row, col, side, side);
        if ring > values.len() || values.is_empty() {
            return None;
        }
        Some(values[ring.max(1) - 1])
    }

    pub fn to_document(&self) -> KeyDocument {
        let mut doc = KeyDocument {
            mask_version: MASK_VERSION.to_string(),
            kind: self.kind(),
            channel: self.channel(),
            seed: self.seed,
            center_aware: self.spec.center_aware(),
            radius: None,
            payload: None,
            amplitude: None,
            cell_px: None,
            mask_id: None,
        };
        match &self.spec {
            KeySpec::TreeRing { radius, .. } | KeySpec::Hstr { radius, .. } => doc.radius = Some(*radius),
            KeySpec::Hsqr {
                payload,
                cell_px,
                amplitude,
                mask_id,
                ..
            } => {
                doc.payload = Some(payload.to_hex());
                doc.cell_px = Some(*cell_px);
                doc.amplitude = Some(*amplitude);
                doc.mask_id = Some(*mask_id);
            }
            KeySpec::Noise { .. } => {}
        }
        doc
    }

    pub fn from_document(doc: &KeyDocument) -> Result<Self> {
        if doc.mask_version != MASK_VERSION {
            return Err(invalid(format!(
                "unsupported mask version {:?} (expected {MASK_VERSION})",
                doc.mask_version
            )));
        }
        let need = |field: &str| invalid(format!("{} key is missing `{field}`", doc.kind.name()));
        let spec = match doc.kind {
            KeyKind::TreeRing => KeySpec::TreeRing {
                channel: doc.channel,
                radius: doc.radius.ok_or_else(|| need("radius"))?,
                center_aware: doc.center_aware,
            },
            KeyKind::Hstr => KeySpec::Hstr {
                channel: doc.channel,
                radius: doc.radius.ok_or_else(|| need("radius"))?,
                center_aware: doc.center_aware,
            },
            KeyKind::Hsqr => KeySpec::Hsqr {
                channel: doc.channel,
                payload: Payload72::from_hex(doc.payload.as_deref().ok_or_else(|| need("payload"))?)?,
                cell_px: doc.cell_px.ok_or_else(|| need("cell_px"))?,
                amplitude: doc.amplitude.ok_or_else(|| need("amplitude"))?,
                center_aware: doc.center_aware,
                mask_id: doc.mask_id.unwrap_or(super::DEFAULT_MASK_ID),
            },
            KeyKind::Noise => KeySpec::Noise {
                channel: doc.channel,
                center_aware: doc.center_aware,
            },
        };
        make_key(spec, doc.seed)
    }

    /// Canonical JSON: fixed field order, absent fields omitted.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("key document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: KeyDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}

/// Serialized form of a key. Seeded material is regenerated on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyDocument {
    pub mask_version: String,
    pub kind: KeyKind,
    pub channel: usize,
    pub seed: u64,
    pub center_aware: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_px: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_id: Option<u8>,
}

/// Expected component values on the key's mask, aligned with its entries.
///
/// HSQR yields `+amplitude` for dark modules and `-amplitude` for light ones;
/// ring keys yield their stored ring values; noise keys their spectrum.
pub fn reference_pattern(key: &WatermarkKey) -> Vec<f64> {
    let mask = key.mask();
    let side = mask.height();
    match &key.material {
        Material::Rings(_) => mask
            .entries()
            .iter()
            .map(|e| {
                let v = key
                    .ring_value_at(e.row as usize, e.col as usize, side)
                    .expect("mask bins lie inside the disk");
                e.component.pick(v)
            })
            .collect(),
        Material::Qr(grid) => {
            let amp = key.amplitude().expect("hsqr key has amplitude");
            grid.pixels().iter().map(|&s| if s >= 0.0 { amp } else { -amp }).collect()
        }
        Material::Noise(spec) => mask
            .entries()
            .iter()
            .map(|e| e.component.pick(spec.get(e.row as usize, e.col as usize)))
            .collect(),
    }
}

impl Component {
    pub fn pick(self, v: Complex64) -> f64 {
        match self {
            Component::Re => v.re,
            Component::Im => v.im,
        }
    }
}
