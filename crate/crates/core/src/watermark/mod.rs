//! Watermark keys, key-region masks, embedding and reference patterns.

mod embed;
mod key;
mod mask;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfwError};
use crate::latent::LATENT_SIZE;

pub use embed::{embed, embed_keys, embed_with_report, extract_spectrum, EmbedReport};
pub use key::{make_key, reference_pattern, KeyDocument, KeyKind, KeySpec, WatermarkKey};
pub use mask::{key_region_mask, Component, KeyRegionMask, MaskEntry};

/// Side of the central window used by center-aware embedding.
pub const CENTER_SIZE: usize = 44;
pub const DEFAULT_CHANNEL: usize = 3;
pub const NOISE_CHANNEL: usize = 0;
pub const DEFAULT_RADIUS: usize = 14;
pub const DEFAULT_CELL_PX: usize = 2;
/// Roughly the per-component standard deviation `sqrt(64^2 / 2)` of the DFT
/// of a 64x64 standard normal plane.
pub const DEFAULT_AMPLITUDE: f64 = 45.0;
pub const DEFAULT_MASK_ID: u8 = 0;
/// Version tag written into serialized keys; bump when mask geometry changes.
pub const MASK_VERSION: &str = "sfw-mask-v1";

/// Where in the 64x64 plane the transform is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedRegion {
    FullFrame,
    /// Central 44x44 window, rows/cols 10..=53 of a 64-plane.
    CenterAware,
}

/// Spatial window `(row0, col0, side)` covered by a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl EmbedRegion {
    pub fn from_center_aware(center_aware: bool) -> Self {
        if center_aware {
            EmbedRegion::CenterAware
        } else {
            EmbedRegion::FullFrame
        }
    }

    pub fn is_center_aware(self) -> bool {
        self == EmbedRegion::CenterAware
    }

    /// Side of the transformed window on the standard latent.
    pub fn side(self) -> usize {
        match self {
            EmbedRegion::FullFrame => LATENT_SIZE,
            EmbedRegion::CenterAware => CENTER_SIZE,
        }
    }

    pub fn window(self, height: usize, width: usize) -> Result<Window> {
        match self {
            EmbedRegion::FullFrame => Ok(Window {
                row0: 0,
                col0: 0,
                height,
                width,
            }),
            EmbedRegion::CenterAware => {
                if height < CENTER_SIZE || width < CENTER_SIZE {
                    return Err(SfwError::Dimension(format!(
                        "center-aware window needs at least {CENTER_SIZE}x{CENTER_SIZE}, got {height}x{width}"
                    )));
                }
                Ok(Window {
                    row0: (height - CENTER_SIZE) / 2,
                    col0: (width - CENTER_SIZE) / 2,
                    height: CENTER_SIZE,
                    width: CENTER_SIZE,
                })
            }
        }
    }
}
