//! Key-region masks: which spectrum components carry a watermark.
//!
//! Coordinates are in the *centered* view of the transformed window, with DC
//! at `(side / 2, side / 2)`.

use serde::{Deserialize, Serialize};

use super::key::{KeySpec, WatermarkKey};
use super::EmbedRegion;
use crate::error::{Result, SfwError};
use crate::qr::SIZE as QR_SIZE;
use crate::spectral::mirror_index;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Re,
    Im,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MaskEntry {
    pub row: u16,
    pub col: u16,
    pub component: Component,
}

/// Ordered list of tagged spectrum components on one channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRegionMask {
    channel: usize,
    height: usize,
    width: usize,
    entries: Vec<MaskEntry>,
}

impl KeyRegionMask {
    pub fn new(channel: usize, height: usize, width: usize, entries: Vec<MaskEntry>) -> Result<Self> {
        if let Some(e) = entries
            .iter()
            .find(|e| e.row as usize >= height || e.col as usize >= width)
        {
            return Err(SfwError::MaskMismatch(format!(
                "entry ({}, {}) outside {height}x{width}",
                e.row, e.col
            )));
        }
        Ok(Self {
            channel,
            height,
            width,
            entries,
        })
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entries(&self) -> &[MaskEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct bins touched by the mask, in first-seen order.
    pub fn bins(&self) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.height * self.width];
        let mut out = Vec::new();
        for e in &self.entries {
            let idx = e.row as usize * self.width + e.col as usize;
            if !seen[idx] {
                seen[idx] = true;
                out.push((e.row as usize, e.col as usize));
            }
        }
        out
    }

    pub fn contains_bin(&self, row: usize, col: usize) -> bool {
        self.entries
            .iter()
            .any(|e| e.row as usize == row && e.col as usize == col)
    }

    /// Positions (into `entries`) of real-part components only.
    pub fn real_positions(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.component == Component::Re)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Ring index of a centered bin: Euclidean distance to DC rounded half away
/// from zero. Half-integer distances cannot occur on an integer grid.
pub fn ring_of(row: usize, col: usize, height: usize, width: usize) -> usize {
    let dr = row as f64 - (height / 2) as f64;
    let dc = col as f64 - (width / 2) as f64;
    (dr * dr + dc * dc).sqrt().round() as usize
}

/// Free half-region of a centered spectrum: strictly right of the vertical DC
/// axis, plus the lower half of that axis. Excludes every self-conjugate bin.
pub fn in_free_half(row: usize, col: usize, height: usize, width: usize) -> bool {
    let (ch, cw) = (height / 2, width / 2);
    let own_mirror = mirror_index(row, height, true) == row && mirror_index(col, width, true) == col;
    !own_mirror && (col > cw || (col == cw && row > ch))
}

fn both(out: &mut Vec<MaskEntry>, row: usize, col: usize) {
    for component in [Component::Re, Component::Im] {
        out.push(MaskEntry {
            row: row as u16,
            col: col as u16,
            component,
        });
    }
}

/// Top-left corner and half-width of the HSQR block in a `side` spectrum.
pub(crate) fn hsqr_block(side: usize, cell_px: usize) -> Result<(usize, usize, usize)> {
    let qr_side = QR_SIZE * cell_px;
    let half = qr_side / 2;
    let col0 = side / 2 + 1;
    if qr_side + 2 > side || col0 + half > side {
        return Err(SfwError::MaskMismatch(format!(
            "{qr_side}x{qr_side} QR pixels do not fit a {side}x{side} spectrum half"
        )));
    }
    Ok(((side - qr_side) / 2, col0, half))
}

pub(crate) fn mask_for_spec(spec: &KeySpec, region: EmbedRegion) -> Result<KeyRegionMask> {
    let side = region.side();
    let channel = spec.channel();
    let mut entries = Vec::new();
    match spec {
        KeySpec::TreeRing { radius, .. } | KeySpec::Hstr { radius, .. } => {
            if *radius >= side / 2 {
                return Err(SfwError::MaskMismatch(format!(
                    "radius {radius} overflows a {side}x{side} spectrum"
                )));
            }
            let symmetric = matches!(spec, KeySpec::Hstr { .. });
            if *radius > 0 {
                for r in 0..side {
                    for c in 0..side {
                        if ring_of(r, c, side, side) > *radius {
                            continue;
                        }
                        if symmetric && !in_free_half(r, c, side, side) {
                            continue;
                        }
                        both(&mut entries, r, c);
                    }
                }
            }
        }
        KeySpec::Hsqr { cell_px, .. } => {
            let (row0, col0, half) = hsqr_block(side, *cell_px)?;
            let qr_side = 2 * half;
            for y in 0..qr_side {
                for x in 0..qr_side {
                    let (col, component) = if x < half {
                        (col0 + x, Component::Re)
                    } else {
                        (col0 + x - half, Component::Im)
                    };
                    entries.push(MaskEntry {
                        row: (row0 + y) as u16,
                        col: col as u16,
                        component,
                    });
                }
            }
        }
        KeySpec::Noise { .. } => {
            for r in 0..side {
                for c in 0..side {
                    both(&mut entries, r, c);
                }
            }
        }
    }
    KeyRegionMask::new(channel, side, side, entries)
}

/// Mask of `key` when embedded in `region`.
pub fn key_region_mask(key: &WatermarkKey, region: EmbedRegion) -> Result<KeyRegionMask> {
    mask_for_spec(key.spec(), region)
}

#[cfg(test)]
/// Self-conjugate bins of a `side x side` spectrum in centered coordinates.
pub(crate) fn centered_self_conjugate(side: usize) -> Vec<(usize, usize)> {
    let h = side / 2;
    crate::spectral::self_conjugate_points(side, side)
        .into_iter()
        .map(|(r, c)| ((r + h) % side, (c + h) % side))
        .collect()
}
