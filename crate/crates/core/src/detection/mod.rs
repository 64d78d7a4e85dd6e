//! Key-region distances, verification statistics, identification over key
//! pools, HSQR decoding and normality tests.

mod decode;
mod ks;
mod pool;
mod roc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfwError};
use crate::spectral::Spectrum;
use crate::watermark::{Component, KeyRegionMask};

pub use decode::{bit_accuracy, decode_hsqr, decoded_bits, query_spectrum};
pub use ks::{ks_failure_rate, ks_test, kolmogorov_survival, normal_cdf, KsResult, DEFAULT_KS_ALPHA};
pub use pool::{identify, KeyPool, QueryBundle};
pub use roc::{mann_whitney_auc, roc_points_csv, verify_batch, RocSummary};

/// L1 distance over masked components; smaller means closer to the key.
pub type DistanceScore = f64;

/// Which spectrum components enter the distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectMode {
    #[default]
    Both,
    RealOnly,
}

impl DetectMode {
    pub fn keeps(self, component: Component) -> bool {
        self == DetectMode::Both || component == Component::Re
    }
}

/// Reads the masked components of a centered spectrum, in mask order.
pub fn gather(query: &Spectrum, mask: &KeyRegionMask) -> Result<Vec<f64>> {
    if query.height() != mask.height() || query.width() != mask.width() {
        return Err(SfwError::MaskMismatch(format!(
            "mask is {}x{} but spectrum is {}x{}",
            mask.height(),
            mask.width(),
            query.height(),
            query.width()
        )));
    }
    if !query.is_centered() {
        return Err(SfwError::MaskMismatch("mask coordinates need a centered spectrum".into()));
    }
    Ok(mask
        .entries()
        .iter()
        .map(|e| e.component.pick(query.get(e.row as usize, e.col as usize)))
        .collect())
}

/// Sum of absolute differences with eight independent accumulators.
pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| (x - y).abs())
        .sum();
    for (x, y) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += (x[k] - y[k]).abs();
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// L1 distance between a centered query spectrum and a reference aligned
/// with `mask`, restricted to the components `mode` keeps.
pub fn l1_distance(query: &Spectrum, reference: &[f64], mask: &KeyRegionMask, mode: DetectMode) -> Result<DistanceScore> {
    if reference.len() != mask.len() {
        return Err(SfwError::Size {
            what: "reference pattern",
            expected: mask.len(),
            actual: reference.len(),
        });
    }
    let values = gather(query, mask)?;
    Ok(mask
        .entries()
        .iter()
        .zip(values.iter().zip(reference))
        .filter(|(e, _)| mode.keeps(e.component))
        .map(|(_, (q, r))| (q - r).abs())
        .sum())
}
