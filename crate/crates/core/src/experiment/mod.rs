//! Seeded experiment runner: embed, attack, verify and identify over a key
//! pool, plus the ablation, crop and capacity sweeps.

mod bench;
mod output;
mod runner;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::{AttackSpec, DEFAULT_INVERSION_NOISE_SIGMA};
use crate::detection::DetectMode;
use crate::error::{Result, SfwError};
use crate::qr::Payload72;
use crate::watermark::{
    EmbedRegion, KeySpec, DEFAULT_AMPLITUDE, DEFAULT_CELL_PX, DEFAULT_CHANNEL, DEFAULT_MASK_ID, DEFAULT_RADIUS,
    NOISE_CHANNEL,
};

pub use bench::{
    ablation, ablation_cases, attack_suite, capacity_sweep, crop_sweep, run_bench, AblationCase, AblationRow, BenchOptions,
    BenchReport, CapacityRow, CropRow, CAPACITY_POOL_SIZES, CROP_SCALES,
};
pub use output::{manifest_json, results_csv, roc_csv, roc_svg, write_outputs, RESULTS_HEADER};
pub use runner::{run_experiment, AttackResult, ExperimentResults};

pub const DEFAULT_N_SAMPLES: usize = 200;
pub const DEFAULT_POOL_SIZE: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TreeRing,
    /// Tree-Ring embedding scored on real parts only.
    TreeRingRealOnly,
    Hstr,
    Hsqr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TreeRing => "tree_ring",
            Method::TreeRingRealOnly => "tree_ring_real_only",
            Method::Hstr => "hstr",
            Method::Hsqr => "hsqr",
        }
    }

    pub fn default_region(self) -> EmbedRegion {
        match self {
            Method::TreeRing | Method::TreeRingRealOnly => EmbedRegion::FullFrame,
            Method::Hstr | Method::Hsqr => EmbedRegion::CenterAware,
        }
    }

    pub fn default_detect(self) -> DetectMode {
        match self {
            Method::TreeRingRealOnly => DetectMode::RealOnly,
            _ => DetectMode::Both,
        }
    }

    pub fn default_noise_key(self) -> bool {
        matches!(self, Method::Hstr | Method::Hsqr)
    }
}

fn default_attacks() -> Vec<AttackSpec> {
    vec![AttackSpec::Identity]
}
fn default_n_samples() -> usize {
    DEFAULT_N_SAMPLES
}
fn default_pool_size() -> usize {
    DEFAULT_POOL_SIZE
}
fn default_sigma() -> f64 {
    DEFAULT_INVERSION_NOISE_SIGMA
}
fn default_radius() -> usize {
    DEFAULT_RADIUS
}
fn default_channel() -> usize {
    DEFAULT_CHANNEL
}
fn default_cell_px() -> usize {
    DEFAULT_CELL_PX
}
fn default_amplitude() -> f64 {
    DEFAULT_AMPLITUDE
}
fn default_mask_id() -> u8 {
    DEFAULT_MASK_ID
}

/// JSON experiment description. Unset optional fields take per-method
/// defaults; [`ExperimentConfig::resolved`] fills them in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<EmbedRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<DetectMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_key: Option<bool>,
    #[serde(default = "default_attacks")]
    pub attacks: Vec<AttackSpec>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "default_sigma")]
    pub inversion_noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_radius")]
    pub radius: usize,
    #[serde(default = "default_channel")]
    pub channel: usize,
    #[serde(default = "default_cell_px")]
    pub cell_px: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_mask_id")]
    pub mask_id: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub roc_svg: bool,
}

impl ExperimentConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            region: None,
            detect: None,
            noise_key: None,
            attacks: default_attacks(),
            n_samples: DEFAULT_N_SAMPLES,
            pool_size: DEFAULT_POOL_SIZE,
            inversion_noise_sigma: DEFAULT_INVERSION_NOISE_SIGMA,
            seed: 0,
            radius: DEFAULT_RADIUS,
            channel: DEFAULT_CHANNEL,
            cell_px: DEFAULT_CELL_PX,
            amplitude: DEFAULT_AMPLITUDE,
            mask_id: DEFAULT_MASK_ID,
            out_dir: None,
            roc_svg: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn region(&self) -> EmbedRegion {
        self.region.unwrap_or_else(|| self.method.default_region())
    }

    pub fn detect(&self) -> DetectMode {
        self.detect.unwrap_or_else(|| self.method.default_detect())
    }

    pub fn uses_noise_key(&self) -> bool {
        self.noise_key.unwrap_or_else(|| self.method.default_noise_key())
    }

    /// Copy with every per-method default made explicit.
    pub fn resolved(&self) -> Self {
        Self {
            region: Some(self.region()),
            detect: Some(self.detect()),
            noise_key: Some(self.uses_noise_key()),
            ..self.clone()
        }
    }

    /// Short unambiguous label, e.g. `hstr:center_aware:both`.
    pub fn method_label(&self) -> String {
        let region = match self.region() {
            EmbedRegion::FullFrame => "full_frame",
            EmbedRegion::CenterAware => "center_aware",
        };
        let detect = match self.detect() {
            DetectMode::Both => "both",
            DetectMode::RealOnly => "real_only",
        };
        format!("{}:{region}:{detect}", self.method.name())
    }

    /// Pattern key template; HSQR payloads are filled per pool entry.
    pub fn key_template(&self) -> KeySpec {
        let center_aware = self.region().is_center_aware();
        match self.method {
            Method::TreeRing | Method::TreeRingRealOnly => KeySpec::TreeRing {
                channel: self.channel,
                radius: self.radius,
                center_aware,
            },
            Method::Hstr => KeySpec::Hstr {
                channel: self.channel,
                radius: self.radius,
                center_aware,
            },
            Method::Hsqr => KeySpec::Hsqr {
                channel: self.channel,
                payload: Payload72::default(),
                cell_px: self.cell_px,
                amplitude: self.amplitude,
                center_aware,
                mask_id: self.mask_id,
            },
        }
    }

    pub fn noise_template(&self) -> KeySpec {
        KeySpec::Noise {
            channel: NOISE_CHANNEL,
            center_aware: self.region().is_center_aware(),
        }
    }

    /// Rejects inconsistent settings before any computation runs.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SfwError::InvalidParameter(m));
        if self.n_samples == 0 {
            return bad("n_samples must be >= 1".into());
        }
        if self.pool_size == 0 {
            return bad("pool_size must be >= 1".into());
        }
        if self.attacks.is_empty() {
            return bad("attack list is empty".into());
        }
        if !self.inversion_noise_sigma.is_finite() || self.inversion_noise_sigma < 0.0 {
            return bad(format!("inversion_noise_sigma must be >= 0, got {}", self.inversion_noise_sigma));
        }
        if self.method == Method::TreeRingRealOnly && self.detect == Some(DetectMode::Both) {
            return bad("tree_ring_real_only cannot use detect = both".into());
        }
        if self.uses_noise_key() && self.channel == NOISE_CHANNEL {
            return bad(format!("pattern channel {NOISE_CHANNEL} collides with the noise key"));
        }
        for a in &self.attacks {
            a.validate()?;
        }
        crate::watermark::make_key(self.key_template(), 0)?;
        Ok(())
    }
}
