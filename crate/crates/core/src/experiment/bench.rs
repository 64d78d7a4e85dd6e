use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::output::write_outputs;
use super::{run_experiment, ExperimentConfig, ExperimentResults, Method, DEFAULT_N_SAMPLES, DEFAULT_POOL_SIZE};
use crate::channel::{AttackSpec, DEFAULT_INVERSION_NOISE_SIGMA};
use crate::detection::DetectMode;
use crate::error::{Result, SfwError};
use crate::watermark::EmbedRegion;

pub const CROP_SCALES: [f64; 7] = [0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2];
pub const CAPACITY_POOL_SIZES: [usize; 4] = [64, 512, 2048, 8192];

/// Shared knobs for every bench run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub n_samples: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub inversion_noise_sigma: f64,
    pub capacity_pool_sizes: Vec<usize>,
    pub threads: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_N_SAMPLES,
            pool_size: DEFAULT_POOL_SIZE,
            seed: 0,
            inversion_noise_sigma: DEFAULT_INVERSION_NOISE_SIGMA,
            capacity_pool_sizes: CAPACITY_POOL_SIZES.to_vec(),
            threads: 0,
        }
    }
}

impl BenchOptions {
    fn config(&self, method: Method) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(method);
        c.n_samples = self.n_samples;
        c.pool_size = self.pool_size;
        c.seed = self.seed;
        c.inversion_noise_sigma = self.inversion_noise_sigma;
        c
    }
}

/// Attacks that survive the move to the surrogate channel, at their
/// headline strengths.
pub fn attack_suite() -> Vec<AttackSpec> {
    vec![
        AttackSpec::Identity,
        AttackSpec::Brightness { factor: 2.0 },
        AttackSpec::Contrast { factor: 0.5 },
        AttackSpec::Jpeg { quality: 25 },
        AttackSpec::Blur { radius: 5 },
        AttackSpec::Noise { sigma: 0.05 },
        AttackSpec::Regen {
            t_star: 60,
            steps_total: 1000,
        },
        AttackSpec::CropCenter { scale: 0.5 },
        AttackSpec::CropRandom { scale: 0.7, seed: None },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCase {
    pub name: String,
    pub method: Method,
    pub region: EmbedRegion,
    pub detect: DetectMode,
}

/// Cases A to D: symmetry and center-aware placement switched on one at a
/// time, crossed with scoring on real parts only or on both components.
pub fn ablation_cases() -> Vec<AblationCase> {
    let case = |name: &str, method, region, detect| AblationCase {
        name: name.into(),
        method,
        region,
        detect,
    };
    vec![
        case("A", Method::TreeRing, EmbedRegion::FullFrame, DetectMode::Both),
        case("B", Method::TreeRingRealOnly, EmbedRegion::FullFrame, DetectMode::RealOnly),
        case("C", Method::Hstr, EmbedRegion::CenterAware, DetectMode::RealOnly),
        case("D", Method::Hstr, EmbedRegion::CenterAware, DetectMode::Both),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub case: AblationCase,
    pub mean_ident_acc: f64,
    pub results: ExperimentResults,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropRow {
    pub method: Method,
    pub attack: AttackSpec,
    pub scale: f64,
    pub ident_acc: f64,
    pub tpr_at_1pct_fpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub method: Method,
    pub pool_size: usize,
    pub ident_acc: f64,
    pub tpr_at_1pct_fpr: f64,
}

pub fn ablation(opts: &BenchOptions) -> Result<Vec<AblationRow>> {
    ablation_cases()
        .into_iter()
        .map(|case| {
            let mut c = opts.config(case.method);
            c.region = Some(case.region);
            c.detect = Some(case.detect);
            c.attacks = attack_suite();
            let results = run_experiment(&c, opts.threads)?;
            Ok(AblationRow {
                mean_ident_acc: results.mean_ident_acc(),
                case,
                results,
            })
        })
        .collect()
}

/// Center and random crops at every scale in [`CROP_SCALES`] for
/// center-aware HSTR and HSQR.
pub fn crop_sweep(opts: &BenchOptions) -> Result<(Vec<CropRow>, Vec<ExperimentResults>)> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for method in [Method::Hstr, Method::Hsqr] {
        let mut c = opts.config(method);
        c.attacks = CROP_SCALES
            .iter()
            .map(|&scale| AttackSpec::CropCenter { scale })
            .chain(CROP_SCALES.iter().map(|&scale| AttackSpec::CropRandom { scale, seed: None }))
            .collect();
        let r = run_experiment(&c, opts.threads)?;
        for a in &r.attacks {
            let scale = match a.attack {
                AttackSpec::CropCenter { scale } | AttackSpec::CropRandom { scale, .. } => scale,
                _ => unreachable!("crop attacks only"),
            };
            rows.push(CropRow {
                method,
                attack: a.attack,
                scale,
                ident_acc: a.ident_acc,
                tpr_at_1pct_fpr: a.roc.tpr_at_1pct_fpr,
            });
        }
        runs.push(r);
    }
    Ok((rows, runs))
}

/// Identification accuracy against pool size under Gaussian noise, for HSQR
/// and the Tree-Ring baseline.
pub fn capacity_sweep(opts: &BenchOptions) -> Result<(Vec<CapacityRow>, Vec<ExperimentResults>)> {
    if opts.capacity_pool_sizes.is_empty() {
        return Err(SfwError::Empty("capacity pool sizes"));
    }
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for method in [Method::Hsqr, Method::TreeRing] {
        for &pool_size in &opts.capacity_pool_sizes {
            let mut c = opts.config(method);
            c.pool_size = pool_size;
            c.attacks = vec![AttackSpec::Noise { sigma: 0.05 }];
            let r = run_experiment(&c, opts.threads)?;
            rows.push(CapacityRow {
                method,
                pool_size,
                ident_acc: r.attacks[0].ident_acc,
                tpr_at_1pct_fpr: r.attacks[0].roc.tpr_at_1pct_fpr,
            });
            runs.push(r);
        }
    }
    Ok((rows, runs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub options: BenchOptions,
    pub ablation: Vec<AblationRow>,
    pub crop: Vec<CropRow>,
    pub capacity: Vec<CapacityRow>,
    pub runs: Vec<ExperimentResults>,
}

impl BenchReport {
    pub fn ablation_csv(&self) -> String {
        let mut s = String::from("case,method,mean_ident_acc,n,pool_size\n");
        for r in &self.ablation {
            s.push_str(&format!(
                "{},{},{:.6},{},{}\n",
                r.case.name, r.results.method_label, r.mean_ident_acc, self.options.n_samples, r.results.pool_size
            ));
        }
        s
    }

    pub fn crop_csv(&self) -> String {
        let mut s = String::from("method,attack,scale,ident_acc,tpr_at_1pct_fpr,n\n");
        for r in &self.crop {
            s.push_str(&format!(
                "{},{},{},{:.6},{:.6},{}\n",
                r.method.name(),
                r.attack.name(),
                r.scale,
                r.ident_acc,
                r.tpr_at_1pct_fpr,
                self.options.n_samples
            ));
        }
        s
    }

    pub fn capacity_csv(&self) -> String {
        let mut s = String::from("method,pool_size,ident_acc,tpr_at_1pct_fpr,n\n");
        for r in &self.capacity {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{}\n",
                r.method.name(),
                r.pool_size,
                r.ident_acc,
                r.tpr_at_1pct_fpr,
                self.options.n_samples
            ));
        }
        s
    }

    /// Per-run outputs plus `ablation.csv`, `crop.csv` and `capacity.csv`.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
        let mut written = write_outputs(&self.runs, dir, svg)?;
        for (name, text) in [
            ("ablation.csv", self.ablation_csv()),
            ("crop.csv", self.crop_csv()),
            ("capacity.csv", self.capacity_csv()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Ablation, crop sweep and capacity sweep in one go.
pub fn run_bench(opts: &BenchOptions) -> Result<BenchReport> {
    let ablation = ablation(opts)?;
    let (crop, crop_runs) = crop_sweep(opts)?;
    let (capacity, capacity_runs) = capacity_sweep(opts)?;
    let runs = ablation
        .iter()
        .map(|r| r.results.clone())
        .chain(crop_runs)
        .chain(capacity_runs)
        .collect();
    Ok(BenchReport {
        options: opts.clone(),
        ablation,
        crop,
        capacity,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_distinct_and_valid() {
        let cases = ablation_cases();
        assert_eq!(cases.len(), 4);
        for c in &cases {
            let mut cfg = ExperimentConfig::new(c.method);
            cfg.region = Some(c.region);
            cfg.detect = Some(c.detect);
            cfg.validate().unwrap();
        }
        assert_eq!(attack_suite().len(), 9);
        for a in attack_suite() {
            a.validate().unwrap();
        }
    }

    #[test]
    fn tiny_bench_produces_every_table() {
        let opts = BenchOptions {
            n_samples: 2,
            pool_size: 4,
            capacity_pool_sizes: vec![2, 4],
            threads: 1,
            ..Default::default()
        };
        let r = run_bench(&opts).unwrap();
        assert_eq!(r.ablation.len(), 4);
        assert_eq!(r.crop.len(), 2 * 2 * CROP_SCALES.len());
        assert_eq!(r.capacity.len(), 4);
        assert_eq!(r.runs.len(), 4 + 2 + 4);
        assert_eq!(r.ablation_csv().lines().count(), 5);
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(r.write(dir.path(), false).unwrap().len(), 6);
    }
}
