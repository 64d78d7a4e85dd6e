//! `sfw`: command-line front end for keys, latents, attacks, detection and
//! experiments. Results go to stdout as JSON; failures go to stderr as
//! `{"error": kind, "message": text}` with a nonzero exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sfw_core::channel::{channel_roundtrip, AttackSpec, ChannelConfig, DEFAULT_INVERSION_NOISE_SIGMA};
use sfw_core::detection::{
    bit_accuracy, decode_hsqr, decoded_bits, ks_failure_rate, ks_test, query_spectrum, verify_batch, DetectMode,
    KeyPool, DEFAULT_KS_ALPHA,
};
use sfw_core::experiment::{run_bench, run_experiment, write_outputs, BenchOptions, ExperimentConfig};
use sfw_core::qr::Payload72;
use sfw_core::seed::{derive, stream};
use sfw_core::watermark::{
    embed_keys, make_key, KeyKind, KeySpec, WatermarkKey, DEFAULT_AMPLITUDE, DEFAULT_CELL_PX, DEFAULT_CHANNEL,
    DEFAULT_MASK_ID, DEFAULT_RADIUS, NOISE_CHANNEL,
};
use sfw_core::{LatentTensor, Result, SfwError};

#[derive(Parser)]
#[command(name = "sfw", version, about = "Hermitian-symmetric Fourier watermarking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key document.
    Keygen(KeygenArgs),
    /// Embed one or more keys into a latent.
    Embed(EmbedArgs),
    /// Decode the HSQR payload, or report the ring-key distance.
    Extract(ExtractArgs),
    /// Pass a latent through the surrogate channel with one attack.
    Attack(AttackArgs),
    /// L1 key-region distance of one latent to one key.
    Detect(DetectArgs),
    /// ROC summary from watermarked and clean latent files.
    Verify(VerifyArgs),
    /// Identify which key of an experiment's pool a latent carries.
    Identify(IdentifyArgs),
    /// Kolmogorov-Smirnov normality test of latent files.
    Gaussianity(GaussianityArgs),
    /// Run one experiment from a JSON config.
    Run(RunArgs),
    /// Ablation, crop and capacity sweeps.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KeyMethod {
    TreeRing,
    Hstr,
    Hsqr,
    Noise,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Both,
    RealOnly,
}

impl From<Mode> for DetectMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Both => DetectMode::Both,
            Mode::RealOnly => DetectMode::RealOnly,
        }
    }
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long, value_enum)]
    method: KeyMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 18 hex digits; random from the seed when absent.
    #[arg(long)]
    payload: Option<String>,
    #[arg(long)]
    channel: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: usize,
    #[arg(long, default_value_t = DEFAULT_CELL_PX)]
    cell_px: usize,
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE)]
    amplitude: f64,
    #[arg(long, default_value_t = DEFAULT_MASK_ID)]
    mask_id: u8,
    /// Use the whole 64x64 plane instead of the central window.
    #[arg(long)]
    full_frame: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    /// Key documents, applied in order.
    #[arg(long = "key", required = true)]
    keys: Vec<PathBuf>,
    /// Input latent; a fresh N(0, 1) latent from --seed when absent.
    #[arg(long)]
    latent: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    latent: PathBuf,
    #[arg(long)]
    key: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    latent: PathBuf,
    /// Attack as JSON, e.g. '{"kind":"jpeg","quality":25}'.
    #[arg(long)]
    attack: String,
    #[arg(long, default_value_t = DEFAULT_INVERSION_NOISE_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    latent: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    noise_key: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    mode: Mode,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    noise_key: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    mode: Mode,
    /// Latents expected to carry the key.
    #[arg(long, num_args = 1.., required = true)]
    pos: Vec<PathBuf>,
    /// Latents expected to be clean.
    #[arg(long, num_args = 1.., required = true)]
    neg: Vec<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    latent: PathBuf,
    /// Experiment config describing the key pool.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GaussianityArgs {
    #[arg(required = true)]
    latents: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_KS_ALPHA)]
    alpha: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    roc_svg: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = sfw_core::experiment::DEFAULT_N_SAMPLES)]
    n_samples: usize,
    #[arg(long, default_value_t = sfw_core::experiment::DEFAULT_POOL_SIZE)]
    pool_size: usize,
    #[arg(long)]
    roc_svg: bool,
}

fn read_key(path: &Path) -> Result<WatermarkKey> {
    WatermarkKey::from_json(&fs::read_to_string(path)?)
}

fn print(v: Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("json value serializes"));
}

fn single_key_pool(key: &Path, noise: Option<&PathBuf>, mode: Mode) -> Result<KeyPool> {
    let key = read_key(key)?;
    let noise = noise.map(|p| read_key(p)).transpose()?;
    KeyPool::new(&[key], noise.as_ref(), mode.into())
}

fn keygen(a: KeygenArgs) -> Result<()> {
    let center_aware = !a.full_frame;
    let channel = a.channel.unwrap_or(match a.method {
        KeyMethod::Noise => NOISE_CHANNEL,
        _ => DEFAULT_CHANNEL,
    });
    let spec = match a.method {
        KeyMethod::TreeRing => KeySpec::TreeRing {
            channel,
            radius: a.radius,
            center_aware,
        },
        KeyMethod::Hstr => KeySpec::Hstr {
            channel,
            radius: a.radius,
            center_aware,
        },
        KeyMethod::Hsqr => {
            let payload = match &a.payload {
                Some(hex) => Payload72::from_hex(hex)?,
                None => {
                    let bytes = derive(a.seed, &[stream::POOL]).to_le_bytes();
                    let extra = derive(a.seed, &[stream::POOL, 1]).to_le_bytes()[0];
                    let mut p = [0u8; 9];
                    p[..8].copy_from_slice(&bytes);
                    p[8] = extra;
                    Payload72::from_bytes(p)
                }
            };
            KeySpec::Hsqr {
                channel,
                payload,
                cell_px: a.cell_px,
                amplitude: a.amplitude,
                center_aware,
                mask_id: a.mask_id,
            }
        }
        KeyMethod::Noise => KeySpec::Noise { channel, center_aware },
    };
    let key = make_key(spec, a.seed)?;
    let text = key.to_json() + "\n";
    match a.out {
        Some(p) => {
            fs::write(&p, text)?;
            print(json!({ "out": p, "kind": key.kind() }));
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<()> {
    let keys = a.keys.iter().map(|p| read_key(p)).collect::<Result<Vec<_>>>()?;
    let latent = match &a.latent {
        Some(p) => LatentTensor::load(p)?,
        None => LatentTensor::gaussian(a.seed),
    };
    let refs: Vec<&WatermarkKey> = keys.iter().collect();
    embed_keys(&latent, &refs)?.save(&a.out)?;
    print(json!({ "out": a.out, "keys": keys.len() }));
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let key = read_key(&a.key)?;
    let latent = LatentTensor::load(&a.latent)?;
    if key.kind() == KeyKind::Hsqr {
        let q = query_spectrum(&latent, &key)?;
        let truth = key.payload().expect("hsqr key");
        match decode_hsqr(&q, &key) {
            Ok((payload, corrected)) => print(json!({
                "decoded": true,
                "payload": payload.to_hex(),
                "corrected": corrected,
                "bit_accuracy": bit_accuracy(&payload, truth),
            })),
            Err(e) => {
                let raw = decoded_bits(&q, &key)?;
                print(json!({
                    "decoded": false,
                    "reason": e.to_string(),
                    "raw_payload": raw.to_hex(),
                    "bit_accuracy": bit_accuracy(&raw, truth),
                }))
            }
        }
    } else {
        let pool = KeyPool::new(std::slice::from_ref(&key), None, DetectMode::Both)?;
        print(json!({ "kind": key.kind(), "distance": pool.distance(0, &pool.query(&latent)?) }));
    }
    Ok(())
}

fn attack(a: AttackArgs) -> Result<()> {
    let spec: AttackSpec = serde_json::from_str(&a.attack)?;
    let cfg = ChannelConfig {
        inversion_noise_sigma: a.sigma,
        seed: a.seed,
    };
    channel_roundtrip(&LatentTensor::load(&a.latent)?, &spec, &cfg)?.save(&a.out)?;
    print(json!({ "out": a.out, "attack": spec.label() }));
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let pool = single_key_pool(&a.key, a.noise_key.as_ref(), a.mode)?;
    let q = pool.query(&LatentTensor::load(&a.latent)?)?;
    print(json!({ "distance": pool.distance(0, &q) }));
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let pool = single_key_pool(&a.key, a.noise_key.as_ref(), a.mode)?;
    let score = |paths: &[PathBuf]| -> Result<Vec<f64>> {
        paths
            .iter()
            .map(|p| Ok(pool.distance(0, &pool.query(&LatentTensor::load(p)?)?)))
            .collect()
    };
    let roc = verify_batch(&score(&a.pos)?, &score(&a.neg)?)?;
    print(serde_json::to_value(roc)?);
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(path)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn identify(a: IdentifyArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let noise = if cfg.uses_noise_key() {
        Some(make_key(cfg.noise_template(), derive(cfg.seed, &[stream::NOISE_KEY]))?)
    } else {
        None
    };
    let pool = KeyPool::generate(&cfg.key_template(), cfg.pool_size, cfg.seed, noise.as_ref(), cfg.detect())?;
    let (index, distance) = pool.identify(&pool.query(&LatentTensor::load(&a.latent)?)?);
    print(json!({ "index": index, "distance": distance, "pool_size": pool.len() }));
    Ok(())
}

fn gaussianity(a: GaussianityArgs) -> Result<()> {
    let latents = a.latents.iter().map(|p| LatentTensor::load(p)).collect::<Result<Vec<_>>>()?;
    let per_file = a
        .latents
        .iter()
        .zip(&latents)
        .map(|(p, l)| {
            let r = ks_test(l.values())?;
            Ok(json!({ "path": p, "statistic": r.statistic, "p_value": r.p_value, "std": l.std_dev() }))
        })
        .collect::<Result<Vec<_>>>()?;
    print(json!({
        "alpha": a.alpha,
        "failure_rate": ks_failure_rate(&latents, a.alpha)?,
        "latents": per_file,
    }));
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let out = a
        .out
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| SfwError::InvalidParameter("no output directory: pass --out or set out_dir".into()))?;
    let results = run_experiment(&cfg, a.threads)?;
    let written = write_outputs(std::slice::from_ref(&results), &out, a.roc_svg || cfg.roc_svg)?;
    let rows: Vec<Value> = results
        .attacks
        .iter()
        .map(|r| {
            json!({
                "attack": r.attack.label(),
                "tpr_at_1pct_fpr": r.roc.tpr_at_1pct_fpr,
                "auc": r.roc.auc,
                "ident_acc": r.ident_acc,
                "bit_acc": r.bit_acc,
            })
        })
        .collect();
    print(json!({ "method": results.method_label, "results": rows, "files": written }));
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let opts = BenchOptions {
        n_samples: a.n_samples,
        pool_size: a.pool_size,
        seed: a.seed,
        threads: a.threads,
        ..Default::default()
    };
    let report = run_bench(&opts)?;
    let written = report.write(&a.out, a.roc_svg)?;
    let ablation: Vec<Value> = report
        .ablation
        .iter()
        .map(|r| json!({ "case": r.case.name, "method": r.results.method_label, "mean_ident_acc": r.mean_ident_acc }))
        .collect();
    print(json!({ "ablation": ablation, "files": written }));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Embed(a) => embed(a),
        Command::Extract(a) => extract(a),
        Command::Attack(a) => attack(a),
        Command::Detect(a) => detect(a),
        Command::Verify(a) => verify(a),
        Command::Identify(a) => identify(a),
        Command::Gaussianity(a) => gaussianity(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail("usage", e.to_string().trim(), 2),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
