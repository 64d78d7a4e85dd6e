//! Frequency-domain semantic watermarking for Gaussian latent tensors.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`spectral`]: 2D DFT, centering shifts, Hermitian projection and
//!   spectrum statistics.
//! - [`qr`]: version-1 / level-H QR matrices with Reed-Solomon protection
//!   over GF(256) and cell resampling.
//! - [`watermark`]: Tree-Ring, Hermitian symmetric Tree-Ring (HSTR),
//!   Hermitian symmetric QR (HSQR) and channel-0 noise keys, key-region
//!   masks, embedding and reference patterns.
//! - [`channel`]: a surrogate generation/attack/inversion channel.
//! - [`detection`]: L1 key-region distances, ROC summaries, identification
//!   over key pools, HSQR decoding and Kolmogorov-Smirnov statistics.
//! - [`experiment`]: seeded experiment runner and sweep tables.

pub mod channel;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod latent;
pub mod qr;
pub mod seed;
pub mod spectral;
pub mod watermark;

pub use error::{Result, SfwError};
pub use latent::LatentTensor;
