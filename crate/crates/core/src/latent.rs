//! Latent tensors and the `SFWLAT1` binary container.
//!
//! Layout: 8-byte magic `SFWLAT1\0`, then `C`, `H`, `W` as little-endian
//! `u32`, four zero bytes completing a 24-byte header, then `C*H*W`
//! little-endian `f64` values, channel-major and row-major within a channel.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SfwError};
use crate::spectral::RealPlane;

pub const LATENT_CHANNELS: usize = 4;
pub const LATENT_SIZE: usize = 64;
pub const MAGIC: &[u8; 8] = b"SFWLAT1\0";
pub const HEADER_LEN: usize = 24;

/// Real `C x H x W` grid standing in for diffusion initial noise or a
/// recovered query latent.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentTensor {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl LatentTensor {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(SfwError::Dimension(format!(
                "latent dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if values.len() != channels * height * width {
            return Err(SfwError::Size {
                what: "latent values",
                expected: channels * height * width,
                actual: values.len(),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            values,
        })
    }

    /// Standard 4x64x64 latent of i.i.d. `N(0, 1)` entries.
    pub fn gaussian(seed: u64) -> Self {
        Self::gaussian_with_shape(LATENT_CHANNELS, LATENT_SIZE, LATENT_SIZE, seed)
    }

    pub fn gaussian_with_shape(channels: usize, height: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..channels * height * width)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Self {
            channels,
            height,
            width,
            values,
        }
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

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SfwError::NonFinite("latent"))
        }
    }

    /// Copies a `size_h x size_w` window of channel `c` starting at `(row0, col0)`.
    pub fn window(&self, c: usize, row0: usize, col0: usize, size_h: usize, size_w: usize) -> Result<RealPlane> {
        if c >= self.channels || row0 + size_h > self.height || col0 + size_w > self.width {
            return Err(SfwError::Dimension(format!(
                "window {size_h}x{size_w} at ({row0},{col0}) of channel {c} exceeds {}x{}x{}",
                self.channels, self.height, self.width
            )));
        }
        let ch = self.channel(c);
        let mut values = Vec::with_capacity(size_h * size_w);
        for r in row0..row0 + size_h {
            values.extend_from_slice(&ch[r * self.width + col0..r * self.width + col0 + size_w]);
        }
        RealPlane::new(size_h, size_w, values)
    }

    /// Writes `plane` back into the window at `(row0, col0)` of channel `c`.
    pub fn write_window(&mut self, c: usize, row0: usize, col0: usize, plane: &RealPlane) -> Result<()> {
        let (h, w) = (plane.height(), plane.width());
        if c >= self.channels || row0 + h > self.height || col0 + w > self.width {
            return Err(SfwError::Dimension("window write out of bounds".into()));
        }
        let width = self.width;
        let ch = self.channel_mut(c);
        for r in 0..h {
            ch[(row0 + r) * width + col0..(row0 + r) * width + col0 + w]
                .copy_from_slice(&plane.values()[r * w..(r + 1) * w]);
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation of all entries.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for d in [self.channels, self.height, self.width] {
            let d = u32::try_from(d).map_err(|_| SfwError::Dimension("dimension exceeds u32".into()))?;
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&[0u8; 4])?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| SfwError::Malformed("truncated latent header".into()))?;
        if &header[..8] != MAGIC {
            return Err(SfwError::Malformed("bad latent magic".into()));
        }
        if header[20..] != [0u8; 4] {
            return Err(SfwError::Malformed("nonzero reserved header bytes".into()));
        }
        let dim = |i: usize| u32::from_le_bytes(header[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
        let (c, h, w) = (dim(0), dim(1), dim(2));
        let count = c
            .checked_mul(h)
            .and_then(|x| x.checked_mul(w))
            .ok_or_else(|| SfwError::Malformed("latent dimensions overflow".into()))?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != count * 8 {
            return Err(SfwError::Malformed(format!(
                "expected {} payload bytes, found {}",
                count * 8,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(c, h, w, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
