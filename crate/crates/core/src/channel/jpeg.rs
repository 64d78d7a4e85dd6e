//! Block-DCT quantization standing in for JPEG on single image channels.

use std::f64::consts::PI;
use std::sync::OnceLock;

const BLOCK: usize = 8;

/// Standard JPEG luminance quantization table, row-major.
pub const LUMINANCE_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Luminance table scaled by the usual quality rule: `5000 / q` below 50,
/// `200 - 2q` otherwise, entries clamped to `1..=255`.
pub fn quant_table(quality: u8) -> [f64; 64] {
    let q = quality.clamp(1, 100) as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0.0; 64];
    for (o, &base) in out.iter_mut().zip(&LUMINANCE_TABLE) {
        *o = ((base as u32 * scale + 50) / 100).clamp(1, 255) as f64;
    }
    out
}

/// Orthonormal DCT-II basis `c[u][x]`.
fn basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; BLOCK]; BLOCK];
        for (u, row) in b.iter_mut().enumerate() {
            let a = if u == 0 { (1.0 / BLOCK as f64).sqrt() } else { (2.0 / BLOCK as f64).sqrt() };
            for (x, v) in row.iter_mut().enumerate() {
                *v = a * ((2 * x + 1) as f64 * u as f64 * PI / (2 * BLOCK) as f64).cos();
            }
        }
        b
    })
}

fn dct_block(block: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            tmp[y * BLOCK + u] = (0..BLOCK).map(|x| c[u][x] * block[y * BLOCK + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            out[v * BLOCK + u] = (0..BLOCK).map(|y| c[v][y] * tmp[y * BLOCK + u]).sum();
        }
    }
    out
}

fn idct_block(coef: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for v in 0..BLOCK {
        for x in 0..BLOCK {
            tmp[v * BLOCK + x] = (0..BLOCK).map(|u| c[u][x] * coef[v * BLOCK + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            out[y * BLOCK + x] = (0..BLOCK).map(|v| c[v][y] * tmp[v * BLOCK + x]).sum();
        }
    }
    out
}

/// Compresses one `height x width` channel of `[0, 1]` values in place.
/// Partial edge blocks are padded by edge replication.
pub fn compress_channel(values: &mut [f64], height: usize, width: usize, quality: u8) {
    let table = quant_table(quality);
    let to_byte = |v: f64| (v * 255.0).round().clamp(0.0, 255.0);
    for by in (0..height).step_by(BLOCK) {
        for bx in (0..width).step_by(BLOCK) {
            let mut block = [0.0; 64];
            for y in 0..BLOCK {
                for x in 0..BLOCK {
                    let (r, c) = ((by + y).min(height - 1), (bx + x).min(width - 1));
                    block[y * BLOCK + x] = to_byte(values[r * width + c]) - 128.0;
                }
            }
            let mut coef = dct_block(&block);
            for (k, q) in coef.iter_mut().zip(&table) {
                *k = (*k / q).round() * q;
            }
            let rec = idct_block(&coef);
            for y in 0..BLOCK.min(height - by) {
                for x in 0..BLOCK.min(width - bx) {
                    let byte = (rec[y * BLOCK + x] + 128.0).round().clamp(0.0, 255.0);
                    values[(by + y) * width + bx + x] = byte / 255.0;
                }
            }
        }
    }
}
