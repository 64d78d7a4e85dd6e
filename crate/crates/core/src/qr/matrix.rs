//! Version-1 QR matrix construction and reading at error-correction level H.
//!
//! The 9 payload octets are placed directly as data codewords, without the
//! usual mode indicator and character count, so the full 72-bit capacity is
//! available. Function patterns, masking and format information follow the
//! standard layout.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::rs::{self, CODEWORD_LEN, DATA_LEN};
use crate::error::{Result, SfwError};

pub const SIZE: usize = 21;
pub const PAYLOAD_BITS: usize = 72;

/// Two-bit format code for error-correction level H.
const ECL_H_BITS: u32 = 0b10;
const FORMAT_GENERATOR: u32 = 0x537;
const FORMAT_XOR_MASK: u32 = 0x5412;
/// Format words are BCH(15,5) with minimum distance 7.
const FORMAT_MAX_ERRORS: u32 = 3;

/// Exactly 72 payload bits, most significant bit of each octet first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Payload72 {
    bytes: [u8; DATA_LEN],
}

impl Payload72 {
    pub fn from_bytes(bytes: [u8; DATA_LEN]) -> Self {
        Self { bytes }
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; DATA_LEN] = bytes.try_into().map_err(|_| SfwError::Size {
            what: "payload octets",
            expected: DATA_LEN,
            actual: bytes.len(),
        })?;
        Ok(Self { bytes: arr })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() != PAYLOAD_BITS {
            return Err(SfwError::Size {
                what: "payload bits",
                expected: PAYLOAD_BITS,
                actual: bits.len(),
            });
        }
        let mut bytes = [0u8; DATA_LEN];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        Ok(Self { bytes })
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let raw = hex::decode(s.trim())
            .map_err(|e| SfwError::InvalidParameter(format!("payload hex: {e}")))?;
        Self::from_slice(&raw)
    }

    pub fn bytes(&self) -> &[u8; DATA_LEN] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.bytes)
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..PAYLOAD_BITS).map(|i| self.bit(i)).collect()
    }
}

impl Serialize for Payload72 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Payload72 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Payload72::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// 21x21 module grid; `true` is a dark module.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QrMatrix {
    modules: [[bool; SIZE]; SIZE],
}

impl QrMatrix {
    pub fn from_modules(modules: [[bool; SIZE]; SIZE]) -> Self {
        Self { modules }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.modules[row][col]
    }

    pub fn set(&mut self, row: usize, col: usize, dark: bool) {
        self.modules[row][col] = dark;
    }

    pub fn flip(&mut self, row: usize, col: usize) {
        self.modules[row][col] = !self.modules[row][col];
    }

    pub fn modules(&self) -> &[[bool; SIZE]; SIZE] {
        &self.modules
    }

    /// 21 lines of `0`/`1`, dark = `1`.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(SIZE * (SIZE + 1));
        for row in &self.modules {
            for &m in row {
                s.push(if m { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.len() != SIZE {
            return Err(SfwError::Malformed(format!("expected {SIZE} rows, got {}", lines.len())));
        }
        let mut modules = [[false; SIZE]; SIZE];
        for (r, line) in lines.iter().enumerate() {
            if line.len() != SIZE {
                return Err(SfwError::Malformed(format!("row {r} has {} columns", line.len())));
            }
            for (c, ch) in line.chars().enumerate() {
                modules[r][c] = match ch {
                    '1' => true,
                    '0' => false,
                    other => return Err(SfwError::Malformed(format!("unexpected character {other:?}"))),
                };
            }
        }
        Ok(Self { modules })
    }

    /// Checks finder patterns, separators, timing patterns and the dark module.
    pub fn function_patterns_valid(&self) -> bool {
        let mut expected = [[false; SIZE]; SIZE];
        let mut used = [[false; SIZE]; SIZE];
        draw_function_patterns(&mut expected, &mut used);
        for r in 0..SIZE {
            for c in 0..SIZE {
                if used[r][c] && !is_format_module(r, c) && expected[r][c] != self.modules[r][c] {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Debug for QrMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QrMatrix")?;
        f.write_str(&self.to_text())
    }
}

fn is_format_module(r: usize, c: usize) -> bool {
    (r == 8 && (c <= 8 || c >= SIZE - 8)) || (c == 8 && (r <= 8 || r >= SIZE - 7))
}

fn draw_finder(m: &mut [[bool; SIZE]; SIZE], used: &mut [[bool; SIZE]; SIZE], cy: i32, cx: i32) {
    for dy in -4..=4i32 {
        for dx in -4..=4i32 {
            let (y, x) = (cy + dy, cx + dx);
            if (0..SIZE as i32).contains(&y) && (0..SIZE as i32).contains(&x) {
                let dist = dy.abs().max(dx.abs());
                m[y as usize][x as usize] = dist != 2 && dist != 4;
                used[y as usize][x as usize] = true;
            }
        }
    }
}

/// Draws everything except the format bits, and reserves the format areas.
fn draw_function_patterns(m: &mut [[bool; SIZE]; SIZE], used: &mut [[bool; SIZE]; SIZE]) {
    for i in 0..SIZE {
        m[6][i] = i % 2 == 0;
        used[6][i] = true;
        m[i][6] = i % 2 == 0;
        used[i][6] = true;
    }
    draw_finder(m, used, 3, 3);
    draw_finder(m, used, 3, SIZE as i32 - 4);
    draw_finder(m, used, SIZE as i32 - 4, 3);
    for (r, row) in used.iter_mut().enumerate() {
        for (c, u) in row.iter_mut().enumerate() {
            if is_format_module(r, c) {
                *u = true;
            }
        }
    }
    // dark module at (4V + 9, 8)
    m[SIZE - 8][8] = true;
    used[SIZE - 8][8] = true;
}

fn function_mask() -> [[bool; SIZE]; SIZE] {
    let mut m = [[false; SIZE]; SIZE];
    let mut used = [[false; SIZE]; SIZE];
    draw_function_patterns(&mut m, &mut used);
    used
}

/// Data module coordinates in zigzag placement order (208 modules).
fn data_positions() -> Vec<(usize, usize)> {
    let used = function_mask();
    let mut out = Vec::with_capacity(CODEWORD_LEN * 8);
    let mut right = SIZE as i32 - 1;
    while right >= 1 {
        if right == 6 {
            right = 5;
        }
        let upward = ((right + 1) & 2) == 0;
        for vert in 0..SIZE {
            for j in 0..2 {
                let x = (right - j) as usize;
                let y = if upward { SIZE - 1 - vert } else { vert };
                if !used[y][x] {
                    out.push((y, x));
                }
            }
        }
        right -= 2;
    }
    out
}

/// The eight standard data masks, with `row`/`col` the module coordinates.
pub fn mask_bit(mask_id: u8, row: usize, col: usize) -> bool {
    let (x, y) = (col, row);
    match mask_id {
        0 => (x + y) % 2 == 0,
        1 => y % 2 == 0,
        2 => x % 3 == 0,
        3 => (x + y) % 3 == 0,
        4 => (x / 3 + y / 2) % 2 == 0,
        5 => x * y % 2 + x * y % 3 == 0,
        6 => (x * y % 2 + x * y % 3) % 2 == 0,
        7 => ((x + y) % 2 + x * y % 3) % 2 == 0,
        _ => unreachable!("mask id validated by caller"),
    }
}

/// 15-bit format word (after XOR masking) for an EC-level code and mask.
fn format_word(ecl_bits: u32, mask_id: u8) -> u32 {
    let data = (ecl_bits << 3) | mask_id as u32;
    let mut rem = data;
    for _ in 0..10 {
        rem = (rem << 1) ^ ((rem >> 9) * FORMAT_GENERATOR);
    }
    ((data << 10) | rem) ^ FORMAT_XOR_MASK
}

type FormatCopy = [(usize, usize); 15];

/// Module positions of the two format copies, indexed by format bit 0..15.
fn format_positions() -> (FormatCopy, FormatCopy) {
    let first = std::array::from_fn(|i| match i {
        0..=5 => (i, 8),
        6 => (7, 8),
        7 => (8, 8),
        8 => (8, 7),
        _ => (8, 14 - i),
    });
    let second = std::array::from_fn(|i| if i < 8 { (8, SIZE - 1 - i) } else { (SIZE - 15 + i, 8) });
    (first, second)
}

fn check_mask_id(mask_id: u8) -> Result<()> {
    if mask_id > 7 {
        return Err(SfwError::InvalidParameter(format!("mask id {mask_id} not in 0..=7")));
    }
    Ok(())
}

/// Builds the matrix for `payload` with data mask `mask_id`.
pub fn qr_build(payload: &Payload72, mask_id: u8) -> Result<QrMatrix> {
    check_mask_id(mask_id)?;
    let mut m = [[false; SIZE]; SIZE];
    let mut used = [[false; SIZE]; SIZE];
    draw_function_patterns(&mut m, &mut used);

    let codewords = rs::rs_encode(payload.bytes())?;
    for (i, (r, c)) in data_positions().into_iter().enumerate() {
        let bit = codewords[i / 8] & (0x80 >> (i % 8)) != 0;
        m[r][c] = bit ^ mask_bit(mask_id, r, c);
    }

    let word = format_word(ECL_H_BITS, mask_id);
    let (first, second) = format_positions();
    for i in 0..15 {
        let bit = (word >> i) & 1 != 0;
        m[first[i].0][first[i].1] = bit;
        m[second[i].0][second[i].1] = bit;
    }
    Ok(QrMatrix { modules: m })
}

/// Decodes both format copies by nearest valid word; returns `(ecl, mask)`.
fn read_format(m: &QrMatrix) -> Result<(u32, u8)> {
    let (first, second) = format_positions();
    let read = |pos: &[(usize, usize); 15]| {
        pos.iter()
            .enumerate()
            .fold(0u32, |acc, (i, &(r, c))| acc | ((m.get(r, c) as u32) << i))
    };
    let copies = [read(&first), read(&second)];
    let mut best: Option<(u32, u32, u8)> = None;
    for ecl in 0..4u32 {
        for mask in 0..8u8 {
            let w = format_word(ecl, mask);
            let d = copies.iter().map(|c| (c ^ w).count_ones()).min().unwrap();
            if best.map_or(true, |(bd, _, _)| d < bd) {
                best = Some((d, ecl, mask));
            }
        }
    }
    let (dist, ecl, mask) = best.expect("non-empty search");
    if dist > FORMAT_MAX_ERRORS {
        return Err(SfwError::FormatInfo(format!(
            "nearest format word is {dist} bits away"
        )));
    }
    Ok((ecl, mask))
}

/// Reads the matrix back: format info, unmasking, codeword extraction and
/// Reed-Solomon correction. Returns the payload and the symbol corrections.
pub fn qr_read(m: &QrMatrix) -> Result<(Payload72, usize)> {
    let (ecl, mask_id) = read_format(m)?;
    if ecl != ECL_H_BITS {
        return Err(SfwError::FormatInfo(format!(
            "error-correction level bits {ecl:02b} are not level H"
        )));
    }
    let mut codewords = [0u8; CODEWORD_LEN];
    for (i, (r, c)) in data_positions().into_iter().enumerate() {
        if m.get(r, c) ^ mask_bit(mask_id, r, c) {
            codewords[i / 8] |= 0x80 >> (i % 8);
        }
    }
    let (data, corrected) = rs::rs_decode(&codewords)?;
    Ok((Payload72::from_bytes(data), corrected))
}

/// Systematic data octets read without any correction, for bit-level scoring
/// when Reed-Solomon decoding fails. Uses `mask_id` rather than format info.
pub fn raw_data_octets(m: &QrMatrix, mask_id: u8) -> Result<Payload72> {
    check_mask_id(mask_id)?;
    let mut bytes = [0u8; DATA_LEN];
    for (i, (r, c)) in data_positions().into_iter().take(DATA_LEN * 8).enumerate() {
        if m.get(r, c) ^ mask_bit(mask_id, r, c) {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    Ok(Payload72::from_bytes(bytes))
}

/// Coordinates of all non-function (data) modules.
pub fn data_module_positions() -> Vec<(usize, usize)> {
    data_positions()
}
