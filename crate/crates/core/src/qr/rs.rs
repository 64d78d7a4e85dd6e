//! Systematic Reed-Solomon code for QR version 1, level H: 9 data octets
//! protected by 17 parity octets (26 codewords, corrects up to 8 symbols).
//!
//! Codewords are stored highest-degree coefficient first, matching QR
//! transmission order. The generator has roots `alpha^0 ..= alpha^16`.

use super::gf256::{self, div, exp, inv, mul};
use crate::error::{Result, SfwError};

pub const DATA_LEN: usize = 9;
pub const ECC_LEN: usize = 17;
pub const CODEWORD_LEN: usize = DATA_LEN + ECC_LEN;
/// Correction radius `floor(ECC_LEN / 2)`.
pub const MAX_CORRECTABLE: usize = ECC_LEN / 2;

/// Generator polynomial of degree `degree`, highest-degree first, monic.
pub fn generator(degree: usize) -> Vec<u8> {
    let mut g = vec![1u8];
    for i in 0..degree {
        // multiply by (x - alpha^i)
        let root = exp(i);
        let mut next = vec![0u8; g.len() + 1];
        for (j, &c) in g.iter().enumerate() {
            next[j] ^= c;
            next[j + 1] ^= mul(c, root);
        }
        g = next;
    }
    g
}

fn parity(data: &[u8], gen: &[u8]) -> Vec<u8> {
    let ecc = gen.len() - 1;
    let mut rem = vec![0u8; ecc];
    for &d in data {
        let factor = d ^ rem[0];
        rem.rotate_left(1);
        rem[ecc - 1] = 0;
        for (r, &g) in rem.iter_mut().zip(&gen[1..]) {
            *r ^= mul(g, factor);
        }
    }
    rem
}

/// Encodes 9 data octets into 26 codewords; the first 9 equal the input.
pub fn rs_encode(data: &[u8]) -> Result<[u8; CODEWORD_LEN]> {
    if data.len() != DATA_LEN {
        return Err(SfwError::Size {
            what: "data octets",
            expected: DATA_LEN,
            actual: data.len(),
        });
    }
    let mut out = [0u8; CODEWORD_LEN];
    out[..DATA_LEN].copy_from_slice(data);
    out[DATA_LEN..].copy_from_slice(&parity(data, &generator(ECC_LEN)));
    Ok(out)
}

fn syndromes(received: &[u8]) -> Vec<u8> {
    (0..ECC_LEN)
        .map(|j| gf256::poly_eval_high_first(received, exp(j)))
        .collect()
}

/// Berlekamp-Massey; returns the error locator lowest-degree first.
fn berlekamp_massey(s: &[u8]) -> (Vec<u8>, usize) {
    let mut lambda = vec![1u8];
    let mut prev = vec![1u8];
    let mut len = 0usize;
    let mut gap = 1usize;
    let mut prev_disc = 1u8;
    for n in 0..s.len() {
        let mut d = s[n];
        for i in 1..=len.min(lambda.len() - 1) {
            d ^= mul(lambda[i], s[n - i]);
        }
        if d == 0 {
            gap += 1;
            continue;
        }
        let coef = div(d, prev_disc);
        let snapshot = lambda.clone();
        if lambda.len() < prev.len() + gap {
            lambda.resize(prev.len() + gap, 0);
        }
        for (i, &b) in prev.iter().enumerate() {
            lambda[i + gap] ^= mul(coef, b);
        }
        if 2 * len <= n {
            len = n + 1 - len;
            prev = snapshot;
            prev_disc = d;
            gap = 1;
        } else {
            gap += 1;
        }
    }
    while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
        lambda.pop();
    }
    (lambda, len)
}

/// Decodes 26 codewords. Returns the 9 data octets and the number of symbol
/// corrections applied. More than 8 corrupted symbols yields
/// [`SfwError::Unrecoverable`] whenever the damage is detectable.
pub fn rs_decode(codewords: &[u8]) -> Result<([u8; DATA_LEN], usize)> {
    if codewords.len() != CODEWORD_LEN {
        return Err(SfwError::Size {
            what: "codewords",
            expected: CODEWORD_LEN,
            actual: codewords.len(),
        });
    }
    let mut received = codewords.to_vec();
    let s = syndromes(&received);
    let mut data = [0u8; DATA_LEN];
    if s.iter().all(|&v| v == 0) {
        data.copy_from_slice(&received[..DATA_LEN]);
        return Ok((data, 0));
    }

    let (lambda, len) = berlekamp_massey(&s);
    let degree = lambda.len() - 1;
    if degree != len || degree > MAX_CORRECTABLE {
        return Err(SfwError::Unrecoverable(format!(
            "error locator degree {degree} exceeds correction radius"
        )));
    }

    // Chien search over the 26 valid positions.
    let n = received.len();
    let mut positions = Vec::with_capacity(degree);
    for p in 0..n {
        let power = n - 1 - p;
        let x_inv = exp(255 - power % 255);
        if gf256::poly_eval_low_first(&lambda, x_inv) == 0 {
            positions.push(p);
        }
    }
    if positions.len() != degree {
        return Err(SfwError::Unrecoverable(format!(
            "found {} locator roots for degree {degree}",
            positions.len()
        )));
    }

    // Omega = S * Lambda mod x^ECC_LEN, lowest-degree first.
    let mut omega = vec![0u8; ECC_LEN];
    for (i, &si) in s.iter().enumerate() {
        for (j, &lj) in lambda.iter().enumerate() {
            if i + j < ECC_LEN {
                omega[i + j] ^= mul(si, lj);
            }
        }
    }
    // formal derivative: only odd powers survive in characteristic 2
    let derivative: Vec<u8> = lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();

    for &p in &positions {
        let power = n - 1 - p;
        let x = exp(power);
        let x_inv = inv(x);
        let denom = gf256::poly_eval_low_first(&derivative, x_inv);
        if denom == 0 {
            return Err(SfwError::Unrecoverable("zero Forney denominator".into()));
        }
        let magnitude = mul(x, div(gf256::poly_eval_low_first(&omega, x_inv), denom));
        received[p] ^= magnitude;
    }

    if syndromes(&received).iter().any(|&v| v != 0) {
        return Err(SfwError::Unrecoverable("residual syndromes after correction".into()));
    }
    data.copy_from_slice(&received[..DATA_LEN]);
    Ok((data, positions.len()))
}
