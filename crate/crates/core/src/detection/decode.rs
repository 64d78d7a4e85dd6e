use super::gather;
use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;
use crate::qr::{cell_downsample, qr_read, raw_data_octets, CellGrid, Payload72, QrMatrix, PAYLOAD_BITS};
use crate::spectral::Spectrum;
use crate::watermark::{extract_spectrum, KeyKind, WatermarkKey};

/// Centered spectrum of the key's channel and region of `latent`.
pub fn query_spectrum(latent: &LatentTensor, key: &WatermarkKey) -> Result<Spectrum> {
    extract_spectrum(latent, key.channel(), key.region())
}

fn recovered_matrix(query: &Spectrum, key: &WatermarkKey) -> Result<QrMatrix> {
    if key.kind() != KeyKind::Hsqr {
        return Err(SfwError::InvalidParameter(format!(
            "cannot decode a payload from a {} key",
            key.kind().name()
        )));
    }
    let grid = key.cell_grid().expect("hsqr key has a cell grid");
    let pixels = gather(query, key.mask())?;
    Ok(cell_downsample(&CellGrid::new(grid.cell_px(), pixels)?))
}

/// Reads the sign pattern back into a QR matrix and decodes it. Returns the
/// payload and the number of corrected symbols.
pub fn decode_hsqr(query: &Spectrum, key: &WatermarkKey) -> Result<(Payload72, usize)> {
    qr_read(&recovered_matrix(query, key)?)
}

/// Best-effort payload bits: the decoded payload when Reed-Solomon succeeds,
/// otherwise the uncorrected data octets.
pub fn decoded_bits(query: &Spectrum, key: &WatermarkKey) -> Result<Payload72> {
    let matrix = recovered_matrix(query, key)?;
    match qr_read(&matrix) {
        Ok((p, _)) => Ok(p),
        Err(_) => {
            let mask_id = match key.spec() {
                crate::watermark::KeySpec::Hsqr { mask_id, .. } => *mask_id,
                _ => unreachable!("checked above"),
            };
            raw_data_octets(&matrix, mask_id)
        }
    }
}

/// Fraction of the 72 payload bits that agree.
pub fn bit_accuracy(decoded: &Payload72, truth: &Payload72) -> f64 {
    let same: u32 = decoded
        .bytes()
        .iter()
        .zip(truth.bytes())
        .map(|(a, b)| 8 - (a ^ b).count_ones())
        .sum();
    same as f64 / PAYLOAD_BITS as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::{embed, make_key, KeySpec};
    use num_complex::Complex64;

    fn key(payload: Payload72) -> WatermarkKey {
        make_key(
            KeySpec::Hsqr {
                channel: 3,
                payload,
                cell_px: 2,
                amplitude: 45.0,
                center_aware: true,
                mask_id: 0,
            },
            0,
        )
        .unwrap()
    }

    #[test]
    fn clean_roundtrip() {
        let p = Payload72::from_hex("deadbeef0123456789").unwrap();
        let k = key(p);
        let latent = embed(&LatentTensor::gaussian(1), &k).unwrap();
        let q = query_spectrum(&latent, &k).unwrap();
        assert_eq!(decode_hsqr(&q, &k).unwrap(), (p, 0));
        assert_eq!(decoded_bits(&q, &k).unwrap(), p);
    }

    #[test]
    fn negated_query_fails_gracefully() {
        let p = Payload72::from_hex("00112233445566778a").unwrap();
        let k = key(p);
        let latent = embed(&LatentTensor::gaussian(2), &k).unwrap();
        let mut q = query_spectrum(&latent, &k).unwrap();
        for v in q.values_mut() {
            *v = -*v;
        }
        match decode_hsqr(&q, &k) {
            Ok((got, _)) => assert_ne!(got, p),
            Err(e) => assert!(matches!(e.kind(), "format_info" | "unrecoverable")),
        }
        let bits = decoded_bits(&q, &k).unwrap();
        assert!(bit_accuracy(&bits, &p) < 1.0);
    }

    #[test]
    fn non_qr_key_is_rejected() {
        let ring = make_key(
            KeySpec::Hstr {
                channel: 3,
                radius: 14,
                center_aware: true,
            },
            1,
        )
        .unwrap();
        let q = query_spectrum(&LatentTensor::gaussian(1), &ring).unwrap();
        assert!(decode_hsqr(&q, &ring).is_err());
    }

    #[test]
    fn bit_accuracy_counts() {
        let a = Payload72::from_bytes([0xFF; 9]);
        let b = Payload72::from_bytes([0; 9]);
        assert_eq!(bit_accuracy(&a, &a), 1.0);
        assert_eq!(bit_accuracy(&a, &b), 0.0);
        let mut bits = a.bits();
        for i in (0..72).step_by(4) {
            bits[i] = !bits[i];
        }
        assert_eq!(bit_accuracy(&Payload72::from_bits(&bits).unwrap(), &a), 0.75);
    }

    #[test]
    fn corrupted_cells_within_rs_radius_still_decode() {
        use crate::qr::{data_module_positions, CODEWORD_LEN};
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let positions = data_module_positions();
        for _ in 0..40 {
            let mut bytes = [0u8; 9];
            rng.fill(&mut bytes[..]);
            let p = Payload72::from_bytes(bytes);
            let k = key(p);
            let latent = embed(&LatentTensor::gaussian(rng.random()), &k).unwrap();
            let mut q = query_spectrum(&latent, &k).unwrap();
            // flip the sign of every pixel of randomly chosen modules inside 8 codewords
            let mask = k.mask().entries().to_vec();
            for symbol in rand::seq::index::sample(&mut rng, CODEWORD_LEN, 8) {
                let bit = rng.random_range(0..8);
                let (mr, mc) = positions[symbol * 8 + bit];
                for (idx, e) in mask.iter().enumerate() {
                    let (py, px) = (idx / 42, idx % 42);
                    if py / 2 == mr && px / 2 == mc {
                        let v = q.get(e.row as usize, e.col as usize);
                        let nv = match e.component {
                            crate::watermark::Component::Re => Complex64::new(-v.re, v.im),
                            crate::watermark::Component::Im => Complex64::new(v.re, -v.im),
                        };
                        q.set(e.row as usize, e.col as usize, nv);
                    }
                }
            }
            let (got, corrected) = decode_hsqr(&q, &k).unwrap();
            assert_eq!(got, p);
            assert_eq!(corrected, 8);
        }
    }
}
