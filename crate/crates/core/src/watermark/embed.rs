use num_complex::Complex64;

use super::key::{reference_pattern, KeyKind, WatermarkKey};
use super::mask::{Component, KeyRegionMask};
use super::EmbedRegion;
use crate::error::{Result, SfwError};
use crate::latent::LatentTensor;
use crate::spectral::{centered, dft2_real, hermitian_project, idft2, uncentered, Spectrum};

/// What the inverse transform threw away when writing a pattern back.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EmbedReport {
    /// Sum of squared imaginary parts of the inverse transform.
    pub discarded_imag_energy: f64,
    pub max_abs_imag: f64,
}

/// Centered spectrum of one channel's `region` window.
pub fn extract_spectrum(latent: &LatentTensor, channel: usize, region: EmbedRegion) -> Result<Spectrum> {
    let w = region.window(latent.height(), latent.width())?;
    let plane = latent.window(channel, w.row0, w.col0, w.height, w.width)?;
    Ok(centered(&dft2_real(&plane)?))
}

fn check_geometry(latent: &LatentTensor, mask: &KeyRegionMask, region: EmbedRegion) -> Result<()> {
    let w = region.window(latent.height(), latent.width())?;
    if w.height != mask.height() || w.width != mask.width() {
        return Err(SfwError::MaskMismatch(format!(
            "mask is {}x{} but the {region:?} window of a {}x{} latent is {}x{}",
            mask.height(),
            mask.width(),
            latent.height(),
            latent.width(),
            w.height,
            w.width
        )));
    }
    if mask.channel() >= latent.channels() {
        return Err(SfwError::MaskMismatch(format!(
            "channel {} missing from a {}-channel latent",
            mask.channel(),
            latent.channels()
        )));
    }
    Ok(())
}

fn write_pattern(spec: &mut Spectrum, key: &WatermarkKey) {
    let mask = key.mask();
    let side = mask.height();
    match key.kind() {
        KeyKind::TreeRing => {
            for (r, c) in mask.bins() {
                let v = key.ring_value_at(r, c, side).expect("bin inside the disk");
                spec.set(r, c, v);
            }
        }
        KeyKind::Hstr => {
            for (r, c) in mask.bins() {
                let v = key.ring_value_at(r, c, side).expect("bin inside the disk");
                let (mr, mc) = spec.mirror(r, c);
                spec.set(r, c, v);
                spec.set(mr, mc, v.conj());
            }
            *spec = hermitian_project(spec);
        }
        KeyKind::Hsqr => {
            let reference = reference_pattern(key);
            for (e, &target) in mask.entries().iter().zip(&reference) {
                let (r, c) = (e.row as usize, e.col as usize);
                let v = spec.get(r, c);
                let signed = |x: f64| x.abs().copysign(target);
                let nv = match e.component {
                    Component::Re => Complex64::new(signed(v.re), v.im),
                    Component::Im => Complex64::new(v.re, signed(v.im)),
                };
                spec.set(r, c, nv);
            }
            for (r, c) in mask.bins() {
                let (mr, mc) = spec.mirror(r, c);
                let v = spec.get(r, c);
                spec.set(mr, mc, v.conj());
            }
            *spec = hermitian_project(spec);
        }
        KeyKind::Noise => {
            let noise = key.noise_spectrum().expect("noise key carries a spectrum");
            spec.values_mut().copy_from_slice(noise.values());
        }
    }
}

/// Writes `key` into a copy of `latent` and reports the discarded imaginary
/// residue of the inverse transform.
pub fn embed_with_report(latent: &LatentTensor, key: &WatermarkKey) -> Result<(LatentTensor, EmbedReport)> {
    latent.check_finite()?;
    let region = key.region();
    check_geometry(latent, key.mask(), region)?;
    let mut out = latent.clone();
    if key.mask().is_empty() {
        return Ok((out, EmbedReport::default()));
    }
    let mut spec = extract_spectrum(latent, key.channel(), region)?;
    write_pattern(&mut spec, key);
    let plane = idft2(&uncentered(&spec))?;
    let report = EmbedReport {
        discarded_imag_energy: plane.values().iter().map(|v| v.im * v.im).sum(),
        max_abs_imag: plane.max_abs_imag(),
    };
    let w = region.window(latent.height(), latent.width())?;
    out.write_window(key.channel(), w.row0, w.col0, &plane.real_part())?;
    out.check_finite()?;
    Ok((out, report))
}

pub fn embed(latent: &LatentTensor, key: &WatermarkKey) -> Result<LatentTensor> {
    Ok(embed_with_report(latent, key)?.0)
}

/// Applies several keys in order, e.g. a pattern key followed by a noise key
/// on another channel.
pub fn embed_keys(latent: &LatentTensor, keys: &[&WatermarkKey]) -> Result<LatentTensor> {
    let mut out = latent.clone();
    for key in keys {
        out = embed(&out, key)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr::Payload72;
    use crate::spectral::is_hermitian;
    use crate::watermark::{make_key, KeySpec};

    fn ring(kind: KeyKind, center_aware: bool) -> WatermarkKey {
        let spec = match kind {
            KeyKind::TreeRing => KeySpec::TreeRing {
                channel: 3,
                radius: 14,
                center_aware,
            },
            _ => KeySpec::Hstr {
                channel: 3,
                radius: 14,
                center_aware,
            },
        };
        make_key(spec, 11).unwrap()
    }

    fn hsqr(payload: Payload72) -> WatermarkKey {
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

    fn masked(latent: &LatentTensor, key: &WatermarkKey) -> Vec<f64> {
        let spec = extract_spectrum(latent, key.channel(), key.region()).unwrap();
        key.mask()
            .entries()
            .iter()
            .map(|e| e.component.pick(spec.get(e.row as usize, e.col as usize)))
            .collect()
    }

    #[test]
    fn hsqr_signs_follow_the_qr_and_magnitudes_survive() {
        let latent = LatentTensor::gaussian(3);
        let key = hsqr(Payload72::from_bytes([0xA5, 0x5A, 0, 0xFF, 1, 2, 3, 4, 5]));
        let before = masked(&latent, &key);
        let (out, report) = embed_with_report(&latent, &key).unwrap();
        assert!(report.max_abs_imag < 1e-9);
        let after = masked(&out, &key);
        let reference = reference_pattern(&key);
        for ((b, a), r) in before.iter().zip(&after).zip(&reference) {
            assert!((a.abs() - b.abs()).abs() < 1e-8);
            assert_eq!(a.signum(), r.signum());
        }
    }

    #[test]
    fn symmetric_keys_leave_a_real_hermitian_window() {
        let latent = LatentTensor::gaussian(4);
        for key in [ring(KeyKind::Hstr, true), ring(KeyKind::Hstr, false), hsqr(Payload72::default())] {
            let (out, report) = embed_with_report(&latent, &key).unwrap();
            assert!(report.max_abs_imag < 1e-9, "{:?}", key.kind());
            let spec = extract_spectrum(&out, 3, key.region()).unwrap();
            assert!(is_hermitian(&spec, 1e-6));
            let reference = reference_pattern(&key);
            if key.kind() == KeyKind::Hstr {
                let got = masked(&out, &key);
                for (g, r) in got.iter().zip(&reference) {
                    assert!((g - r).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn tree_ring_discards_imaginary_energy() {
        let latent = LatentTensor::gaussian(5);
        let key = ring(KeyKind::TreeRing, false);
        let (out, report) = embed_with_report(&latent, &key).unwrap();
        assert!(report.discarded_imag_energy > 1.0);
        let spec = extract_spectrum(&out, 3, EmbedRegion::FullFrame).unwrap();
        // what survives is the Hermitian part of the written pattern
        let side = 64;
        for (r, c) in key.mask().bins() {
            let written = key.ring_value_at(r, c, side).unwrap();
            let (mr, mc) = spec.mirror(r, c);
            let partner = key.ring_value_at(mr, mc, side).unwrap_or(written);
            let expected = (written + partner.conj()) * 0.5;
            assert!((spec.get(r, c) - expected).norm() < 1e-7);
        }
        assert!(is_hermitian(&spec, 1e-6));
    }

    #[test]
    fn tree_ring_keeps_real_part_and_loses_imaginary_on_symmetric_disk() {
        let latent = LatentTensor::gaussian(6);
        let key = ring(KeyKind::TreeRing, false);
        let out = embed(&latent, &key).unwrap();
        let got = masked(&out, &key);
        let reference = reference_pattern(&key);
        for ((g, r), e) in got.iter().zip(&reference).zip(key.mask().entries()) {
            match e.component {
                Component::Re => assert!((g - r).abs() < 1e-7),
                Component::Im => assert!(g.abs() < 1e-7),
            }
        }
    }

    #[test]
    fn other_channels_and_outside_window_untouched() {
        let latent = LatentTensor::gaussian(7);
        let key = ring(KeyKind::Hstr, true);
        let out = embed(&latent, &key).unwrap();
        for c in 0..3 {
            assert_eq!(out.channel(c), latent.channel(c));
        }
        let (a, b) = (out.channel(3), latent.channel(3));
        for r in 0..64 {
            for col in 0..64 {
                let inside = (10..54).contains(&r) && (10..54).contains(&col);
                if !inside {
                    assert_eq!(a[r * 64 + col], b[r * 64 + col]);
                }
            }
        }
        assert_ne!(a, b);
    }

    #[test]
    fn noise_key_replaces_the_window() {
        let latent = LatentTensor::gaussian(8);
        let key = make_key(
            KeySpec::Noise {
                channel: 0,
                center_aware: false,
            },
            42,
        )
        .unwrap();
        let out = embed(&latent, &key).unwrap();
        let expected = crate::spectral::RealPlane::gaussian(64, 64, 1.0, 42).unwrap();
        for (a, b) in out.channel(0).iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(out.channel(3), latent.channel(3));
    }

    #[test]
    fn embedding_is_idempotent_for_hsqr_and_hstr() {
        let latent = LatentTensor::gaussian(9);
        for key in [ring(KeyKind::Hstr, true), hsqr(Payload72::default())] {
            let once = embed(&latent, &key).unwrap();
            let twice = embed(&once, &key).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let key = ring(KeyKind::Hstr, false);
        let small = LatentTensor::gaussian_with_shape(4, 32, 32, 1);
        assert!(matches!(embed(&small, &key), Err(SfwError::MaskMismatch(_))));
        let mut bad = LatentTensor::gaussian(1);
        bad.values_mut()[5] = f64::NAN;
        assert!(matches!(embed(&bad, &key), Err(SfwError::NonFinite(_))));
        let two = LatentTensor::gaussian_with_shape(2, 64, 64, 1);
        assert!(embed(&two, &key).is_err());
    }

    #[test]
    fn distance_to_own_key_drops_after_embedding() {
        let latent = LatentTensor::gaussian(10);
        let key = ring(KeyKind::Hstr, true);
        let reference = reference_pattern(&key);
        let l1 = |l: &LatentTensor| -> f64 {
            masked(l, &key).iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum()
        };
        let out = embed(&latent, &key).unwrap();
        assert!(l1(&out) < 1e-6 * reference.len() as f64);
        assert!(l1(&latent) > 10.0 * reference.len() as f64);
    }
}
