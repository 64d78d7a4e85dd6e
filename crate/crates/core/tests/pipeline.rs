use proptest::prelude::*;

use sfw_core::channel::{channel_roundtrip, AttackSpec, ChannelConfig};
use sfw_core::detection::{decode_hsqr, identify, query_spectrum, DetectMode, KeyPool};
use sfw_core::latent::{HEADER_LEN, MAGIC};
use sfw_core::qr::Payload72;
use sfw_core::spectral::{dft2_real, idft2, max_mirror_deviation, uncentered};
use sfw_core::watermark::{embed, embed_keys, extract_spectrum, make_key, EmbedRegion, KeySpec};
use sfw_core::LatentTensor;

fn hsqr(payload: Payload72, seed: u64) -> sfw_core::watermark::WatermarkKey {
    make_key(
        KeySpec::Hsqr {
            channel: 3,
            payload,
            cell_px: 2,
            amplitude: 45.0,
            center_aware: true,
            mask_id: 0,
        },
        seed,
    )
    .unwrap()
}

#[test]
fn latent_file_is_bit_exact() {
    let l = LatentTensor::new(1, 1, 2, vec![1.5, -0.25]).unwrap();
    let mut buf = Vec::new();
    l.write_to(&mut buf).unwrap();
    let mut expected = MAGIC.to_vec();
    for d in [1u32, 1, 2] {
        expected.extend(d.to_le_bytes());
    }
    expected.extend([0u8; 4]);
    expected.extend(1.5f64.to_le_bytes());
    expected.extend((-0.25f64).to_le_bytes());
    assert_eq!(buf, expected);
    assert_eq!(buf.len(), HEADER_LEN + 16);
    assert_eq!(LatentTensor::read_from(&buf[..]).unwrap(), l);
}

#[test]
fn hsqr_payload_survives_jpeg_through_the_channel() {
    let p = Payload72::from_hex("a1b2c3d4e5f6071829").unwrap();
    let key = hsqr(p, 1);
    let mut recovered = 0;
    for i in 0..20 {
        let marked = embed(&LatentTensor::gaussian(100 + i), &key).unwrap();
        let cfg = ChannelConfig {
            inversion_noise_sigma: 0.1,
            seed: i,
        };
        let rx = channel_roundtrip(&marked, &AttackSpec::Jpeg { quality: 50 }, &cfg).unwrap();
        if let Ok((got, _)) = decode_hsqr(&query_spectrum(&rx, &key).unwrap(), &key) {
            assert_eq!(got, p);
            recovered += 1;
        }
    }
    assert!(recovered >= 18, "{recovered}/20");
}

#[test]
fn pool_identifies_through_regeneration() {
    let template = KeySpec::Hstr {
        channel: 3,
        radius: 14,
        center_aware: true,
    };
    let noise = make_key(
        KeySpec::Noise {
            channel: 0,
            center_aware: true,
        },
        77,
    )
    .unwrap();
    let pool = KeyPool::generate(&template, 128, 9, Some(&noise), DetectMode::Both).unwrap();
    for (i, index) in [3usize, 64, 127].into_iter().enumerate() {
        let key = pool.key(index).unwrap();
        let marked = embed_keys(&LatentTensor::gaussian(i as u64), &[&key, &noise]).unwrap();
        let rx = channel_roundtrip(
            &marked,
            &AttackSpec::Regen {
                t_star: 60,
                steps_total: 1000,
            },
            &ChannelConfig::default(),
        )
        .unwrap();
        assert_eq!(identify(&rx, &pool).unwrap().0, index);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_embedding_keeps_window_spectrum_hermitian(seed in any::<u64>(), key_seed in any::<u64>(), qr in any::<bool>()) {
        let key = if qr {
            hsqr(Payload72::from_bytes([(key_seed & 0xff) as u8; 9]), key_seed)
        } else {
            make_key(KeySpec::Hstr { channel: 3, radius: 14, center_aware: true }, key_seed).unwrap()
        };
        let marked = embed(&LatentTensor::gaussian(seed), &key).unwrap();
        let spec = uncentered(&extract_spectrum(&marked, 3, EmbedRegion::CenterAware).unwrap());
        let scale = spec.values().iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(max_mirror_deviation(&spec) <= 1e-9 * scale);
        prop_assert!(idft2(&spec).unwrap().max_abs_imag() <= 1e-9 * scale);
    }

    #[test]
    fn embedding_touches_only_the_key_channel_window(seed in any::<u64>(), key_seed in any::<u64>()) {
        let key = make_key(KeySpec::Hstr { channel: 2, radius: 10, center_aware: true }, key_seed).unwrap();
        let clean = LatentTensor::gaussian(seed);
        let marked = embed(&clean, &key).unwrap();
        for c in 0..4 {
            for r in 0..64 {
                for col in 0..64 {
                    let inside = c == 2 && (10..54).contains(&r) && (10..54).contains(&col);
                    let i = (c * 64 + r) * 64 + col;
                    if !inside {
                        prop_assert_eq!(clean.values()[i], marked.values()[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn real_plane_spectrum_is_hermitian(seed in any::<u64>(), side in 2usize..40) {
        let l = LatentTensor::gaussian_with_shape(1, side, side, seed);
        let plane = l.window(0, 0, 0, side, side).unwrap();
        let s = dft2_real(&plane).unwrap();
        let scale = s.values().iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(max_mirror_deviation(&s) <= 1e-12 * scale);
    }
}
