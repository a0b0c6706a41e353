use edgebot_core::wire::*;
use edgebot_core::Timestamp;
use proptest::prelude::*;

fn tick() -> impl Strategy<Value = ImuTick> {
    (any::<u32>(), any::<i32>(), any::<i32>()).prop_map(|(dt_us, dd_mm, dtheta_urad)| ImuTick {
        dt_us,
        dd_mm,
        dtheta_urad,
    })
}

fn payload() -> impl Strategy<Value = Payload> {
    prop_oneof![
        proptest::collection::vec(tick(), 1..40).prop_map(Payload::ImuBatch),
        (any::<u8>(), any::<u32>()).prop_map(|(ap_id, range_mm)| Payload::Rtt { ap_id, range_mm }),
        (any::<i32>(), any::<i32>(), any::<u16>()).prop_map(|(v_mmps, omega_urad_ps, duration_ms)| {
            Payload::Command(Command {
                v_mmps,
                omega_urad_ps,
                duration_ms,
            })
        }),
        Just(Payload::Heartbeat),
    ]
}

fn frame() -> impl Strategy<Value = Frame> {
    (any::<u32>(), any::<u64>(), payload()).prop_map(|(seq, t, payload)| Frame {
        seq,
        timestamp: Timestamp(t),
        payload,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn decode_inverts_encode(f in frame()) {
        let b = encode_frame(&f).unwrap();
        prop_assert_eq!(b.len(), f.encoded_len());
        prop_assert_eq!(decode_frame(&b).unwrap(), f);
    }

    #[test]
    fn single_bit_errors_are_caught(f in frame(), bit in any::<usize>()) {
        let mut b = encode_frame(&f).unwrap();
        let bit = bit % (b.len() * 8);
        b[bit / 8] ^= 1 << (bit % 8);
        let r = decode_frame(&b);
        prop_assert!(matches!(r, Err(WireError::CorruptFrame { .. })), "{:?}", r);
    }

    #[test]
    fn garbage_gives_typed_errors(b in proptest::collection::vec(any::<u8>(), 0..200)) {
        // Must not panic; any outcome other than a crash is acceptable.
        let _ = decode_frame(&b);
        let _ = FrameReader::new(&b[..]).take(50).count();
    }

    #[test]
    fn prefixes_are_truncated(f in frame(), cut in any::<usize>()) {
        let b = encode_frame(&f).unwrap();
        let cut = cut % b.len();
        let r = decode_frame(&b[..cut]);
        prop_assert!(matches!(r, Err(WireError::Truncated { .. })), "cut {} of {}: {:?}", cut, b.len(), r);
    }
}

#[test]
fn stream_of_mixed_frames() {
    let frames: Vec<Frame> = (0..200u32)
        .map(|k| Frame {
            seq: k,
            timestamp: Timestamp(k as u64 * 10_000),
            payload: match k % 4 {
                0 => Payload::Heartbeat,
                1 => Payload::Rtt {
                    ap_id: (k % 7) as u8,
                    range_mm: k * 13,
                },
                2 => Payload::Command(Command::from_velocity(0.5, -0.25, 500)),
                _ => Payload::ImuBatch(vec![
                    ImuTick {
                        dt_us: 10_000,
                        dd_mm: 10,
                        dtheta_urad: -5
                    };
                    (k % 30 + 1) as usize
                ]),
            },
        })
        .collect();
    let mut bytes = Vec::new();
    for f in &frames {
        write_frame(&mut bytes, f).unwrap();
    }
    let back: Result<Vec<Frame>, _> = FrameReader::new(&bytes[..]).collect();
    assert_eq!(back.unwrap(), frames);
}
