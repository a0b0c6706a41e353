const POLY: u32 = 0xEDB8_8320;

const TABLE: [u32; 256] = {
    let mut t = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 { POLY ^ (c >> 1) } else { c >> 1 };
            k += 1;
        }
        t[i] = c;
        i += 1;
    }
    t
};

/// Reflected CRC-32 (IEEE 802.3), init and final XOR `0xFFFFFFFF`.
pub fn crc32(bytes: &[u8]) -> u32 {
    !bytes
        .iter()
        .fold(!0u32, |c, &b| TABLE[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bitwise(bytes: &[u8]) -> u32 {
        let mut c = 0xFFFF_FFFFu32;
        for &b in bytes {
            c ^= b as u32;
            for _ in 0..8 {
                let mask = (c & 1).wrapping_neg();
                c = (c >> 1) ^ (0xEDB8_8320 & mask);
            }
        }
        c ^ 0xFFFF_FFFF
    }

    #[test]
    fn check_values() {
        assert_eq!(crc32(b""), 0);
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(bitwise(b"123456789"), 0xCBF4_3926);
    }

    proptest! {
        #[test]
        fn table_matches_bitwise(v in proptest::collection::vec(any::<u8>(), 0..300)) {
            prop_assert_eq!(crc32(&v), bitwise(&v));
        }

        #[test]
        fn single_bit_flip_changes_crc(v in proptest::collection::vec(any::<u8>(), 1..200), bit in any::<usize>()) {
            let mut w = v.clone();
            let bit = bit % (v.len() * 8);
            w[bit / 8] ^= 1 << (bit % 8);
            prop_assert_ne!(crc32(&v), crc32(&w));
        }
    }
}
