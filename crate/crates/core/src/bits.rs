//! Bit strings used for labels, codewords and messages.
//!
//! Everything is most-significant-bit first so that hex dumps read the same
//! way the strings are written out by hand.

use bitvec::prelude::*;

pub type Bits = BitVec<u8, Msb0>;
pub type BitStr = BitSlice<u8, Msb0>;

/// Number of bits needed to write any value in `0..=max`.
pub fn width_for(max: u64) -> usize {
    (u64::BITS - max.leading_zeros()) as usize
}

/// `⌈log2(x)⌉` for `x ≥ 1`.
pub fn ceil_log2(x: u64) -> usize {
    assert!(x >= 1, "ceil_log2 of zero");
    if x == 1 {
        0
    } else {
        width_for(x - 1)
    }
}

pub fn push_uint(bits: &mut Bits, value: u64, width: usize) {
    debug_assert!(width == 64 || value < (1u64 << width), "{value} does not fit in {width} bits");
    for i in (0..width).rev() {
        bits.push((value >> i) & 1 == 1);
    }
}

pub fn read_uint(bits: &BitStr, offset: usize, width: usize) -> Option<u64> {
    let slice = bits.get(offset..offset + width)?;
    Some(slice.iter().fold(0u64, |acc, b| (acc << 1) | u64::from(*b)))
}

pub fn from_str01(s: &str) -> Option<Bits> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn to_str01(bits: &BitStr) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

/// Hex of the bit string, zero-padded at the end to a whole byte.
pub fn to_hex(bits: &BitStr) -> String {
    let mut padded = bits.to_bitvec();
    while !padded.len().is_multiple_of(8) {
        padded.push(false);
    }
    padded.as_raw_slice().iter().map(|b| format!("{b:02x}")).collect()
}

/// Inverse of [`to_hex`] given the original bit length.
pub fn from_hex(hex: &str, len: usize) -> Option<Bits> {
    if !hex.len().is_multiple_of(2) || hex.len() * 4 < len || hex.len() / 2 != len.div_ceil(8) {
        return None;
    }
    let bytes: Option<Vec<u8>> =
        (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(hex.get(i..i + 2)?, 16).ok()).collect();
    let mut bits = Bits::from_vec(bytes?);
    if bits[len..].any() {
        return None;
    }
    bits.truncate(len);
    Some(bits)
}

/// Length-prefixed serialization: a 32-bit big-endian bit count followed by
/// the bits, padded with zeros to a byte boundary at the very end.
pub fn serialize_prefixed(bits: &BitStr) -> Vec<u8> {
    let mut out = Bits::new();
    push_uint(&mut out, bits.len() as u64, 32);
    out.extend_from_bitslice(bits);
    out.into_vec()
}

pub fn deserialize_prefixed(bytes: &[u8]) -> Option<Bits> {
    let all = BitStr::from_slice(bytes);
    let len = read_uint(all, 0, 32)? as usize;
    let body = all.get(32..32 + len)?;
    if (32 + len).div_ceil(8) != bytes.len() || all[32 + len..].any() {
        return None;
    }
    Some(body.to_bitvec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(11), 4);
        assert_eq!(ceil_log2(1001), 10);
        assert_eq!(width_for(0), 0);
        assert_eq!(width_for(3), 2);
        assert_eq!(width_for(4), 3);
    }

    #[test]
    fn uint_fields() {
        let mut b = Bits::new();
        push_uint(&mut b, 1, 1);
        push_uint(&mut b, 3, 3);
        assert_eq!(to_str01(&b), "1011");
        assert_eq!(read_uint(&b, 1, 3), Some(3));
        assert_eq!(read_uint(&b, 2, 3), None);
    }

    #[test]
    fn hex_is_msb_first() {
        let b = from_str01("1010").unwrap();
        assert_eq!(to_hex(&b), "a0");
        assert_eq!(from_hex("a0", 4).unwrap(), b);
        assert!(from_hex("a8", 4).is_none());
        assert_eq!(to_hex(&Bits::new()), "");
    }

    proptest! {
        #[test]
        fn prefixed_roundtrip(v in proptest::collection::vec(any::<bool>(), 0..200)) {
            let bits: Bits = v.iter().copied().collect();
            let bytes = serialize_prefixed(&bits);
            prop_assert_eq!(deserialize_prefixed(&bytes), Some(bits.clone()));
            prop_assert_eq!(from_hex(&to_hex(&bits), bits.len()), Some(bits));
        }
    }
}
