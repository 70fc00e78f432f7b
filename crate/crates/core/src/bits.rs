//! Packed bitstrings.
//!
//! Bits are packed most-significant-bit-first within each byte; the unused
//! low bits of a partial final byte are always zero. Every file format and
//! wire frame in this crate shares this packing.

use std::fmt;

/// Growable bit vector with MSB-first byte packing.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Zero-filled bitstring of the given length.
    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0u8; len.div_ceil(8)],
            len,
        }
    }

    /// Interprets `bytes` MSB-first, keeping the first `bit_count` bits.
    /// Pad bits beyond `bit_count` are cleared.
    pub fn from_bytes(bytes: &[u8], bit_count: usize) -> Self {
        assert!(
            bit_count <= bytes.len() * 8,
            "bit_count {} exceeds {} available bits",
            bit_count,
            bytes.len() * 8
        );
        let mut bytes = bytes[..bit_count.div_ceil(8)].to_vec();
        if bit_count % 8 != 0 {
            let keep = bit_count % 8;
            let mask = !0u8 << (8 - keep);
            *bytes.last_mut().unwrap() &= mask;
        }
        Self {
            bytes,
            len: bit_count,
        }
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn from_str01(s: &str) -> Self {
        s.chars()
            .map(|c| match c {
                '0' => false,
                '1' => true,
                other => panic!("invalid bit character {other:?}"),
            })
            .collect()
    }

    /// Uniformly random bitstring.
    pub fn random<R: rand::Rng>(rng: &mut R, len: usize) -> Self {
        let mut bytes = vec![0u8; len.div_ceil(8)];
        rng.fill_bytes(&mut bytes);
        Self::from_bytes(&bytes, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed bytes, MSB-first, final-byte padding zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.bytes[index >> 3] >> (7 - (index & 7)) & 1 == 1
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let idx = self.len;
            self.bytes[idx >> 3] |= 1 << (7 - (idx & 7));
        }
        self.len += 1;
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    /// Copy of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = BitString::with_capacity(len);
        for i in start..start + len {
            out.push(self.get(i));
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Elementwise XOR. Panics if lengths differ.
    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len, "xor of bitstrings of unequal length");
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| a ^ b)
            .collect();
        Self {
            bytes,
            len: self.len,
        }
    }

    /// Elementwise complement.
    pub fn not(&self) -> BitString {
        let mut out = Self {
            bytes: self.bytes.iter().map(|b| !b).collect(),
            len: self.len,
        };
        out.mask_pad();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_string01(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    fn mask_pad(&mut self) {
        if self.len % 8 != 0 {
            let keep = self.len % 8;
            if let Some(last) = self.bytes.last_mut() {
                *last &= !0u8 << (8 - keep);
            }
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = BitString::new();
        for bit in iter {
            out.push(bit);
        }
        out
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitString({})", self.to_string01())
        } else {
            write!(f, "BitString(len={})", self.len)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_packing() {
        let bits = BitString::from_str01("1010101010101010");
        assert_eq!(bits.as_bytes(), &[0xAA, 0xAA]);
        let bits = BitString::from_str01("10110000");
        assert_eq!(bits.as_bytes(), &[0xB0]);
    }

    #[test]
    fn partial_final_byte_pads_with_zeros() {
        let bits = BitString::from_str01("111111111111");
        assert_eq!(bits.len(), 12);
        assert_eq!(bits.as_bytes(), &[0xFF, 0xF0]);
    }

    #[test]
    fn from_bytes_masks_padding() {
        let bits = BitString::from_bytes(&[0xFF, 0xFF], 12);
        assert_eq!(bits.as_bytes(), &[0xFF, 0xF0]);
        assert_eq!(bits.count_ones(), 12);
    }

    #[test]
    fn get_matches_push_order() {
        let bits = BitString::from_str01("0110");
        assert!(!bits.get(0));
        assert!(bits.get(1));
        assert!(bits.get(2));
        assert!(!bits.get(3));
    }

    proptest! {
        #[test]
        fn bytes_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let bs: BitString = bits.iter().copied().collect();
            let rt = BitString::from_bytes(bs.as_bytes(), bs.len());
            prop_assert_eq!(&bs, &rt);
            let collected: Vec<bool> = bs.iter().collect();
            prop_assert_eq!(collected, bits);
        }

        #[test]
        fn xor_involution(bits in proptest::collection::vec(any::<(bool, bool)>(), 1..200)) {
            let a: BitString = bits.iter().map(|(x, _)| *x).collect();
            let b: BitString = bits.iter().map(|(_, y)| *y).collect();
            let x = a.xor(&b);
            prop_assert_eq!(x.xor(&b), a);
        }
    }
}
