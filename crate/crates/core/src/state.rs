//! Bit-vector state codes.

use std::fmt;

/// A state encoded as a fixed-width bit vector, packed into a `u64`.
/// Variables occupy contiguous fields in declaration order, most
/// significant bit first, storing the offset from the variable's lower
/// bound. Bit 0 is the most significant bit of the code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateCode(pub u64);

impl StateCode {
    /// The value of bit `level` (0 = most significant) under `width` bits.
    #[inline]
    pub fn bit(self, level: u32, width: u32) -> bool {
        debug_assert!(level < width);
        (self.0 >> (width - 1 - level)) & 1 == 1
    }
}

impl fmt::Debug for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_bit_order() {
        // 5 = 101 in three bits: bit 0 (MSB) set, bit 1 clear, bit 2 set.
        let s = StateCode(5);
        assert!(s.bit(0, 3));
        assert!(!s.bit(1, 3));
        assert!(s.bit(2, 3));
    }
}
