//! The 15+1-bit machine word and one's-complement arithmetic.
//!
//! A stored [`Word`] packs fifteen data bits and one odd-parity bit into a
//! `u16`: data in bits 15..1 and parity in bit 0. That is the same layout the
//! rope image and restart dump use on disk, so a word never needs repacking on
//! its way to or from a file.
//!
//! Arithmetic operates on bare 15-bit patterns (`u16` with bit 15 clear). A
//! pattern is a one's-complement signed value: bit 14 is the sign, negation is
//! bitwise NOT, and `0o00000` (+0) and `0o77777` (-0) are distinct patterns
//! with the same numeric value. Overflow is reported alongside the result and
//! never folded into the word.

use std::fmt;

use thiserror::Error;

/// Number of data bits in a word.
pub const DATA_BITS: u32 = 15;
/// Mask selecting the fifteen data bits.
pub const DATA_MASK: u16 = 0o77777;
/// Sign bit of a 15-bit one's-complement pattern.
pub const SIGN_BIT: u16 = 0o40000;
/// Magnitude bits of a 15-bit one's-complement pattern.
pub const MAGNITUDE_MASK: u16 = 0o37777;
/// Positive zero.
pub const POS_ZERO: u16 = 0o00000;
/// Negative zero.
pub const NEG_ZERO: u16 = 0o77777;
/// Positive one.
pub const POS_ONE: u16 = 0o00001;
/// Negative one.
pub const NEG_ONE: u16 = 0o77776;

/// A word whose total count of 1-bits is even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("corrupt word {raw:#08o}: even parity")]
pub struct CorruptWord {
    /// The offending 16-bit stored value.
    pub raw: u16,
}

/// A stored 16-bit word: fifteen data bits plus an odd-parity bit.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word(u16);

impl Word {
    /// +0 with correct parity.
    pub const ZERO: Word = Word(1);

    /// Builds a word from a data pattern, computing its parity bit.
    ///
    /// Bits above the fifteenth are discarded.
    pub const fn new(data: u16) -> Word {
        let data = data & DATA_MASK;
        Word((data << 1) | compute_parity(data))
    }

    /// Reinterprets a stored 16-bit value without validating it.
    pub const fn from_raw(raw: u16) -> Word {
        Word(raw)
    }

    /// Builds a word from explicit parts; the result may be corrupt.
    pub const fn from_parts(data: u16, parity: bool) -> Word {
        Word(((data & DATA_MASK) << 1) | parity as u16)
    }

    pub const fn data(self) -> u16 {
        self.0 >> 1
    }

    pub const fn parity(self) -> bool {
        self.0 & 1 == 1
    }

    /// The stored 16-bit value, parity in bit 0.
    pub const fn raw(self) -> u16 {
        self.0
    }

    pub const fn is_valid(self) -> bool {
        self.0.count_ones() % 2 == 1
    }

    pub fn check(self) -> Result<Word, CorruptWord> {
        check_word(self).map(|()| self)
    }

    /// Returns the word with one stored bit inverted (bit 0 is parity).
    pub const fn with_flipped_bit(self, bit: u32) -> Word {
        Word(self.0 ^ (1 << bit))
    }
}

impl Default for Word {
    fn default() -> Self {
        Word::ZERO
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({:05o}/{})", self.data(), self.parity() as u8)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:05o}", self.data())
    }
}

impl From<u16> for Word {
    fn from(data: u16) -> Self {
        Word::new(data)
    }
}

/// Returns the parity bit that makes `data` plus parity hold an odd number of
/// 1-bits.
pub const fn compute_parity(data: u16) -> u16 {
    ((data & DATA_MASK).count_ones() as u16 & 1) ^ 1
}

/// Accepts a word iff all 16 stored bits hold an odd number of ones.
pub fn check_word(w: Word) -> Result<(), CorruptWord> {
    if w.is_valid() {
        Ok(())
    } else {
        Err(CorruptWord { raw: w.raw() })
    }
}

/// Overflow out of a one's-complement sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Overflow {
    #[default]
    None,
    Positive,
    Negative,
}

impl Overflow {
    pub fn is_some(self) -> bool {
        self != Overflow::None
    }
}

// Width-generic arithmetic. Sums run in a (BITS + 1)-bit accumulator with the
// sign copied into the extra top bit; the two top bits then disagree exactly
// when the BITS-bit result overflowed.

const fn mask(bits: u32) -> u32 {
    (1 << bits) - 1
}

const fn sign_extend(bits: u32, a: u32) -> u32 {
    let a = a & mask(bits);
    if a & (1 << (bits - 1)) != 0 {
        a | (1 << bits)
    } else {
        a
    }
}

const fn accumulate(bits: u32, x: u32, y: u32) -> u32 {
    let wide = mask(bits + 1);
    let s = x + y;
    if s > wide {
        (s & wide) + 1
    } else {
        s
    }
}

const fn split(bits: u32, acc: u32) -> (u32, Overflow) {
    let top = (acc >> bits) & 1;
    let sign = (acc >> (bits - 1)) & 1;
    let overflow = match (top, sign) {
        (0, 1) => Overflow::Positive,
        (1, 0) => Overflow::Negative,
        _ => Overflow::None,
    };
    (acc & mask(bits), overflow)
}

/// One's-complement add at an arbitrary width (2..=31 bits).
///
/// The narrow widths exist so the arithmetic can be checked exhaustively.
pub const fn oc_add_width<const BITS: u32>(a: u32, b: u32) -> (u32, Overflow) {
    split(
        BITS,
        accumulate(BITS, sign_extend(BITS, a), sign_extend(BITS, b)),
    )
}

/// Double-precision one's-complement add at an arbitrary width.
///
/// Each half is a signed BITS-bit pattern; the pair's value is
/// `hi * 2^(BITS-1) + lo`. The low half is overflow-corrected and its carry
/// (+1 or -1) is folded into the high half. Returns `(hi, lo, overflow)`
/// where the overflow is that of the high half.
pub const fn oc_double_add_width<const BITS: u32>(
    a_hi: u32,
    a_lo: u32,
    b_hi: u32,
    b_lo: u32,
) -> (u32, u32, Overflow) {
    let sign = 1 << (BITS - 1);
    let magnitude = sign - 1;
    let (lo_raw, lo_overflow) = oc_add_width::<BITS>(a_lo, b_lo);
    let (lo, carry) = match lo_overflow {
        Overflow::None => (lo_raw, 0),
        Overflow::Positive => (lo_raw & magnitude, 1),
        Overflow::Negative => (lo_raw | sign, mask(BITS) - 1),
    };
    let mut hi = accumulate(BITS, sign_extend(BITS, a_hi), sign_extend(BITS, b_hi));
    if carry != 0 {
        hi = accumulate(BITS, hi, sign_extend(BITS, carry));
    }
    let (hi, overflow) = split(BITS, hi);
    (hi, lo, overflow)
}

/// One's-complement sum of two 15-bit patterns with end-around carry.
pub const fn oc_add(a: u16, b: u16) -> (u16, Overflow) {
    let (sum, overflow) = oc_add_width::<DATA_BITS>(a as u32, b as u32);
    (sum as u16, overflow)
}

/// Bitwise complement of a 15-bit pattern (one's-complement negation).
pub const fn oc_complement(a: u16) -> u16 {
    !a & DATA_MASK
}

/// Double-precision sum of `(a_hi, a_lo) + (b_hi, b_lo)`.
pub const fn oc_double_add(a_hi: u16, a_lo: u16, b_hi: u16, b_lo: u16) -> (u16, u16, Overflow) {
    let (hi, lo, overflow) =
        oc_double_add_width::<DATA_BITS>(a_hi as u32, a_lo as u32, b_hi as u32, b_lo as u32);
    (hi as u16, lo as u16, overflow)
}

pub const fn is_negative(a: u16) -> bool {
    a & SIGN_BIT != 0
}

/// True for both +0 and -0.
pub const fn is_zero(a: u16) -> bool {
    let a = a & DATA_MASK;
    a == POS_ZERO || a == NEG_ZERO
}

/// Sign and magnitude view of a 15-bit one's-complement pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedValue {
    pub negative: bool,
    /// 14-bit magnitude.
    pub magnitude: u16,
}

impl SignedValue {
    pub const fn decode(pattern: u16) -> SignedValue {
        let pattern = pattern & DATA_MASK;
        if is_negative(pattern) {
            SignedValue {
                negative: true,
                magnitude: !pattern & MAGNITUDE_MASK,
            }
        } else {
            SignedValue {
                negative: false,
                magnitude: pattern,
            }
        }
    }

    pub const fn encode(self) -> u16 {
        let magnitude = self.magnitude & MAGNITUDE_MASK;
        if self.negative {
            oc_complement(magnitude)
        } else {
            magnitude
        }
    }

    /// Returns `None` outside the representable range `-16383..=16383`.
    /// Zero encodes as +0.
    pub fn from_i32(value: i32) -> Option<SignedValue> {
        let magnitude = u16::try_from(value.unsigned_abs()).ok()?;
        if magnitude > MAGNITUDE_MASK {
            return None;
        }
        Some(SignedValue {
            negative: value < 0,
            magnitude,
        })
    }

    pub const fn to_i32(self) -> i32 {
        if self.negative {
            -(self.magnitude as i32)
        } else {
            self.magnitude as i32
        }
    }
}

/// Numeric value of a 15-bit pattern; both zeros map to 0.
pub const fn to_i32(pattern: u16) -> i32 {
    SignedValue::decode(pattern).to_i32()
}
