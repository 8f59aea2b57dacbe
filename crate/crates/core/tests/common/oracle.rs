//! Signed-integer reference model for one's-complement arithmetic.
//!
//! Works on plain `i64` values and re-encodes at the end, so it shares no code
//! path with the accumulator-based implementation it checks.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ov {
    None,
    Positive,
    Negative,
}

impl From<agc_core::word::Overflow> for Ov {
    fn from(o: agc_core::word::Overflow) -> Self {
        match o {
            agc_core::word::Overflow::None => Ov::None,
            agc_core::word::Overflow::Positive => Ov::Positive,
            agc_core::word::Overflow::Negative => Ov::Negative,
        }
    }
}

pub fn all_ones(bits: u32) -> i64 {
    (1i64 << bits) - 1
}

pub fn max_magnitude(bits: u32) -> i64 {
    (1i64 << (bits - 1)) - 1
}

pub fn is_pos_zero(p: u32) -> bool {
    p == 0
}

pub fn to_int(bits: u32, p: u32) -> i64 {
    let p = p as i64 & all_ones(bits);
    if p >> (bits - 1) & 1 == 1 {
        -(!p & all_ones(bits))
    } else {
        p
    }
}

/// Encodes a nonzero in-range integer.
pub fn from_int(bits: u32, v: i64) -> u32 {
    assert!(v.abs() <= max_magnitude(bits));
    if v < 0 {
        (!(-v) & all_ones(bits)) as u32
    } else {
        v as u32
    }
}

fn zero(bits: u32, negative: bool) -> u32 {
    if negative {
        all_ones(bits) as u32
    } else {
        0
    }
}

/// Folds an out-of-range sum back into range modulo 2^bits - 1.
fn wrap(bits: u32, s: i64) -> (i64, Ov) {
    let max = max_magnitude(bits);
    if s > max {
        (s - all_ones(bits), Ov::Positive)
    } else if s < -max {
        (s + all_ones(bits), Ov::Negative)
    } else {
        (s, Ov::None)
    }
}

pub fn add(bits: u32, a: u32, b: u32) -> (u32, Ov) {
    let (v, ov) = wrap(bits, to_int(bits, a) + to_int(bits, b));
    let pattern = if v == 0 {
        // Only +0 + +0 yields +0; every other zero sum is -0.
        zero(bits, !(is_pos_zero(a) && is_pos_zero(b)))
    } else {
        from_int(bits, v)
    };
    (pattern, ov)
}

/// Reference double-precision add. The pair value is `hi * 2^(bits-1) + lo`.
pub fn double_add(bits: u32, a_hi: u32, a_lo: u32, b_hi: u32, b_lo: u32) -> (u32, u32, Ov) {
    let half = 1i64 << (bits - 1);
    let max = max_magnitude(bits);
    let lo_sum = to_int(bits, a_lo) + to_int(bits, b_lo);
    let carry = if lo_sum > max {
        1
    } else if lo_sum < -max {
        -1
    } else {
        0
    };
    let lo_v = lo_sum - carry * half;
    let lo = if lo_v != 0 {
        from_int(bits, lo_v)
    } else if carry == 0 {
        zero(bits, !(is_pos_zero(a_lo) && is_pos_zero(b_lo)))
    } else {
        // Corrected low half keeps the sign of the overflow.
        zero(bits, carry < 0)
    };
    let (hi_v, ov) = wrap(bits, to_int(bits, a_hi) + to_int(bits, b_hi) + carry);
    let hi = if hi_v != 0 {
        from_int(bits, hi_v)
    } else {
        match ov {
            Ov::Positive => zero(bits, true),
            Ov::Negative => zero(bits, false),
            Ov::None if carry == 0 => zero(bits, !(is_pos_zero(a_hi) && is_pos_zero(b_hi))),
            Ov::None => zero(bits, true),
        }
    };
    (hi, lo, ov)
}

/// Numeric value of a double-precision pair.
pub fn double_value(bits: u32, hi: u32, lo: u32) -> i64 {
    to_int(bits, hi) * (1i64 << (bits - 1)) + to_int(bits, lo)
}
