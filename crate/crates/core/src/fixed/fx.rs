//! Two's-complement fixed-point values with explicit word/fraction widths.

use std::fmt;

use crate::{Error, Result};

pub const MAX_WORD_BITS: u32 = 48;
/// Widest multiplier operand accepted in hardware-strict mode.
pub const MULT_OPERAND_BITS: u32 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    Truncate,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Overflow {
    Saturate,
    Wrap,
}

/// Signed fixed-point format: `word_bits` total (sign included), of which
/// `frac_bits` lie right of the binary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxSpec {
    pub word_bits: u32,
    pub frac_bits: u32,
    pub rounding: Rounding,
    pub overflow: Overflow,
}

impl FxSpec {
    pub fn new(word_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(1..=MAX_WORD_BITS).contains(&word_bits) || frac_bits >= word_bits {
            return Err(Error::Datapath(format!(
                "invalid format: {word_bits} bits with {frac_bits} fraction bits"
            )));
        }
        Ok(FxSpec {
            word_bits,
            frac_bits,
            rounding: Rounding::Truncate,
            overflow: Overflow::Saturate,
        })
    }

    /// Signed `Q<int>.<frac>` where `int` counts the sign bit.
    pub const fn q(int_bits: u32, frac_bits: u32) -> Self {
        FxSpec {
            word_bits: int_bits + frac_bits,
            frac_bits,
            rounding: Rounding::Truncate,
            overflow: Overflow::Saturate,
        }
    }

    pub const fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub const fn with_overflow(mut self, overflow: Overflow) -> Self {
        self.overflow = overflow;
        self
    }

    #[inline(always)]
    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.word_bits - 1)) - 1
    }

    #[inline(always)]
    pub fn min_raw(&self) -> i64 {
        -(1i64 << (self.word_bits - 1))
    }

    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }

    /// Fits a wide raw value into this word, reporting whether it saturated
    /// (or wrapped).
    #[inline(always)]
    pub fn fit(&self, raw: i128) -> (i64, bool) {
        // In range iff everything above the sign bit is a copy of it.
        let top = raw >> (self.word_bits - 1);
        if top == 0 || top == -1 {
            return (raw as i64, false);
        }
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        match self.overflow {
            Overflow::Saturate => (raw.clamp(lo, hi) as i64, true),
            Overflow::Wrap => {
                let bits = self.word_bits;
                let m = raw & ((1i128 << bits) - 1);
                let v = if m >> (bits - 1) != 0 { m - (1i128 << bits) } else { m };
                (v as i64, true)
            }
        }
    }

    /// [`FxSpec::fit`] for values already known to fit an `i64`.
    #[inline(always)]
    fn fit64(&self, raw: i64) -> (i64, bool) {
        let top = raw >> (self.word_bits - 1);
        if top == 0 || top == -1 {
            (raw, false)
        } else {
            self.fit(raw as i128)
        }
    }

    /// Drops `shift` fraction bits from `raw` according to the rounding mode.
    #[inline(always)]
    fn round_shift(&self, raw: i128, shift: u32) -> i128 {
        if shift == 0 {
            return raw;
        }
        match self.rounding {
            Rounding::Truncate => raw >> shift,
            Rounding::Nearest => (raw + (1i128 << (shift - 1))) >> shift,
        }
    }

    /// Re-expresses a raw value at `from_frac` fraction bits in this format.
    #[inline(always)]
    pub fn convert_raw(&self, raw: i128, from_frac: u32) -> (i64, bool) {
        let wide = if from_frac >= self.frac_bits {
            self.round_shift(raw, from_frac - self.frac_bits)
        } else {
            raw << (self.frac_bits - from_frac)
        };
        self.fit(wide)
    }

    /// [`FxSpec::convert_raw`] for a raw value of at most 48 bits.
    #[inline(always)]
    fn convert_raw64(&self, raw: i64, from_frac: u32) -> (i64, bool) {
        if from_frac >= self.frac_bits {
            let shift = from_frac - self.frac_bits;
            let v = match (self.rounding, shift) {
                (_, 0) => raw,
                (Rounding::Truncate, _) => raw >> shift.min(63),
                (Rounding::Nearest, _) if shift < 63 => (raw + (1i64 << (shift - 1))) >> shift,
                (Rounding::Nearest, _) => 0,
            };
            self.fit64(v)
        } else {
            let up = self.frac_bits - from_frac;
            // 48-bit raw shifted by < 15 stays inside an i64.
            if up < 15 {
                self.fit64(raw << up)
            } else {
                self.fit((raw as i128) << up)
            }
        }
    }
}

impl fmt::Display for FxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.word_bits - self.frac_bits, self.frac_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxValue {
    pub raw: i64,
    pub spec: FxSpec,
}

impl FxValue {
    pub fn zero(spec: FxSpec) -> Self {
        FxValue { raw: 0, spec }
    }

    pub fn from_raw(raw: i64, spec: FxSpec) -> Result<Self> {
        if raw < spec.min_raw() || raw > spec.max_raw() {
            return Err(Error::Datapath(format!("raw {raw} does not fit {spec}")));
        }
        Ok(FxValue { raw, spec })
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 * self.spec.lsb()
    }

    /// Positive power of two: returns its base-2 exponent in raw units.
    #[inline(always)]
    pub fn pow2_raw_exponent(self) -> Option<u32> {
        (self.raw > 0 && (self.raw as u64).is_power_of_two()).then(|| self.raw.trailing_zeros())
    }
}

impl fmt::Display for FxValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.to_f64(), self.spec)
    }
}

/// Quantizes a real value; also reports whether the format overflowed.
pub fn fx_quantize_checked(x: f64, spec: FxSpec) -> (FxValue, bool) {
    let scaled = x * spec.lsb().recip();
    let r = match spec.rounding {
        Rounding::Truncate => scaled.floor(),
        Rounding::Nearest => (scaled + 0.5).floor(),
    };
    // NaN maps to zero; infinities saturate through the clamp.
    let wide = if r.is_nan() {
        0
    } else {
        r.clamp(i128::MIN as f64, i128::MAX as f64) as i128
    };
    let (raw, sat) = spec.fit(wide);
    (FxValue { raw, spec }, sat)
}

pub fn fx_quantize(x: f64, spec: FxSpec) -> FxValue {
    fx_quantize_checked(x, spec).0
}

/// Converts between formats; reports overflow.
#[inline(always)]
pub fn fx_requantize(v: FxValue, spec: FxSpec) -> (FxValue, bool) {
    let (raw, sat) = spec.convert_raw64(v.raw, v.spec.frac_bits);
    (FxValue { raw, spec }, sat)
}

/// How a product is formed in hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulPath {
    Multiplier,
    /// One operand is a positive power of two; the product is a shift.
    Shift,
}

pub fn mul_path(a: FxValue, b: FxValue) -> MulPath {
    if a.pow2_raw_exponent().is_some() || b.pow2_raw_exponent().is_some() {
        MulPath::Shift
    } else {
        MulPath::Multiplier
    }
}

/// Full-precision product requantized to `out`. In strict mode a product
/// that needs the multiplier must have both operands within 18 bits.
///
/// Returns the value, the path taken and whether `out` overflowed.
#[inline(always)]
pub fn fx_mul_checked(a: FxValue, b: FxValue, out: FxSpec, strict: bool) -> Result<(FxValue, MulPath, bool)> {
    let frac = a.spec.frac_bits + b.spec.frac_bits;
    let (path, wide) = match (a.pow2_raw_exponent(), b.pow2_raw_exponent()) {
        (Some(k), _) => (MulPath::Shift, (b.raw as i128) << k),
        (_, Some(k)) => (MulPath::Shift, (a.raw as i128) << k),
        _ => {
            if strict && (a.spec.word_bits > MULT_OPERAND_BITS || b.spec.word_bits > MULT_OPERAND_BITS) {
                return Err(Error::Datapath(format!(
                    "multiplier operands {} x {} exceed {MULT_OPERAND_BITS} bits",
                    a.spec, b.spec
                )));
            }
            (MulPath::Multiplier, a.raw as i128 * b.raw as i128)
        }
    };
    let (raw, sat) = if a.spec.word_bits + b.spec.word_bits <= MAX_WORD_BITS {
        out.convert_raw64(wide as i64, frac)
    } else {
        out.convert_raw(wide, frac)
    };
    Ok((FxValue { raw, spec: out }, path, sat))
}

pub fn fx_mul(a: FxValue, b: FxValue, out: FxSpec, strict: bool) -> Result<FxValue> {
    fx_mul_checked(a, b, out, strict).map(|(v, _, _)| v)
}

#[inline(always)]
fn aligned(a: FxValue, b: FxValue) -> Result<(i64, i64, FxSpec)> {
    let frac = a.spec.frac_bits.max(b.spec.frac_bits);
    let int = (a.spec.word_bits - a.spec.frac_bits).max(b.spec.word_bits - b.spec.frac_bits);
    let word = int + frac + 1;
    if word > MAX_WORD_BITS {
        return Err(Error::Datapath(format!(
            "sum of {} and {} needs {word} bits",
            a.spec, b.spec
        )));
    }
    // word <= 48, so both aligned operands and their sum fit an i64.
    let ra = a.raw << (frac - a.spec.frac_bits);
    let rb = b.raw << (frac - b.spec.frac_bits);
    let spec = FxSpec {
        word_bits: word,
        frac_bits: frac,
        rounding: a.spec.rounding,
        overflow: a.spec.overflow,
    };
    Ok((ra, rb, spec))
}

/// Exact sum in a format one bit wider than the wider operand.
#[inline(always)]
pub fn fx_add(a: FxValue, b: FxValue) -> Result<FxValue> {
    let (ra, rb, spec) = aligned(a, b)?;
    Ok(FxValue {
        raw: ra + rb,
        spec,
    })
}

#[inline(always)]
pub fn fx_sub(a: FxValue, b: FxValue) -> Result<FxValue> {
    let (ra, rb, spec) = aligned(a, b)?;
    Ok(FxValue {
        raw: ra - rb,
        spec,
    })
}

/// Multiplies by `2^k` by moving the binary point. Exact; no bits change.
#[inline(always)]
pub fn fx_scale_pow2(v: FxValue, k: i32) -> Result<FxValue> {
    let frac = v.spec.frac_bits as i64 - k as i64;
    if frac >= 0 && (frac as u32) < v.spec.word_bits {
        return Ok(FxValue {
            raw: v.raw,
            spec: FxSpec {
                frac_bits: frac as u32,
                ..v.spec
            },
        });
    }
    // Binary point falls outside the word: widen instead.
    let word = v.spec.word_bits as i64 + (-frac).max(0) + (frac - v.spec.word_bits as i64 + 1).max(0);
    if word > MAX_WORD_BITS as i64 {
        return Err(Error::Datapath(format!("scaling {} by 2^{k} overflows", v.spec)));
    }
    let (raw, frac) = if frac < 0 {
        (v.raw << (-frac), 0)
    } else {
        (v.raw, frac as u32)
    };
    Ok(FxValue {
        raw,
        spec: FxSpec {
            word_bits: word as u32,
            frac_bits: frac,
            ..v.spec
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q2_16: FxSpec = FxSpec::q(2, 16);

    #[test]
    fn spec_validation() {
        assert!(FxSpec::new(18, 16).is_ok());
        assert!(FxSpec::new(0, 0).is_err());
        assert!(FxSpec::new(49, 10).is_err());
        assert!(FxSpec::new(18, 18).is_err());
        assert_eq!(Q2_16.to_string(), "Q2.16");
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(fx_quantize(0.0, Q2_16).raw, 0);
        assert_eq!(fx_quantize(0.0, FxSpec::q(1, 23)).raw, 0);
        let half = fx_quantize(0.5, Q2_16.with_rounding(Rounding::Nearest));
        assert_eq!(half.raw, 32768);
        let (two, sat) = fx_quantize_checked(2.0, Q2_16);
        assert_eq!(two.raw, 131_071);
        assert!(sat);
    }

    #[test]
    fn quantize_rounding_and_wrap() {
        let lsb = Q2_16.lsb();
        assert_eq!(fx_quantize(2.7 * lsb, Q2_16).raw, 2);
        assert_eq!(fx_quantize(-2.3 * lsb, Q2_16).raw, -3);
        assert_eq!(fx_quantize(2.7 * lsb, Q2_16.with_rounding(Rounding::Nearest)).raw, 3);
        let wrap = Q2_16.with_overflow(Overflow::Wrap);
        let (v, sat) = fx_quantize_checked(2.0, wrap);
        assert!(sat);
        assert_eq!(v.to_f64(), -2.0);
    }

    #[test]
    fn mul_identity_and_exact_fraction() {
        let x = fx_quantize(0.337, Q2_16);
        let one = fx_quantize(1.0, Q2_16);
        assert_eq!(fx_mul(one, x, Q2_16, true).unwrap(), x);
        let q1_16 = FxSpec::q(1, 16);
        let a = fx_quantize(0.75, q1_16);
        let p = fx_mul(a, a, q1_16, true).unwrap();
        assert_eq!(p.to_f64(), 0.5625);
    }

    #[test]
    fn mul_by_two_is_a_shift_and_saturates() {
        let two = fx_quantize(2.0, FxSpec::q(3, 15));
        let x = fx_quantize(1.5, Q2_16);
        let (v, path, sat) = fx_mul_checked(two, x, Q2_16, true).unwrap();
        assert_eq!(path, MulPath::Shift);
        assert!(sat);
        assert_eq!(v.raw, Q2_16.max_raw());
        let small = fx_quantize(0.3, Q2_16);
        let (v, path, sat) = fx_mul_checked(small, two, Q2_16, true).unwrap();
        assert_eq!(path, MulPath::Shift);
        assert!(!sat);
        assert_eq!(v.raw, small.raw * 2);
    }

    #[test]
    fn strict_mode_rejects_wide_operands() {
        let wide = fx_quantize(0.3, FxSpec::q(1, 23));
        let x = fx_quantize(0.3, Q2_16);
        assert!(matches!(fx_mul(wide, x, Q2_16, true), Err(Error::Datapath(_))));
        assert!(fx_mul(wide, x, Q2_16, false).is_ok());
        // Shift path does not use the multiplier.
        let half = fx_quantize(0.5, FxSpec::q(1, 23));
        assert!(fx_mul(half, x, Q2_16, true).is_ok());
    }

    #[test]
    fn add_grows_one_bit() {
        let q1_16 = FxSpec::q(1, 16);
        let max = FxValue::from_raw(q1_16.max_raw(), q1_16).unwrap();
        let s = fx_add(max, max).unwrap();
        assert_eq!(s.spec, FxSpec::q(2, 16));
        assert_eq!(s.raw, 2 * q1_16.max_raw());
        assert!((max.to_f64() - 0.999_984_7).abs() < 1e-7);
        assert!((s.to_f64() - 1.999_969_4).abs() < 1e-7);
        let zero = FxValue::zero(q1_16);
        let same = fx_add(max, zero).unwrap();
        assert_eq!(same.to_f64(), max.to_f64());
    }

    #[test]
    fn add_aligns_fraction_bits() {
        let a = fx_quantize(0.25, FxSpec::q(2, 4));
        let b = fx_quantize(0.125, FxSpec::q(1, 10));
        let s = fx_add(a, b).unwrap();
        assert_eq!(s.spec.frac_bits, 10);
        assert_eq!(s.to_f64(), 0.375);
        let d = fx_sub(b, a).unwrap();
        assert_eq!(d.to_f64(), -0.125);
        let wide = FxValue::zero(FxSpec::q(40, 8));
        assert!(fx_add(wide, FxValue::zero(FxSpec::q(2, 8))).is_err());
    }

    #[test]
    fn scale_pow2_is_exact() {
        let x = fx_quantize(0.3, Q2_16);
        let y = fx_scale_pow2(x, -3).unwrap();
        assert_eq!(y.raw, x.raw);
        assert_eq!(y.to_f64(), x.to_f64() / 8.0);
        let z = fx_scale_pow2(x, 20).unwrap();
        assert_eq!(z.to_f64(), x.to_f64() * 1_048_576.0);
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(raw in -131_072i64..131_072) {
            let v = FxValue::from_raw(raw, Q2_16).unwrap();
            for rounding in [Rounding::Truncate, Rounding::Nearest] {
                let spec = Q2_16.with_rounding(rounding);
                prop_assert_eq!(fx_quantize(v.to_f64(), spec).raw, raw);
            }
        }

        #[test]
        fn quantize_error_within_one_lsb(x in -1.99f64..1.99) {
            let t = fx_quantize(x, Q2_16).to_f64();
            prop_assert!(x - t >= 0.0 && x - t < Q2_16.lsb());
            let n = fx_quantize(x, Q2_16.with_rounding(Rounding::Nearest)).to_f64();
            prop_assert!((x - n).abs() <= Q2_16.lsb() / 2.0);
        }

        #[test]
        fn add_never_overflows(a in -131_072i64..131_072, b in -131_072i64..131_072) {
            let va = FxValue::from_raw(a, Q2_16).unwrap();
            let vb = FxValue::from_raw(b, Q2_16).unwrap();
            let s = fx_add(va, vb).unwrap();
            prop_assert_eq!(s.raw, a + b);
            prop_assert!(s.raw >= s.spec.min_raw() && s.raw <= s.spec.max_raw());
        }
    }
}
