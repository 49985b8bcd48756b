//! Operation-counting executor for the fixed-point datapath.
//!
//! Every arithmetic step of the engine goes through a [`Datapath`], which
//! tallies the kind of hardware operation used. The tally is the audit trail
//! that the engine never divides.

use std::fmt;
use std::io::Write;

use super::fx::{
    fx_add, fx_mul_checked, fx_requantize, fx_scale_pow2, fx_sub, FxSpec, FxValue, MulPath,
};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Mul,
    Add,
    Shift,
    Compare,
    Clamp,
    Lookup,
    Divide,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::Mul,
        OpKind::Add,
        OpKind::Shift,
        OpKind::Compare,
        OpKind::Clamp,
        OpKind::Lookup,
        OpKind::Divide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Mul => "mul",
            OpKind::Add => "add",
            OpKind::Shift => "shift",
            OpKind::Compare => "compare",
            OpKind::Clamp => "clamp",
            OpKind::Lookup => "lookup",
            OpKind::Divide => "div",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpHistogram {
    counts: [u64; 7],
}

impl OpHistogram {
    pub fn get(&self, kind: OpKind) -> u64 {
        self.counts[kind as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Kinds that were executed at least once.
    pub fn kinds(&self) -> Vec<OpKind> {
        OpKind::ALL.into_iter().filter(|&k| self.get(k) > 0).collect()
    }

    /// Adds another histogram's counts to this one.
    pub fn merge(&mut self, other: &OpHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "op,count")?;
        for k in OpKind::ALL {
            writeln!(w, "{},{}", k.name(), self.get(k))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Datapath {
    hist: OpHistogram,
    saturations: u64,
    strict: bool,
}

impl Datapath {
    pub fn new(strict: bool) -> Self {
        Datapath {
            hist: OpHistogram::default(),
            saturations: 0,
            strict,
        }
    }

    pub fn histogram(&self) -> OpHistogram {
        self.hist
    }

    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    pub fn reset_counters(&mut self) {
        self.hist = OpHistogram::default();
        self.saturations = 0;
    }

    #[inline(always)]
    fn tick(&mut self, kind: OpKind) {
        self.hist.counts[kind as usize] += 1;
    }

    #[inline(always)]
    fn note(&mut self, saturated: bool) {
        self.saturations += saturated as u64;
    }

    /// Product requantized to `out`. Powers of two go through the shifter.
    #[inline(always)]
    pub fn mul(&mut self, a: FxValue, b: FxValue, out: FxSpec) -> Result<FxValue> {
        let (v, path, sat) = fx_mul_checked(a, b, out, self.strict)?;
        self.tick(match path {
            MulPath::Multiplier => OpKind::Mul,
            MulPath::Shift => OpKind::Shift,
        });
        self.note(sat);
        Ok(v)
    }

    /// Product in its natural full-precision format (widths add).
    #[inline(always)]
    pub fn mul_exact(&mut self, a: FxValue, b: FxValue) -> Result<FxValue> {
        let out = FxSpec::new(
            a.spec.word_bits + b.spec.word_bits,
            a.spec.frac_bits + b.spec.frac_bits,
        )?
        .with_rounding(a.spec.rounding)
        .with_overflow(a.spec.overflow);
        self.mul(a, b, out)
    }

    #[inline(always)]
    pub fn add(&mut self, a: FxValue, b: FxValue) -> Result<FxValue> {
        self.tick(OpKind::Add);
        fx_add(a, b)
    }

    #[inline(always)]
    pub fn sub(&mut self, a: FxValue, b: FxValue) -> Result<FxValue> {
        self.tick(OpKind::Add);
        fx_sub(a, b)
    }

    /// Multiplies by `2^k` (negative `k` shifts right).
    #[inline(always)]
    pub fn shift(&mut self, v: FxValue, k: i32) -> Result<FxValue> {
        self.tick(OpKind::Shift);
        fx_scale_pow2(v, k)
    }

    /// Word-width conversion. Truncation is free wiring; overflow saturates
    /// and is counted as a saturation event.
    #[inline(always)]
    pub fn requant(&mut self, v: FxValue, spec: FxSpec) -> FxValue {
        let (out, sat) = fx_requantize(v, spec);
        self.note(sat);
        out
    }

    /// Designed clamp into a format's range. Not a saturation event.
    #[inline(always)]
    pub fn clamp_to(&mut self, v: FxValue, spec: FxSpec) -> FxValue {
        self.tick(OpKind::Clamp);
        fx_requantize(v, spec).0
    }

    #[inline(always)]
    pub fn max(&mut self, a: FxValue, b: FxValue) -> FxValue {
        self.tick(OpKind::Compare);
        if a.cmp_value(&b).is_ge() {
            a
        } else {
            b
        }
    }

    #[inline(always)]
    pub fn min(&mut self, a: FxValue, b: FxValue) -> FxValue {
        self.tick(OpKind::Compare);
        if a.cmp_value(&b).is_le() {
            a
        } else {
            b
        }
    }

    /// `min(max(v, lo), hi)` as a single clamp unit.
    #[inline(always)]
    pub fn clamp(&mut self, v: FxValue, lo: FxValue, hi: FxValue) -> FxValue {
        self.tick(OpKind::Clamp);
        if v.cmp_value(&lo).is_lt() {
            lo
        } else if v.cmp_value(&hi).is_gt() {
            hi
        } else {
            v
        }
    }

    #[inline(always)]
    pub fn lookup<T: Copy>(&mut self, table: &[T], index: usize) -> T {
        self.tick(OpKind::Lookup);
        table[index]
    }
}

impl FxValue {
    /// Exact ordering of two values in possibly different formats.
    #[inline(always)]
    pub fn cmp_value(&self, other: &FxValue) -> std::cmp::Ordering {
        let f = self.spec.frac_bits.max(other.spec.frac_bits);
        let a = (self.raw as i128) << (f - self.spec.frac_bits);
        let b = (other.raw as i128) << (f - other.spec.frac_bits);
        a.cmp(&b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::fx::fx_quantize;

    const Q: FxSpec = FxSpec::q(2, 16);

    #[test]
    fn counts_by_path() {
        let mut dp = Datapath::new(true);
        let a = fx_quantize(0.3, Q);
        let two = fx_quantize(0.5, Q);
        dp.mul(a, a, Q).unwrap();
        dp.mul(a, two, Q).unwrap();
        dp.add(a, a).unwrap();
        dp.sub(a, a).unwrap();
        dp.shift(a, -2).unwrap();
        dp.max(a, two);
        dp.lookup(&[1, 2, 3], 1);
        let h = dp.histogram();
        assert_eq!(h.get(OpKind::Mul), 1);
        assert_eq!(h.get(OpKind::Shift), 2);
        assert_eq!(h.get(OpKind::Add), 2);
        assert_eq!(h.get(OpKind::Compare), 1);
        assert_eq!(h.get(OpKind::Lookup), 1);
        assert_eq!(h.get(OpKind::Divide), 0);
        assert_eq!(h.total(), 7);
        assert!(!h.kinds().contains(&OpKind::Divide));
        let mut sum = h;
        sum.merge(&h);
        assert_eq!(sum.total(), 14);
        assert_eq!(sum.get(OpKind::Shift), 4);
    }

    #[test]
    fn saturation_counted_on_requant_not_clamp() {
        let mut dp = Datapath::new(true);
        let big = fx_quantize(5.0, FxSpec::q(4, 12));
        let r = dp.requant(big, Q);
        assert_eq!(r.raw, Q.max_raw());
        assert_eq!(dp.saturations(), 1);
        dp.clamp_to(big, Q);
        assert_eq!(dp.saturations(), 1);
    }

    #[test]
    fn comparisons_across_formats() {
        let mut dp = Datapath::new(true);
        let a = fx_quantize(0.25, FxSpec::q(1, 4));
        let b = fx_quantize(0.3, Q);
        assert_eq!(dp.max(a, b), b);
        assert_eq!(dp.min(a, b), a);
        let lo = FxValue::zero(Q);
        let hi = fx_quantize(0.28, Q);
        assert_eq!(dp.clamp(b, lo, hi), hi);
    }

    #[test]
    fn histogram_csv() {
        let mut dp = Datapath::new(false);
        let a = fx_quantize(0.3, Q);
        dp.mul(a, a, Q).unwrap();
        let mut buf = Vec::new();
        dp.histogram().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "op,count\nmul,1\nadd,0\nshift,0\ncompare,0\nclamp,0\nlookup,0\ndiv,0\n"
        );
    }
}
