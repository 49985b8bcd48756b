//! Division-free fixed-point CARFAC datapath.
//!
//! One CAR/IHC/AGC/OHC circuit is reused for every channel in cascade order,
//! the way a time-multiplexed hardware implementation walks its channel
//! memories. Every arithmetic step runs through a [`Datapath`] so the
//! executed operation kinds can be audited.
//!
//! Resonator states are held pre-scaled by `c0` (`W̃ = c0·W`). The scaled
//! realization has the same transfer function but keeps every channel's
//! states in the range of its output, so one 18-bit format serves all
//! channels. Small per-channel coefficients (`c0·r`, `1 − a0·r`, the velocity
//! scale) are stored as an 18-bit mantissa plus a per-channel shift.

use super::datapath::{Datapath, OpHistogram, OpKind};
use super::fx::{fx_quantize, fx_quantize_checked, FxSpec, FxValue, Rounding};
use crate::model::{CarfacCoeffs, AGC_STAGES};
use crate::{Error, Result};

/// Widest input accepted by the engine.
pub const INPUT_BITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxFormats {
    /// Input samples, Q1.23.
    pub input: FxSpec,
    /// Resonator state memories (wide; only their 18-bit truncations feed
    /// multipliers).
    pub state: FxSpec,
    /// Stage outputs and multiplier operands derived from the states.
    pub signal: FxSpec,
    /// Coefficient mantissas in [−1, 1).
    pub coef: FxSpec,
    /// Quantities in [0, 1]: hair-cell outputs, NLF, undamping, gain.
    pub unit: FxSpec,
    /// Gain-fit coefficients A, B, C and the zero gain h/c0.
    pub gain_coef: FxSpec,
    /// Resonator product accumulator.
    pub acc: FxSpec,
    /// High-pass tracking accumulator.
    pub hpf_acc: FxSpec,
    /// AGC stage memories and input accumulators.
    pub agc_mem: FxSpec,
    /// AGC values fed to a multiplier.
    pub agc_operand: FxSpec,
    /// OHC affine term `scale·v + offset`, clamped to this range.
    pub ohc_t: FxSpec,
    /// AGC feedback b.
    pub feedback: FxSpec,
}

impl FxFormats {
    pub fn with_rounding(self, r: Rounding) -> Self {
        let f = |s: FxSpec| s.with_rounding(r);
        FxFormats {
            input: f(self.input),
            state: f(self.state),
            signal: f(self.signal),
            coef: f(self.coef),
            unit: f(self.unit),
            gain_coef: f(self.gain_coef),
            acc: f(self.acc),
            hpf_acc: f(self.hpf_acc),
            agc_mem: f(self.agc_mem),
            agc_operand: f(self.agc_operand),
            ohc_t: f(self.ohc_t),
            feedback: f(self.feedback),
        }
    }
}

impl Default for FxFormats {
    fn default() -> Self {
        FxFormats {
            input: FxSpec::q(1, 23),
            state: FxSpec::q(5, 32),
            signal: FxSpec::q(4, 14),
            coef: FxSpec::q(1, 17),
            unit: FxSpec::q(2, 16),
            gain_coef: FxSpec::q(3, 15),
            acc: FxSpec::q(12, 32),
            hpf_acc: FxSpec::q(8, 32),
            agc_mem: FxSpec::q(8, 32),
            agc_operand: FxSpec::q(3, 15),
            ohc_t: FxSpec::q(3, 15),
            feedback: FxSpec::q(5, 13),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// `(A·u + B)·u + C` with two multipliers.
    Quadratic,
    /// Per-channel table of the quadratic sampled at `2^depth_bits` points,
    /// indexed by the top bits of u.
    Table { depth_bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxConfig {
    pub formats: FxFormats,
    pub gain_mode: GainMode,
    /// Reject multiplier operands wider than 18 bits.
    pub strict: bool,
}

impl Default for FxConfig {
    fn default() -> Self {
        FxConfig {
            formats: FxFormats::default(),
            gain_mode: GainMode::Quadratic,
            strict: true,
        }
    }
}

impl FxConfig {
    pub fn with_rounding(mut self, r: Rounding) -> Self {
        self.formats = self.formats.with_rounding(r);
        self
    }
}

/// A coefficient stored as `mant · 2^exp` with `|mant|` in [0.5, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mant: FxValue,
    pub exp: i32,
}

impl Scaled {
    pub fn new(x: f64, spec: FxSpec) -> Self {
        let exp = if x == 0.0 { 0 } else { x.abs().log2().floor() as i32 + 1 };
        Scaled::with_exp(x, exp, spec)
    }

    pub fn with_exp(x: f64, exp: i32, spec: FxSpec) -> Self {
        let mant = fx_quantize(x * (-exp as f64).exp2(), spec.with_rounding(Rounding::Nearest));
        Scaled {
            mant: FxValue { raw: mant.raw, spec },
            exp,
        }
    }

    pub fn value(&self) -> f64 {
        self.mant.to_f64() * (self.exp as f64).exp2()
    }
}

/// Per-channel quantized coefficient memory.
#[derive(Debug, Clone, PartialEq)]
pub struct FxChannel {
    /// Input scale `c0`.
    pub c0: Scaled,
    /// `c0·r = (cr1 + cdr·u) · 2^c0.exp`.
    pub cr1: FxValue,
    pub cdr: FxValue,
    /// `1 − a0·r = (eps1 − kappa·u) · 2^eps_exp`.
    pub eps1: FxValue,
    pub kappa: FxValue,
    pub eps_exp: i32,
    /// Zero gain `h / c0`.
    pub zero_gain: FxValue,
    /// Velocity scale for the scaled states, `ohc_scale / c0`.
    pub kv: Scaled,
    pub gain_a: FxValue,
    pub gain_b: FxValue,
    pub gain_c: FxValue,
    pub gain_table: Vec<FxValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FxCoeffs {
    pub formats: FxFormats,
    pub gain_mode: GainMode,
    pub channels: Vec<FxChannel>,
    pub hpf_k: Scaled,
    pub ihc_offset: FxValue,
    pub ihc_rest: FxValue,
    pub ohc_offset: FxValue,
    pub agc_ct: [Scaled; AGC_STAGES],
    pub agc_log2_interval: [u32; AGC_STAGES],
    pub agc_s1: FxValue,
    pub agc_s2: FxValue,
    pub agc_keep: FxValue,
    pub agc_gains: [FxValue; AGC_STAGES],
    /// Constants used by the datapath.
    pub one_unit: FxValue,
    pub zero_unit: FxValue,
    pub eight: FxValue,
}

impl FxCoeffs {
    pub fn design(c: &CarfacCoeffs, config: &FxConfig) -> Result<Self> {
        let f = config.formats;
        let q = |x: f64, spec: FxSpec| -> Result<FxValue> {
            let (v, sat) = fx_quantize_checked(x, spec.with_rounding(Rounding::Nearest));
            if sat {
                return Err(Error::Datapath(format!("constant {x} does not fit {spec}")));
            }
            Ok(FxValue { raw: v.raw, spec })
        };

        let depth_bits = match config.gain_mode {
            GainMode::Quadratic => None,
            GainMode::Table { depth_bits } => {
                if depth_bits == 0 || depth_bits > f.unit.frac_bits {
                    return Err(Error::config(format!("gain table depth 2^{depth_bits} unsupported")));
                }
                Some(depth_bits)
            }
        };

        let mut channels = Vec::with_capacity(c.n_channels());
        for ch in &c.car.channels {
            let c0 = Scaled::new(ch.c0, f.coef);
            let c0m = ch.c0 * (-c0.exp as f64).exp2();
            let eps1 = 1.0 - ch.a0 * ch.r1;
            let eps_exp = Scaled::new(eps1, f.coef).exp;
            let es = (-eps_exp as f64).exp2();
            let fit = &ch.gain_fit;
            let gain_table = match depth_bits {
                None => Vec::new(),
                Some(bits) => {
                    let n = 1usize << bits;
                    (0..n)
                        .map(|i| q(fit.eval(i as f64 / n as f64).clamp(0.0, 1.0), f.unit))
                        .collect::<Result<_>>()?
                }
            };
            channels.push(FxChannel {
                c0,
                cr1: q(c0m * ch.r1, f.coef)?,
                cdr: q(c0m * ch.d_rz, f.coef)?,
                eps1: Scaled::with_exp(eps1, eps_exp, f.coef).mant,
                kappa: q(ch.a0 * ch.d_rz * es, f.coef)?,
                eps_exp,
                zero_gain: q(ch.h / ch.c0, f.gain_coef)?,
                kv: Scaled::new(c.ohc.scale / ch.c0, f.coef),
                gain_a: q(fit.a, f.gain_coef)?,
                gain_b: q(fit.b, f.gain_coef)?,
                gain_c: q(fit.c, f.gain_coef)?,
                gain_table,
            });
        }

        let mut agc_ct = [Scaled::new(0.0, f.coef); AGC_STAGES];
        let mut agc_log2_interval = [0; AGC_STAGES];
        let mut agc_gains = [FxValue::zero(f.gain_coef); AGC_STAGES];
        for k in 0..AGC_STAGES {
            let interval = c.agc.interval[k];
            if !interval.is_power_of_two() {
                return Err(Error::config("AGC intervals must be powers of two"));
            }
            agc_log2_interval[k] = interval.trailing_zeros();
            agc_ct[k] = Scaled::new(c.agc.c_t[k], f.coef);
            agc_gains[k] = q(c.agc.stage_gains[k], f.gain_coef)?;
        }

        let mut coeffs = FxCoeffs {
            formats: f,
            gain_mode: config.gain_mode,
            channels,
            hpf_k: Scaled::new(c.hpf_k, f.coef),
            ihc_offset: q(c.ihc.approx_offset, f.signal)?,
            ihc_rest: FxValue::zero(f.unit),
            ohc_offset: q(c.ohc.offset, f.ohc_t)?,
            agc_ct,
            agc_log2_interval,
            agc_s1: q(c.agc.s1, f.coef)?,
            agc_s2: q(c.agc.s2, f.coef)?,
            agc_keep: q(1.0 - c.agc.s1 - c.agc.s2, f.coef)?,
            agc_gains,
            one_unit: q(1.0, f.unit)?,
            zero_unit: FxValue::zero(f.unit),
            eight: q(8.0, FxSpec::q(5, 13))?,
        };
        let mut dp = Datapath::new(config.strict);
        coeffs.ihc_rest = ihc_fixed(&mut dp, &coeffs, FxValue::zero(f.signal))?;
        Ok(coeffs)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

/// Mutable per-channel memories of the fixed engine.
#[derive(Debug, Clone, PartialEq)]
pub struct FxState {
    pub w0: Vec<FxValue>,
    pub w1: Vec<FxValue>,
    pub y: Vec<FxValue>,
    pub v: Vec<FxValue>,
    pub hpf_lp: Vec<FxValue>,
    pub v_mem: Vec<FxValue>,
    pub agc_in: Vec<FxValue>,
    pub agc_accum: [Vec<FxValue>; AGC_STAGES],
    pub agc_mem: [Vec<FxValue>; AGC_STAGES],
    pub agc_counter: u64,
    pub b: Vec<FxValue>,
    pub nlf: Vec<FxValue>,
    pub u: Vec<FxValue>,
    pub eps: Vec<FxValue>,
    pub c0r: Vec<FxValue>,
    pub g: Vec<FxValue>,
    scratch: Vec<FxValue>,
}

pub struct FxEngine {
    pub coeffs: FxCoeffs,
    pub state: FxState,
    dp: Datapath,
}

impl FxEngine {
    pub fn new(coeffs: &CarfacCoeffs, config: FxConfig) -> Result<Self> {
        let fc = FxCoeffs::design(coeffs, &config)?;
        Self::from_fixed(fc, config.strict)
    }

    pub fn from_fixed(coeffs: FxCoeffs, strict: bool) -> Result<Self> {
        let f = coeffs.formats;
        let n = coeffs.n_channels();
        let mut dp = Datapath::new(strict);
        let zero = |s: FxSpec| vec![FxValue::zero(s); n];
        let stages = |s: FxSpec| [zero(s), zero(s), zero(s), zero(s)];

        // Rest: zero velocity, no AGC feedback.
        let mut nlf = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        let mut eps = Vec::with_capacity(n);
        let mut c0r = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        let one_minus_b = coeffs.one_unit;
        for ch in &coeffs.channels {
            let (nl, uu) = ohc_fixed(&mut dp, &coeffs, ch, FxValue::zero(f.signal), one_minus_b)?;
            let (e, c, gg) = radius_and_gain(&mut dp, &coeffs, ch, uu)?;
            nlf.push(nl);
            u.push(uu);
            eps.push(e);
            c0r.push(c);
            g.push(gg);
        }
        let state = FxState {
            w0: zero(f.state),
            w1: zero(f.state),
            y: zero(f.signal),
            v: zero(f.signal),
            hpf_lp: zero(f.hpf_acc),
            v_mem: zero(f.unit),
            agc_in: zero(f.unit),
            agc_accum: stages(f.agc_mem),
            agc_mem: stages(f.agc_mem),
            agc_counter: 0,
            b: zero(f.feedback),
            nlf,
            u,
            eps,
            c0r,
            g,
            scratch: Vec::with_capacity(n),
        };
        dp.reset_counters();
        Ok(FxEngine { coeffs, state, dp })
    }

    pub fn n_channels(&self) -> usize {
        self.coeffs.n_channels()
    }

    pub fn histogram(&self) -> OpHistogram {
        self.dp.histogram()
    }

    pub fn saturations(&self) -> u64 {
        self.dp.saturations()
    }

    /// Histogram of executed operation kinds. Fails if the op set ever
    /// contained a divide.
    pub fn audit(&self) -> Result<OpHistogram> {
        let h = self.dp.histogram();
        if h.get(OpKind::Divide) > 0 {
            return Err(Error::Datapath(format!("{} divide operations executed", h.get(OpKind::Divide))));
        }
        Ok(h)
    }

    pub fn reset_counters(&mut self) {
        self.dp.reset_counters();
    }

    pub fn output(&self) -> &[FxValue] {
        &self.state.y
    }

    pub fn output_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.state.y.iter().map(|v| v.to_f64())
    }

    /// Quantizes a real sample to the input format and processes it.
    pub fn process_f64(&mut self, x: f64) -> Result<&[FxValue]> {
        let (v, sat) = fx_quantize_checked(x, self.coeffs.formats.input);
        if sat {
            self.dp.requant(fx_quantize(2.0 * x, FxSpec::q(48 - 23, 23)), FxSpec::q(1, 23));
        }
        self.process(v)
    }

    /// Runs one input sample through the fixed-point chain.
    pub fn process(&mut self, x: FxValue) -> Result<&[FxValue]> {
        fx_carfac_sample(&mut self.state, &self.coeffs, &mut self.dp, x)?;
        Ok(&self.state.y)
    }
}

/// One sample of the fixed-point chain.
pub fn fx_carfac_sample(st: &mut FxState, co: &FxCoeffs, dp: &mut Datapath, x: FxValue) -> Result<()> {
    if x.spec.word_bits > INPUT_BITS {
        return Err(Error::Datapath(format!(
            "input {} is wider than {INPUT_BITS} bits",
            x.spec
        )));
    }
    let f = co.formats;
    let n = co.n_channels();

    // Resonator cascade, channel by channel through one shared stage.
    let mut input = dp.requant(x, f.signal);
    for (i, ch) in co.channels.iter().enumerate() {
        let (w0, w1) = (st.w0[i], st.w1[i]);
        let eps = st.eps[i];
        let c0r = st.c0r[i];

        let w0_op = dp.requant(w0, f.signal);
        let w1_op = dp.requant(w1, f.signal);

        let d0 = dp.mul_exact(eps, w0_op)?;
        let d0 = dp.shift(d0, ch.eps_exp)?;
        let d0 = dp.requant(d0, f.acc);
        let rot = dp.mul_exact(c0r, w1_op)?;
        let inj = dp.mul_exact(ch.c0.mant, input)?;
        let drive = dp.sub(inj, rot)?;
        let drive = dp.shift(drive, ch.c0.exp)?;
        let drive = dp.requant(drive, f.acc);
        let t0 = dp.sub(w0, d0)?;
        let t0 = dp.add(t0, drive)?;
        let w0_new = dp.requant(t0, f.state);

        let d1 = dp.mul_exact(eps, w1_op)?;
        let d1 = dp.shift(d1, ch.eps_exp)?;
        let d1 = dp.requant(d1, f.acc);
        let rot = dp.mul_exact(c0r, w0_op)?;
        let rot = dp.shift(rot, ch.c0.exp)?;
        let rot = dp.requant(rot, f.acc);
        let t1 = dp.sub(w1, d1)?;
        let t1 = dp.add(t1, rot)?;
        let w1_new = dp.requant(t1, f.state);

        let w1_out = dp.requant(w1_new, f.signal);
        let zw = dp.mul(ch.zero_gain, w1_out, f.acc)?;
        let z = dp.add(input, zw)?;
        let z = dp.requant(z, f.signal);
        let y = dp.mul(st.g[i], z, f.signal)?;

        // Velocity at full state precision, pre-shifted by the channel's
        // velocity-scale exponent so it fills the operand word.
        let v = dp.sub(w1_new, w1)?;
        let v = dp.shift(v, ch.kv.exp)?;
        st.v[i] = dp.clamp_to(v, f.signal);
        st.w0[i] = w0_new;
        st.w1[i] = w1_new;
        st.y[i] = y;
        input = y;
    }

    // BM high-pass and inner hair cell.
    for i in 0..n {
        let hp = dp.sub(st.y[i], st.hpf_lp[i])?;
        let hp = dp.requant(hp, f.signal);
        let step = dp.mul_exact(co.hpf_k.mant, hp)?;
        let step = dp.shift(step, co.hpf_k.exp)?;
        let step = dp.requant(step, f.hpf_acc);
        let lp = dp.add(st.hpf_lp[i], step)?;
        st.hpf_lp[i] = dp.requant(lp, f.hpf_acc);

        let v_mem = ihc_fixed(dp, co, hp)?;
        let above = dp.sub(v_mem, co.ihc_rest)?;
        let above = dp.max(above, co.zero_unit);
        st.v_mem[i] = v_mem;
        st.agc_in[i] = dp.requant(above, f.unit);
    }

    agc_fixed(st, co, dp)?;

    // Outer hair cell, undamping, next-sample radius terms and gain.
    for (i, ch) in co.channels.iter().enumerate() {
        let omb = dp.sub(co.one_unit, st.b[i])?;
        let omb = dp.max(omb, co.zero_unit);
        let omb = dp.requant(omb, f.unit);
        let (nlf, u) = ohc_fixed(dp, co, ch, st.v[i], omb)?;
        let (eps, c0r, g) = radius_and_gain(dp, co, ch, u)?;
        st.nlf[i] = nlf;
        st.u[i] = u;
        st.eps[i] = eps;
        st.c0r[i] = c0r;
        st.g[i] = g;
    }
    Ok(())
}

fn square_unit(dp: &mut Datapath, x: FxValue, unit: FxSpec) -> Result<FxValue> {
    let sq = dp.mul_exact(x, x)?;
    Ok(dp.requant(sq, unit))
}

/// `0.75·(1 − p)²`, `p = min(1, max(0, 1 − (hp + offset)/4))⁸`.
fn ihc_fixed(dp: &mut Datapath, co: &FxCoeffs, hp: FxValue) -> Result<FxValue> {
    let unit = co.formats.unit;
    let s = dp.add(hp, co.ihc_offset)?;
    let quarter = dp.shift(s, -2)?;
    let p_int = dp.sub(co.one_unit, quarter)?;
    let p_int = dp.clamp(p_int, co.zero_unit, co.one_unit);
    let mut p = dp.requant(p_int, unit);
    for _ in 0..3 {
        p = square_unit(dp, p, unit)?;
    }
    let q = dp.sub(co.one_unit, p)?;
    let q = dp.requant(q, unit);
    let q2 = square_unit(dp, q, unit)?;
    let half = dp.shift(q2, -1)?;
    let quarter = dp.shift(q2, -2)?;
    let v = dp.add(half, quarter)?;
    Ok(dp.requant(v, unit))
}

/// Returns `(NLF, u)` with `NLF = max(0, 1 − t²/8)⁸`, `t = scale·v + offset`
/// and `u = NLF · max(0, 1 − b)`. `v` arrives pre-shifted by `kv.exp`.
fn ohc_fixed(
    dp: &mut Datapath,
    co: &FxCoeffs,
    ch: &FxChannel,
    v: FxValue,
    one_minus_b: FxValue,
) -> Result<(FxValue, FxValue)> {
    let f = co.formats;
    let prod = dp.mul_exact(ch.kv.mant, v)?;
    let t = dp.add(prod, co.ohc_offset)?;
    // |t| ≥ √8 already gives NLF = 0; the clamp only bounds the word.
    let t = dp.clamp_to(t, f.ohc_t);
    let sqr = dp.mul_exact(t, t)?;
    let sqr = dp.min(sqr, co.eight);
    let eighth = dp.shift(sqr, -3)?;
    let base = dp.sub(co.one_unit, eighth)?;
    let base = dp.max(base, co.zero_unit);
    let mut nlf = dp.requant(base, f.unit);
    for _ in 0..3 {
        nlf = square_unit(dp, nlf, f.unit)?;
    }
    let u = dp.mul(nlf, one_minus_b, f.unit)?;
    Ok((nlf, u))
}

/// Radius terms `1 − a0·r`, `c0·r` (as scaled mantissas) and DC gain for a
/// new undamping value.
pub(crate) fn radius_and_gain(
    dp: &mut Datapath,
    co: &FxCoeffs,
    ch: &FxChannel,
    u: FxValue,
) -> Result<(FxValue, FxValue, FxValue)> {
    let f = co.formats;
    let ku = dp.mul(ch.kappa, u, f.acc)?;
    let eps = dp.sub(ch.eps1, ku)?;
    let eps = dp.requant(eps, f.coef);
    let cu = dp.mul(ch.cdr, u, f.acc)?;
    let c0r = dp.add(ch.cr1, cu)?;
    let c0r = dp.requant(c0r, f.coef);
    let g = match co.gain_mode {
        GainMode::Quadratic => {
            let au = dp.mul(ch.gain_a, u, f.acc)?;
            let t = dp.add(au, ch.gain_b)?;
            let t = dp.requant(t, f.gain_coef);
            let tu = dp.mul(t, u, f.acc)?;
            let g = dp.add(tu, ch.gain_c)?;
            dp.requant(g, f.unit)
        }
        GainMode::Table { .. } => {
            let depth = ch.gain_table.len();
            let bits = depth.trailing_zeros();
            let idx = (u.raw >> (f.unit.frac_bits - bits)).clamp(0, depth as i64 - 1) as usize;
            dp.lookup(&ch.gain_table, idx)
        }
    };
    Ok((eps, c0r, g))
}

fn agc_fixed(st: &mut FxState, co: &FxCoeffs, dp: &mut Datapath) -> Result<()> {
    let f = co.formats;
    let n = co.n_channels();
    for k in 0..AGC_STAGES {
        for i in 0..n {
            let a = dp.add(st.agc_accum[k][i], st.agc_in[i])?;
            st.agc_accum[k][i] = dp.requant(a, f.agc_mem);
        }
    }
    st.agc_counter += 1;

    let mut updated = false;
    for k in 0..AGC_STAGES {
        let log2 = co.agc_log2_interval[k];
        if st.agc_counter & ((1u64 << log2) - 1) != 0 {
            continue;
        }
        updated = true;
        let ct = co.agc_ct[k];
        for i in 0..n {
            let mut input = dp.shift(st.agc_accum[k][i], -(log2 as i32))?;
            if k > 0 {
                input = dp.add(input, st.agc_mem[k - 1][i])?;
            }
            let delta = dp.sub(input, st.agc_mem[k][i])?;
            let delta = dp.requant(delta, f.agc_operand);
            let step = dp.mul_exact(ct.mant, delta)?;
            let step = dp.shift(step, ct.exp)?;
            let step = dp.requant(step, f.agc_mem);
            let m = dp.add(st.agc_mem[k][i], step)?;
            st.agc_mem[k][i] = dp.requant(m, f.agc_mem);
            st.agc_accum[k][i] = FxValue::zero(f.agc_mem);
        }
        spatial_fixed(&mut st.agc_mem[k], &mut st.scratch, co, dp)?;
    }

    if updated {
        for i in 0..n {
            let mut b = FxValue::zero(f.agc_mem);
            for k in 0..AGC_STAGES {
                let term = tap(dp, co, co.agc_gains[k], st.agc_mem[k][i])?;
                b = dp.add(b, term)?;
                b = dp.requant(b, f.agc_mem);
            }
            st.b[i] = dp.requant(b, f.feedback);
        }
    }
    Ok(())
}

/// Coefficient times a wide memory value. Power-of-two coefficients shift the
/// full-width value; anything else goes through an 18-bit multiplier operand.
fn tap(dp: &mut Datapath, co: &FxCoeffs, coef: FxValue, m: FxValue) -> Result<FxValue> {
    let f = co.formats;
    if coef.raw == 0 {
        return Ok(FxValue::zero(f.agc_mem));
    }
    let operand = if coef.pow2_raw_exponent().is_some() {
        m
    } else {
        dp.requant(m, f.agc_operand)
    };
    dp.mul(coef, operand, f.agc_mem)
}

fn spatial_fixed(field: &mut [FxValue], scratch: &mut Vec<FxValue>, co: &FxCoeffs, dp: &mut Datapath) -> Result<()> {
    let n = field.len();
    if n < 2 {
        return Ok(());
    }
    let f = co.formats;
    scratch.clear();
    scratch.extend_from_slice(field);
    for i in 0..n {
        let keep = tap(dp, co, co.agc_keep, scratch[i])?;
        let left = if i > 0 {
            tap(dp, co, co.agc_s1, scratch[i - 1])?
        } else {
            tap(dp, co, co.agc_s2, scratch[0])?
        };
        let right = if i + 1 < n {
            tap(dp, co, co.agc_s2, scratch[i + 1])?
        } else {
            tap(dp, co, co.agc_s1, scratch[n - 1])?
        };
        let s = dp.add(keep, left)?;
        let s = dp.add(s, right)?;
        field[i] = dp.requant(s, f.agc_mem);
    }
    Ok(())
}
