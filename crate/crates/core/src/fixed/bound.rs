//! Quantization error budget for the fixed-point cascade.
//!
//! Every requantization in a resonator stage is modelled as an additive
//! error source: mean `−lsb/2` and variance `lsb²/12` under truncation, zero
//! mean under round-to-nearest. Each source is pushed through the linear
//! cascade frozen at full undamping (largest pole radii, hence the largest
//! noise gains) by simulating its impulse response. Per output channel this
//! gives
//!
//! - an error power `mean² + Σ σ²·‖h‖₂²` (used for the SNR floor), and
//! - a worst-case per-sample bound `Σ lsb·‖h‖₁` (every source at its extreme).
//!
//! The quantized gain fit adds a signal-dependent source `δg·z`, where `δg`
//! is the largest difference between the datapath's gain and the real-valued
//! fit over all representable `u`.

use super::datapath::Datapath;
use super::engine::{radius_and_gain, FxCoeffs};
use super::fx::{FxValue, Rounding};
use crate::model::{g_exact, CarfacCoeffs};
use crate::{Error, Result};

/// Impulse responses stop once the remaining state energy falls below this
/// fraction of the energy seen so far.
const TAIL_ENERGY: f64 = 1e-9;
const MAX_IMPULSE_LEN: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantBound {
    /// Expected error power per channel, excluding the gain-fit term.
    pub noise_power: Vec<f64>,
    /// Noise gain from a unit source at each stage's output to each channel.
    /// Used with a signal power profile to add the gain-fit term.
    gain_term_ng: Vec<Vec<f64>>,
    /// Largest `|g_fixed(u) − g_fit(u)|` per channel.
    pub gain_error: Vec<f64>,
    /// Worst-case per-sample absolute error per channel.
    pub abs_bound: Vec<f64>,
}

impl QuantBound {
    /// Error power per channel once the gain-fit source is driven by stage
    /// outputs of the given power.
    pub fn error_power(&self, signal_power: &[f64]) -> Result<Vec<f64>> {
        let n = self.noise_power.len();
        if signal_power.len() != n {
            return Err(Error::Contract(format!(
                "{} signal powers for {n} channels",
                signal_power.len()
            )));
        }
        let mut out = self.noise_power.clone();
        for (src, ng) in self.gain_term_ng.iter().enumerate() {
            let var = self.gain_error[src].powi(2) * signal_power[src];
            for (m, g) in ng.iter().enumerate() {
                out[src + m] += var * g;
            }
        }
        Ok(out)
    }

    /// SNR implied by the error budget, channels summed.
    pub fn snr_floor_db(&self, signal_power: &[f64]) -> Result<f64> {
        let err: f64 = self.error_power(signal_power)?.iter().sum();
        let sig: f64 = signal_power.iter().sum();
        Ok(10.0 * (sig / err).log10())
    }
}

/// Sums over one impulse response: DC gain, L1 and squared L2 norm, per
/// downstream channel.
#[derive(Debug, Clone, Default)]
struct Norms {
    sum: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

struct Stage {
    ar: f64,
    cr: f64,
    c0: f64,
    zero: f64,
    g: f64,
}

/// Injects a unit impulse at stage `src` (into `W̃0`, `W̃1` with weights
/// `inj`, or directly onto the stage output when `inj` is `None`) and runs
/// the frozen linear cascade to the last channel.
fn impulse_norms(stages: &[Stage], src: usize, inj: Option<(f64, f64)>) -> Norms {
    let n = stages.len() - src;
    let mut w0 = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut norms = Norms {
        sum: vec![0.0; n],
        l1: vec![0.0; n],
        l2: vec![0.0; n],
    };
    for t in 0..MAX_IMPULSE_LEN {
        let mut x = 0.0;
        for (k, st) in stages[src..].iter().enumerate() {
            let y = if k == 0 && inj.is_none() {
                // An output-side source bypasses its own stage's resonator.
                (t == 0) as u8 as f64
            } else {
                let mut a = st.ar * w0[k] - st.cr * w1[k] + st.c0 * x;
                let mut b = st.cr * w0[k] + st.ar * w1[k];
                if let (0, 0, Some((i0, i1))) = (k, t, inj) {
                    a += i0;
                    b += i1;
                }
                w0[k] = a;
                w1[k] = b;
                st.g * (x + st.zero * b)
            };
            norms.sum[k] += y;
            norms.l1[k] += y.abs();
            norms.l2[k] += y * y;
            x = y;
        }
        if t > 64 && t % 256 == 0 {
            let seen: f64 = norms.l2.iter().sum();
            let energy: f64 = w0.iter().chain(&w1).map(|w| w * w).sum();
            if energy <= TAIL_ENERGY * seen.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    norms
}

/// Error budget of the fixed engine's resonator cascade.
pub fn quantization_bound(fx: &FxCoeffs, float: &CarfacCoeffs) -> Result<QuantBound> {
    let n = fx.n_channels();
    if float.n_channels() != n {
        return Err(Error::Contract("fixed and float designs differ in size".into()));
    }
    let f = fx.formats;
    let lsb = f.signal.lsb();
    let (mean, var) = match f.signal.rounding {
        Rounding::Truncate => (-lsb / 2.0, lsb * lsb / 12.0),
        Rounding::Nearest => (0.0, lsb * lsb / 12.0),
    };

    let mut stages = Vec::with_capacity(n);
    for ch in &float.car.channels {
        let r = ch.radius(1.0);
        stages.push(Stage {
            ar: ch.a0 * r,
            cr: ch.c0 * r,
            c0: ch.c0,
            zero: ch.h / ch.c0,
            g: g_exact(ch.a0, ch.c0, ch.h, r)?,
        });
    }

    let gain_error = gain_fit_error(fx, float)?;

    let mut noise = vec![0.0; n];
    let mut mean_acc = vec![0.0; n];
    let mut abs_bound = vec![0.0; n];
    let mut gain_term_ng = Vec::with_capacity(n);
    for src in 0..n {
        let st = &stages[src];
        let eps = 1.0 - st.ar;
        // Operand truncations of W̃0 and W̃1 feed both state updates.
        let e0 = impulse_norms(&stages, src, Some((-eps, st.cr)));
        let e1 = impulse_norms(&stages, src, Some((-st.cr, -eps)));
        let out = impulse_norms(&stages, src, None);
        // Output-side sources: y requant, plus z requant and the zero-path
        // operand requant, both scaled by g.
        let out_var = var * (1.0 + 2.0 * st.g * st.g);
        let out_mean = mean * (1.0 + 2.0 * st.g);
        let out_abs = lsb * (1.0 + 2.0 * st.g);
        for m in 0..n - src {
            let ch = src + m;
            noise[ch] += var * (e0.l2[m] + e1.l2[m]) + out_var * out.l2[m];
            mean_acc[ch] += mean * (e0.sum[m] + e1.sum[m]) + out_mean * out.sum[m];
            abs_bound[ch] += lsb * (e0.l1[m] + e1.l1[m]) + out_abs * out.l1[m];
        }
        let g_err = gain_error[src];
        for m in 0..n - src {
            abs_bound[src + m] += g_err * f.signal.max_value() * out.l1[m];
        }
        gain_term_ng.push(out.l2);
    }
    for (p, m) in noise.iter_mut().zip(&mean_acc) {
        *p += m * m;
    }
    Ok(QuantBound {
        noise_power: noise,
        gain_term_ng,
        gain_error,
        abs_bound,
    })
}

/// Largest datapath gain deviation from the real-valued fit over a grid of
/// representable `u`.
fn gain_fit_error(fx: &FxCoeffs, float: &CarfacCoeffs) -> Result<Vec<f64>> {
    let unit = fx.formats.unit;
    let top = 1i64 << unit.frac_bits;
    let mut dp = Datapath::new(false);
    let mut out = Vec::with_capacity(fx.n_channels());
    for (fch, ch) in fx.channels.iter().zip(&float.car.channels) {
        let mut worst = 0.0f64;
        for raw in (0..=top).step_by(16) {
            let u = FxValue::from_raw(raw, unit)?;
            let (_, _, g) = radius_and_gain(&mut dp, fx, fch, u)?;
            worst = worst.max((g.to_f64() - ch.gain_fit.eval(u.to_f64())).abs());
        }
        out.push(worst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::FxConfig;
    use crate::model::{design_carfac, CarfacParams};

    fn bound(rounding: Rounding) -> QuantBound {
        let c = design_carfac(&CarfacParams::new(16_000.0, 12)).unwrap();
        let fx = FxCoeffs::design(&c, &FxConfig::default().with_rounding(rounding)).unwrap();
        quantization_bound(&fx, &c).unwrap()
    }

    #[test]
    fn truncation_costs_more_than_rounding() {
        let t = bound(Rounding::Truncate);
        let r = bound(Rounding::Nearest);
        for (a, b) in t.noise_power.iter().zip(&r.noise_power) {
            assert!(a > b && *b > 0.0);
        }
    }

    #[test]
    fn error_grows_down_the_cascade_on_average() {
        let b = bound(Rounding::Truncate);
        assert!(b.abs_bound.last().unwrap() > b.abs_bound.first().unwrap());
        assert!(b.abs_bound.iter().all(|x| x.is_finite() && *x > 0.0));
    }

    #[test]
    fn output_impulse_on_last_stage_is_a_delta() {
        let stages = vec![Stage { ar: 0.9, cr: 0.1, c0: 0.1, zero: 1.0, g: 0.5 }];
        let n = impulse_norms(&stages, 0, None);
        assert_eq!((n.sum[0], n.l1[0], n.l2[0]), (1.0, 1.0, 1.0));
    }

    #[test]
    fn signal_power_length_is_checked() {
        let b = bound(Rounding::Nearest);
        assert!(b.snr_floor_db(&[1.0]).is_err());
        let floor = b.snr_floor_db(&vec![1e-2; 12]).unwrap();
        assert!(floor.is_finite());
    }
}
