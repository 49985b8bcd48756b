//! Two-pole-two-zero resonator cascade.
//!
//! Each stage is realized in coupled form:
//!
//! ```text
//! W0' = a0·r·W0 − c0·r·W1 + x
//! W1' = c0·r·W0 + a0·r·W1
//! y   = g·(x + h·W1')
//! ```
//!
//! whose transfer function is
//! `g·(1 + h·z·c0·r / (z² − 2·a0·r·z + (a0·r)² + (c0·r)²))`.

use super::params::{CarCoeffs, ChannelCoeffs};
use crate::{Error, Result};

pub(crate) const DENOM_GUARD: f64 = 1e-12;

/// Exact DC-gain factor that makes the stage gain at z = 1 equal to one.
pub fn g_exact(a0: f64, c0: f64, h: f64, r: f64) -> Result<f64> {
    let num = 1.0 - 2.0 * a0 * r + r * r;
    let den = 1.0 - (2.0 * a0 - h * c0) * r + r * r;
    if den.abs() < DENOM_GUARD {
        return Err(Error::Singularity(den));
    }
    Ok(num / den)
}

/// Evaluates the stage transfer function at `z` (given as re, im).
pub fn transfer_at(ch: &ChannelCoeffs, r: f64, g: f64, z: (f64, f64)) -> (f64, f64) {
    let (zr, zi) = z;
    // z² − 2·a0·r·z + r²(a0² + c0²)
    let z2 = (zr * zr - zi * zi, 2.0 * zr * zi);
    let k = r * r * (ch.a0 * ch.a0 + ch.c0 * ch.c0);
    let den = (z2.0 - 2.0 * ch.a0 * r * zr + k, z2.1 - 2.0 * ch.a0 * r * zi);
    let num = (ch.h * ch.c0 * r * zr, ch.h * ch.c0 * r * zi);
    let d2 = den.0 * den.0 + den.1 * den.1;
    let q = (
        (num.0 * den.0 + num.1 * den.1) / d2,
        (num.1 * den.0 - num.0 * den.1) / d2,
    );
    (g * (1.0 + q.0), g * q.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarState {
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub w1_prev: Vec<f64>,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    /// Stage outputs from the latest step.
    pub y: Vec<f64>,
    /// BM velocity from the latest step, `W1' − W1`.
    pub v: Vec<f64>,
}

impl CarState {
    /// Zero signal state with every stage at the given undamping.
    pub fn new(coeffs: &CarCoeffs, undamping: f64) -> Result<Self> {
        let n = coeffs.channels.len();
        let mut r = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        for ch in &coeffs.channels {
            let radius = ch.radius(undamping);
            r.push(radius);
            g.push(g_exact(ch.a0, ch.c0, ch.h, radius)?);
        }
        Ok(CarState {
            w0: vec![0.0; n],
            w1: vec![0.0; n],
            w1_prev: vec![0.0; n],
            r,
            g,
            y: vec![0.0; n],
            v: vec![0.0; n],
        })
    }

    pub fn n_channels(&self) -> usize {
        self.w0.len()
    }
}

/// Advances every stage by one sample. Stage n is driven by stage n−1's
/// output; stage 0 takes `x`. Results land in `state.y` and `state.v`.
pub fn car_step(state: &mut CarState, coeffs: &CarCoeffs, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput { index: 0, value: x });
    }
    let mut input = x;
    for (n, ch) in coeffs.channels.iter().enumerate() {
        let r = state.r[n];
        let (ar, cr) = (ch.a0 * r, ch.c0 * r);
        let (w0, w1) = (state.w0[n], state.w1[n]);
        let w0_new = ar * w0 - cr * w1 + input;
        let w1_new = cr * w0 + ar * w1;
        let y = state.g[n] * (input + ch.h * w1_new);
        if !y.is_finite() || !w0_new.is_finite() {
            return Err(Error::NumericFault { channel: n });
        }
        state.w1_prev[n] = w1;
        state.w0[n] = w0_new;
        state.w1[n] = w1_new;
        state.v[n] = w1_new - w1;
        state.y[n] = y;
        input = y;
    }
    Ok(())
}
