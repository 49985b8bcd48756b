//! Four-stage temporal/spatial smoothing loop driven by the inner hair cells.
//!
//! All four stages share one smoothing routine, each running at its own
//! decimated rate. Stage k's temporal low-pass input is the mean hair-cell
//! output over its update interval plus stage k−1's memory. After every
//! temporal update the stage memory is spread across neighbouring channels
//! by a three-tap filter `(s1, 1 − s1 − s2, s2)`.

use super::params::CarfacParams;
use crate::{Error, Result};

pub const AGC_STAGES: usize = 4;

/// Base decimation of the fastest stage when decimation is on.
pub const AGC_BASE_INTERVAL: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct AgcCoeffs {
    pub n_channels: usize,
    /// Samples between updates of each stage.
    pub interval: [u64; AGC_STAGES],
    /// Temporal low-pass coefficient per stage, `interval / (τ·fs)` capped at 1.
    pub c_t: [f64; AGC_STAGES],
    pub s1: f64,
    pub s2: f64,
    pub stage_gains: [f64; AGC_STAGES],
}

impl AgcCoeffs {
    pub fn design(params: &CarfacParams) -> Result<Self> {
        let fs = params.sample_rate_hz;
        let mut interval = [1u64; AGC_STAGES];
        let mut c_t = [0.0; AGC_STAGES];
        for k in 0..AGC_STAGES {
            if params.agc_decimation {
                interval[k] = AGC_BASE_INTERVAL << k;
            }
            let tau_samples = params.agc_time_constants_s[k] * fs;
            if !(tau_samples > 0.0) {
                return Err(Error::config("AGC time constant must be positive"));
            }
            c_t[k] = (interval[k] as f64 / tau_samples).min(1.0);
        }
        Ok(AgcCoeffs {
            n_channels: params.n_channels,
            interval,
            c_t,
            s1: params.agc_spatial_s1,
            s2: params.agc_spatial_s2,
            stage_gains: params.agc_stage_gains,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgcState {
    pub memory: [Vec<f64>; AGC_STAGES],
    accum: [Vec<f64>; AGC_STAGES],
    pub counter: u64,
    pub b: Vec<f64>,
    scratch: Vec<f64>,
}

impl AgcState {
    pub fn new(n_channels: usize) -> Self {
        let z = || vec![0.0; n_channels];
        AgcState {
            memory: [z(), z(), z(), z()],
            accum: [z(), z(), z(), z()],
            counter: 0,
            b: z(),
            scratch: z(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.memory.iter().chain(&self.accum).flatten().all(|&m| m == 0.0)
            && self.b.iter().all(|&b| b == 0.0)
    }
}

/// Three-tap spatial smoothing with reflecting edges.
///
/// Each channel keeps `1 − s1 − s2` of its value, passes `s1` to the next
/// channel and `s2` to the previous one. Mass leaving the array at either end
/// is reflected back into the edge channel, so the field sum is preserved
/// exactly. A single channel is left untouched.
pub fn spatial_smooth(field: &mut [f64], scratch: &mut Vec<f64>, s1: f64, s2: f64) {
    let n = field.len();
    if n < 2 {
        return;
    }
    let keep = 1.0 - s1 - s2;
    scratch.clear();
    scratch.extend_from_slice(field);
    let m = &scratch[..];
    for i in 0..n {
        let left = if i > 0 { s1 * m[i - 1] } else { s2 * m[0] };
        let right = if i + 1 < n { s2 * m[i + 1] } else { s1 * m[n - 1] };
        field[i] = keep * m[i] + left + right;
    }
}

/// Feeds one sample of hair-cell output into the loop and returns the
/// per-channel feedback factor `b`, a gain-weighted sum of the stage memories.
pub fn agc_step<'a>(state: &'a mut AgcState, coeffs: &AgcCoeffs, ihc_out: &[f64]) -> Result<&'a [f64]> {
    if ihc_out.len() != coeffs.n_channels {
        return Err(Error::Contract(format!(
            "AGC expects {} channels, got {}",
            coeffs.n_channels,
            ihc_out.len()
        )));
    }
    if let Some((n, v)) = ihc_out.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Contract(format!(
            "AGC input must be non-negative, channel {n} is {v}"
        )));
    }
    for acc in state.accum.iter_mut() {
        for (a, &x) in acc.iter_mut().zip(ihc_out) {
            *a += x;
        }
    }
    state.counter += 1;

    let mut updated = false;
    for k in 0..AGC_STAGES {
        let interval = coeffs.interval[k];
        if state.counter % interval != 0 {
            continue;
        }
        updated = true;
        let inv = 1.0 / interval as f64;
        let c = coeffs.c_t[k];
        let (lower, upper) = state.memory.split_at_mut(k);
        let mem = &mut upper[0];
        for n in 0..coeffs.n_channels {
            let mut input = state.accum[k][n] * inv;
            if k > 0 {
                input += lower[k - 1][n];
            }
            mem[n] += c * (input - mem[n]);
            state.accum[k][n] = 0.0;
        }
        spatial_smooth(mem, &mut state.scratch, coeffs.s1, coeffs.s2);
    }

    if updated {
        for n in 0..coeffs.n_channels {
            state.b[n] = (0..AGC_STAGES)
                .map(|k| coeffs.stage_gains[k] * state.memory[k][n])
                .sum();
        }
    }
    Ok(&state.b)
}
