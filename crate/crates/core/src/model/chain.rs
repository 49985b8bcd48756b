use super::agc::{agc_step, AgcState};
use super::car::{car_step, g_exact, CarState};
use super::hair_cell::{ihc_exact, ohc_exact};
use super::highpass::{highpass_step, HighpassState};
use super::params::CarfacCoeffs;
use crate::approx::{ihc_approx_with_offset, ohc_nlf_approx};
use crate::{Error, Result};

/// Which nonlinearities and gain rule the chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Rational hair-cell functions and exact DC gain.
    Exact,
    /// Division-free hair-cell functions and the quadratic gain fit.
    Approx,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "approx" => Ok(Mode::Approx),
            other => Err(Error::config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IhcState {
    pub bm_hpf: Vec<f64>,
    pub v_mem: Vec<f64>,
    /// Hair-cell output above its resting level, fed to the AGC.
    pub agc_in: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhcState {
    pub sqr: Vec<f64>,
    pub nlf: Vec<f64>,
    pub u: Vec<f64>,
}

/// Complete mutable state of one CARFAC instance. Single writer.
#[derive(Debug, Clone, PartialEq)]
pub struct CarfacState {
    pub mode: Mode,
    pub car: CarState,
    pub hpf: HighpassState,
    pub ihc: IhcState,
    pub ohc: OhcState,
    pub agc: AgcState,
    pub samples: u64,
}

impl CarfacState {
    /// Fresh state at rest: zero signal memories, undamping set to the
    /// outer-hair-cell response at zero velocity.
    pub fn new(coeffs: &CarfacCoeffs, mode: Mode) -> Result<Self> {
        let n = coeffs.n_channels();
        let nlf0 = nlf_for(mode, coeffs, 0.0)?;
        let mut car = CarState::new(&coeffs.car, nlf0)?;
        if mode == Mode::Approx {
            for (g, ch) in car.g.iter_mut().zip(&coeffs.car.channels) {
                *g = ch.gain_fit.eval(nlf0);
            }
        }
        Ok(CarfacState {
            mode,
            car,
            hpf: HighpassState::new(n),
            ihc: IhcState {
                bm_hpf: vec![0.0; n],
                v_mem: vec![0.0; n],
                agc_in: vec![0.0; n],
            },
            ohc: OhcState {
                sqr: vec![0.0; n],
                nlf: vec![nlf0; n],
                u: vec![nlf0; n],
            },
            agc: AgcState::new(n),
            samples: 0,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.car.n_channels()
    }

    /// BM outputs of the latest sample.
    pub fn output(&self) -> &[f64] {
        &self.car.y
    }
}

fn nlf_for(mode: Mode, coeffs: &CarfacCoeffs, v: f64) -> Result<f64> {
    let t = coeffs.ohc.scale * v + coeffs.ohc.offset;
    match mode {
        Mode::Exact => Ok(ohc_exact(v, coeffs.ohc.scale, coeffs.ohc.offset)),
        Mode::Approx => ohc_nlf_approx(t * t),
    }
}

/// Runs one input sample through the full chain and returns the BM outputs.
///
/// Order: CAR cascade, BM high-pass, inner hair cell, AGC, outer hair cell,
/// then the new undamping `u = NLF(v) · max(0, 1 − b)` sets the pole radius
/// and DC gain used by the next sample.
pub fn carfac_sample<'a>(state: &'a mut CarfacState, coeffs: &CarfacCoeffs, x: f64) -> Result<&'a [f64]> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput {
            index: state.samples,
            value: x,
        });
    }
    car_step(&mut state.car, &coeffs.car, x)?;

    let mode = state.mode;
    let (rest, offset) = match mode {
        Mode::Exact => (coeffs.ihc.rest_exact, coeffs.ihc.offset),
        Mode::Approx => (coeffs.ihc.rest_approx, coeffs.ihc.approx_offset),
    };
    for n in 0..coeffs.n_channels() {
        let hp = highpass_step(&mut state.hpf.lp[n], coeffs.hpf_k, state.car.y[n]);
        let v_mem = match mode {
            Mode::Exact => ihc_exact(hp, offset),
            Mode::Approx => ihc_approx_with_offset(hp, offset),
        };
        state.ihc.bm_hpf[n] = hp;
        state.ihc.v_mem[n] = v_mem;
        state.ihc.agc_in[n] = (v_mem - rest).max(0.0);
    }

    let b = agc_step(&mut state.agc, &coeffs.agc, &state.ihc.agc_in)?;

    let scale = coeffs.ohc.scale;
    let ohc_off = coeffs.ohc.offset;
    for (n, ch) in coeffs.car.channels.iter().enumerate() {
        let t = scale * state.car.v[n] + ohc_off;
        let sqr = t * t;
        let nlf = match mode {
            Mode::Exact => 1.0 / (1.0 + sqr),
            Mode::Approx => ohc_nlf_approx(sqr)?,
        };
        let u = (nlf * (1.0 - b[n]).max(0.0)).clamp(0.0, 1.0);
        let r = ch.radius(u);
        state.ohc.sqr[n] = sqr;
        state.ohc.nlf[n] = nlf;
        state.ohc.u[n] = u;
        state.car.r[n] = r;
        state.car.g[n] = match mode {
            Mode::Exact => g_exact(ch.a0, ch.c0, ch.h, r)?,
            Mode::Approx => ch.gain_fit.eval(u),
        };
    }
    state.samples += 1;
    Ok(&state.car.y)
}

/// Convenience: processes a whole buffer, returning a time-major cochleagram
/// (`samples × channels`).
pub fn process_buffer(state: &mut CarfacState, coeffs: &CarfacCoeffs, input: &[f64]) -> Result<Vec<f64>> {
    let n = coeffs.n_channels();
    let mut out = Vec::with_capacity(input.len() * n);
    for &x in input {
        out.extend_from_slice(carfac_sample(state, coeffs, x)?);
    }
    Ok(out)
}
