#![allow(dead_code)]

use carfac::model::{car_step, carfac_sample, transfer_at, CarCoeffs, CarState, ChannelCoeffs};
use carfac::{CarfacCoeffs, CarfacState, Mode};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub const FS: f64 = 256_000.0;

/// Impulse response of every channel of the linear cascade at a fixed
/// undamping, `out[n][t]`.
pub fn cascade_impulse(car: &CarCoeffs, undamping: f64, len: usize) -> Vec<Vec<f64>> {
    let mut st = CarState::new(car, undamping).unwrap();
    let n = car.channels.len();
    let mut out = vec![Vec::with_capacity(len); n];
    for t in 0..len {
        car_step(&mut st, car, if t == 0 { 1.0 } else { 0.0 }).unwrap();
        for (o, y) in out.iter_mut().zip(&st.y) {
            o.push(*y);
        }
    }
    out
}

pub fn fft(x: &[f64], nfft: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    buf
}

/// FFT length that captures an impulse response of pole radius `r` down to
/// below 1e-12 of its start: at least 28 time constants, and at least 8192.
pub fn record_len(r: f64) -> usize {
    ((28.0 / (1.0 - r)).ceil() as usize).next_power_of_two().max(8192)
}

/// Largest relative deviation between one stage's FFT-measured response and
/// the closed form, over `n_freq` evenly spaced frequencies in [0, π).
pub fn stage_transfer_error(ch: &ChannelCoeffs, undamping: f64, nfft: usize, n_freq: usize) -> f64 {
    let car = CarCoeffs { channels: vec![ch.clone()] };
    let st = CarState::new(&car, undamping).unwrap();
    let (r, g) = (st.r[0], st.g[0]);
    let h = cascade_impulse(&car, undamping, nfft).remove(0);
    let spec = fft(&h, nfft);
    let step = nfft / 2 / n_freq;
    (0..n_freq)
        .map(|i| {
            let k = i * step;
            let w = 2.0 * std::f64::consts::PI * k as f64 / nfft as f64;
            let (re, im) = transfer_at(ch, r, g, (w.cos(), w.sin()));
            let direct = Complex64::new(re, im);
            (spec[k] - direct).norm() / direct.norm()
        })
        .fold(0.0, f64::max)
}

/// FFT-peak frequency (Hz, parabolic interpolation on log magnitude) of each
/// channel's cascade impulse response.
pub fn best_frequencies(car: &CarCoeffs, undamping: f64, fs: f64, nfft: usize) -> Vec<f64> {
    cascade_impulse(car, undamping, nfft)
        .iter()
        .map(|h| {
            let mag: Vec<f64> = fft(h, nfft)[..nfft / 2].iter().map(|c| c.norm().ln()).collect();
            let k = (1..mag.len() - 1)
                .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
                .unwrap();
            let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
            let off = 0.5 * (a - c) / (a - 2.0 * b + c);
            (k as f64 + off) * fs / nfft as f64
        })
        .collect()
}

/// Steady-state level (dB re 1) of channel `ch` for a tone of `dbfs` at
/// `hz`: mean square over the final `tail_s` of a `dur_s` run.
pub fn tone_level_db(c: &CarfacCoeffs, mode: Mode, ch: usize, hz: f64, dbfs: f64, dur_s: f64, tail_s: f64) -> f64 {
    let fs = c.sample_rate_hz;
    let amp = 10f64.powf(dbfs / 20.0);
    let n = (dur_s * fs) as usize;
    let start = n - (tail_s * fs) as usize;
    let mut st = CarfacState::new(c, mode).unwrap();
    let mut e = 0.0;
    for i in 0..n {
        let x = amp * (2.0 * std::f64::consts::PI * hz * i as f64 / fs).sin();
        let y = carfac_sample(&mut st, c, x).unwrap();
        if i >= start {
            e += y[ch] * y[ch];
        }
    }
    10.0 * (e / (n - start) as f64).log10()
}

/// Level sweep used by the compression checks: channel 32 driven at its
/// pole frequency from −60 to −20 dBFS in 10 dB steps, 0.5 s per level with
/// the last 0.1 s measured.
pub const SWEEP_DBFS: [f64; 5] = [-60.0, -50.0, -40.0, -30.0, -20.0];

/// The same sweep computed by an independent implementation of the
/// exact-mode chain (numba, fed this crate's channel design as printed by
/// `carfac design`).
pub const SWEEP_ORACLE_DB: [f64; 5] = [
    -26.317157076274746,
    -17.991963448647777,
    -11.188986760944006,
    -5.99347457287323,
    -2.610755289915687,
];

/// Top-of-range log-log slope ceiling, frozen from the oracle's 0.33827.
pub const TOP_SLOPE_MAX: f64 = 0.34;

pub fn compression_sweep(c: &CarfacCoeffs) -> Vec<f64> {
    let hz = c.car.channels[32].pole_hz;
    SWEEP_DBFS
        .iter()
        .map(|&db| tone_level_db(c, Mode::Exact, 32, hz, db, 0.5, 0.1))
        .collect()
}

/// dB change in output per dB change in input between adjacent levels.
pub fn slopes(levels: &[f64]) -> Vec<f64> {
    levels
        .windows(2)
        .zip(SWEEP_DBFS.windows(2))
        .map(|(l, i)| (l[1] - l[0]) / (i[1] - i[0]))
        .collect()
}
