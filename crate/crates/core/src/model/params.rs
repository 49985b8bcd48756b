use std::f64::consts::PI;

use crate::approx::{fit_gain_quadratic, GainFit};
use crate::{Error, Result};

use super::agc::AgcCoeffs;

/// Glasberg & Moore ERB model constants, in the form `ERB(f) = (break + f) / q`.
pub const ERB_BREAK_FREQ_HZ: f64 = 165.3;
pub const ERB_Q: f64 = 1000.0 / (24.7 * 4.37);

pub fn erb_hz(f: f64) -> f64 {
    (ERB_BREAK_FREQ_HZ + f) / ERB_Q
}

/// ERB-number scale: the integral of `1 / ERB(f)`.
pub fn hz_to_erb_rate(f: f64) -> f64 {
    ERB_Q * (f / ERB_BREAK_FREQ_HZ).ln_1p()
}

pub fn erb_rate_to_hz(e: f64) -> f64 {
    ERB_BREAK_FREQ_HZ * (e / ERB_Q).exp_m1()
}

/// User-facing design parameters for a CARFAC instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CarfacParams {
    pub sample_rate_hz: f64,
    pub n_channels: usize,
    pub min_pole_hz: f64,
    pub max_pole_hz: f64,
    /// Fixed ERB step between adjacent channels. `None` spreads the channels
    /// evenly on the ERB-rate scale between `max_pole_hz` and `min_pole_hz`.
    pub erb_per_step: Option<f64>,
    /// Zero frequency relative to the pole; `h = c0 * (zero_ratio² - 1)`.
    pub zero_ratio: f64,
    pub max_zeta: f64,
    pub min_zeta: f64,
    pub high_f_damping_compression: f64,
    pub ihc_offset: f64,
    pub ihc_approx_offset: f64,
    pub ohc_scale: f64,
    pub ohc_offset: f64,
    pub agc_time_constants_s: [f64; 4],
    pub agc_spatial_s1: f64,
    pub agc_spatial_s2: f64,
    pub agc_stage_gains: [f64; 4],
    /// Update stage k every `8 * 2^k` samples. Off runs every stage every sample.
    pub agc_decimation: bool,
    pub hpf_cutoff_hz: f64,
}

impl CarfacParams {
    pub fn new(sample_rate_hz: f64, n_channels: usize) -> Self {
        CarfacParams {
            sample_rate_hz,
            n_channels,
            min_pole_hz: 30.0,
            max_pole_hz: 0.25 * sample_rate_hz,
            erb_per_step: None,
            zero_ratio: std::f64::consts::SQRT_2,
            max_zeta: 0.35,
            min_zeta: 0.1,
            high_f_damping_compression: 0.5,
            ihc_offset: 0.175,
            ihc_approx_offset: 0.13,
            ohc_scale: 0.1,
            ohc_offset: 0.04,
            agc_time_constants_s: [0.002, 0.008, 0.032, 0.128],
            agc_spatial_s1: 0.25,
            agc_spatial_s2: 0.25,
            agc_stage_gains: [1.0; 4],
            agc_decimation: true,
            hpf_cutoff_hz: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.sample_rate_hz;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config(format!("sample rate must be positive, got {fs}")));
        }
        if self.n_channels == 0 {
            return Err(Error::config("n_channels must be at least 1"));
        }
        if !(self.min_pole_hz > 0.0
            && self.min_pole_hz < self.max_pole_hz
            && self.max_pole_hz < fs / 2.0)
        {
            return Err(Error::config(format!(
                "pole range must satisfy 0 < min ({}) < max ({}) < fs/2 ({})",
                self.min_pole_hz,
                self.max_pole_hz,
                fs / 2.0
            )));
        }
        if let Some(step) = self.erb_per_step {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::config(format!("erb_per_step must be positive, got {step}")));
            }
        }
        if !(self.zero_ratio >= 1.0) {
            return Err(Error::config("zero_ratio must be at least 1"));
        }
        if !(self.min_zeta > 0.0 && self.min_zeta < self.max_zeta && self.max_zeta < 1.0) {
            return Err(Error::config("damping must satisfy 0 < min_zeta < max_zeta < 1"));
        }
        if !(0.0..=1.0).contains(&self.high_f_damping_compression) {
            return Err(Error::config("high_f_damping_compression must lie in [0, 1]"));
        }
        let tc = &self.agc_time_constants_s;
        if tc[0] <= 0.0 || tc.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(format!(
                "AGC time constants must be positive and strictly increasing, got {tc:?}"
            )));
        }
        let (s1, s2) = (self.agc_spatial_s1, self.agc_spatial_s2);
        if !(s1 >= 0.0 && s2 >= 0.0 && s1 + s2 <= 1.0) {
            return Err(Error::config(format!(
                "spatial taps need s1, s2 >= 0 and s1 + s2 <= 1, got ({s1}, {s2})"
            )));
        }
        if self.agc_stage_gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::config("AGC stage gains must be finite and non-negative"));
        }
        if !(self.hpf_cutoff_hz > 0.0 && self.hpf_cutoff_hz < fs / 2.0) {
            return Err(Error::config(format!(
                "high-pass cutoff must lie in (0, fs/2), got {}",
                self.hpf_cutoff_hz
            )));
        }
        Ok(())
    }

    /// Pole frequencies, highest first.
    pub fn pole_frequencies(&self) -> Result<Vec<f64>> {
        let n = self.n_channels;
        let top = hz_to_erb_rate(self.max_pole_hz);
        match self.erb_per_step {
            Some(step) => {
                let freqs: Vec<f64> = (0..n)
                    .map(|i| erb_rate_to_hz(top - step * i as f64))
                    .collect();
                let last = *freqs.last().unwrap();
                if last < self.min_pole_hz {
                    return Err(Error::config(format!(
                        "{n} channels at {step} ERB/step reach {last:.2} Hz, below min_pole_hz {}",
                        self.min_pole_hz
                    )));
                }
                Ok(freqs)
            }
            None if n == 1 => Ok(vec![self.max_pole_hz]),
            None => {
                let bottom = hz_to_erb_rate(self.min_pole_hz);
                let step = (top - bottom) / (n - 1) as f64;
                Ok((0..n)
                    .map(|i| {
                        if i == n - 1 {
                            self.min_pole_hz
                        } else {
                            erb_rate_to_hz(top - step * i as f64)
                        }
                    })
                    .collect())
            }
        }
    }
}

impl Default for CarfacParams {
    fn default() -> Self {
        CarfacParams::new(256_000.0, 64)
    }
}

/// Designed constants for one resonator stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoeffs {
    pub pole_hz: f64,
    pub a0: f64,
    pub c0: f64,
    pub h: f64,
    /// Pole radius at maximum damping.
    pub r1: f64,
    /// Radius range swept by the undamping factor: `r = r1 + d_rz * u`.
    pub d_rz: f64,
    pub gain_fit: GainFit,
}

impl ChannelCoeffs {
    pub fn radius(&self, undamping: f64) -> f64 {
        self.r1 + self.d_rz * undamping
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarCoeffs {
    pub channels: Vec<ChannelCoeffs>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IhcCoeffs {
    pub offset: f64,
    pub approx_offset: f64,
    /// Hair-cell output with the BM at rest; subtracted before the AGC.
    pub rest_exact: f64,
    pub rest_approx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhcCoeffs {
    pub scale: f64,
    pub offset: f64,
}

/// Immutable, shareable design for one CARFAC instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CarfacCoeffs {
    pub sample_rate_hz: f64,
    pub car: CarCoeffs,
    pub ihc: IhcCoeffs,
    pub ohc: OhcCoeffs,
    pub agc: AgcCoeffs,
    /// One-pole high-pass tracking coefficient, `1 - exp(-2π fc / fs)`.
    pub hpf_k: f64,
}

impl CarfacCoeffs {
    pub fn n_channels(&self) -> usize {
        self.car.channels.len()
    }
}

pub fn design_carfac(params: &CarfacParams) -> Result<CarfacCoeffs> {
    params.validate()?;
    let fs = params.sample_rate_hz;
    let f_gain = params.zero_ratio * params.zero_ratio - 1.0;

    let mut channels = Vec::with_capacity(params.n_channels);
    for pole_hz in params.pole_frequencies()? {
        let theta = 2.0 * PI * pole_hz / fs;
        let (c0, a0) = theta.sin_cos();
        let h = c0 * f_gain;
        // Damping scale: 2πf/fs compressed toward Nyquist.
        let x = theta / PI;
        let zr = PI * (x - params.high_f_damping_compression * x * x * x);
        let r1 = 1.0 - zr * params.max_zeta;
        let min_zeta = params.min_zeta + 0.25 * (erb_hz(pole_hz) / pole_hz - params.min_zeta);
        let min_zeta = min_zeta.clamp(params.min_zeta, params.max_zeta);
        let d_rz = zr * (params.max_zeta - min_zeta);
        if r1 <= 0.0 || r1 + d_rz > 1.0 {
            return Err(Error::config(format!(
                "channel at {pole_hz:.2} Hz has unstable radius range [{r1}, {}]",
                r1 + d_rz
            )));
        }
        let gain_fit = fit_gain_quadratic(a0, c0, h, r1, d_rz)?;
        channels.push(ChannelCoeffs {
            pole_hz,
            a0,
            c0,
            h,
            r1,
            d_rz,
            gain_fit,
        });
    }

    let rest_exact = super::ihc_exact(0.0, params.ihc_offset);
    let rest_approx = crate::approx::ihc_approx_with_offset(0.0, params.ihc_approx_offset);

    Ok(CarfacCoeffs {
        sample_rate_hz: fs,
        car: CarCoeffs { channels },
        ihc: IhcCoeffs {
            offset: params.ihc_offset,
            approx_offset: params.ihc_approx_offset,
            rest_exact,
            rest_approx,
        },
        ohc: OhcCoeffs {
            scale: params.ohc_scale,
            offset: params.ohc_offset,
        },
        agc: AgcCoeffs::design(params)?,
        hpf_k: -(-2.0 * PI * params.hpf_cutoff_hz / fs).exp_m1(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_design_has_64_descending_channels() {
        let c = design_carfac(&CarfacParams::default()).unwrap();
        assert_eq!(c.n_channels(), 64);
        let f: Vec<f64> = c.car.channels.iter().map(|ch| ch.pole_hz).collect();
        assert!(f.windows(2).all(|w| w[1] < w[0]));
        assert!((f[0] - 64_000.0).abs() < 1e-6);
        assert!((f[63] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn coefficient_invariants() {
        let c = design_carfac(&CarfacParams::default()).unwrap();
        for ch in &c.car.channels {
            assert!((ch.a0 * ch.a0 + ch.c0 * ch.c0 - 1.0).abs() < 1e-12);
            assert!(ch.r1 > 0.0 && ch.r1 < 1.0);
            assert!(ch.d_rz > 0.0);
            assert!(ch.r1 + ch.d_rz <= 1.0);
        }
    }

    #[test]
    fn nyquist_bound_rejected() {
        let mut p = CarfacParams::new(16_000.0, 8);
        p.max_pole_hz = 8_000.0;
        assert!(matches!(design_carfac(&p), Err(Error::Config(_))));
    }

    #[test]
    fn zero_channels_rejected() {
        let p = CarfacParams::new(16_000.0, 0);
        assert!(matches!(design_carfac(&p), Err(Error::Config(_))));
    }

    #[test]
    fn quarter_rate_single_channel() {
        let p = CarfacParams::new(16_000.0, 1);
        let c = design_carfac(&p).unwrap();
        let ch = &c.car.channels[0];
        assert_eq!(ch.pole_hz, 4_000.0);
        assert!(ch.a0.abs() < 1e-15);
        assert!((ch.c0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_erb_step() {
        let mut p = CarfacParams::new(48_000.0, 20);
        p.erb_per_step = Some(1.0);
        let f = p.pole_frequencies().unwrap();
        for w in f.windows(2) {
            let d = hz_to_erb_rate(w[0]) - hz_to_erb_rate(w[1]);
            assert!((d - 1.0).abs() < 1e-9);
        }
        p.n_channels = 200;
        assert!(p.pole_frequencies().is_err());
    }

    #[test]
    fn bad_agc_parameters_rejected() {
        let mut p = CarfacParams::default();
        p.agc_time_constants_s = [0.002, 0.002, 0.032, 0.128];
        assert!(p.validate().is_err());
        let mut p = CarfacParams::default();
        p.agc_spatial_s1 = 0.7;
        p.agc_spatial_s2 = 0.4;
        assert!(p.validate().is_err());
    }

    #[test]
    fn erb_rate_roundtrip() {
        for f in [10.0, 100.0, 1234.5, 64_000.0] {
            assert!((erb_rate_to_hz(hz_to_erb_rate(f)) - f).abs() < 1e-9 * f);
        }
    }
}
