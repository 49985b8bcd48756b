/// One-pole high-pass per channel: `y = x − lp; lp += k·y`.
///
/// H(z) = (1 − z⁻¹) / (1 − (1 − k) z⁻¹), so DC is rejected and a step's
/// first output sample equals the step height.
#[derive(Debug, Clone, PartialEq)]
pub struct HighpassState {
    pub lp: Vec<f64>,
}

impl HighpassState {
    pub fn new(n_channels: usize) -> Self {
        HighpassState {
            lp: vec![0.0; n_channels],
        }
    }
}

#[inline]
pub fn highpass_step(lp: &mut f64, k: f64, x: f64) -> f64 {
    let y = x - *lp;
    *lp += k * y;
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn k_for(fc: f64, fs: f64) -> f64 {
        -(-2.0 * PI * fc / fs).exp_m1()
    }

    #[test]
    fn rejects_dc_after_ten_time_constants() {
        let k = k_for(20.0, 16_000.0);
        let n = (10.0 / k).ceil() as usize;
        let mut lp = 0.0;
        let mut y = 0.0;
        for _ in 0..n {
            y = highpass_step(&mut lp, k, 0.7);
        }
        assert!(y.abs() <= 1e-3 * 0.7);
    }

    #[test]
    fn zero_in_zero_out() {
        let mut lp = 0.0;
        assert_eq!(highpass_step(&mut lp, 0.01, 0.0), 0.0);
        assert_eq!(lp, 0.0);
    }

    #[test]
    fn step_passes_first_sample() {
        let mut lp = 0.0;
        assert_eq!(highpass_step(&mut lp, k_for(20.0, 256_000.0), 0.42), 0.42);
    }
}
