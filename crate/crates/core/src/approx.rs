//! Division-free stand-ins for the three divisions in the CARFAC chain.
//!
//! Every evaluation path here uses only multiply, add, min/max and squaring.
//! The eighth powers are three successive squarings.

use std::io::Write;

use crate::model::{g_exact, ihc_exact, ohc_exact};
use crate::{Error, Result};

pub const IHC_APPROX_OFFSET: f64 = 0.13;
pub const IHC_EXACT_OFFSET: f64 = 0.175;
pub const OHC_SCALE: f64 = 0.1;
pub const OHC_OFFSET: f64 = 0.04;

/// Points in the least-squares grid for the gain fit.
pub const FIT_GRID: usize = 256;
/// Points in the verification grid for the gain fit.
pub const VERIFY_GRID: usize = 4096;
/// Maximum relative error allowed between the quadratic and the exact gain.
pub const GAIN_FIT_BOUND: f64 = 0.006;

/// Regression ceilings for the default sweeps, frozen from a dense
/// extended-precision sweep (IHC peak error 0.127081 at 1.10, OHC 0.236630
/// at −15.64) with a small margin. The OHC approximation never exceeds the
/// exact curve, so its overshoot ceiling is zero.
pub const IHC_SWEEP_MAX_ABS: f64 = 0.1271;
pub const OHC_SWEEP_MAX_ABS: f64 = 0.2367;
pub const OHC_SWEEP_MAX_OVERSHOOT: f64 = 0.0;

#[inline]
pub fn pow8(x: f64) -> f64 {
    let x2 = x * x;
    let x4 = x2 * x2;
    x4 * x4
}

/// Inner hair cell approximation with the default offset.
pub fn ihc_approx(bm_hpf: f64) -> f64 {
    ihc_approx_with_offset(bm_hpf, IHC_APPROX_OFFSET)
}

/// `0.75·(1 − p)²` with `p = min(1, p_int⁸)` and
/// `p_int = max(0, 1 − (bm_hpf + offset)/4)`. Bounded in `[0, 0.75]`.
pub fn ihc_approx_with_offset(bm_hpf: f64, offset: f64) -> f64 {
    // The quarter is a constant scale (a shift in fixed point).
    let p_int = (1.0 - (bm_hpf + offset) * 0.25).max(0.0);
    // p_int ≥ 0, so min(1, p_int⁸) = min(1, p_int)⁸ and the clamp avoids overflow.
    let p = pow8(p_int.min(1.0));
    let q = 1.0 - p;
    0.75 * q * q
}

/// Outer hair cell approximation `max(0, 1 − sqr/8)⁸`. Zero for `sqr ≥ 8`.
pub fn ohc_nlf_approx(sqr: f64) -> Result<f64> {
    if !(sqr >= 0.0) {
        return Err(Error::Contract(format!("sqr must be non-negative, got {sqr}")));
    }
    Ok(pow8((1.0 - sqr * 0.125).max(0.0)))
}

/// The outer hair cell approximation as a function of BM velocity.
pub fn ohc_approx_of_velocity(v: f64, scale: f64, offset: f64) -> f64 {
    let t = scale * v + offset;
    pow8((1.0 - t * t * 0.125).max(0.0))
}

/// Quadratic in the undamping factor standing in for the exact DC gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Maximum of `|fit − exact| / exact` over the verification grid.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

impl GainFit {
    /// `A·u² + B·u + C`, in Horner form (two multiplies).
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.a * u + self.b) * u + self.c
    }

    /// Re-measures this fit's error against the exact gain of a channel.
    pub fn verify(&self, a0: f64, c0: f64, h: f64, r1: f64, d_rz: f64) -> Result<(f64, f64)> {
        let mut max_rel: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for i in 0..VERIFY_GRID {
            let u = i as f64 / (VERIFY_GRID - 1) as f64;
            let exact = g_exact(a0, c0, h, r1 + d_rz * u)?;
            let err = (self.eval(u) - exact).abs();
            max_abs = max_abs.max(err);
            max_rel = max_rel.max(err / exact.abs());
        }
        Ok((max_rel, max_abs))
    }
}

/// Least-squares quadratic fit of `g_exact(a0, c0, h, r1 + d_rz·u)` over
/// `u ∈ [0, 1]`, verified on a denser grid.
pub fn fit_gain_quadratic(a0: f64, c0: f64, h: f64, r1: f64, d_rz: f64) -> Result<GainFit> {
    let mut us = Vec::with_capacity(FIT_GRID);
    let mut gs = Vec::with_capacity(FIT_GRID);
    for i in 0..FIT_GRID {
        let u = i as f64 / (FIT_GRID - 1) as f64;
        us.push(u);
        gs.push(g_exact(a0, c0, h, r1 + d_rz * u)?);
    }

    let (a, b, c) = if gs.iter().all(|&g| g == gs[0]) {
        (0.0, 0.0, gs[0])
    } else {
        // Normal equations for the basis (u², u, 1).
        let mut m = [[0.0f64; 4]; 3];
        for (&u, &g) in us.iter().zip(&gs) {
            let basis = [u * u, u, 1.0];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
                m[i][3] += basis[i] * g;
            }
        }
        let sol = solve3(m).ok_or_else(|| {
            Error::Fit(format!(
                "singular normal equations for channel (a0={a0}, c0={c0}, h={h}, r1={r1}, d_rz={d_rz})"
            ))
        })?;
        (sol[0], sol[1], sol[2])
    };

    let mut fit = GainFit {
        a,
        b,
        c,
        max_rel_error: 0.0,
        max_abs_error: 0.0,
    };
    let (rel, abs) = fit.verify(a0, c0, h, r1, d_rz)?;
    fit.max_rel_error = rel;
    fit.max_abs_error = abs;
    Ok(fit)
}

/// Gaussian elimination with partial pivoting on an augmented 3×4 system.
fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][3] - tail) / m[row][row];
    }
    Some(x)
}

/// Paired exact/approximate curves over an input grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSweep {
    pub input: Vec<f64>,
    pub exact: Vec<f64>,
    pub approx: Vec<f64>,
    pub abs_error: Vec<f64>,
}

impl ErrorSweep {
    fn from_fns(grid: &[f64], exact: impl Fn(f64) -> f64, approx: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Contract("sweep grid is empty".into()));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("sweep grid must be finite".into()));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Contract("sweep grid must be sorted".into()));
        }
        let exact: Vec<f64> = grid.iter().map(|&x| exact(x)).collect();
        let approx: Vec<f64> = grid.iter().map(|&x| approx(x)).collect();
        let abs_error = exact.iter().zip(&approx).map(|(e, a)| (e - a).abs()).collect();
        Ok(ErrorSweep {
            input: grid.to_vec(),
            exact,
            approx,
            abs_error,
        })
    }

    pub fn max_abs_error(&self) -> f64 {
        self.abs_error.iter().copied().fold(0.0, f64::max)
    }

    /// Largest amount by which the approximation exceeds the exact curve.
    pub fn max_overshoot(&self) -> f64 {
        self.exact
            .iter()
            .zip(&self.approx)
            .map(|(e, a)| a - e)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "input,exact,approx,abs_error")?;
        for i in 0..self.input.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.input[i], self.exact[i], self.approx[i], self.abs_error[i]
            )?;
        }
        Ok(())
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn default_ihc_grid() -> Vec<f64> {
    linspace(-0.5, 4.0, 4501)
}

pub fn default_ohc_grid() -> Vec<f64> {
    linspace(-50.0, 50.0, 10_001)
}

pub fn sweep_ihc(grid: &[f64]) -> Result<ErrorSweep> {
    ErrorSweep::from_fns(grid, |x| ihc_exact(x, IHC_EXACT_OFFSET), ihc_approx)
}

pub fn sweep_ohc(grid: &[f64]) -> Result<ErrorSweep> {
    sweep_ohc_with(grid, OHC_SCALE, OHC_OFFSET)
}

pub fn sweep_ohc_with(grid: &[f64], scale: f64, offset: f64) -> Result<ErrorSweep> {
    ErrorSweep::from_fns(
        grid,
        |v| ohc_exact(v, scale, offset),
        |v| ohc_approx_of_velocity(v, scale, offset),
    )
}

/// Which frozen sweep limit a curve broke, if any.
pub fn check_ihc_sweep(s: &ErrorSweep) -> std::result::Result<(), String> {
    let e = s.max_abs_error();
    if e > IHC_SWEEP_MAX_ABS {
        return Err(format!("ihc max abs error {e:.6} exceeds {IHC_SWEEP_MAX_ABS}"));
    }
    Ok(())
}

pub fn check_ohc_sweep(s: &ErrorSweep) -> std::result::Result<(), String> {
    let e = s.max_abs_error();
    if e > OHC_SWEEP_MAX_ABS {
        return Err(format!("ohc max abs error {e:.6} exceeds {OHC_SWEEP_MAX_ABS}"));
    }
    let o = s.max_overshoot();
    if o > OHC_SWEEP_MAX_OVERSHOOT {
        return Err(format!("ohc approximation overshoots the exact curve by {o:.3e}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ihc_approx_reference_points() {
        assert_eq!(ihc_approx(-0.13), 0.0);
        let v = ihc_approx(0.87);
        let p = 0.75f64.powi(8);
        assert!((p - 0.100_112_915).abs() < 1e-9);
        assert!((v - 0.75 * (1.0 - p) * (1.0 - p)).abs() < 1e-15);
        assert!((v - 0.607_347_6).abs() < 1e-7);
        assert_eq!(ihc_approx(3.87), 0.75);
    }

    #[test]
    fn ohc_approx_reference_points() {
        assert_eq!(ohc_nlf_approx(0.0).unwrap(), 1.0);
        assert_eq!(ohc_nlf_approx(8.0).unwrap(), 0.0);
        assert_eq!(ohc_nlf_approx(100.0).unwrap(), 0.0);
        let v = ohc_nlf_approx(0.0016).unwrap();
        assert!((v - 0.9998f64.powi(8)).abs() < 1e-15);
        assert!((v - 0.998_401_1).abs() < 1e-7);
        assert!(matches!(ohc_nlf_approx(-1e-9), Err(Error::Contract(_))));
    }

    #[test]
    fn constant_target_fit_is_exact() {
        let fit = fit_gain_quadratic(0.8, 0.6, 0.0, 0.5, 0.3).unwrap();
        assert_eq!((fit.a, fit.b, fit.c), (0.0, 0.0, 1.0));
        assert_eq!(fit.max_rel_error, 0.0);
    }

    #[test]
    fn fit_is_deterministic() {
        let f1 = fit_gain_quadratic(0.9, 0.435_889_894, 0.435_889_894, 0.85, 0.1).unwrap();
        let f2 = fit_gain_quadratic(0.9, 0.435_889_894, 0.435_889_894, 0.85, 0.1).unwrap();
        assert_eq!(f1.a.to_bits(), f2.a.to_bits());
        assert_eq!(f1.b.to_bits(), f2.b.to_bits());
        assert_eq!(f1.c.to_bits(), f2.c.to_bits());
    }

    #[test]
    fn singular_channel_errors() {
        // r hits the pole of the exact gain at u = 0.
        assert!(fit_gain_quadratic(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn solve3_recovers_known_solution() {
        let m = [[2.0, 1.0, 0.0, 4.0], [1.0, 3.0, 1.0, 10.0], [0.0, 1.0, 4.0, 14.0]];
        let x = solve3(m).unwrap();
        for (xi, e) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - e).abs() < 1e-12);
        }
        assert!(solve3([[1.0, 2.0, 3.0, 0.0], [2.0, 4.0, 6.0, 0.0], [0.0, 0.0, 1.0, 0.0]]).is_none());
    }

    #[test]
    fn sweeps_reject_bad_grids() {
        assert!(sweep_ihc(&[]).is_err());
        assert!(sweep_ihc(&[0.1, 0.0]).is_err());
        assert!(sweep_ohc(&[f64::NAN]).is_err());
    }

    #[test]
    fn ihc_sweep_at_exact_zero() {
        let s = sweep_ihc(&[-0.175]).unwrap();
        assert_eq!(s.exact[0], 0.0);
        assert_eq!(s.approx[0], 0.0);
        assert_eq!(s.abs_error[0], 0.0);
    }

    #[test]
    fn sweep_csv_has_header() {
        let s = sweep_ohc(&[-0.4, 0.0]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("input,exact,approx,abs_error\n-0.4,1,1,0\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn default_sweeps_sit_under_frozen_limits() {
        let ihc = sweep_ihc(&default_ihc_grid()).unwrap();
        let ohc = sweep_ohc(&default_ohc_grid()).unwrap();
        assert!(check_ihc_sweep(&ihc).is_ok());
        assert!(check_ohc_sweep(&ohc).is_ok());
        // Within 1e-4 of the oracle peaks: the limits are tight, not loose.
        assert!(ihc.max_abs_error() > IHC_SWEEP_MAX_ABS - 1e-4);
        assert!(ohc.max_abs_error() > OHC_SWEEP_MAX_ABS - 1e-4);
    }

    #[test]
    fn overshoot_is_flagged() {
        let mut s = sweep_ohc(&[-0.4, 0.0]).unwrap();
        s.approx[1] = s.exact[1] + 0.01;
        assert!(check_ohc_sweep(&s).unwrap_err().contains("overshoots"));
    }

    proptest! {
        #[test]
        fn ihc_approx_saturates(x in -100.0f64..-0.13, y in 3.87f64..100.0) {
            prop_assert_eq!(ihc_approx(x), 0.0);
            prop_assert_eq!(ihc_approx(y), 0.75);
        }

        #[test]
        fn ihc_approx_monotone_bounded(a in -1.0f64..5.0, d in 0.0f64..1.0) {
            let lo = ihc_approx(a);
            prop_assert!((0.0..=0.75).contains(&lo));
            prop_assert!(ihc_approx(a + d) >= lo);
        }

        #[test]
        fn ohc_approx_never_exceeds_exact(v in -100.0f64..100.0) {
            // (1 − s/8)⁸ ≤ e^(−s) ≤ 1/(1 + s)
            let e = ohc_exact(v, OHC_SCALE, OHC_OFFSET);
            let a = ohc_approx_of_velocity(v, OHC_SCALE, OHC_OFFSET);
            prop_assert!(a <= e + 1e-15);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
