use carfac::fixed::{quantization_bound, FxConfig, FxEngine, GainMode, OpKind, Rounding};
use carfac::model::carfac_sample;
use carfac::{design_carfac, CarfacCoeffs, CarfacParams, CarfacState, Mode};

struct Fidelity {
    snr_db: f64,
    floor_db: f64,
    max_abs_err: Vec<f64>,
    abs_bound: Vec<f64>,
    saturations: u64,
}

/// Runs the fixed engine beside the float approx chain on a tone and
/// compares the measured SNR with the quantization budget.
fn fidelity(c: &CarfacCoeffs, cfg: FxConfig, hz: f64, dbfs: f64, secs: f64, skip: f64) -> Fidelity {
    let fs = c.sample_rate_hz;
    let n = c.n_channels();
    let mut fx = FxEngine::new(c, cfg).unwrap();
    let mut st = CarfacState::new(c, Mode::Approx).unwrap();
    let amp = 10f64.powf(dbfs / 20.0);
    let (mut sig, mut err, mut max_abs_err) = (vec![0.0; n], vec![0.0; n], vec![0.0f64; n]);
    let total = (secs * fs) as usize;
    let start = (skip * fs) as usize;
    for i in 0..total {
        let x = amp * (2.0 * std::f64::consts::PI * hz * i as f64 / fs).sin();
        let yf = carfac_sample(&mut st, c, x).unwrap();
        let yq = fx.process_f64(x).unwrap();
        if i >= start {
            for ch in 0..n {
                let e = yf[ch] - yq[ch].to_f64();
                sig[ch] += yf[ch] * yf[ch];
                err[ch] += e * e;
                max_abs_err[ch] = max_abs_err[ch].max(e.abs());
            }
        }
    }
    let m = (total - start) as f64;
    let power: Vec<f64> = sig.iter().map(|s| s / m).collect();
    let bound = quantization_bound(&fx.coeffs, c).unwrap();
    Fidelity {
        snr_db: 10.0 * (sig.iter().sum::<f64>() / err.iter().sum::<f64>()).log10(),
        floor_db: bound.snr_floor_db(&power).unwrap(),
        max_abs_err,
        abs_bound: bound.abs_bound,
        saturations: fx.saturations(),
    }
}

fn small_design() -> CarfacCoeffs {
    design_carfac(&CarfacParams::new(48_000.0, 16)).unwrap()
}

#[test]
fn measured_snr_clears_the_quantization_floor() {
    let c = small_design();
    for rounding in [Rounding::Truncate, Rounding::Nearest] {
        let f = fidelity(&c, FxConfig::default().with_rounding(rounding), 1000.0, -20.0, 0.6, 0.1);
        assert_eq!(f.saturations, 0);
        assert!(f.snr_db >= f.floor_db, "{rounding:?}: {:.2} dB below floor {:.2} dB", f.snr_db, f.floor_db);
        for (e, b) in f.max_abs_err.iter().zip(&f.abs_bound) {
            assert!(e <= b, "{e:e} > {b:e}");
        }
    }
}

#[test]
fn rounding_to_nearest_is_at_least_as_good() {
    let c = small_design();
    let t = fidelity(&c, FxConfig::default(), 1000.0, -20.0, 0.3, 0.1);
    let r = fidelity(&c, FxConfig::default().with_rounding(Rounding::Nearest), 1000.0, -20.0, 0.3, 0.1);
    assert!(r.snr_db > t.snr_db);
    assert!(r.floor_db > t.floor_db);
}

#[test]
fn gain_table_mode_tracks_the_reference() {
    let c = small_design();
    let cfg = FxConfig {
        gain_mode: GainMode::Table { depth_bits: 8 },
        ..FxConfig::default()
    };
    let f = fidelity(&c, cfg, 1000.0, -20.0, 0.3, 0.1);
    assert_eq!(f.saturations, 0);
    assert!(f.snr_db > 25.0, "{}", f.snr_db);
}

#[test]
fn fixed_engine_is_bit_deterministic_and_division_free() {
    let c = small_design();
    let run = || {
        let mut e = FxEngine::new(&c, FxConfig::default()).unwrap();
        let mut out = Vec::new();
        for i in 0..5000 {
            let x = 0.3 * (i as f64 * 0.05).sin() + 0.2 * (i as f64 * 0.31).cos();
            out.extend(e.process_f64(x).unwrap().iter().map(|v| v.raw));
        }
        (out, e.audit().unwrap())
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert_eq!(ha.get(OpKind::Divide), 0);
    assert!(ha.get(OpKind::Mul) > 0);
}
