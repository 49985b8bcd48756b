use std::io::Write;
use std::path::Path;

use carfac::approx::{
    check_ihc_sweep, check_ohc_sweep, default_ihc_grid, default_ohc_grid, sweep_ihc, sweep_ohc, GainFit,
    GAIN_FIT_BOUND,
};
use carfac::{design_carfac, CarfacCoeffs};

use crate::args::{Check, VerifyArgs, DEFAULT_FS};
use crate::error::{CliError, CliResult};
use crate::output::create_file;

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| carfac::Error::file(&args.out_dir, e))?;
    let all = args.which == Check::All;
    let mut failures = Vec::new();

    if all || args.which == Check::Ihc {
        let s = sweep_ihc(&default_ihc_grid())?;
        s.write_csv(create_file(&args.out_dir.join("ihc.csv"))?)?;
        report("ihc", s.max_abs_error(), check_ihc_sweep(&s), &mut failures);
    }
    if all || args.which == Check::Ohc {
        let s = sweep_ohc(&default_ohc_grid())?;
        s.write_csv(create_file(&args.out_dir.join("ohc.csv"))?)?;
        report("ohc", s.max_abs_error(), check_ohc_sweep(&s), &mut failures);
    }
    if all || args.which == Check::Gain {
        let fs = args.model.fs.unwrap_or(DEFAULT_FS);
        let coeffs = design_carfac(&args.model.params(fs))?;
        let fits = match &args.gain_table {
            Some(p) => read_gain_table(p, coeffs.n_channels())?,
            None => coeffs.car.channels.iter().map(|c| c.gain_fit).collect(),
        };
        let worst = verify_gain(&coeffs, &fits, &args.out_dir.join("gainfit.csv"))?;
        let verdict = if worst.1 <= GAIN_FIT_BOUND {
            Ok(())
        } else {
            Err(format!(
                "channel {} gain fit error {:.6} exceeds {GAIN_FIT_BOUND}",
                worst.0, worst.1
            ))
        };
        report("gain", worst.1, verdict, &mut failures);
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn report(name: &str, value: f64, verdict: Result<(), String>, failures: &mut Vec<String>) {
    let tag = if verdict.is_ok() { "PASS" } else { "FAIL" };
    println!("{name}: max_error={value:.6} {tag}");
    if let Err(msg) = verdict {
        failures.push(msg);
    }
}

/// Writes gainfit.csv; returns the worst channel and its relative error.
fn verify_gain(coeffs: &CarfacCoeffs, fits: &[GainFit], path: &Path) -> CliResult<(usize, f64)> {
    let mut out = create_file(path)?;
    writeln!(out, "channel,pole_hz,gain_a,gain_b,gain_c,max_rel_error,max_abs_error,pass")?;
    let mut worst = (0, 0.0f64);
    for (i, (ch, fit)) in coeffs.car.channels.iter().zip(fits).enumerate() {
        let (rel, abs) = fit.verify(ch.a0, ch.c0, ch.h, ch.r1, ch.d_rz)?;
        if !(rel <= worst.1) {
            worst = (i, rel);
        }
        writeln!(
            out,
            "{i},{},{},{},{},{rel},{abs},{}",
            ch.pole_hz,
            fit.a,
            fit.b,
            fit.c,
            rel <= GAIN_FIT_BOUND
        )?;
    }
    out.flush()?;
    Ok(worst)
}

/// Reads `gain_a`, `gain_b`, `gain_c` columns, one row per channel.
fn read_gain_table(path: &Path, n_channels: usize) -> CliResult<Vec<GainFit>> {
    let file = std::fs::File::open(path).map_err(|e| carfac::Error::file(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let bad = |msg: String| carfac::Error::Parse { offset: 0, msg: format!("{}: {msg}", path.display()) };
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (ia, ib, ic) = (col("gain_a")?, col("gain_b")?, col("gain_c")?);
    let mut fits = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> CliResult<f64> {
            let field = rec.get(i).unwrap_or("");
            field
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: {field:?} is not a number", fits.len() + 1)).into())
        };
        fits.push(GainFit {
            a: num(ia)?,
            b: num(ib)?,
            c: num(ic)?,
            max_rel_error: f64::NAN,
            max_abs_error: f64::NAN,
        });
    }
    if fits.len() != n_channels {
        return Err(CliError::usage(format!(
            "{} has {} rows, the design has {n_channels} channels",
            path.display(),
            fits.len()
        )));
    }
    Ok(fits)
}
