use std::io::Write;

use carfac::design_carfac;

use crate::args::{DesignArgs, DEFAULT_FS};
use crate::error::CliResult;
use crate::output::open_output;

pub const HEADER: &str =
    "channel,pole_hz,a0,c0,h,r1,d_rz,gain_a,gain_b,gain_c,fit_max_rel_error,fit_max_abs_error";

pub fn cmd_design(args: &DesignArgs) -> CliResult<()> {
    let fs = args.model.fs.unwrap_or(DEFAULT_FS);
    let coeffs = design_carfac(&args.model.params(fs))?;
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "{HEADER}")?;
    for (i, ch) in coeffs.car.channels.iter().enumerate() {
        let g = &ch.gain_fit;
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{},{},{}",
            ch.pole_hz, ch.a0, ch.c0, ch.h, ch.r1, ch.d_rz, g.a, g.b, g.c, g.max_rel_error, g.max_abs_error
        )?;
    }
    out.flush()?;
    Ok(())
}
