use carfac::fixed::{analyze_schedule, ScheduleParams};

use crate::args::ScheduleArgs;
use crate::error::{CliError, CliResult};

pub fn cmd_schedule(args: &ScheduleArgs) -> CliResult<()> {
    let params = ScheduleParams {
        pipeline_depth: args.depth,
        initiation_interval: args.ii,
        util_fraction: args.util,
        ..ScheduleParams::new(args.channels, args.fs, args.clock)
    };
    let report = analyze_schedule(&params)?;
    print!("{report}");
    if !report.feasible {
        return Err(CliError::Infeasible {
            used: report.cycles_per_sample_used,
            budget: report.cycles_per_sample_budget,
        });
    }
    Ok(())
}
