//! Cycle-budget model for a time-multiplexed CARFAC core.
//!
//! One circuit serves every channel, so each input sample costs one
//! initiation interval per channel plus the pipeline fill.

use std::fmt;

use crate::{Error, Result};

pub const DEFAULT_PIPELINE_DEPTH: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub n_channels: u64,
    pub sample_rate_hz: f64,
    pub clock_hz: f64,
    /// Total register stages across the CAR, IHC, AGC and OHC modules.
    pub pipeline_depth: u64,
    /// Clocks between successive channels entering the pipeline.
    pub initiation_interval: u64,
    /// Fraction of device resources one instance occupies.
    pub util_fraction: f64,
}

impl ScheduleParams {
    pub fn new(n_channels: u64, sample_rate_hz: f64, clock_hz: f64) -> Self {
        ScheduleParams {
            n_channels,
            sample_rate_hz,
            clock_hz,
            pipeline_depth: DEFAULT_PIPELINE_DEPTH,
            initiation_interval: 1,
            util_fraction: 1.0,
        }
    }

    pub fn with_stage_depths(mut self, depths: &[u64]) -> Self {
        self.pipeline_depth = depths.iter().sum();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub clock_hz: f64,
    pub sample_rate_hz: f64,
    pub n_channels: u64,
    pub cycles_per_sample_budget: u64,
    pub cycles_per_sample_used: u64,
    pub pipeline_depth: u64,
    pub feasible: bool,
    pub max_instances_by_util: u64,
}

pub fn analyze_schedule(p: &ScheduleParams) -> Result<ScheduleReport> {
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if !positive(p.sample_rate_hz) || !positive(p.clock_hz) {
        return Err(Error::config("sample rate and clock must be positive"));
    }
    if p.n_channels == 0 {
        return Err(Error::config("channel count must be positive"));
    }
    if !positive(p.util_fraction) || p.util_fraction > 1.0 {
        return Err(Error::config("utilization fraction must be in (0, 1]"));
    }
    let budget = (p.clock_hz / p.sample_rate_hz).floor() as u64;
    let used = p
        .n_channels
        .saturating_mul(p.initiation_interval.max(1))
        .saturating_add(p.pipeline_depth);
    // Guard against 1/0.2 landing just below 5.
    let instances = (1.0 / p.util_fraction + 1e-9).floor() as u64;
    Ok(ScheduleReport {
        clock_hz: p.clock_hz,
        sample_rate_hz: p.sample_rate_hz,
        n_channels: p.n_channels,
        cycles_per_sample_budget: budget,
        cycles_per_sample_used: used,
        pipeline_depth: p.pipeline_depth,
        feasible: used <= budget,
        max_instances_by_util: instances,
    })
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "clock_hz: {}", self.clock_hz)?;
        writeln!(f, "sample_rate_hz: {}", self.sample_rate_hz)?;
        writeln!(f, "n_channels: {}", self.n_channels)?;
        writeln!(f, "cycles_per_sample_budget: {}", self.cycles_per_sample_budget)?;
        writeln!(f, "cycles_per_sample_used: {}", self.cycles_per_sample_used)?;
        writeln!(f, "pipeline_depth: {}", self.pipeline_depth)?;
        writeln!(f, "feasible: {}", self.feasible)?;
        writeln!(f, "max_instances_by_util: {}", self.max_instances_by_util)
    }
}
