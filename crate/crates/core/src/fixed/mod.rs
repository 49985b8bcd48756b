//! Hardware-faithful fixed-point datapath and schedule analysis.

pub mod bound;
pub mod datapath;
pub mod engine;
pub mod fx;
pub mod schedule;

pub use bound::{quantization_bound, QuantBound};
pub use datapath::{Datapath, OpHistogram, OpKind};
pub use engine::{fx_carfac_sample, FxCoeffs, FxConfig, FxEngine, FxFormats, FxState, GainMode};
pub use fx::{
    fx_add, fx_mul, fx_mul_checked, fx_quantize, fx_quantize_checked, fx_requantize, fx_scale_pow2, fx_sub, FxSpec,
    FxValue, MulPath, Overflow, Rounding,
};
pub use schedule::{analyze_schedule, ScheduleParams, ScheduleReport, DEFAULT_PIPELINE_DEPTH};
