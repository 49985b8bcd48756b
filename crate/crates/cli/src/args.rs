use std::path::PathBuf;

use carfac::fixed::DEFAULT_PIPELINE_DEPTH;
use carfac::stream::DEFAULT_QUEUE_DEPTH;
use carfac::CarfacParams;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_FS: f64 = 256_000.0;
pub const CONFIG_ENV: &str = "CARFAC_CONFIG";

/// Real-time CARFAC cochlea model.
#[derive(Parser, Debug)]
#[command(name = "carfac", version, about)]
pub struct Cli {
    /// key = value file giving defaults for any flag; flags on the command
    /// line win. Defaults to $CARFAC_CONFIG when set.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print per-channel filter coefficients and gain-fit errors as CSV.
    Design(DesignArgs),
    /// Stream audio through the model and write a cochleagram.
    Run(RunArgs),
    /// Check the division-free approximations against their bounds.
    Verify(VerifyArgs),
    /// Cycle budget of a time-multiplexed hardware core.
    Schedule(ScheduleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Run(_) => "run",
            Command::Verify(_) => "verify",
            Command::Schedule(_) => "schedule",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Number of cochlear channels.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub channels: u32,
    /// Sample rate in Hz [default: 256000, or the input file's rate].
    #[arg(long, value_name = "HZ")]
    pub fs: Option<f64>,
    /// Lowest pole frequency in Hz.
    #[arg(long, value_name = "HZ")]
    pub min_hz: Option<f64>,
    /// Highest pole frequency in Hz.
    #[arg(long, value_name = "HZ")]
    pub max_hz: Option<f64>,
    /// Fixed ERB spacing between channels instead of spanning the range.
    #[arg(long)]
    pub erb_per_step: Option<f64>,
}

impl ModelArgs {
    pub fn params(&self, fs: f64) -> CarfacParams {
        let mut p = CarfacParams::new(fs, self.channels as usize);
        if let Some(v) = self.min_hz {
            p.min_pole_hz = v;
        }
        if let Some(v) = self.max_hz {
            p.max_pole_hz = v;
        }
        p.erb_per_step = self.erb_per_step;
        p
    }
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineMode {
    Exact,
    Approx,
    Fixed,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingArg {
    Truncate,
    Nearest,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endian {
    Le,
    Be,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Binary,
    Csv,
    Pgm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeArg {
    None,
    Block,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, value_enum, default_value_t = EngineMode::Approx)]
    pub mode: EngineMode,
    /// Requantization rounding of the fixed engine.
    #[arg(long, value_enum, default_value_t = RoundingArg::Truncate)]
    pub rounding: RoundingArg,
    /// Fixed engine: look the DC gain up in a 2^BITS-entry table instead of
    /// evaluating the quadratic.
    #[arg(long, value_name = "BITS")]
    pub gain_table_bits: Option<u32>,
    /// Fixed engine: write the datapath operation histogram as CSV.
    #[arg(long, value_name = "PATH")]
    pub ops_csv: Option<PathBuf>,

    /// Input file, repeatable. `.wav` files are parsed as WAV, anything else
    /// as raw interleaved signed 24-bit at --fs. Several inputs are
    /// synchronized into one multi-sensor stream.
    #[arg(long, short, value_name = "PATH")]
    pub input: Vec<PathBuf>,
    /// Per-input start offset in samples (one per --input).
    #[arg(long, value_name = "SAMPLES", allow_hyphen_values = true)]
    pub offset: Vec<i64>,
    /// Sensors interleaved in each raw input.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub raw_sensors: u32,
    #[arg(long, value_enum, default_value_t = Endian::Le)]
    pub endian: Endian,
    /// Drop a trailing partial frame in raw inputs instead of failing.
    #[arg(long)]
    pub lenient: bool,

    /// Synthetic tone used when no input is given.
    #[arg(long, default_value_t = 1000.0, value_name = "HZ")]
    pub tone_hz: f64,
    #[arg(long, default_value_t = -20.0, value_name = "DBFS", allow_hyphen_values = true)]
    pub tone_dbfs: f64,
    #[arg(long, default_value_t = 1.0, value_name = "SECONDS")]
    pub duration: f64,

    /// Cochleagram destination; without it output is only counted.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Binary)]
    pub format: OutputFormat,
    /// Prefix binary output with the 16-byte CGRM header.
    #[arg(long)]
    pub header: bool,
    /// Per-block scaling [default: block for pgm, none otherwise].
    #[arg(long, value_enum)]
    pub normalize: Option<NormalizeArg>,
    /// Samples per output block (one PGM image per block).
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u32).range(1..))]
    pub block: u32,

    /// Parallel model instances, each bound to a contiguous subset of sensors.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub instances: u32,
    /// Run every stage on the calling thread (bit-identical output).
    #[arg(long)]
    pub single_thread: bool,
    /// Bounded queue capacity in frames.
    #[arg(long, default_value_t = DEFAULT_QUEUE_DEPTH as u32, value_parser = clap::value_parser!(u32).range(1..))]
    pub queue_depth: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Ihc,
    Ohc,
    Gain,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = Check::All)]
    pub which: Check,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory for ihc.csv, ohc.csv and gainfit.csv.
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Verify gain coefficients from this CSV (columns gain_a, gain_b,
    /// gain_c, one row per channel, as written by `design`) instead of
    /// freshly fitted ones.
    #[arg(long, value_name = "PATH")]
    pub gain_table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub channels: u64,
    #[arg(long, default_value_t = DEFAULT_FS, value_name = "HZ")]
    pub fs: f64,
    #[arg(long, default_value_t = 100e6, value_name = "HZ")]
    pub clock: f64,
    /// Fraction of the device one instance occupies.
    #[arg(long, default_value_t = 1.0)]
    pub util: f64,
    /// Total pipeline register stages.
    #[arg(long, default_value_t = DEFAULT_PIPELINE_DEPTH)]
    pub depth: u64,
    /// Clocks between successive channels.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub ii: u64,
}
