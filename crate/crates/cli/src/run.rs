use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use carfac::fixed::{FxConfig, GainMode, Rounding};
use carfac::stream::{
    read_raw_i24_file, read_wav, run_pipeline, synchronize_with_offsets, BinaryHeader, CochleagramWriter,
    Endianness, FrameStream, Framing, Normalization, PipelineConfig, SinkFormat, SinkSpec, SyncOutput,
};
use carfac::{design_carfac, Mode};

use crate::args::{EngineMode, Endian, NormalizeArg, OutputFormat, RoundingArg, RunArgs, DEFAULT_FS};
use crate::error::{CliError, CliResult};
use crate::output::create_file;
use crate::processor::{CarfacProcessor, EngineKind};

fn is_wav(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn tone(args: &RunArgs, fs: f64) -> CliResult<FrameStream> {
    if !(args.duration.is_finite() && args.duration > 0.0) {
        return Err(CliError::usage("--duration must be positive"));
    }
    let n = (args.duration * fs).round() as usize;
    let amp = 10f64.powf(args.tone_dbfs / 20.0);
    let w = 2.0 * std::f64::consts::PI * args.tone_hz / fs;
    let samples = (0..n).map(|i| amp * (w * i as f64).sin()).collect();
    Ok(FrameStream::mono(fs, samples)?)
}

/// Loads and aligns the inputs. Returns the stream to process and, for file
/// inputs, the synchronization report.
fn load(args: &RunArgs) -> CliResult<(FrameStream, Option<SyncOutput>)> {
    if args.input.is_empty() {
        if !args.offset.is_empty() {
            return Err(CliError::usage("--offset needs --input"));
        }
        return Ok((tone(args, args.model.fs.unwrap_or(DEFAULT_FS))?, None));
    }
    let offsets = match args.offset.len() {
        0 => vec![0; args.input.len()],
        n if n == args.input.len() => args.offset.clone(),
        n => {
            return Err(CliError::usage(format!(
                "{n} offsets for {} inputs",
                args.input.len()
            )))
        }
    };
    let endian = match args.endian {
        Endian::Le => Endianness::Little,
        Endian::Be => Endianness::Big,
    };
    let framing = if args.lenient { Framing::Lenient } else { Framing::Strict };
    let mut streams = Vec::with_capacity(args.input.len());
    for path in &args.input {
        let s = if is_wav(path) {
            let s = read_wav(path)?;
            if let Some(fs) = args.model.fs.filter(|&fs| fs != s.sample_rate_hz) {
                return Err(CliError::usage(format!(
                    "{} is sampled at {} Hz but --fs is {fs}",
                    path.display(),
                    s.sample_rate_hz
                )));
            }
            s
        } else {
            let fs = args.model.fs.unwrap_or(DEFAULT_FS);
            read_raw_i24_file(path, fs, args.raw_sensors as usize, endian, framing)?
        };
        streams.push(s);
    }
    let sync = synchronize_with_offsets(&streams, &offsets)?;
    let n_sensors = streams.iter().map(|s| s.n_sensors).sum();
    let joined = match sync.joined() {
        Some(s) => s,
        None => FrameStream::new(streams[0].sample_rate_hz, n_sensors)?,
    };
    Ok((joined, Some(sync)))
}

fn engine_kind(args: &RunArgs) -> EngineKind {
    match args.mode {
        EngineMode::Exact => EngineKind::Float(Mode::Exact),
        EngineMode::Approx => EngineKind::Float(Mode::Approx),
        EngineMode::Fixed => {
            let rounding = match args.rounding {
                RoundingArg::Truncate => Rounding::Truncate,
                RoundingArg::Nearest => Rounding::Nearest,
            };
            let mut cfg = FxConfig::default().with_rounding(rounding);
            if let Some(depth_bits) = args.gain_table_bits {
                cfg.gain_mode = GainMode::Table { depth_bits };
            }
            EngineKind::Fixed(cfg)
        }
    }
}

fn sink_spec(args: &RunArgs, width: usize, fs: f64) -> SinkSpec {
    let format = match args.format {
        OutputFormat::Binary => SinkFormat::Binary {
            header: args.header.then_some(BinaryHeader {
                channels: width as u32,
                sample_rate: fs.round() as u32,
            }),
        },
        OutputFormat::Csv => SinkFormat::Csv,
        OutputFormat::Pgm => SinkFormat::Pgm,
    };
    let normalization = match (args.normalize, args.format) {
        (Some(NormalizeArg::Block), _) | (None, OutputFormat::Pgm) => Normalization::PerBlockMax,
        _ => Normalization::None,
    };
    SinkSpec::new(width, args.block as usize, format).with_normalization(normalization)
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    if args.mode != EngineMode::Fixed && (args.gain_table_bits.is_some() || args.ops_csv.is_some()) {
        return Err(CliError::usage("--gain-table-bits and --ops-csv need --mode fixed"));
    }
    let (stream, sync) = load(args)?;
    let fs = stream.sample_rate_hz;
    let coeffs = Arc::new(design_carfac(&args.model.params(fs))?);
    let kind = engine_kind(args);
    let mut proc = CarfacProcessor::new(
        coeffs.clone(),
        &kind,
        stream.n_sensors,
        args.instances as usize,
        !args.single_thread,
    )?;
    let width = stream.n_sensors * coeffs.n_channels();
    let spec = sink_spec(args, width, fs);

    let out: Box<dyn Write + Send> = match &args.output {
        Some(p) => Box::new(create_file(p)?),
        None => Box::new(std::io::sink()),
    };
    let mut writer = CochleagramWriter::new(out, spec)?;
    let cfg = PipelineConfig {
        queue_depth: args.queue_depth as usize,
        threaded: !args.single_thread,
        ..PipelineConfig::default()
    };
    let stats = run_pipeline(&stream, &mut proc, |b: &[f32]| writer.write_frames(b), cfg)?;
    let bytes = writer.finish()?;

    let mode = match args.mode {
        EngineMode::Exact => "exact",
        EngineMode::Approx => "approx",
        EngineMode::Fixed => "fixed",
    };
    println!("mode: {mode}");
    println!("sample_rate_hz: {fs}");
    println!("sensors: {}", stream.n_sensors);
    println!("channels: {}", coeffs.n_channels());
    println!("instances: {}", args.instances);
    if let Some(sync) = &sync {
        for (k, d) in sync.drops.iter().enumerate() {
            println!(
                "input{k}_dropped: lead_in={} withheld={} tail={}",
                d.lead_in, d.withheld, d.tail
            );
        }
        for g in &sync.gaps {
            println!("gap: input{} start={} len={}", g.stream, g.start, g.len);
        }
        println!("segments: {}", sync.segments.len());
    }
    println!("frames_in: {}", stats.frames_in);
    println!("frames_out: {}", stats.frames_out);
    println!("bytes_written: {bytes}");
    if let Some(f) = proc.fidelity() {
        println!("snr_vs_approx_db: {:.2}", f.snr_db());
        println!("saturations: {}", f.saturations);
    }
    if let Some(h) = proc.histogram() {
        println!("ops_total: {}", h.total());
        println!("ops_divide: {}", h.get(carfac::fixed::OpKind::Divide));
        if let Some(p) = &args.ops_csv {
            let mut f = create_file(p)?;
            h.write_csv(&mut f)?;
            f.flush()?;
        }
    }
    // Timing lines last; they are the only nondeterministic output.
    let secs = stats.elapsed.as_secs_f64();
    let audio = stats.frames_out as f64 / fs;
    println!("elapsed_s: {secs:.3}");
    println!("throughput_samples_per_s: {:.0}", stats.frames_out as f64 / secs);
    println!("real_time_factor: {:.2}", audio / secs);
    Ok(())
}
