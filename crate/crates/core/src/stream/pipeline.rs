//! Reader → processor → writer pipeline over bounded queues.
//!
//! A stage takes a batch only when the previous stage has produced it and
//! hands its result on only when the next queue has room; a full queue
//! blocks the producer. The single-threaded mode runs the same stages in
//! sequence and produces bit-identical output.

use std::time::{Duration, Instant};

use crossbeam::channel::bounded;

use super::FrameStream;
use crate::{Error, Result};

pub const DEFAULT_QUEUE_DEPTH: usize = 4096;
const DEFAULT_BATCH: usize = 256;

/// Per-frame work done by the middle stage.
pub trait FrameProcessor: Send {
    /// Values appended to `out` for every frame.
    fn outputs_per_frame(&self) -> usize;

    /// Consumes `frames` (interleaved, `n_sensors` per frame) and appends
    /// `outputs_per_frame()` values per frame to `out`.
    fn process(&mut self, frames: &[f64], n_sensors: usize, out: &mut Vec<f32>) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Queue capacity in frames.
    pub queue_depth: usize,
    /// Frames moved per queue message.
    pub batch: usize,
    pub threaded: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            queue_depth: DEFAULT_QUEUE_DEPTH,
            batch: DEFAULT_BATCH,
            threaded: true,
        }
    }
}

impl PipelineConfig {
    pub fn single_thread() -> Self {
        PipelineConfig {
            threaded: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineStats {
    /// Valid frames taken from the source.
    pub frames_in: u64,
    /// Frames whose outputs reached the sink.
    pub frames_out: u64,
    /// Source frames marked invalid and therefore never consumed.
    pub invalid_skipped: u64,
    pub elapsed: Duration,
}

struct Batch {
    data: Vec<f64>,
    frames: usize,
}

fn batches(source: &FrameStream, size: usize) -> impl Iterator<Item = Batch> + '_ {
    let n = source.n_sensors;
    let mut i = 0;
    std::iter::from_fn(move || {
        let mut data = Vec::with_capacity(size * n);
        let mut frames = 0;
        while frames < size && i < source.len() {
            let f = source.frame(i);
            i += 1;
            if f.valid {
                data.extend_from_slice(f.samples);
                frames += 1;
            }
        }
        (frames > 0).then_some(Batch { data, frames })
    })
}

/// Streams the valid frames of `source` through `processor` into `sink`.
///
/// `sink` receives whole frames of `outputs_per_frame()` values. Fails with a
/// contract error if the frame accounting does not balance.
pub fn run_pipeline<P, S>(source: &FrameStream, processor: &mut P, mut sink: S, cfg: PipelineConfig) -> Result<PipelineStats>
where
    P: FrameProcessor,
    S: FnMut(&[f32]) -> Result<()> + Send,
{
    if cfg.queue_depth == 0 || cfg.batch == 0 {
        return Err(Error::config("queue depth and batch size must be positive"));
    }
    let t0 = Instant::now();
    let n = source.n_sensors;
    let width = processor.outputs_per_frame();
    let valid = source.valid_flags().iter().filter(|&&v| v).count() as u64;
    let batch = cfg.batch.min(cfg.queue_depth);

    let (frames_in, frames_out) = if cfg.threaded {
        let slots = (cfg.queue_depth / batch).max(1);
        let (in_tx, in_rx) = bounded::<Batch>(slots);
        let (out_tx, out_rx) = bounded::<(Vec<f32>, usize)>(slots);
        std::thread::scope(|scope| -> Result<(u64, u64)> {
            let reader = scope.spawn(move || {
                let mut count = 0u64;
                for b in batches(source, batch) {
                    count += b.frames as u64;
                    if in_tx.send(b).is_err() {
                        break; // downstream failed
                    }
                }
                count
            });
            let worker = scope.spawn(move || -> Result<()> {
                for b in in_rx {
                    let mut out = Vec::with_capacity(b.frames * width);
                    processor.process(&b.data, n, &mut out)?;
                    if out_tx.send((out, b.frames)).is_err() {
                        break;
                    }
                }
                Ok(())
            });
            let mut written = 0u64;
            let mut sink_result = Ok(());
            for (out, frames) in out_rx {
                if sink_result.is_ok() {
                    sink_result = sink(&out);
                    written += frames as u64;
                }
                // On a sink error keep draining so upstream stages finish.
            }
            let read = reader.join().expect("reader thread panicked");
            worker.join().expect("processor thread panicked")?;
            sink_result?;
            Ok((read, written))
        })?
    } else {
        let (mut read, mut written) = (0u64, 0u64);
        let mut out = Vec::new();
        for b in batches(source, batch) {
            read += b.frames as u64;
            out.clear();
            processor.process(&b.data, n, &mut out)?;
            sink(&out)?;
            written += b.frames as u64;
        }
        (read, written)
    };

    if frames_in != valid || frames_out != frames_in {
        return Err(Error::Contract(format!(
            "frame accounting: {valid} valid, {frames_in} read, {frames_out} written"
        )));
    }
    Ok(PipelineStats {
        frames_in,
        frames_out,
        invalid_skipped: source.len() as u64 - valid,
        elapsed: t0.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Running sum per sensor: output depends on every earlier frame, so
    /// any reordering or loss shows up.
    struct Integrator {
        acc: Vec<f64>,
    }

    impl FrameProcessor for Integrator {
        fn outputs_per_frame(&self) -> usize {
            self.acc.len()
        }

        fn process(&mut self, frames: &[f64], n: usize, out: &mut Vec<f32>) -> Result<()> {
            for f in frames.chunks_exact(n) {
                for (a, x) in self.acc.iter_mut().zip(f) {
                    *a += x;
                    out.push(*a as f32);
                }
            }
            Ok(())
        }
    }

    fn source(n: usize) -> FrameStream {
        let data = (0..2 * n).map(|i| (i as f64 * 0.01).sin()).collect();
        FrameStream::from_interleaved(1000.0, 2, data).unwrap()
    }

    fn run(src: &FrameStream, cfg: PipelineConfig) -> (Vec<f32>, PipelineStats) {
        let mut p = Integrator { acc: vec![0.0; 2] };
        let mut out = Vec::new();
        let stats = run_pipeline(
            src,
            &mut p,
            |b: &[f32]| {
                out.extend_from_slice(b);
                Ok(())
            },
            cfg,
        )
        .unwrap();
        (out, stats)
    }

    #[test]
    fn threaded_matches_single_thread_bit_for_bit() {
        let src = source(10_007);
        let small_queue = PipelineConfig {
            queue_depth: 8,
            batch: 3,
            threaded: true,
        };
        let (a, sa) = run(&src, PipelineConfig::single_thread());
        let (b, sb) = run(&src, PipelineConfig::default());
        let (c, _) = run(&src, small_queue);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(sa.frames_in, 10_007);
        assert_eq!(sb.frames_out, 10_007);
    }

    #[test]
    fn invalid_frames_are_not_consumed() {
        let mut src = source(100);
        src.invalidate(10, 5);
        let (out, stats) = run(&src, PipelineConfig::default());
        assert_eq!(stats.frames_in, 95);
        assert_eq!(stats.frames_out, 95);
        assert_eq!(stats.invalid_skipped, 5);
        assert_eq!(out.len(), 190);
    }

    #[test]
    fn sink_errors_propagate() {
        let src = source(5000);
        let mut p = Integrator { acc: vec![0.0; 2] };
        for cfg in [PipelineConfig::default(), PipelineConfig::single_thread()] {
            let r = run_pipeline(&src, &mut p, |_: &[f32]| Err(Error::Layout("full".into())), cfg);
            assert!(matches!(r, Err(Error::Layout(_))));
        }
    }

    #[test]
    fn zero_depth_rejected() {
        let src = source(5);
        let mut p = Integrator { acc: vec![0.0; 2] };
        let cfg = PipelineConfig {
            queue_depth: 0,
            ..PipelineConfig::default()
        };
        assert!(run_pipeline(&src, &mut p, |_: &[f32]| Ok(()), cfg).is_err());
    }
}
