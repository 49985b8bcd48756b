//! Audio ingestion, multi-sensor synchronization, pipelines and cochleagram
//! writers.

pub mod pipeline;
pub mod raw;
pub mod sink;
pub mod sync;
pub mod wav;

pub use pipeline::{run_pipeline, FrameProcessor, PipelineConfig, PipelineStats, DEFAULT_QUEUE_DEPTH};
pub use raw::{encode_i24, read_raw_i24, read_raw_i24_file, Endianness, Framing};
pub use sink::{
    read_binary_cochleagram, write_cochleagram, BinaryHeader, CochleagramWriter, Normalization, SinkFormat, SinkSpec,
};
pub use sync::{synchronize, synchronize_with_offsets, DropCounts, Gap, SyncOutput};
pub use wav::{read_wav, read_wav_bytes, SampleKind, WavFormat};

use crate::{Error, Result};

/// Multi-sensor sample frames with consecutive timestamps.
///
/// Frame `i` carries timestamp `start + i` and `n_sensors` samples stored
/// interleaved. A frame marked invalid holds no usable data (a gap in the
/// sensor's delivery).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    pub sample_rate_hz: f64,
    pub n_sensors: usize,
    pub start: u64,
    samples: Vec<f64>,
    valid: Vec<bool>,
}

/// One frame borrowed from a [`FrameStream`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<'a> {
    pub timestamp: u64,
    pub samples: &'a [f64],
    pub valid: bool,
}

impl FrameStream {
    pub fn new(sample_rate_hz: f64, n_sensors: usize) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::config(format!("sample rate {sample_rate_hz} must be positive")));
        }
        if n_sensors == 0 {
            return Err(Error::config("a stream needs at least one sensor"));
        }
        Ok(FrameStream {
            sample_rate_hz,
            n_sensors,
            start: 0,
            samples: Vec::new(),
            valid: Vec::new(),
        })
    }

    /// All-valid stream from interleaved samples.
    pub fn from_interleaved(sample_rate_hz: f64, n_sensors: usize, samples: Vec<f64>) -> Result<Self> {
        let mut s = FrameStream::new(sample_rate_hz, n_sensors)?;
        if samples.len() % n_sensors != 0 {
            return Err(Error::Layout(format!(
                "{} samples do not split into frames of {n_sensors}",
                samples.len()
            )));
        }
        s.valid = vec![true; samples.len() / n_sensors];
        s.samples = samples;
        Ok(s)
    }

    /// Single-sensor stream.
    pub fn mono(sample_rate_hz: f64, samples: Vec<f64>) -> Result<Self> {
        FrameStream::from_interleaved(sample_rate_hz, 1, samples)
    }

    pub fn with_start(mut self, start: u64) -> Self {
        self.start = start;
        self
    }

    pub fn push_frame(&mut self, samples: &[f64], valid: bool) -> Result<()> {
        if samples.len() != self.n_sensors {
            return Err(Error::Layout(format!(
                "frame of {} samples for {} sensors",
                samples.len(),
                self.n_sensors
            )));
        }
        self.samples.extend_from_slice(samples);
        self.valid.push(valid);
        Ok(())
    }

    /// Marks frames `[from, from + len)` (stream-relative) invalid.
    pub fn invalidate(&mut self, from: usize, len: usize) {
        let end = (from + len).min(self.valid.len());
        for v in &mut self.valid[from.min(end)..end] {
            *v = false;
        }
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn frame(&self, i: usize) -> Frame<'_> {
        let n = self.n_sensors;
        Frame {
            timestamp: self.start + i as u64,
            samples: &self.samples[i * n..(i + 1) * n],
            valid: self.valid[i],
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame<'_>> + '_ {
        (0..self.len()).map(move |i| self.frame(i))
    }

    pub fn interleaved(&self) -> &[f64] {
        &self.samples
    }

    pub fn valid_flags(&self) -> &[bool] {
        &self.valid
    }

    /// Samples of one sensor, in frame order.
    pub fn sensor(&self, s: usize) -> Vec<f64> {
        self.samples.iter().skip(s).step_by(self.n_sensors).copied().collect()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }
}
