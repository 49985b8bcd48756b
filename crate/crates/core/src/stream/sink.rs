//! Cochleagram writers: raw little-endian floats, CSV and binary PGM.
//!
//! Input blocks are time-major: `samples × channels`, channel 0 first within
//! each sample.

use std::io::{Read, Write};

use crate::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"CGRM";

/// Optional 16-byte preamble of the binary format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryHeader {
    pub channels: u32,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkFormat {
    /// Little-endian f32, one frame of `n_channels` values per sample.
    Binary { header: Option<BinaryHeader> },
    /// Header row, then one row per sample.
    Csv,
    /// One P5 image per block: width = samples, height = channels, row 0 =
    /// channel 0. Pixels are `|value|` scaled to 0–255.
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    None,
    /// Divide by the block's largest magnitude (an all-zero block stays zero).
    PerBlockMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinkSpec {
    pub n_channels: usize,
    pub samples_per_block: usize,
    pub format: SinkFormat,
    pub normalization: Normalization,
}

impl SinkSpec {
    pub fn new(n_channels: usize, samples_per_block: usize, format: SinkFormat) -> Self {
        SinkSpec {
            n_channels,
            samples_per_block,
            format,
            normalization: Normalization::None,
        }
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }

    fn block_len(&self) -> usize {
        self.n_channels * self.samples_per_block
    }
}

/// Streams blocks to a writer and counts the bytes emitted.
pub struct CochleagramWriter<W: Write> {
    out: W,
    spec: SinkSpec,
    bytes: u64,
    samples: u64,
    started: bool,
    pending: Vec<f32>,
    scratch: Vec<u8>,
}

impl<W: Write> CochleagramWriter<W> {
    pub fn new(out: W, spec: SinkSpec) -> Result<Self> {
        if spec.n_channels == 0 || spec.samples_per_block == 0 {
            return Err(Error::Layout("sink needs at least one channel and one sample per block".into()));
        }
        if let SinkFormat::Binary { header: Some(h) } = spec.format {
            if h.channels as usize != spec.n_channels {
                return Err(Error::Layout(format!(
                    "header declares {} channels, layout has {}",
                    h.channels, spec.n_channels
                )));
            }
        }
        Ok(CochleagramWriter {
            out,
            spec,
            bytes: 0,
            samples: 0,
            started: false,
            pending: Vec::new(),
            scratch: Vec::new(),
        })
    }

    pub fn spec(&self) -> &SinkSpec {
        &self.spec
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    pub fn samples_written(&self) -> u64 {
        self.samples
    }

    /// Writes one full block. Returns the bytes it produced.
    pub fn write_block(&mut self, block: &[f32]) -> Result<u64> {
        if block.len() != self.spec.block_len() {
            return Err(Error::Layout(format!(
                "block of {} values, layout is {} channels x {} samples",
                block.len(),
                self.spec.n_channels,
                self.spec.samples_per_block
            )));
        }
        self.emit(block)
    }

    /// Accepts any whole number of frames; full blocks are written as they
    /// fill, the remainder waits for more data or [`finish`](Self::finish).
    pub fn write_frames(&mut self, frames: &[f32]) -> Result<()> {
        if frames.len() % self.spec.n_channels != 0 {
            return Err(Error::Layout(format!(
                "{} values is not a whole number of {}-channel frames",
                frames.len(),
                self.spec.n_channels
            )));
        }
        let block = self.spec.block_len();
        let mut rest = frames;
        if !self.pending.is_empty() {
            let take = (block - self.pending.len()).min(rest.len());
            self.pending.extend_from_slice(&rest[..take]);
            rest = &rest[take..];
            if self.pending.len() == block {
                let full = std::mem::take(&mut self.pending);
                self.emit(&full)?;
                self.pending = full;
                self.pending.clear();
            }
        }
        while rest.len() >= block {
            self.emit(&rest[..block])?;
            rest = &rest[block..];
        }
        self.pending.extend_from_slice(rest);
        Ok(())
    }

    /// Writes any partial block and flushes. Returns the total byte count.
    pub fn finish(mut self) -> Result<u64> {
        if !self.pending.is_empty() {
            let last = std::mem::take(&mut self.pending);
            self.emit(&last)?;
        }
        if !self.started {
            self.start()?;
        }
        self.out.flush()?;
        Ok(self.bytes)
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.out.write_all(bytes)?;
        self.bytes += bytes.len() as u64;
        Ok(())
    }

    fn start(&mut self) -> Result<()> {
        self.started = true;
        match self.spec.format {
            SinkFormat::Binary { header: Some(h) } => {
                let mut head = [0u8; 16];
                head[..4].copy_from_slice(BINARY_MAGIC);
                head[4..8].copy_from_slice(&h.channels.to_le_bytes());
                head[8..12].copy_from_slice(&h.sample_rate.to_le_bytes());
                self.put(&head)
            }
            SinkFormat::Csv => {
                let mut line = String::from("sample");
                for c in 0..self.spec.n_channels {
                    line.push_str(&format!(",ch{c}"));
                }
                line.push('\n');
                self.put(line.as_bytes())
            }
            _ => Ok(()),
        }
    }

    fn emit(&mut self, block: &[f32]) -> Result<u64> {
        let before = self.bytes;
        if !self.started {
            self.start()?;
        }
        let n = self.spec.n_channels;
        let frames = block.len() / n;
        let scale = match self.spec.normalization {
            Normalization::None => 1.0,
            Normalization::PerBlockMax => {
                let peak = block.iter().fold(0.0f32, |m, v| m.max(v.abs()));
                if peak > 0.0 {
                    peak.recip()
                } else {
                    0.0
                }
            }
        };
        let mut buf = std::mem::take(&mut self.scratch);
        buf.clear();
        match self.spec.format {
            SinkFormat::Binary { .. } => {
                for v in block {
                    buf.extend_from_slice(&(v * scale).to_le_bytes());
                }
            }
            SinkFormat::Csv => {
                for (i, frame) in block.chunks_exact(n).enumerate() {
                    write!(buf, "{}", self.samples + i as u64)?;
                    for v in frame {
                        write!(buf, ",{}", v * scale)?;
                    }
                    buf.push(b'\n');
                }
            }
            SinkFormat::Pgm => {
                write!(buf, "P5\n{frames} {n}\n255\n")?;
                for c in 0..n {
                    for t in 0..frames {
                        let v = (block[t * n + c].abs() * scale).clamp(0.0, 1.0);
                        buf.push((v * 255.0).round() as u8);
                    }
                }
            }
        }
        self.put(&buf)?;
        self.scratch = buf;
        self.samples += frames as u64;
        Ok(self.bytes - before)
    }
}

/// Writes whole blocks and returns the byte count.
pub fn write_cochleagram<W: Write>(spec: SinkSpec, blocks: &[&[f32]], out: W) -> Result<u64> {
    let mut w = CochleagramWriter::new(out, spec)?;
    for b in blocks {
        w.write_block(b)?;
    }
    w.finish()
}

/// Reads a binary cochleagram. With a header the channel count comes from
/// the file; otherwise `n_channels` must be given.
pub fn read_binary_cochleagram(
    mut input: impl Read,
    n_channels: Option<usize>,
    header: bool,
) -> Result<(Option<BinaryHeader>, Vec<f32>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let (head, body) = if header {
        if bytes.len() < 16 {
            return Err(Error::Truncated {
                expected: 16,
                actual: bytes.len() as u64,
            });
        }
        if &bytes[..4] != BINARY_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                msg: "missing CGRM magic".into(),
            });
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let h = BinaryHeader {
            channels: word(4),
            sample_rate: word(8),
        };
        (Some(h), &bytes[16..])
    } else {
        (None, &bytes[..])
    };
    let channels = head
        .map(|h| h.channels as usize)
        .or(n_channels)
        .ok_or_else(|| Error::Layout("channel count unknown without a header".into()))?;
    if channels == 0 || body.len() % (4 * channels) != 0 {
        return Err(Error::Layout(format!(
            "{} payload bytes is not a whole number of {channels}-channel frames",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((head, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(ch: usize, n: usize) -> Vec<f32> {
        (0..ch * n).map(|i| (i as f32 * 0.37).sin()).collect()
    }

    #[test]
    fn binary_size_is_channels_times_samples_times_four() {
        let b = block(64, 100);
        let mut out = Vec::new();
        let n = write_cochleagram(SinkSpec::new(64, 100, SinkFormat::Binary { header: None }), &[&b], &mut out).unwrap();
        assert_eq!(n, 25_600);
        assert_eq!(out.len(), 25_600);
        assert_eq!(&out[..4], &b[0].to_le_bytes());
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let mut b = block(3, 5);
        b[4] = f32::MIN_POSITIVE / 2.0;
        b[7] = -0.0;
        let header = BinaryHeader { channels: 3, sample_rate: 256_000 };
        let mut out = Vec::new();
        let n = write_cochleagram(SinkSpec::new(3, 5, SinkFormat::Binary { header: Some(header) }), &[&b], &mut out).unwrap();
        assert_eq!(n, 16 + 60);
        assert_eq!(&out[..4], b"CGRM");
        let (h, back) = read_binary_cochleagram(&out[..], None, true).unwrap();
        assert_eq!(h, Some(header));
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&b));
    }

    #[test]
    fn zero_block_pgm_is_all_black() {
        let b = vec![0.0f32; 4 * 6];
        let spec = SinkSpec::new(4, 6, SinkFormat::Pgm).with_normalization(Normalization::PerBlockMax);
        let mut out = Vec::new();
        write_cochleagram(spec, &[&b], &mut out).unwrap();
        let head = b"P5\n6 4\n255\n";
        assert_eq!(&out[..head.len()], head);
        assert!(out[head.len()..].iter().all(|&p| p == 0));
        assert_eq!(out.len(), head.len() + 24);
    }

    #[test]
    fn pgm_normalizes_per_block() {
        let b = vec![0.5f32, -0.25, 0.0, 0.125];
        let spec = SinkSpec::new(2, 2, SinkFormat::Pgm).with_normalization(Normalization::PerBlockMax);
        let mut out = Vec::new();
        write_cochleagram(spec, &[&b], &mut out).unwrap();
        // Row 0 = channel 0 over time, row 1 = channel 1.
        assert_eq!(&out[out.len() - 4..], &[255, 0, 128, 64]);
    }

    #[test]
    fn csv_rows() {
        let b = vec![1.0f32, 2.0, 3.0, 4.5];
        let mut out = Vec::new();
        write_cochleagram(SinkSpec::new(2, 2, SinkFormat::Csv), &[&b], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "sample,ch0,ch1\n0,1,2\n1,3,4.5\n");
    }

    #[test]
    fn shape_mismatch_is_layout_error() {
        let mut w = CochleagramWriter::new(Vec::new(), SinkSpec::new(4, 2, SinkFormat::Csv)).unwrap();
        assert!(matches!(w.write_block(&[0.0; 7]), Err(Error::Layout(_))));
        assert!(matches!(w.write_frames(&[0.0; 3]), Err(Error::Layout(_))));
        let header = Some(BinaryHeader { channels: 3, sample_rate: 1 });
        assert!(CochleagramWriter::new(Vec::new(), SinkSpec::new(4, 2, SinkFormat::Binary { header })).is_err());
    }

    #[test]
    fn frames_are_regrouped_into_blocks() {
        let data = block(2, 7);
        let spec = SinkSpec::new(2, 3, SinkFormat::Binary { header: None });
        let mut w = CochleagramWriter::new(Vec::new(), spec).unwrap();
        w.write_frames(&data[..2]).unwrap();
        w.write_frames(&data[2..10]).unwrap();
        w.write_frames(&data[10..]).unwrap();
        assert_eq!(w.samples_written(), 6);
        let n = w.finish().unwrap();
        assert_eq!(n, 7 * 2 * 4);
    }

    #[test]
    fn truncated_binary_rejected() {
        assert!(read_binary_cochleagram(&[0u8; 6][..], Some(1), false).is_err());
        assert!(read_binary_cochleagram(&b"CGR"[..], None, true).is_err());
        assert!(read_binary_cochleagram(&[0u8; 8][..], None, false).is_err());
    }
}
