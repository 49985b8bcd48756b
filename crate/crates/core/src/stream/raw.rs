//! Headerless interleaved signed 24-bit sample streams.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use super::FrameStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

impl FromStr for Endianness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "le" | "little" => Ok(Endianness::Little),
            "be" | "big" => Ok(Endianness::Big),
            other => Err(Error::config(format!("unknown endianness {other:?}"))),
        }
    }
}

/// What to do with a trailing partial frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Framing {
    /// Reject the stream.
    #[default]
    Strict,
    /// Drop the partial frame.
    Lenient,
}

const FULL_SCALE: f64 = 8_388_608.0;

fn sample(b: &[u8], endian: Endianness) -> f64 {
    let v = match endian {
        Endianness::Little => i32::from_le_bytes([0, b[0], b[1], b[2]]),
        Endianness::Big => i32::from_be_bytes([b[0], b[1], b[2], 0]),
    } >> 8;
    v as f64 / FULL_SCALE
}

/// Reads interleaved 24-bit two's-complement samples to the end of `reader`.
/// Values map to `[−1, 1)`.
pub fn read_raw_i24(
    mut reader: impl Read,
    sample_rate_hz: f64,
    n_sensors: usize,
    endian: Endianness,
    framing: Framing,
) -> Result<FrameStream> {
    let mut stream = FrameStream::new(sample_rate_hz, n_sensors)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let frame = 3 * n_sensors;
    let whole = bytes.len() - bytes.len() % frame;
    if whole != bytes.len() && framing == Framing::Strict {
        return Err(Error::Framing {
            len: bytes.len() as u64,
            frame: frame as u64,
        });
    }
    let samples = bytes[..whole].chunks_exact(3).map(|c| sample(c, endian)).collect();
    stream = FrameStream::from_interleaved(stream.sample_rate_hz, n_sensors, samples)?;
    Ok(stream)
}

pub fn read_raw_i24_file(
    path: impl AsRef<Path>,
    sample_rate_hz: f64,
    n_sensors: usize,
    endian: Endianness,
    framing: Framing,
) -> Result<FrameStream> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_raw_i24(std::io::BufReader::new(file), sample_rate_hz, n_sensors, endian, framing)
}

/// Encodes samples in `[−1, 1)` as interleaved 24-bit words (truncating).
pub fn encode_i24(samples: &[f64], endian: Endianness) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 3);
    for &x in samples {
        let v = (x * FULL_SCALE).floor().clamp(-FULL_SCALE, FULL_SCALE - 1.0) as i32;
        let b = v.to_le_bytes();
        match endian {
            Endianness::Little => out.extend_from_slice(&b[..3]),
            Endianness::Big => out.extend_from_slice(&[b[2], b[1], b[0]]),
        }
    }
    out
}
