//! RIFF/WAVE reader for PCM 16/24/32-bit and IEEE float data.

use std::path::Path;

use super::FrameStream;
use crate::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Pcm,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavFormat {
    pub kind: SampleKind,
    pub bits_per_sample: u16,
    pub channels: u16,
    pub sample_rate: u32,
}

fn parse_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        msg: msg.into(),
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Checks that `len` bytes are available at `at`.
fn need(b: &[u8], at: usize, len: usize) -> Result<()> {
    if b.len() < at + len {
        return Err(Error::Truncated {
            expected: (at + len) as u64,
            actual: b.len() as u64,
        });
    }
    Ok(())
}

fn parse_fmt(b: &[u8], at: usize, size: usize) -> Result<WavFormat> {
    if size < 16 {
        return Err(parse_err(at, format!("fmt chunk of {size} bytes is too short")));
    }
    let mut tag = u16_at(b, at);
    let channels = u16_at(b, at + 2);
    let sample_rate = u32_at(b, at + 4);
    let block_align = u16_at(b, at + 12);
    let bits = u16_at(b, at + 14);
    if tag == FORMAT_EXTENSIBLE {
        if size < 40 {
            return Err(parse_err(at, "extensible fmt chunk shorter than 40 bytes"));
        }
        // The sub-format GUID starts with the plain format tag.
        tag = u16_at(b, at + 24);
    }
    let kind = match (tag, bits) {
        (FORMAT_PCM, 16 | 24 | 32) => SampleKind::Pcm,
        (FORMAT_FLOAT, 32 | 64) => SampleKind::Float,
        (FORMAT_PCM | FORMAT_FLOAT, _) => {
            return Err(Error::Unsupported(format!("{bits}-bit samples with format tag {tag}")))
        }
        _ => return Err(Error::Unsupported(format!("format tag 0x{tag:04x}"))),
    };
    if channels == 0 {
        return Err(parse_err(at + 2, "zero channels"));
    }
    if sample_rate == 0 {
        return Err(parse_err(at + 4, "zero sample rate"));
    }
    if block_align as u32 != channels as u32 * bits as u32 / 8 {
        return Err(parse_err(
            at + 12,
            format!("block align {block_align} does not match {channels} x {bits}-bit"),
        ));
    }
    Ok(WavFormat {
        kind,
        bits_per_sample: bits,
        channels,
        sample_rate,
    })
}

fn decode(fmt: &WavFormat, data: &[u8]) -> Vec<f64> {
    let width = fmt.bits_per_sample as usize / 8;
    let chunks = data.chunks_exact(width);
    match (fmt.kind, fmt.bits_per_sample) {
        (SampleKind::Pcm, 16) => chunks.map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0).collect(),
        (SampleKind::Pcm, 24) => chunks
            .map(|c| (i32::from_le_bytes([0, c[0], c[1], c[2]]) >> 8) as f64 / 8_388_608.0)
            .collect(),
        (SampleKind::Pcm, _) => chunks
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64 / 2_147_483_648.0)
            .collect(),
        (SampleKind::Float, 32) => chunks
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        (SampleKind::Float, _) => chunks
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    }
}

/// Parses a complete WAV image. PCM is scaled so that full-scale negative is
/// exactly −1; float samples pass through unchanged. Channels map to sensors.
pub fn read_wav_bytes(b: &[u8]) -> Result<(FrameStream, WavFormat)> {
    need(b, 0, 12)?;
    if &b[0..4] != b"RIFF" {
        return Err(parse_err(0, "missing RIFF tag"));
    }
    if &b[8..12] != b"WAVE" {
        return Err(parse_err(8, "missing WAVE tag"));
    }
    let mut at = 12;
    let mut fmt = None;
    loop {
        if at >= b.len() {
            return Err(parse_err(at, "no data chunk"));
        }
        need(b, at, 8)?;
        let id = &b[at..at + 4];
        let size = u32_at(b, at + 4) as usize;
        let body = at + 8;
        match id {
            b"fmt " => {
                need(b, body, size)?;
                fmt = Some(parse_fmt(b, body, size)?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| parse_err(at, "data chunk before fmt chunk"))?;
                need(b, body, size)?;
                let block = fmt.channels as usize * fmt.bits_per_sample as usize / 8;
                if size % block != 0 {
                    return Err(parse_err(
                        body + size - size % block,
                        format!("data chunk of {size} bytes ends inside a {block}-byte frame"),
                    ));
                }
                let samples = decode(&fmt, &b[body..body + size]);
                let stream = FrameStream::from_interleaved(fmt.sample_rate as f64, fmt.channels as usize, samples)?;
                return Ok((stream, fmt));
            }
            _ => {}
        }
        // Chunks are word-aligned.
        at = body + size + (size & 1);
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<FrameStream> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    read_wav_bytes(&bytes).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal canonical WAV image.
    fn wav(tag: u16, channels: u16, rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let block = channels * bits / 8;
        let mut v = Vec::new();
        v.extend_from_slice(b"RIFF");
        v.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        v.extend_from_slice(b"WAVEfmt ");
        v.extend_from_slice(&16u32.to_le_bytes());
        v.extend_from_slice(&tag.to_le_bytes());
        v.extend_from_slice(&channels.to_le_bytes());
        v.extend_from_slice(&rate.to_le_bytes());
        v.extend_from_slice(&(rate * block as u32).to_le_bytes());
        v.extend_from_slice(&block.to_le_bytes());
        v.extend_from_slice(&bits.to_le_bytes());
        v.extend_from_slice(b"data");
        v.extend_from_slice(&(data.len() as u32).to_le_bytes());
        v.extend_from_slice(data);
        v
    }

    #[test]
    fn pcm16_full_scale_negative_is_minus_one() {
        let (s, f) = read_wav_bytes(&wav(1, 1, 8000, 16, &(-32768i16).to_le_bytes())).unwrap();
        assert_eq!(s.interleaved(), &[-1.0]);
        assert_eq!(f.sample_rate, 8000);
    }

    #[test]
    fn pcm24_full_scale_positive() {
        let (s, _) = read_wav_bytes(&wav(1, 1, 8000, 24, &[0xFF, 0xFF, 0x7F])).unwrap();
        assert_eq!(s.interleaved()[0], 8_388_607.0 / 8_388_608.0);
        let (s, _) = read_wav_bytes(&wav(1, 1, 8000, 24, &[0x00, 0x00, 0x80])).unwrap();
        assert_eq!(s.interleaved()[0], -1.0);
    }

    #[test]
    fn multichannel_maps_to_sensors() {
        let data: Vec<u8> = [1000i16, -1000, 2000, -2000].iter().flat_map(|v| v.to_le_bytes()).collect();
        let (s, _) = read_wav_bytes(&wav(1, 2, 8000, 16, &data)).unwrap();
        assert_eq!(s.n_sensors, 2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.sensor(1), [-1000.0 / 32768.0, -2000.0 / 32768.0]);
    }

    #[test]
    fn truncated_data_names_lengths() {
        let mut b = wav(1, 1, 8000, 16, &[0; 8]);
        b.truncate(b.len() - 3);
        match read_wav_bytes(&b) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, 52);
                assert_eq!(actual, 49);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_header_reports_offset() {
        let mut b = wav(1, 1, 8000, 16, &[0; 2]);
        b[8..12].copy_from_slice(b"AVI ");
        assert!(matches!(read_wav_bytes(&b), Err(Error::Parse { offset: 8, .. })));
        b[0] = b'X';
        assert!(matches!(read_wav_bytes(&b), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn unsupported_codecs_rejected() {
        assert!(matches!(read_wav_bytes(&wav(0x55, 1, 8000, 16, &[0; 2])), Err(Error::Unsupported(_))));
        assert!(matches!(read_wav_bytes(&wav(1, 1, 8000, 8, &[0; 2])), Err(Error::Unsupported(_))));
    }

    #[test]
    fn odd_chunks_are_skipped_with_padding() {
        let base = wav(1, 1, 8000, 16, &1234i16.to_le_bytes());
        let mut b = base[..36].to_vec();
        b.extend_from_slice(b"LIST");
        b.extend_from_slice(&3u32.to_le_bytes());
        b.extend_from_slice(&[1, 2, 3, 0]);
        b.extend_from_slice(&base[36..]);
        let (s, _) = read_wav_bytes(&b).unwrap();
        assert_eq!(s.interleaved(), &[1234.0 / 32768.0]);
    }

    #[test]
    fn partial_frame_is_an_error() {
        let b = wav(1, 2, 8000, 16, &[0; 6]);
        assert!(matches!(read_wav_bytes(&b), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_file_names_path() {
        let e = read_wav("/nonexistent/in.wav").unwrap_err();
        assert!(e.to_string().contains("/nonexistent/in.wav"));
    }
}
