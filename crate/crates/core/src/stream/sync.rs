//! Index-based alignment of several sensor streams.
//!
//! Each stream's frame `i` sits at timeline position `start + offset + i`.
//! A merged frame is emitted only where every stream has a valid sample;
//! everything else is dropped here and counted, so nothing downstream of
//! synchronization is ever discarded.

use super::FrameStream;
use crate::{Error, Result};

/// Valid frames of one input stream that did not make it into the output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropCounts {
    /// Before every stream had started.
    pub lead_in: u64,
    /// Inside the common window, while another stream had a gap.
    pub withheld: u64,
    /// After the first stream ended.
    pub tail: u64,
}

impl DropCounts {
    pub fn total(&self) -> u64 {
        self.lead_in + self.withheld + self.tail
    }
}

/// A run of invalid frames in one stream, in timeline positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    pub stream: usize,
    pub start: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncOutput {
    /// Contiguous runs of merged frames; a gap in any input splits the
    /// output. Sensors are concatenated in input order.
    pub segments: Vec<FrameStream>,
    pub drops: Vec<DropCounts>,
    pub gaps: Vec<Gap>,
}

impl SyncOutput {
    pub fn frames_out(&self) -> u64 {
        self.segments.iter().map(|s| s.len() as u64).sum()
    }

    /// All segments back to back, starting at the first segment's timestamp.
    pub fn joined(&self) -> Option<FrameStream> {
        let first = self.segments.first()?;
        let mut all = first.clone();
        for seg in &self.segments[1..] {
            for f in seg.frames() {
                all.push_frame(f.samples, true).expect("segments share a layout");
            }
        }
        Some(all)
    }
}

pub fn synchronize(streams: &[FrameStream]) -> Result<SyncOutput> {
    synchronize_with_offsets(streams, &vec![0; streams.len()])
}

/// Aligns streams after shifting stream `k` by `offsets[k]` frames.
pub fn synchronize_with_offsets(streams: &[FrameStream], offsets: &[i64]) -> Result<SyncOutput> {
    let first = streams.first().ok_or_else(|| Error::config("nothing to synchronize"))?;
    if offsets.len() != streams.len() {
        return Err(Error::config(format!(
            "{} offsets for {} streams",
            offsets.len(),
            streams.len()
        )));
    }
    if let Some(s) = streams.iter().find(|s| s.sample_rate_hz != first.sample_rate_hz) {
        return Err(Error::config(format!(
            "sample rates differ: {} Hz vs {} Hz",
            first.sample_rate_hz, s.sample_rate_hz
        )));
    }

    let mut begin = Vec::with_capacity(streams.len());
    for (s, &off) in streams.iter().zip(offsets) {
        let b = s.start as i64 + off;
        if b < 0 {
            return Err(Error::config(format!("offset {off} moves a stream before time 0")));
        }
        begin.push(b as u64);
    }
    let lo = *begin.iter().max().expect("non-empty");
    let hi = streams
        .iter()
        .zip(&begin)
        .map(|(s, &b)| b + s.len() as u64)
        .min()
        .expect("non-empty")
        .max(lo);

    let n_out: usize = streams.iter().map(|s| s.n_sensors).sum();
    let mut drops = vec![DropCounts::default(); streams.len()];
    for (k, s) in streams.iter().enumerate() {
        for (i, &v) in s.valid_flags().iter().enumerate() {
            let t = begin[k] + i as u64;
            if v && t < lo {
                drops[k].lead_in += 1;
            } else if v && t >= hi {
                drops[k].tail += 1;
            }
        }
    }

    let mut gaps = Vec::new();
    let mut open: Vec<Option<u64>> = vec![None; streams.len()];
    let mut segments = Vec::new();
    let mut current: Option<FrameStream> = None;
    let mut merged = Vec::with_capacity(n_out);
    for t in lo..hi {
        let at = |k: usize| (t - begin[k]) as usize;
        let mut all_valid = true;
        for (k, s) in streams.iter().enumerate() {
            let valid = s.valid_flags()[at(k)];
            match (valid, open[k]) {
                (false, None) => open[k] = Some(t),
                (true, Some(g)) => {
                    gaps.push(Gap { stream: k, start: g, len: t - g });
                    open[k] = None;
                }
                _ => {}
            }
            all_valid &= valid;
        }
        if all_valid {
            merged.clear();
            for (k, s) in streams.iter().enumerate() {
                merged.extend_from_slice(s.frame(at(k)).samples);
            }
            let seg = current.get_or_insert_with(|| {
                FrameStream::new(first.sample_rate_hz, n_out)
                    .expect("validated by inputs")
                    .with_start(t)
            });
            seg.push_frame(&merged, true)?;
        } else {
            for (k, s) in streams.iter().enumerate() {
                drops[k].withheld += s.valid_flags()[at(k)] as u64;
            }
            segments.extend(current.take());
        }
    }
    segments.extend(current.take());
    for (k, g) in open.iter().enumerate() {
        if let Some(g) = *g {
            gaps.push(Gap { stream: k, start: g, len: hi - g });
        }
    }
    gaps.sort_by_key(|g| (g.start, g.stream));
    Ok(SyncOutput { segments, drops, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, from: f64) -> FrameStream {
        FrameStream::mono(1000.0, (0..n).map(|i| from + i as f64).collect()).unwrap()
    }

    #[test]
    fn identical_streams_double_the_sensors() {
        let a = ramp(10, 0.0);
        let out = synchronize(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(out.segments.len(), 1);
        let s = &out.segments[0];
        assert_eq!(s.n_sensors, 2);
        assert_eq!(s.sensor(0), a.sensor(0));
        assert_eq!(s.sensor(1), a.sensor(0));
        assert!(out.drops.iter().all(|d| d.total() == 0));
        assert!(out.gaps.is_empty());
    }

    #[test]
    fn late_stream_drops_lead_in() {
        let a = ramp(20, 0.0);
        let b = ramp(15, 100.0).with_start(5);
        let out = synchronize(&[a, b]).unwrap();
        assert_eq!(out.drops[0], DropCounts { lead_in: 5, withheld: 0, tail: 0 });
        assert_eq!(out.drops[1].total(), 0);
        let s = &out.segments[0];
        assert_eq!(s.start, 5);
        assert_eq!(s.frame(0).samples, &[5.0, 100.0]);
        assert_eq!(out.frames_out(), 15);
    }

    #[test]
    fn offsets_shift_streams() {
        let a = ramp(20, 0.0);
        let b = ramp(15, 100.0);
        let out = synchronize_with_offsets(&[a, b], &[0, 5]).unwrap();
        assert_eq!(out.drops[0].lead_in, 5);
        assert!(synchronize_with_offsets(&[ramp(2, 0.0)], &[-1]).is_err());
    }

    #[test]
    fn gap_withholds_frames_and_is_reported() {
        let a = ramp(20, 0.0);
        let mut b = ramp(20, 100.0);
        b.invalidate(8, 3);
        let out = synchronize(&[a, b]).unwrap();
        assert_eq!(out.gaps, vec![Gap { stream: 1, start: 8, len: 3 }]);
        assert_eq!(out.drops[0].withheld, 3);
        assert_eq!(out.drops[1].total(), 0);
        assert_eq!(out.frames_out(), 17);
        assert_eq!(out.segments.len(), 2);
        assert_eq!(out.segments[1].start, 11);
        assert_eq!(out.segments[1].frame(0).samples, &[11.0, 111.0]);
    }

    #[test]
    fn trailing_frames_counted() {
        let out = synchronize(&[ramp(10, 0.0), ramp(7, 0.0)]).unwrap();
        assert_eq!(out.drops[0].tail, 3);
        assert_eq!(out.joined().unwrap().len(), 7);
    }

    #[test]
    fn rate_mismatch_rejected() {
        let b = FrameStream::mono(2000.0, vec![0.0; 4]).unwrap();
        assert!(matches!(synchronize(&[ramp(4, 0.0), b]), Err(Error::Config(_))));
        assert!(synchronize(&[]).is_err());
    }

    #[test]
    fn disjoint_streams_emit_nothing() {
        let b = ramp(5, 0.0).with_start(10);
        let out = synchronize(&[ramp(5, 0.0), b]).unwrap();
        assert_eq!(out.frames_out(), 0);
        assert_eq!(out.drops[0].lead_in, 5);
        assert_eq!(out.drops[1].tail, 5);
    }
}
