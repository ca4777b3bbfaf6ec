//! Headerless interleaved f32 little-endian IQ files and their text sidecar.
//!
//! Sidecar layout:
//!
//! ```text
//! sample_rate=2000000
//! 0
//! 240
//! ```
//!
//! The first line records the sample rate in Hz; each following line is one
//! burst start offset, in samples at that rate.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex32;

use super::ModemError;

pub fn write_iq<W: Write>(mut out: W, samples: &[Complex32]) -> Result<(), ModemError> {
    let mut buf = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_iq<R: Read>(mut input: R) -> Result<Vec<Complex32>, ModemError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(ModemError::Io(format!("IQ stream length {} is not a multiple of 8", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sidecar {
    pub sample_rate: u32,
    pub offsets: Vec<u64>,
}

pub fn write_sidecar<W: Write>(mut out: W, sidecar: &Sidecar) -> Result<(), ModemError> {
    writeln!(out, "sample_rate={}", sidecar.sample_rate)?;
    for offset in &sidecar.offsets {
        writeln!(out, "{offset}")?;
    }
    Ok(())
}

pub fn read_sidecar<R: Read>(input: R) -> Result<Sidecar, ModemError> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| ModemError::Sidecar("empty file".into()))??;
    let sample_rate = header
        .strip_prefix("sample_rate=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| ModemError::Sidecar(format!("bad header line {header:?}")))?;
    let mut offsets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        offsets.push(line.parse().map_err(|_| ModemError::Sidecar(format!("bad offset {line:?}")))?);
    }
    Ok(Sidecar { sample_rate, offsets })
}
