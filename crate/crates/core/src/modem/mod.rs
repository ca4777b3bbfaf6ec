//! Pulse-position modulation at 1 Mbit/s, sampled at 2 MHz.
//!
//! A burst is an 8 us preamble (16 samples) followed by 112 data bits of two
//! samples each: 240 samples, 120 us. Bit 1 puts the pulse in the first half
//! of its symbol, bit 0 in the second.

mod iqfile;

use num_complex::Complex32;
use thiserror::Error;

use crate::codec::{decode_frame, AdsbFrame, FRAME_BITS};

pub use iqfile::{read_iq, read_sidecar, write_iq, write_sidecar, Sidecar};

pub const BASE_SAMPLE_RATE: u32 = 2_000_000;
pub const PREAMBLE_SAMPLES: usize = 16;
pub const DATA_SAMPLES: usize = 2 * FRAME_BITS;
pub const BURST_SAMPLES: usize = PREAMBLE_SAMPLES + DATA_SAMPLES;
pub const BURST_DURATION_US: u32 = 120;

/// Pulse sample indices of the preamble: 0, 1.0, 3.5 and 4.5 us.
pub const PREAMBLE_PULSES: [usize; 4] = [0, 2, 7, 9];

/// Minimum normalized correlation for a preamble candidate.
pub const PREAMBLE_THRESHOLD: f32 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModemError {
    #[error("upsampling factor must be at least 1")]
    ZeroFactor,
    #[error("need {needed} samples from offset {offset}, only {available} available")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("sample rate {0} Hz is not a positive multiple of 2 MHz")]
    SampleRate(u32),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed sidecar: {0}")]
    Sidecar(String),
}

impl From<std::io::Error> for ModemError {
    fn from(e: std::io::Error) -> Self {
        ModemError::Io(e.to_string())
    }
}

/// Complex baseband samples of one or more bursts.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBurst {
    pub samples: Vec<Complex32>,
    pub sample_rate: u32,
}

impl IqBurst {
    pub fn new(samples: Vec<Complex32>, sample_rate: u32) -> Result<Self, ModemError> {
        if sample_rate == 0 || sample_rate % BASE_SAMPLE_RATE != 0 {
            return Err(ModemError::SampleRate(sample_rate));
        }
        Ok(IqBurst { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples per 2 MHz sample.
    pub fn oversampling(&self) -> usize {
        (self.sample_rate / BASE_SAMPLE_RATE) as usize
    }

    pub fn duration_us(&self) -> f64 {
        self.samples.len() as f64 * 1e6 / f64::from(self.sample_rate)
    }

    pub fn magnitudes(&self) -> Vec<f32> {
        self.samples.iter().map(|s| s.norm()).collect()
    }
}

fn pulse(on: bool) -> Complex32 {
    if on {
        Complex32::new(1.0, 0.0)
    } else {
        Complex32::new(0.0, 0.0)
    }
}

/// Synthesize the 240-sample burst for `frame` at 2 MHz.
pub fn modulate(frame: &AdsbFrame) -> IqBurst {
    let mut samples = Vec::with_capacity(BURST_SAMPLES);
    samples.extend((0..PREAMBLE_SAMPLES).map(|i| pulse(PREAMBLE_PULSES.contains(&i))));
    for bit in frame.bits() {
        samples.push(pulse(bit == 1));
        samples.push(pulse(bit == 0));
    }
    IqBurst { samples, sample_rate: BASE_SAMPLE_RATE }
}

/// Zero-order-hold upsampling by an integer factor.
pub fn upsample(burst: &IqBurst, factor: usize) -> Result<IqBurst, ModemError> {
    if factor == 0 {
        return Err(ModemError::ZeroFactor);
    }
    let samples = burst
        .samples
        .iter()
        .flat_map(|&s| std::iter::repeat_n(s, factor))
        .collect();
    Ok(IqBurst { samples, sample_rate: burst.sample_rate * factor as u32 })
}

/// Keep every `factor`-th sample, starting with the first.
pub fn decimate(burst: &IqBurst, factor: usize) -> Result<IqBurst, ModemError> {
    if factor == 0 {
        return Err(ModemError::ZeroFactor);
    }
    let rate = burst.sample_rate / factor as u32;
    if rate == 0 || rate % BASE_SAMPLE_RATE != 0 || burst.sample_rate % factor as u32 != 0 {
        return Err(ModemError::SampleRate(rate));
    }
    let samples = burst.samples.iter().step_by(factor).copied().collect();
    Ok(IqBurst { samples, sample_rate: rate })
}

/// Cosine similarity of a 16-sample window with the preamble template.
fn preamble_score(window: &[f32]) -> f32 {
    let energy: f32 = window.iter().map(|s| s * s).sum();
    if energy <= 0.0 {
        return 0.0;
    }
    let matched: f32 = PREAMBLE_PULSES.iter().map(|&i| window[i]).sum();
    matched / (energy.sqrt() * (PREAMBLE_PULSES.len() as f32).sqrt())
}

fn pulses_above_quiet(window: &[f32]) -> bool {
    let quiet_sum: f32 = (0..PREAMBLE_SAMPLES)
        .filter(|i| !PREAMBLE_PULSES.contains(i))
        .map(|i| window[i])
        .sum();
    let quiet_mean = quiet_sum / (PREAMBLE_SAMPLES - PREAMBLE_PULSES.len()) as f32;
    PREAMBLE_PULSES.iter().all(|&i| window[i] > quiet_mean)
}

/// Candidate burst start offsets in a 2 MHz magnitude stream.
///
/// A window qualifies when its normalized correlation with the preamble
/// template exceeds [`PREAMBLE_THRESHOLD`] and each of the four pulse samples
/// exceeds the mean of the twelve quiet samples. Qualifying windows are then
/// thinned so that no two reported offsets are closer than one burst length,
/// keeping the higher-scoring one; the tail of a burst can otherwise mimic a
/// preamble.
pub fn detect_preamble(magnitudes: &[f32]) -> Vec<usize> {
    if magnitudes.len() < PREAMBLE_SAMPLES {
        return Vec::new();
    }
    let mut candidates: Vec<(usize, f32)> = magnitudes
        .windows(PREAMBLE_SAMPLES)
        .enumerate()
        .filter_map(|(offset, w)| {
            let score = preamble_score(w);
            (score > PREAMBLE_THRESHOLD && pulses_above_quiet(w)).then_some((offset, score))
        })
        .collect();

    // Highest score first, earliest offset on ties.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut accepted: Vec<usize> = Vec::new();
    for (offset, _) in candidates {
        if accepted.iter().all(|&o| o.abs_diff(offset) >= BURST_SAMPLES) {
            accepted.push(offset);
        }
    }
    accepted.sort_unstable();
    accepted
}

/// Recovered bits from one burst position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodResult {
    pub frame: AdsbFrame,
    pub start_offset: usize,
    /// Whether the recovered frame is accepted by [`decode_frame`].
    pub crc_ok: bool,
}

/// Slice the 112 data bits following a preamble starting at `start_offset`.
///
/// Each bit compares the first and second half-symbol magnitudes; a tie
/// decides 0.
pub fn demodulate(magnitudes: &[f32], start_offset: usize) -> Result<DemodResult, ModemError> {
    let available = magnitudes.len().saturating_sub(start_offset);
    if available < BURST_SAMPLES {
        return Err(ModemError::Truncated { offset: start_offset, needed: BURST_SAMPLES, available });
    }
    let data = &magnitudes[start_offset + PREAMBLE_SAMPLES..start_offset + BURST_SAMPLES];
    let bits: Vec<u8> = data.chunks_exact(2).map(|s| u8::from(s[0] > s[1])).collect();
    let frame = AdsbFrame::from_bits(&bits).expect("112 symbols");
    Ok(DemodResult { frame, start_offset, crc_ok: decode_frame(&frame).is_ok() })
}

/// Demodulate an [`IqBurst`] at any supported rate by decimating to 2 MHz.
pub fn demodulate_burst(burst: &IqBurst, start_offset: usize) -> Result<DemodResult, ModemError> {
    let base = decimate(burst, burst.oversampling())?;
    demodulate(&base.magnitudes(), start_offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_position_frame, AircraftState, CprParity, IcaoAddress};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample_frame() -> AdsbFrame {
        let state =
            AircraftState::new(IcaoAddress::new(0xA32DEA).unwrap(), 40.8518, 14.2681, 500.0, 0).unwrap();
        build_position_frame(&state, CprParity::Even, 5).unwrap()
    }

    fn embed(bursts: &[(usize, &IqBurst)], total: usize) -> Vec<f32> {
        let mut out = vec![0.0f32; total];
        for (offset, b) in bursts {
            for (i, m) in b.magnitudes().into_iter().enumerate() {
                out[offset + i] += m;
            }
        }
        out
    }

    #[test]
    fn burst_is_240_samples() {
        let b = modulate(&sample_frame());
        assert_eq!(b.len(), 240);
        assert_eq!(b.sample_rate, 2_000_000);
        assert_eq!(b.duration_us(), 120.0);
    }

    #[test]
    fn preamble_layout() {
        let m = modulate(&sample_frame()).magnitudes();
        let expected = [1., 0., 1., 0., 0., 0., 0., 1., 0., 1., 0., 0., 0., 0., 0., 0.];
        assert_eq!(&m[..16], &expected);
    }

    #[test]
    fn all_ones_data_alternates() {
        let frame = AdsbFrame::from_bytes([0xFF; 14]);
        let m = modulate(&frame).magnitudes();
        for pair in m[16..].chunks(2) {
            assert_eq!(pair, [1.0, 0.0]);
        }
    }

    #[test]
    fn pulse_count_is_116_per_factor() {
        let b = modulate(&sample_frame());
        for factor in [1, 2, 3, 4, 10] {
            let up = upsample(&b, factor).unwrap();
            let pulses = up.magnitudes().iter().filter(|&&m| m == 1.0).count();
            assert_eq!(pulses, 116 * factor);
            assert!(up.magnitudes().iter().all(|&m| m == 0.0 || m == 1.0));
            assert_eq!(up.duration_us(), 120.0);
        }
    }

    #[test]
    fn upsample_identity_and_length() {
        let b = modulate(&sample_frame());
        assert_eq!(upsample(&b, 1).unwrap(), b);
        let up = upsample(&b, 4).unwrap();
        assert_eq!(up.len(), 960);
        assert_eq!(up.sample_rate, 8_000_000);
        assert_eq!(upsample(&b, 0), Err(ModemError::ZeroFactor));
    }

    #[test]
    fn loopback_through_upsampling() {
        let frame = sample_frame();
        for factor in [1, 2, 4, 10] {
            let up = upsample(&modulate(&frame), factor).unwrap();
            let r = demodulate_burst(&up, 0).unwrap();
            assert_eq!(r.frame, frame);
            assert!(r.crc_ok);
        }
    }

    #[test]
    fn detect_single_burst() {
        let b = modulate(&sample_frame());
        assert_eq!(detect_preamble(&embed(&[(100, &b)], 600)), vec![100]);
    }

    #[test]
    fn detect_nothing_in_silence() {
        assert!(detect_preamble(&[0.0; 1000]).is_empty());
        assert!(detect_preamble(&[0.0; 5]).is_empty());
    }

    #[test]
    fn detect_two_bursts() {
        let b = modulate(&sample_frame());
        assert_eq!(detect_preamble(&embed(&[(0, &b), (500, &b)], 1000)), vec![0, 500]);
    }

    #[test]
    fn detect_back_to_back_bursts() {
        let a = modulate(&sample_frame());
        let b = modulate(&AdsbFrame::from_bytes([0xFF; 14]));
        let stream = embed(&[(0, &a), (240, &b), (480, &a)], 720);
        assert_eq!(detect_preamble(&stream), vec![0, 240, 480]);
    }

    #[test]
    fn noisy_burst_still_decodes() {
        let frame = sample_frame();
        let mut m = modulate(&frame).magnitudes();
        let noise = Normal::new(0.0f32, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in m.iter_mut() {
            *s += noise.sample(&mut rng);
        }
        assert_eq!(detect_preamble(&m), vec![0]);
        let r = demodulate(&m, 0).unwrap();
        assert!(r.crc_ok);
        assert_eq!(r.frame, frame);
    }

    #[test]
    fn gross_corruption_fails_parity() {
        let mut m = modulate(&sample_frame()).magnitudes();
        m[16..76].iter_mut().for_each(|s| *s = 0.0);
        let r = demodulate(&m, 0).unwrap();
        assert!(!r.crc_ok);
    }

    #[test]
    fn truncated_input() {
        let m = modulate(&sample_frame()).magnitudes();
        assert!(matches!(demodulate(&m, 1), Err(ModemError::Truncated { available: 239, .. })));
        assert!(matches!(demodulate(&m, 500), Err(ModemError::Truncated { available: 0, .. })));
    }

    #[test]
    fn sample_rate_must_be_multiple_of_base() {
        assert!(IqBurst::new(vec![], 3_000_000).is_err());
        assert!(IqBurst::new(vec![], 0).is_err());
        assert!(IqBurst::new(vec![], 4_000_000).is_ok());
    }
}
