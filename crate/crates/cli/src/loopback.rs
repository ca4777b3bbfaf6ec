//! Software loopback: a linear track is encoded, modulated, optionally
//! written to an IQ file, then detected, demodulated and decoded again.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use adsb_relay::codec::{
    build_position_frame, decode_cpr_global, decode_frame, encode_cpr, quantize_altitude, AdsbFrame, AircraftState,
    CprParity, IcaoAddress, PositionMessage,
};
use adsb_relay::modem::{
    decimate, demodulate, detect_preamble, modulate, read_iq, upsample, write_iq, write_sidecar, IqBurst, Sidecar,
    BASE_SAMPLE_RATE, BURST_SAMPLES,
};
use adsb_relay::queue::format_sig;

use crate::CliError;

pub const LOOPBACK_LOG_HEADER: &str = "index,time_s,parity,published_lat,published_lon,published_alt_ft,\
sent_hex,decoded_hex,crc,decoded_lat,decoded_lon,decoded_alt_ft,position_error_deg";

#[derive(Debug, Clone, PartialEq)]
pub struct LoopbackOptions {
    pub duration_s: f64,
    pub rate_hz: f64,
    pub icao: IcaoAddress,
    pub capability: u8,
    pub start_lat: f64,
    pub start_lon: f64,
    pub start_alt_ft: f64,
    pub lat_rate_deg_s: f64,
    pub lon_rate_deg_s: f64,
    pub alt_rate_ft_s: f64,
    pub upsample: usize,
    /// Raw IQ output; the sidecar goes next to it as `<path>.sidecar.txt`.
    pub iq_path: Option<PathBuf>,
    /// Published-versus-decoded CSV log.
    pub log_path: Option<PathBuf>,
}

impl Default for LoopbackOptions {
    fn default() -> Self {
        LoopbackOptions {
            duration_s: 30.0,
            rate_hz: 2.0,
            icao: IcaoAddress::new(0xA32DEA).expect("24-bit"),
            capability: 5,
            start_lat: 40.8518,
            start_lon: 14.2681,
            start_alt_ft: 500.0,
            lat_rate_deg_s: 1e-4,
            lon_rate_deg_s: 1.5e-4,
            alt_rate_ft_s: 5.0,
            upsample: 1,
            iq_path: None,
            log_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopbackReport {
    pub sent: usize,
    /// Preambles found in the sample stream.
    pub detected: usize,
    /// Frames recovered at a burst position with a valid CRC.
    pub decoded: usize,
    /// Decoded frames whose ICAO, altitude and CPR word equal the published state's.
    pub field_matches: usize,
    /// Consecutive even/odd pairs resolved to a position.
    pub pairs: usize,
    /// Largest latitude or longitude error over resolved pairs, degrees.
    pub max_position_error_deg: Option<f64>,
    pub iq_bytes: Option<u64>,
}

impl LoopbackReport {
    pub fn all_decoded(&self) -> bool {
        self.decoded == self.sent && self.field_matches == self.sent
    }
}

pub fn sidecar_path(iq_path: &Path) -> PathBuf {
    let mut name = iq_path.as_os_str().to_owned();
    name.push(".sidecar.txt");
    PathBuf::from(name)
}

fn published_states(opts: &LoopbackOptions) -> Result<Vec<(f64, AircraftState)>, CliError> {
    if !(opts.duration_s.is_finite() && opts.duration_s >= 0.0) {
        return Err(CliError::Validation("duration must be non-negative".into()));
    }
    if !(opts.rate_hz.is_finite() && opts.rate_hz > 0.0) {
        return Err(CliError::Validation("rate must be positive".into()));
    }
    let count = (opts.duration_s * opts.rate_hz + 1e-9).floor() as usize;
    (0..count)
        .map(|i| {
            let t = i as f64 / opts.rate_hz;
            let state = AircraftState::new(
                opts.icao,
                opts.start_lat + opts.lat_rate_deg_s * t,
                opts.start_lon + opts.lon_rate_deg_s * t,
                opts.start_alt_ft + opts.alt_rate_ft_s * t,
                (t * 1e6).round() as u64,
            )?;
            Ok((t, state))
        })
        .collect()
}

fn parity_of(index: usize) -> CprParity {
    if index % 2 == 0 {
        CprParity::Even
    } else {
        CprParity::Odd
    }
}

fn matches_published(msg: &PositionMessage, state: &AircraftState, parity: CprParity) -> bool {
    msg.icao == state.icao
        && msg.altitude_ft == quantize_altitude(state.altitude_ft)
        && encode_cpr(state.latitude, state.longitude, parity).is_ok_and(|w| w == msg.cpr)
}

pub fn cmd_loopback(opts: &LoopbackOptions) -> Result<LoopbackReport, CliError> {
    if opts.upsample == 0 {
        return Err(CliError::Validation("upsample factor must be at least 1".into()));
    }
    let published = published_states(opts)?;
    let frames: Vec<AdsbFrame> = published
        .iter()
        .enumerate()
        .map(|(i, (_, s))| build_position_frame(s, parity_of(i), opts.capability))
        .collect::<Result<_, _>>()?;

    // transmit: bursts back to back
    let rate = BASE_SAMPLE_RATE * opts.upsample as u32;
    let mut samples = Vec::with_capacity(frames.len() * BURST_SAMPLES * opts.upsample);
    for f in &frames {
        samples.extend(upsample(&modulate(f), opts.upsample)?.samples);
    }
    let mut iq_bytes = None;
    if let Some(path) = &opts.iq_path {
        let mut out = BufWriter::new(File::create(path)?);
        write_iq(&mut out, &samples)?;
        out.flush()?;
        let offsets = (0..frames.len()).map(|i| (i * BURST_SAMPLES * opts.upsample) as u64).collect();
        let mut side = BufWriter::new(File::create(sidecar_path(path))?);
        write_sidecar(&mut side, &Sidecar { sample_rate: rate, offsets })?;
        side.flush()?;
        // receive from what actually landed on disk
        samples = read_iq(BufReader::new(File::open(path)?))?;
        iq_bytes = Some(std::fs::metadata(path)?.len());
    }

    // receive
    let stream = decimate(&IqBurst::new(samples, rate)?, opts.upsample)?;
    let mags = stream.magnitudes();
    let offsets = detect_preamble(&mags);
    let mut received: Vec<Option<(AdsbFrame, Option<PositionMessage>)>> = vec![None; frames.len()];
    for &offset in &offsets {
        let index = offset / BURST_SAMPLES;
        if offset % BURST_SAMPLES != 0 || index >= frames.len() {
            continue;
        }
        let res = demodulate(&mags, offset)?;
        received[index] = Some((res.frame, decode_frame(&res.frame).ok()));
    }

    let mut report = LoopbackReport {
        sent: frames.len(),
        detected: offsets.len(),
        decoded: 0,
        field_matches: 0,
        pairs: 0,
        max_position_error_deg: None,
        iq_bytes,
    };
    let mut log = String::new();
    log.push_str(LOOPBACK_LOG_HEADER);
    log.push('\n');
    for (i, ((t, state), sent)) in published.iter().zip(&frames).enumerate() {
        let parity = parity_of(i);
        let decoded = received[i].as_ref().and_then(|(_, m)| m.as_ref());
        let mut position = None;
        if let Some(msg) = decoded {
            report.decoded += 1;
            report.field_matches += usize::from(matches_published(msg, state, parity));
            let previous = i.checked_sub(1).and_then(|j| received[j].as_ref()).and_then(|(_, m)| m.as_ref());
            if let Some(prev) = previous.filter(|p| p.cpr.parity() != msg.cpr.parity()) {
                let (even, odd) = if msg.cpr.parity() == CprParity::Even { (msg.cpr, prev.cpr) } else { (prev.cpr, msg.cpr) };
                if let Ok((lat, lon)) = decode_cpr_global(even, odd, msg.cpr.parity()) {
                    let err = (lat - state.latitude).abs().max((lon - state.longitude).abs());
                    report.pairs += 1;
                    report.max_position_error_deg = Some(report.max_position_error_deg.map_or(err, |m: f64| m.max(err)));
                    position = Some((lat, lon, err));
                }
            }
        }
        let decoded_hex = received[i].as_ref().map(|(f, _)| f.to_hex()).unwrap_or_default();
        let crc = match &received[i] {
            Some((_, Some(_))) => "ok",
            Some((_, None)) => "fail",
            None => "missing",
        };
        let (dlat, dlon, derr) = position
            .map(|(a, b, e)| (format_sig(a, 9), format_sig(b, 9), format_sig(e, 3)))
            .unwrap_or_default();
        let dalt = decoded.map(|m| format_sig(m.altitude_ft, 9)).unwrap_or_default();
        log.push_str(&format!(
            "{i},{},{parity},{},{},{},{},{decoded_hex},{crc},{dlat},{dlon},{dalt},{derr}\n",
            format_sig(*t, 9),
            format_sig(state.latitude, 9),
            format_sig(state.longitude, 9),
            format_sig(state.altitude_ft, 9),
            sent.to_hex(),
        ));
    }
    if let Some(path) = &opts.log_path {
        std::fs::write(path, log)?;
    }
    Ok(report)
}
