use std::fmt::Write as _;
use std::path::Path;

use adsb_relay::codec::{
    build_position_frame, decode_frame, hex_to_frame, AdsbFrame, AircraftState, CodecError, CprParity, IcaoAddress,
    HEX_LEN,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    pub icao: IcaoAddress,
    pub lat: f64,
    pub lon: f64,
    pub altitude_ft: f64,
    pub parity: CprParity,
    pub ca: u8,
}

/// The 28 hex digits of one airborne position frame.
pub fn cmd_encode(opts: &EncodeOptions) -> Result<String, CliError> {
    let state = AircraftState::new(opts.icao, opts.lat, opts.lon, opts.altitude_ft, 0)?;
    Ok(build_position_frame(&state, opts.parity, opts.ca)?.to_hex())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub text: String,
    pub frames: usize,
    /// Frames that failed the CRC or are not airborne position messages.
    pub failures: usize,
}

/// Human-readable fields of one frame, and whether it decoded cleanly.
pub fn describe_frame(frame: &AdsbFrame) -> (String, bool) {
    let mut s = String::new();
    let _ = writeln!(s, "frame: {frame}");
    let ok = match decode_frame(frame) {
        Ok(msg) => {
            let _ = writeln!(s, "df: {}", msg.df);
            let _ = writeln!(s, "ca: {}", msg.ca);
            let _ = writeln!(s, "icao: {}", msg.icao);
            let _ = writeln!(s, "tc: {}", msg.tc);
            let _ = writeln!(s, "altitude_ft: {}", msg.altitude_ft);
            let _ = writeln!(
                s,
                "cpr: {} lat={} lon={}",
                msg.cpr.parity(),
                msg.cpr.yz(),
                msg.cpr.xz()
            );
            let _ = writeln!(s, "CRC: OK");
            true
        }
        Err(e) => {
            let _ = writeln!(s, "df: {}", frame.df());
            let _ = writeln!(s, "ca: {}", frame.ca());
            let _ = writeln!(s, "icao: {}", frame.icao());
            let _ = writeln!(s, "tc: {}", frame.type_code());
            match e {
                CodecError::Parity { residual } => {
                    let _ = writeln!(s, "residual: {residual:06X}");
                    let _ = writeln!(s, "CRC: FAIL");
                }
                other => {
                    let _ = writeln!(s, "CRC: OK");
                    let _ = writeln!(s, "error: {other}");
                }
            }
            false
        }
    };
    (s, ok)
}

/// Decode a hex frame given directly, or every frame in a file (one per
/// line; blank lines and `#` comments skipped).
pub fn cmd_decode(input: &str) -> Result<DecodeOutcome, CliError> {
    let hexes: Vec<String> = if input.len() == HEX_LEN && input.chars().all(|c| c.is_ascii_hexdigit()) {
        vec![input.to_string()]
    } else if Path::new(input).is_file() {
        std::fs::read_to_string(input)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect()
    } else {
        // not a file either: report why it is not a frame
        return Err(hex_to_frame(input)
            .err()
            .map_or_else(|| CliError::Validation(format!("cannot read {input:?}")), CliError::from));
    };

    let mut text = String::new();
    let mut failures = 0;
    for (i, hex) in hexes.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        let frame = hex_to_frame(hex)?;
        let (block, ok) = describe_frame(&frame);
        text.push_str(&block);
        failures += usize::from(!ok);
    }
    Ok(DecodeOutcome { text, frames: hexes.len(), failures })
}
