//! 12-bit barometric altitude field, 25 ft increments (Q bit set).

use super::CodecError;

pub const MIN_ALTITUDE_FT: f64 = -1000.0;
pub const MAX_ALTITUDE_FT: f64 = 50175.0;

const Q_BIT: u16 = 0x010;

/// Encode an altitude in feet. The value is rounded half away from zero to
/// the nearest 25 ft step.
pub fn encode_altitude(altitude_ft: f64) -> Result<u16, CodecError> {
    if !(MIN_ALTITUDE_FT..=MAX_ALTITUDE_FT).contains(&altitude_ft) {
        return Err(CodecError::AltitudeOutOfRange(altitude_ft));
    }
    let n = ((altitude_ft / 25.0).round() + 40.0) as u16;
    Ok((n >> 4) << 5 | Q_BIT | (n & 0xF))
}

/// Decode a 12-bit altitude code. Codes with Q = 0 (100 ft Gillham) and
/// the all-zero "unavailable" code are rejected.
pub fn decode_altitude(code: u16) -> Result<f64, CodecError> {
    if code > 0xFFF {
        return Err(CodecError::FieldOverflow { field: "altitude", value: u64::from(code) });
    }
    if code & Q_BIT == 0 {
        return Err(CodecError::UnsupportedAltitude(code));
    }
    let n = (code >> 5) << 4 | (code & 0xF);
    Ok(f64::from(n) * 25.0 - 1000.0)
}

/// The altitude an encoder would actually transmit for `altitude_ft`.
pub fn quantize_altitude(altitude_ft: f64) -> f64 {
    (altitude_ft / 25.0).round() * 25.0
}
