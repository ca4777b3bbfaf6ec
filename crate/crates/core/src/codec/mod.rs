//! Mode-S Extended Squitter (DF17) airborne-position codec.

mod altitude;
mod cpr;
mod crc;
mod frame;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use altitude::{decode_altitude, encode_altitude, quantize_altitude, MAX_ALTITUDE_FT, MIN_ALTITUDE_FT};
pub use cpr::{decode_cpr_global, decode_cpr_local, encode_cpr, nl, CprParity, CprWord};
pub use crc::{crc24, residual, GENERATOR};
pub use frame::{
    build_position_frame, decode_frame, frame_to_hex, hex_to_frame, AdsbFrame, PositionMessage,
    DF_EXTENDED_SQUITTER, FRAME_BITS, FRAME_BYTES, HEX_LEN, TC_AIRBORNE_POSITION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("expected {expected_bits} bits, got {actual_bits}")]
    InputLength { expected_bits: usize, actual_bits: usize },
    #[error("coordinates out of range: lat {lat}, lon {lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
    #[error("altitude {0} ft outside the 25 ft encoding range [-1000, 50175]")]
    AltitudeOutOfRange(f64),
    #[error("altitude code {0:#05x} is not a 25 ft (Q=1) code")]
    UnsupportedAltitude(u16),
    #[error("{field} value {value} does not fit its field")]
    FieldOverflow { field: &'static str, value: u64 },
    #[error("inconsistent CPR words: {0}")]
    CprInconsistent(&'static str),
    #[error("parity check failed (residual {residual:06X})")]
    Parity { residual: u32 },
    #[error("unsupported format: DF {df}, TC {tc}")]
    UnsupportedFormat { df: u8, tc: u8 },
    #[error("hex frame must be 28 characters, got {0}")]
    HexLength(usize),
    #[error("invalid hex digit at position {position}")]
    HexDigit { position: usize },
    #[error("invalid ICAO address: {0}")]
    InvalidIcao(String),
}

/// 24-bit ICAO aircraft address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IcaoAddress(u32);

impl IcaoAddress {
    pub fn new(value: u32) -> Result<Self, CodecError> {
        if value > 0xFF_FFFF {
            return Err(CodecError::InvalidIcao(format!("{value:#x} exceeds 24 bits")));
        }
        Ok(IcaoAddress(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for IcaoAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06X}", self.0)
    }
}

impl FromStr for IcaoAddress {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 6 || !s.bytes().all(|c| c.is_ascii_hexdigit()) {
            return Err(CodecError::InvalidIcao(s.to_string()));
        }
        let value = u32::from_str_radix(s, 16).map_err(|_| CodecError::InvalidIcao(s.to_string()))?;
        IcaoAddress::new(value)
    }
}

/// Identity and kinematic state reported by one aircraft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AircraftState {
    pub icao: IcaoAddress,
    /// Degrees, [-90, 90].
    pub latitude: f64,
    /// Degrees, [-180, 180).
    pub longitude: f64,
    /// Barometric altitude in feet, [-1000, 50175].
    pub altitude_ft: f64,
    /// Microseconds since the scenario epoch.
    pub timestamp_us: u64,
}

impl AircraftState {
    pub fn new(
        icao: IcaoAddress,
        latitude: f64,
        longitude: f64,
        altitude_ft: f64,
        timestamp_us: u64,
    ) -> Result<Self, CodecError> {
        let state = AircraftState { icao, latitude, longitude, altitude_ft, timestamp_us };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        let lat_ok = self.latitude.is_finite() && (-90.0..=90.0).contains(&self.latitude);
        let lon_ok = self.longitude.is_finite() && (-180.0..180.0).contains(&self.longitude);
        if !(lat_ok && lon_ok) {
            return Err(CodecError::CoordinateOutOfRange { lat: self.latitude, lon: self.longitude });
        }
        if !(MIN_ALTITUDE_FT..=MAX_ALTITUDE_FT).contains(&self.altitude_ft) {
            return Err(CodecError::AltitudeOutOfRange(self.altitude_ft));
        }
        Ok(())
    }
}
