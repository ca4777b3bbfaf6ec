//! Airborne Compact Position Reporting (CPR).
//!
//! 15 latitude zones per quadrant (NZ = 15), 17-bit codes. An even word uses a
//! latitude zone size of 360/60 degrees, an odd word 360/59 degrees. Longitude
//! zone sizes depend on the latitude through the NL function.

use std::f64::consts::PI;
use std::fmt;

use super::CodecError;

const NZ: f64 = 15.0;
const CPR_BITS: u32 = 17;
const CPR_SCALE: f64 = (1u32 << CPR_BITS) as f64;
const CPR_MASK: u32 = (1 << CPR_BITS) - 1;

/// Which of the two interleaved CPR grids a word was encoded on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CprParity {
    Even,
    Odd,
}

impl CprParity {
    /// The F bit as transmitted: 0 for even, 1 for odd.
    pub fn bit(self) -> u8 {
        match self {
            CprParity::Even => 0,
            CprParity::Odd => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            CprParity::Even
        } else {
            CprParity::Odd
        }
    }

    pub fn flip(self) -> Self {
        match self {
            CprParity::Even => CprParity::Odd,
            CprParity::Odd => CprParity::Even,
        }
    }

    fn index(self) -> f64 {
        f64::from(self.bit())
    }

    fn lat_zone_size(self) -> f64 {
        360.0 / (4.0 * NZ - self.index())
    }
}

impl fmt::Display for CprParity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CprParity::Even => f.write_str("even"),
            CprParity::Odd => f.write_str("odd"),
        }
    }
}

/// One encoded position: 17-bit latitude and longitude codes plus parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CprWord {
    parity: CprParity,
    yz: u32,
    xz: u32,
}

impl CprWord {
    pub fn new(parity: CprParity, yz: u32, xz: u32) -> Result<Self, CodecError> {
        if yz > CPR_MASK {
            return Err(CodecError::FieldOverflow { field: "yz", value: u64::from(yz) });
        }
        if xz > CPR_MASK {
            return Err(CodecError::FieldOverflow { field: "xz", value: u64::from(xz) });
        }
        Ok(CprWord { parity, yz, xz })
    }

    pub fn parity(&self) -> CprParity {
        self.parity
    }

    /// Latitude code.
    pub fn yz(&self) -> u32 {
        self.yz
    }

    /// Longitude code.
    pub fn xz(&self) -> u32 {
        self.xz
    }
}

/// Floored modulo; result has the sign of `y`.
fn modulo(x: f64, y: f64) -> f64 {
    x - y * (x / y).floor()
}

/// Number of longitude zones at a given latitude.
///
/// Closed-form evaluation, with the tabulated values at the equator and the
/// polar clamp (exactly 87 degrees gives 2, beyond gives 1).
pub fn nl(lat: f64) -> u32 {
    let lat = lat.abs();
    if lat == 0.0 {
        return 59;
    }
    if lat == 87.0 {
        return 2;
    }
    if lat > 87.0 {
        return 1;
    }
    let a = 1.0 - (PI / (2.0 * NZ)).cos();
    let b = (PI / 180.0 * lat).cos().powi(2);
    let zones = (2.0 * PI / (1.0 - a / b).acos()).floor();
    zones as u32
}

fn lon_zone_count(lat: f64, parity: CprParity) -> u32 {
    nl(lat).saturating_sub(parity.bit().into()).max(1)
}

fn check_coordinates(lat: f64, lon: f64) -> Result<(), CodecError> {
    let lat_ok = lat.is_finite() && (-90.0..=90.0).contains(&lat);
    let lon_ok = lon.is_finite() && (-180.0..180.0).contains(&lon);
    if lat_ok && lon_ok {
        Ok(())
    } else {
        Err(CodecError::CoordinateOutOfRange { lat, lon })
    }
}

fn normalize_lon(lon: f64) -> f64 {
    let lon = modulo(lon + 180.0, 360.0) - 180.0;
    // modulo can land on exactly 180 through rounding
    if lon >= 180.0 {
        lon - 360.0
    } else {
        lon
    }
}

/// Encode a position on the even or odd airborne grid.
pub fn encode_cpr(lat: f64, lon: f64, parity: CprParity) -> Result<CprWord, CodecError> {
    check_coordinates(lat, lon)?;
    let dlat = parity.lat_zone_size();
    let yz = (CPR_SCALE * modulo(lat, dlat) / dlat + 0.5).floor();
    // The zone latitude as a receiver reconstructs it picks the longitude grid.
    let rlat = dlat * (yz / CPR_SCALE + (lat / dlat).floor());
    let dlon = 360.0 / f64::from(lon_zone_count(rlat, parity));
    let xz = (CPR_SCALE * modulo(lon, dlon) / dlon + 0.5).floor();
    CprWord::new(parity, (yz as u32) & CPR_MASK, (xz as u32) & CPR_MASK)
}

/// Unambiguous position from one even and one odd word.
///
/// `most_recent` selects which of the two words the returned position
/// corresponds to.
pub fn decode_cpr_global(
    even: CprWord,
    odd: CprWord,
    most_recent: CprParity,
) -> Result<(f64, f64), CodecError> {
    if even.parity != CprParity::Even || odd.parity != CprParity::Odd {
        return Err(CodecError::CprInconsistent("expected one even and one odd word"));
    }
    let yz_e = f64::from(even.yz) / CPR_SCALE;
    let yz_o = f64::from(odd.yz) / CPR_SCALE;
    let xz_e = f64::from(even.xz) / CPR_SCALE;
    let xz_o = f64::from(odd.xz) / CPR_SCALE;

    let j = (59.0 * yz_e - 60.0 * yz_o + 0.5).floor();
    let fold = |lat: f64| if lat >= 270.0 { lat - 360.0 } else { lat };
    let rlat_e = fold(CprParity::Even.lat_zone_size() * (modulo(j, 60.0) + yz_e));
    let rlat_o = fold(CprParity::Odd.lat_zone_size() * (modulo(j, 59.0) + yz_o));
    if !(-90.0..=90.0).contains(&rlat_e) || !(-90.0..=90.0).contains(&rlat_o) {
        return Err(CodecError::CprInconsistent("latitude outside [-90, 90]"));
    }

    let nl_even = nl(rlat_e);
    if nl_even != nl(rlat_o) {
        return Err(CodecError::CprInconsistent("even and odd words straddle a longitude zone boundary"));
    }

    let (lat, xz) = match most_recent {
        CprParity::Even => (rlat_e, xz_e),
        CprParity::Odd => (rlat_o, xz_o),
    };
    let nl_f = f64::from(nl_even);
    let zones = f64::from(lon_zone_count(lat, most_recent));
    let m = (xz_e * (nl_f - 1.0) - xz_o * nl_f + 0.5).floor();
    let lon = 360.0 / zones * (modulo(m, zones) + xz);
    Ok((lat, normalize_lon(lon)))
}

/// Position from a single word, resolved against a reference position that
/// lies within half a zone of the true one.
pub fn decode_cpr_local(word: CprWord, ref_lat: f64, ref_lon: f64) -> Result<(f64, f64), CodecError> {
    check_coordinates(ref_lat, ref_lon)?;
    let yz = f64::from(word.yz) / CPR_SCALE;
    let xz = f64::from(word.xz) / CPR_SCALE;

    let dlat = word.parity.lat_zone_size();
    let j = (ref_lat / dlat).floor() + (modulo(ref_lat, dlat) / dlat - yz + 0.5).floor();
    let lat = dlat * (j + yz);
    if !(-90.0..=90.0).contains(&lat) {
        return Err(CodecError::CprInconsistent("latitude outside [-90, 90]"));
    }

    let dlon = 360.0 / f64::from(lon_zone_count(lat, word.parity));
    let m = (ref_lon / dlon).floor() + (modulo(ref_lon, dlon) / dlon - xz + 0.5).floor();
    Ok((lat, normalize_lon(dlon * (m + xz))))
}
