use std::fmt;
use std::str::FromStr;

use super::altitude::{decode_altitude, encode_altitude};
use super::cpr::{encode_cpr, CprParity, CprWord};
use super::crc::{crc24, residual};
use super::{AircraftState, CodecError, IcaoAddress};

pub const FRAME_BITS: usize = 112;
pub const FRAME_BYTES: usize = 14;
pub const HEX_LEN: usize = 2 * FRAME_BYTES;

pub const DF_EXTENDED_SQUITTER: u8 = 17;
pub const TC_AIRBORNE_POSITION: u8 = 11;

/// A 112-bit Mode-S long frame, 14 octets, most-significant bit first.
///
/// Any bit pattern can be held here; only frames produced by
/// [`build_position_frame`] are guaranteed to be DF17 with valid parity.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdsbFrame([u8; FRAME_BYTES]);

impl AdsbFrame {
    pub fn from_bytes(bytes: [u8; FRAME_BYTES]) -> Self {
        AdsbFrame(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CodecError> {
        let arr: [u8; FRAME_BYTES] = bytes.try_into().map_err(|_| CodecError::InputLength {
            expected_bits: FRAME_BITS,
            actual_bits: bytes.len() * 8,
        })?;
        Ok(AdsbFrame(arr))
    }

    /// Pack 112 bit values (0 or 1, MSB first).
    pub fn from_bits(bits: &[u8]) -> Result<Self, CodecError> {
        if bits.len() != FRAME_BITS {
            return Err(CodecError::InputLength { expected_bits: FRAME_BITS, actual_bits: bits.len() });
        }
        let mut bytes = [0u8; FRAME_BYTES];
        for (i, &b) in bits.iter().enumerate() {
            bytes[i / 8] |= (b & 1) << (7 - i % 8);
        }
        Ok(AdsbFrame(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; FRAME_BYTES] {
        &self.0
    }

    pub fn bit(&self, index: usize) -> u8 {
        (self.0[index / 8] >> (7 - index % 8)) & 1
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..FRAME_BITS).map(|i| self.bit(i))
    }

    /// Copy with one bit inverted.
    pub fn with_bit_flipped(&self, index: usize) -> Self {
        let mut bytes = self.0;
        bytes[index / 8] ^= 0x80 >> (index % 8);
        AdsbFrame(bytes)
    }

    pub fn df(&self) -> u8 {
        self.0[0] >> 3
    }

    pub fn ca(&self) -> u8 {
        self.0[0] & 0x7
    }

    pub fn icao(&self) -> IcaoAddress {
        let v = u32::from(self.0[1]) << 16 | u32::from(self.0[2]) << 8 | u32::from(self.0[3]);
        IcaoAddress::new(v).expect("three octets always fit")
    }

    /// The 56-bit ME field.
    pub fn me(&self) -> u64 {
        self.0[4..11].iter().fold(0u64, |acc, &b| acc << 8 | u64::from(b))
    }

    /// The 24-bit parity field.
    pub fn pi(&self) -> u32 {
        u32::from(self.0[11]) << 16 | u32::from(self.0[12]) << 8 | u32::from(self.0[13])
    }

    pub fn type_code(&self) -> u8 {
        self.0[4] >> 3
    }

    /// CRC remainder over all 112 bits; zero for an intact frame.
    pub fn residual(&self) -> u32 {
        residual(&self.0)
    }

    /// Replace the parity field with the CRC of the first 88 bits.
    pub fn with_parity(&self) -> Self {
        let mut bytes = self.0;
        let pi = crc24(&bytes[..11]).expect("11-byte payload");
        bytes[11..].copy_from_slice(&pi.to_be_bytes()[1..]);
        AdsbFrame(bytes)
    }

    pub fn to_hex(&self) -> String {
        frame_to_hex(self)
    }
}

impl fmt::Debug for AdsbFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AdsbFrame({})", frame_to_hex(self))
    }
}

impl fmt::Display for AdsbFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&frame_to_hex(self))
    }
}

impl FromStr for AdsbFrame {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        hex_to_frame(s)
    }
}

pub fn frame_to_hex(frame: &AdsbFrame) -> String {
    use fmt::Write;
    frame.0.iter().fold(String::with_capacity(HEX_LEN), |mut s, b| {
        let _ = write!(s, "{b:02X}");
        s
    })
}

/// Parse 28 hex digits (either case) into a frame.
pub fn hex_to_frame(hex: &str) -> Result<AdsbFrame, CodecError> {
    if hex.len() != HEX_LEN {
        return Err(CodecError::HexLength(hex.len()));
    }
    if let Some(position) = hex.bytes().position(|c| !c.is_ascii_hexdigit()) {
        return Err(CodecError::HexDigit { position });
    }
    let mut bytes = [0u8; FRAME_BYTES];
    for (i, b) in bytes.iter_mut().enumerate() {
        *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).expect("validated hex");
    }
    Ok(AdsbFrame(bytes))
}

/// Fields of an accepted DF17 airborne-position frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionMessage {
    pub df: u8,
    pub ca: u8,
    pub icao: IcaoAddress,
    pub tc: u8,
    pub surveillance_status: u8,
    pub single_antenna: bool,
    pub altitude_code: u16,
    pub altitude_ft: f64,
    pub time_bit: bool,
    pub cpr: CprWord,
}

impl PositionMessage {
    /// Re-assemble the frame these fields came from, parity included.
    pub fn to_frame(&self) -> Result<AdsbFrame, CodecError> {
        assemble(
            self.df,
            self.ca,
            self.icao,
            self.tc,
            self.surveillance_status,
            self.single_antenna,
            self.altitude_code,
            self.time_bit,
            self.cpr,
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    df: u8,
    ca: u8,
    icao: IcaoAddress,
    tc: u8,
    ss: u8,
    saf: bool,
    altitude_code: u16,
    time_bit: bool,
    cpr: CprWord,
) -> Result<AdsbFrame, CodecError> {
    let checks: [(&'static str, u64, u64); 5] = [
        ("df", df.into(), 0x1F),
        ("ca", ca.into(), 0x7),
        ("tc", tc.into(), 0x1F),
        ("surveillance_status", ss.into(), 0x3),
        ("altitude", altitude_code.into(), 0xFFF),
    ];
    for (field, value, max) in checks {
        if value > max {
            return Err(CodecError::FieldOverflow { field, value });
        }
    }

    let me: u64 = u64::from(tc) << 51
        | u64::from(ss) << 49
        | u64::from(saf) << 48
        | u64::from(altitude_code) << 36
        | u64::from(time_bit) << 35
        | u64::from(cpr.parity().bit()) << 34
        | u64::from(cpr.yz()) << 17
        | u64::from(cpr.xz());

    let mut bytes = [0u8; FRAME_BYTES];
    bytes[0] = df << 3 | ca;
    bytes[1..4].copy_from_slice(&icao.value().to_be_bytes()[1..]);
    bytes[4..11].copy_from_slice(&me.to_be_bytes()[1..]);
    Ok(AdsbFrame(bytes).with_parity())
}

/// DF17 / TC11 airborne position frame for `state`, surveillance status,
/// antenna flag and time bit all zero.
pub fn build_position_frame(
    state: &AircraftState,
    parity: CprParity,
    ca: u8,
) -> Result<AdsbFrame, CodecError> {
    state.validate()?;
    let cpr = encode_cpr(state.latitude, state.longitude, parity)?;
    let altitude_code = encode_altitude(state.altitude_ft)?;
    assemble(
        DF_EXTENDED_SQUITTER,
        ca,
        state.icao,
        TC_AIRBORNE_POSITION,
        0,
        false,
        altitude_code,
        false,
        cpr,
    )
}

/// Parse a frame. Parity is checked first, so a corrupted frame always
/// reports [`CodecError::Parity`] regardless of its DF/TC bits.
pub fn decode_frame(frame: &AdsbFrame) -> Result<PositionMessage, CodecError> {
    let residual = frame.residual();
    if residual != 0 {
        return Err(CodecError::Parity { residual });
    }
    let df = frame.df();
    let tc = frame.type_code();
    if df != DF_EXTENDED_SQUITTER || tc != TC_AIRBORNE_POSITION {
        return Err(CodecError::UnsupportedFormat { df, tc });
    }
    let me = frame.me();
    let altitude_code = ((me >> 36) & 0xFFF) as u16;
    let altitude_ft = decode_altitude(altitude_code)
        .map_err(|_| CodecError::UnsupportedFormat { df, tc })?;
    let cpr = CprWord::new(
        CprParity::from_bit(((me >> 34) & 1) as u8),
        ((me >> 17) & 0x1FFFF) as u32,
        (me & 0x1FFFF) as u32,
    )?;
    Ok(PositionMessage {
        df,
        ca: frame.ca(),
        icao: frame.icao(),
        tc,
        surveillance_status: ((me >> 49) & 0x3) as u8,
        single_antenna: (me >> 48) & 1 == 1,
        altitude_code,
        altitude_ft,
        time_bit: (me >> 35) & 1 == 1,
        cpr,
    })
}
