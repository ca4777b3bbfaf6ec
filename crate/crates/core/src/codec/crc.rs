//! Mode-S CRC-24 parity.
//!
//! Generator polynomial 0x1FFF409 (coefficients 1111111111111010000001001),
//! processed most-significant bit first with a zero initial register.

use super::CodecError;

/// Generator with the implicit x^24 term dropped.
pub const GENERATOR: u32 = 0xFF_F409;

/// Number of payload bytes covered by the parity of a 112-bit frame.
pub const PAYLOAD_BYTES: usize = 11;

const TABLE: [u32; 256] = build_table();

const fn build_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut byte = 0;
    while byte < 256 {
        let mut reg = (byte as u32) << 16;
        let mut bit = 0;
        while bit < 8 {
            reg = if reg & 0x80_0000 != 0 {
                (reg << 1) ^ GENERATOR
            } else {
                reg << 1
            };
            bit += 1;
        }
        table[byte] = reg & 0xFF_FFFF;
        byte += 1;
    }
    table
}

fn remainder(bytes: &[u8]) -> u32 {
    bytes.iter().fold(0u32, |reg, &b| {
        let idx = ((reg >> 16) as u8 ^ b) as usize;
        ((reg << 8) & 0xFF_FFFF) ^ TABLE[idx]
    })
}

/// Parity of an 88-bit payload: remainder of `payload * x^24` modulo the generator.
pub fn crc24(payload: &[u8]) -> Result<u32, CodecError> {
    if payload.len() != PAYLOAD_BYTES {
        return Err(CodecError::InputLength {
            expected_bits: PAYLOAD_BYTES * 8,
            actual_bits: payload.len() * 8,
        });
    }
    Ok(remainder(payload))
}

/// Remainder over a whole 112-bit frame. Zero iff the trailing 24 parity
/// bits match the payload.
pub fn residual(frame: &[u8; 14]) -> u32 {
    let parity = u32::from(frame[11]) << 16 | u32::from(frame[12]) << 8 | u32::from(frame[13]);
    remainder(&frame[..PAYLOAD_BYTES]) ^ parity
}
