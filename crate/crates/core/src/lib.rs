//! Cloud-assisted ADS-B relay for small UAVs.
//!
//! - [`codec`]: DF17 airborne-position frames, CPR, altitude, CRC-24.
//! - [`modem`]: PPM burst synthesis and demodulation at 2 MHz.
//! - [`queue`]: closed-form K parallel M/D/1 model.
//! - [`sim`]: deterministic discrete-event simulation of drone, cloud server and gateway segments.

pub mod codec;
pub mod modem;
pub mod queue;
pub mod sim;
