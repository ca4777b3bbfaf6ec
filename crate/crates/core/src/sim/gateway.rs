//! ADS-B radio gateway: FIFO queue with deterministic service, and the
//! transmit chain that turns served reports into frames and bursts.

use std::collections::{HashMap, VecDeque};
use std::io::{self, Write};

use crate::codec::{build_position_frame, AdsbFrame, AircraftState, CodecError, CprParity, IcaoAddress};
use crate::modem::{modulate, IqBurst};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub state: AircraftState,
    /// When the message entered the gateway queue.
    pub arrival_us: u64,
}

/// Per-gateway counters and window statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GatewayStats {
    pub id: u32,
    pub arrivals: u64,
    pub served: u64,
    pub dropped_auth: u64,
    pub dropped_codec: u64,
    /// Queued, in service, or still on the server-to-gateway hop.
    pub in_system_end: u64,
    /// Messages accepted into the queue during the measurement window.
    pub window_arrivals: u64,
    /// Messages that arrived in the window and completed service.
    pub window_served: u64,
    pub lambda_hz: f64,
    /// Fraction of the window the transmitter was busy.
    pub rho: f64,
    /// Time-average of queued plus in-service messages.
    pub avg_in_system: f64,
    pub avg_sojourn_us: f64,
    pub min_sojourn_us: Option<u64>,
    /// Largest number in system (including the one in service) seen in the window.
    pub max_queue_len: u64,
}

/// FIFO, unbounded buffer, one transmitter with a fixed service time.
///
/// Time integrals only accumulate from `warmup_us` onwards.
#[derive(Debug, Clone)]
pub struct GatewayQueue {
    id: u32,
    service_us: u64,
    warmup_us: u64,
    waiting: VecDeque<Message>,
    in_service: Option<Message>,
    last_event_us: u64,
    arrivals: u64,
    served: u64,
    dropped_auth: u64,
    dropped_codec: u64,
    in_transit: u64,
    window_arrivals: u64,
    occupancy_area: u128,
    busy_us: u64,
    sojourn_sum_us: u128,
    sojourn_count: u64,
    min_sojourn_us: Option<u64>,
    max_in_system: u64,
}

impl GatewayQueue {
    pub fn new(id: u32, service_us: u64, warmup_us: u64) -> Self {
        GatewayQueue {
            id,
            service_us,
            warmup_us,
            waiting: VecDeque::new(),
            in_service: None,
            last_event_us: 0,
            arrivals: 0,
            served: 0,
            dropped_auth: 0,
            dropped_codec: 0,
            in_transit: 0,
            window_arrivals: 0,
            occupancy_area: 0,
            busy_us: 0,
            sojourn_sum_us: 0,
            sojourn_count: 0,
            min_sojourn_us: None,
            max_in_system: 0,
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn service_us(&self) -> u64 {
        self.service_us
    }

    pub fn in_system(&self) -> u64 {
        self.waiting.len() as u64 + u64::from(self.in_service.is_some())
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    fn advance(&mut self, now_us: u64) {
        let from = self.last_event_us.max(self.warmup_us);
        if now_us > from {
            let dt = now_us - from;
            self.occupancy_area += u128::from(self.in_system()) * u128::from(dt);
            if self.is_busy() {
                self.busy_us += dt;
            }
        }
        self.last_event_us = self.last_event_us.max(now_us);
    }

    /// Include the current occupancy in the window maximum.
    pub fn sample_occupancy(&mut self, now_us: u64) {
        if now_us >= self.warmup_us {
            self.max_in_system = self.max_in_system.max(self.in_system());
        }
    }

    /// A report attributed to this gateway's cell reached the server.
    pub fn count_arrival(&mut self) {
        self.arrivals += 1;
    }

    pub fn count_auth_drop(&mut self) {
        self.dropped_auth += 1;
    }

    pub fn count_codec_drop(&mut self) {
        self.dropped_codec += 1;
    }

    pub fn depart_server(&mut self) {
        self.in_transit += 1;
    }

    pub fn land_from_server(&mut self) {
        self.in_transit -= 1;
    }

    /// Enqueue. Returns true when the transmitter is idle and service
    /// should begin immediately via [`GatewayQueue::start_next`].
    pub fn enqueue(&mut self, now_us: u64, state: AircraftState) -> bool {
        self.advance(now_us);
        self.waiting.push_back(Message { state, arrival_us: now_us });
        if now_us >= self.warmup_us {
            self.window_arrivals += 1;
        }
        self.sample_occupancy(now_us);
        !self.is_busy()
    }

    /// Move the head of the queue into service. Returns the message and its
    /// completion time.
    pub fn start_next(&mut self, now_us: u64) -> Option<(Message, u64)> {
        if self.is_busy() {
            return None;
        }
        self.advance(now_us);
        let msg = self.waiting.pop_front()?;
        self.in_service = Some(msg);
        Some((msg, now_us + self.service_us))
    }

    /// Drop the message in service without transmitting it.
    pub fn abort_service(&mut self, now_us: u64) {
        self.advance(now_us);
        if self.in_service.take().is_some() {
            self.dropped_codec += 1;
        }
    }

    /// Finish the message in service.
    pub fn complete(&mut self, now_us: u64) -> Message {
        self.advance(now_us);
        let msg = self.in_service.take().expect("completion without a message in service");
        self.served += 1;
        if msg.arrival_us >= self.warmup_us {
            let sojourn = now_us - msg.arrival_us;
            self.sojourn_sum_us += u128::from(sojourn);
            self.sojourn_count += 1;
            self.min_sojourn_us = Some(self.min_sojourn_us.map_or(sojourn, |m| m.min(sojourn)));
        }
        msg
    }

    /// Close the window at `end_us` and summarize.
    pub fn finish(&mut self, end_us: u64) -> GatewayStats {
        self.advance(end_us);
        let window_us = end_us.saturating_sub(self.warmup_us);
        let per_window = |x: f64| if window_us > 0 { x / window_us as f64 } else { 0.0 };
        GatewayStats {
            id: self.id,
            arrivals: self.arrivals,
            served: self.served,
            dropped_auth: self.dropped_auth,
            dropped_codec: self.dropped_codec,
            in_system_end: self.in_system() + self.in_transit,
            window_arrivals: self.window_arrivals,
            window_served: self.sojourn_count,
            lambda_hz: per_window(self.window_arrivals as f64 * 1e6),
            rho: per_window(self.busy_us as f64),
            avg_in_system: per_window(self.occupancy_area as f64),
            avg_sojourn_us: if self.sojourn_count > 0 {
                self.sojourn_sum_us as f64 / self.sojourn_count as f64
            } else {
                0.0
            },
            min_sojourn_us: self.min_sojourn_us,
            max_queue_len: self.max_in_system,
        }
    }
}

/// One rebroadcast frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastEntry {
    pub gateway: u32,
    /// Start of transmission.
    pub serve_time_us: u64,
    pub icao: IcaoAddress,
    pub frame: AdsbFrame,
}

/// Receives what the gateways put on the air.
pub trait BroadcastSink {
    fn broadcast(&mut self, entry: &BroadcastEntry);

    /// Whether [`BroadcastSink::burst`] should be fed modulated samples.
    fn wants_bursts(&self) -> bool {
        false
    }

    fn burst(&mut self, _entry: &BroadcastEntry, _burst: &IqBurst) {}
}

impl BroadcastSink for Vec<BroadcastEntry> {
    fn broadcast(&mut self, entry: &BroadcastEntry) {
        self.push(*entry);
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl BroadcastSink for NullSink {
    fn broadcast(&mut self, _entry: &BroadcastEntry) {}
}

pub const BROADCAST_CSV_HEADER: &str = "serve_time_us,icao,frame_hex";

/// Streams the broadcast log as CSV. The first write error is kept and
/// later writes are skipped.
pub struct CsvBroadcastSink<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> CsvBroadcastSink<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "{BROADCAST_CSV_HEADER}").err();
        CsvBroadcastSink { out, error }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> BroadcastSink for CsvBroadcastSink<W> {
    fn broadcast(&mut self, entry: &BroadcastEntry) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{},{},{}", entry.serve_time_us, entry.icao, entry.frame) {
                self.error = Some(e);
            }
        }
    }
}

pub fn write_broadcast_csv<W: Write>(out: W, entries: &[BroadcastEntry]) -> io::Result<()> {
    let mut sink = CsvBroadcastSink::new(out);
    entries.iter().for_each(|e| sink.broadcast(e));
    sink.finish().map(|_| ())
}

/// Frame formatting shared by all gateways. CPR parity alternates per
/// aircraft, even first, in transmission order.
#[derive(Debug, Clone, Default)]
pub struct Emitter {
    capability: u8,
    next_parity: HashMap<IcaoAddress, CprParity>,
}

impl Emitter {
    pub fn new(capability: u8) -> Self {
        Emitter { capability, next_parity: HashMap::new() }
    }

    /// Format `state` and hand the frame (and optionally its burst) to `sink`.
    /// A codec failure consumes no parity slot.
    pub fn emit<S: BroadcastSink + ?Sized>(
        &mut self,
        gateway: u32,
        serve_time_us: u64,
        state: &AircraftState,
        sink: &mut S,
    ) -> Result<AdsbFrame, CodecError> {
        let parity = self.next_parity.get(&state.icao).copied().unwrap_or(CprParity::Even);
        let frame = build_position_frame(state, parity, self.capability)?;
        self.next_parity.insert(state.icao, parity.flip());
        let entry = BroadcastEntry { gateway, serve_time_us, icao: state.icao, frame };
        sink.broadcast(&entry);
        if sink.wants_bursts() {
            sink.burst(&entry, &modulate(&frame));
        }
        Ok(frame)
    }
}
