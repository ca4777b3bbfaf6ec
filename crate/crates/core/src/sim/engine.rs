use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::codec::AircraftState;

use super::ats::{Ats, PositionReport};
use super::gateway::{BroadcastEntry, BroadcastSink, Emitter, GatewayQueue, NullSink};
use super::report::{EventCounts, SimReport};
use super::scenario::{ArrivalModel, Scenario};
use super::SimError;

/// RNG stream for building scenarios (placement, headings).
pub(crate) const PLACEMENT_STREAM: u64 = 0;
/// RNG stream for arrival times during a run.
pub(crate) const RUN_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub report: SimReport,
    pub broadcasts: Vec<BroadcastEntry>,
}

/// Run `scenario` and keep the broadcast log in memory.
pub fn run(scenario: &Scenario) -> Result<SimOutput, SimError> {
    let mut broadcasts = Vec::new();
    let report = run_with_sink(scenario, &mut broadcasts)?;
    Ok(SimOutput { report, broadcasts })
}

/// Run `scenario`, streaming every rebroadcast frame into `sink`.
pub fn run_with_sink<S: BroadcastSink + ?Sized>(scenario: &Scenario, sink: &mut S) -> Result<SimReport, SimError> {
    scenario.validate()?;
    let mut engine = Engine::new(scenario, sink);
    engine.schedule_initial();
    engine.run_loop();
    Ok(engine.finish())
}

#[derive(Debug, Clone)]
enum EventKind {
    PoissonArrival,
    DroneReport { drone: usize },
    AtsReceive { drone: usize, sampled_us: u64 },
    GatewayArrival { gateway: usize, state: AircraftState },
    LegacySquitter { aircraft: usize },
    ServiceComplete { gateway: usize },
    WindowStart,
    EndOfRun,
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::PoissonArrival
            | EventKind::DroneReport { .. }
            | EventKind::AtsReceive { .. }
            | EventKind::GatewayArrival { .. }
            | EventKind::LegacySquitter { .. } => 0,
            EventKind::ServiceComplete { .. } => 1,
            EventKind::WindowStart | EventKind::EndOfRun => 2,
        }
    }
}

#[derive(Debug)]
struct Event {
    time_us: u64,
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn key(&self) -> (u64, u8, u64) {
        (self.time_us, self.rank, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap; reverse so the earliest key pops first.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

struct Engine<'a, S: ?Sized> {
    scenario: &'a Scenario,
    sink: &'a mut S,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Event>,
    seq: u64,
    ats: Ats,
    queues: Vec<GatewayQueue>,
    emitter: Emitter,
    legacy_emitter: Emitter,
    poisson_clock_s: f64,
    events: EventCounts,
}

fn period_us(rate_hz: f64) -> u64 {
    ((1e6 / rate_hz).round() as u64).max(1)
}

impl<'a, S: BroadcastSink + ?Sized> Engine<'a, S> {
    fn new(scenario: &'a Scenario, sink: &'a mut S) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(RUN_STREAM);
        let service_us = scenario.service_us();
        let queues = scenario
            .gateways
            .iter()
            .map(|g| GatewayQueue::new(g.id, service_us, scenario.warmup_us))
            .collect();
        Engine {
            scenario,
            sink,
            rng,
            heap: BinaryHeap::new(),
            seq: 0,
            ats: Ats::new(scenario),
            queues,
            emitter: Emitter::new(scenario.capability),
            legacy_emitter: Emitter::new(5),
            poisson_clock_s: 0.0,
            events: EventCounts::default(),
        }
    }

    fn push(&mut self, time_us: u64, kind: EventKind) {
        let rank = kind.rank();
        self.heap.push(Event { time_us, rank, seq: self.seq, kind });
        self.seq += 1;
    }

    fn schedule_initial(&mut self) {
        let s = self.scenario;
        if s.warmup_us < s.duration_us {
            self.push(s.warmup_us, EventKind::WindowStart);
        }
        self.push(s.duration_us, EventKind::EndOfRun);
        match s.arrival_model {
            ArrivalModel::PoissonAggregate { lambda } => {
                if lambda > 0.0 && !s.drones.is_empty() {
                    self.schedule_poisson(lambda);
                }
            }
            ArrivalModel::PeriodicPerDrone { rate_hz } => {
                let period = period_us(rate_hz);
                for drone in 0..s.drones.len() {
                    let phase = self.rng.random_range(0..period);
                    self.push(phase, EventKind::DroneReport { drone });
                }
            }
        }
        for aircraft in 0..s.legacy.len() {
            let phase = self.rng.random_range(0..period_us(s.legacy[aircraft].rate_hz));
            self.push(phase, EventKind::LegacySquitter { aircraft });
        }
    }

    fn schedule_poisson(&mut self, lambda: f64) {
        let gap = Exp::new(lambda).expect("positive rate").sample(&mut self.rng);
        self.poisson_clock_s += gap;
        let t = (self.poisson_clock_s * 1e6).floor();
        if t < self.scenario.duration_us as f64 {
            self.push(t as u64, EventKind::PoissonArrival);
        }
    }

    fn run_loop(&mut self) {
        while let Some(ev) = self.heap.pop() {
            let now = ev.time_us;
            match ev.kind {
                EventKind::PoissonArrival => {
                    let drone = self.rng.random_range(0..self.scenario.drones.len());
                    self.drone_report(drone, now);
                    if let ArrivalModel::PoissonAggregate { lambda } = self.scenario.arrival_model {
                        self.schedule_poisson(lambda);
                    }
                }
                EventKind::DroneReport { drone } => {
                    self.drone_report(drone, now);
                    if let ArrivalModel::PeriodicPerDrone { rate_hz } = self.scenario.arrival_model {
                        let next = now + period_us(rate_hz);
                        if next < self.scenario.duration_us {
                            self.push(next, EventKind::DroneReport { drone });
                        }
                    }
                }
                EventKind::AtsReceive { drone, sampled_us } => self.ats_receive(drone, sampled_us, now),
                EventKind::GatewayArrival { gateway, state } => {
                    self.queues[gateway].land_from_server();
                    self.gateway_arrival(gateway, state, now);
                }
                EventKind::LegacySquitter { aircraft } => {
                    self.legacy_squitter(aircraft, now);
                    let next = now + period_us(self.scenario.legacy[aircraft].rate_hz);
                    if next < self.scenario.duration_us {
                        self.push(next, EventKind::LegacySquitter { aircraft });
                    }
                }
                EventKind::ServiceComplete { gateway } => {
                    self.queues[gateway].complete(now);
                    self.events.service_completions += 1;
                    self.start_service(gateway, now);
                }
                EventKind::WindowStart => self.queues.iter_mut().for_each(|q| q.sample_occupancy(now)),
                EventKind::EndOfRun => break,
            }
        }
    }

    fn drone_report(&mut self, drone: usize, now: u64) {
        self.events.drone_reports += 1;
        let hop = self.scenario.hop_delay_us;
        if hop == 0 {
            self.ats_receive(drone, now, now);
        } else {
            self.push(now + hop, EventKind::AtsReceive { drone, sampled_us: now });
        }
    }

    fn ats_receive(&mut self, drone: usize, sampled_us: u64, now: u64) {
        let spec = &self.scenario.drones[drone];
        let (position, state) = self.scenario.state_at(spec.icao, &spec.motion, sampled_us);
        let report = PositionReport { state, position, auth_token: spec.auth_token.clone() };
        match self.ats.handle_report(&report) {
            Ok((publish, _reply)) => {
                let hop = self.scenario.hop_delay_us;
                for id in publish {
                    let Some(gateway) = self.scenario.gateway_index(id) else { continue };
                    self.queues[gateway].count_arrival();
                    if hop == 0 {
                        self.gateway_arrival(gateway, state, now);
                    } else {
                        self.queues[gateway].depart_server();
                        self.push(now + hop, EventKind::GatewayArrival { gateway, state });
                    }
                }
            }
            Err(SimError::AuthRejected(_)) => {
                let owner = self.scenario.assign_cell(&position).ok().and_then(|id| self.scenario.gateway_index(id));
                if let Some(gateway) = owner {
                    self.queues[gateway].count_arrival();
                    self.queues[gateway].count_auth_drop();
                }
            }
            // Motion is folded into the region, so every report has an owner.
            Err(_) => {}
        }
    }

    fn gateway_arrival(&mut self, gateway: usize, state: AircraftState, now: u64) {
        self.events.gateway_arrivals += 1;
        if state.validate().is_err() {
            self.queues[gateway].count_codec_drop();
            self.events.codec_dropped += 1;
            return;
        }
        if self.queues[gateway].enqueue(now, state) {
            self.start_service(gateway, now);
        }
    }

    fn start_service(&mut self, gateway: usize, now: u64) {
        while let Some((msg, done)) = self.queues[gateway].start_next(now) {
            let id = self.queues[gateway].id();
            match self.emitter.emit(id, now, &msg.state, self.sink) {
                Ok(_) => {
                    self.events.broadcasts += 1;
                    self.push(done, EventKind::ServiceComplete { gateway });
                    return;
                }
                Err(_) => {
                    self.queues[gateway].abort_service(now);
                    self.events.codec_dropped += 1;
                }
            }
        }
    }

    fn legacy_squitter(&mut self, aircraft: usize, now: u64) {
        self.events.legacy_squitters += 1;
        let a = &self.scenario.legacy[aircraft];
        let (position, state) = self.scenario.state_at(a.icao, &a.motion, now);
        let Ok(gateway) = self.scenario.assign_cell(&position) else { return };
        if let Ok(frame) = self.legacy_emitter.emit(gateway, now, &state, &mut NullSink) {
            self.ats.reverse_path_inject(gateway, &[frame], now);
        }
    }

    fn finish(mut self) -> SimReport {
        let end = self.scenario.duration_us;
        let stats = self.queues.iter_mut().map(|q| q.finish(end)).collect();
        let c = self.ats.counters();
        let events = EventCounts {
            ats_received: c.reports,
            auth_rejected: c.auth_rejected,
            published: c.published,
            replies: c.replies,
            neighbors_sent: c.neighbors_sent,
            legacy_accepted: c.legacy_accepted,
            legacy_rejected: c.legacy_rejected,
            ..self.events
        };
        SimReport::new(stats, events, self.scenario.warmup_us.min(end), end)
    }
}
