//! Air traffic server: authenticates drone reports, routes them to the
//! gateway covering the drone (publish/subscribe) and answers each report
//! with the traffic around the requester (request/reply).

use std::collections::{BTreeMap, BTreeSet};

use crate::codec::{
    decode_cpr_global, decode_cpr_local, decode_frame, AdsbFrame, AircraftState, CprParity, CprWord, IcaoAddress,
};

use super::geometry::{GeoAnchor, Point};
use super::scenario::{assign_cell, GatewayConfig, Scenario};
use super::SimError;

/// Even/odd words older than this are not paired for a global decode.
pub const CPR_PAIR_MAX_AGE_US: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PositionReport {
    pub state: AircraftState,
    pub position: Point,
    pub auth_token: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackSource {
    Drone,
    /// Decoded from a conventional transponder by a gateway.
    Legacy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub state: AircraftState,
    pub position: Point,
    pub source: TrackSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub state: AircraftState,
    pub distance_m: f64,
    pub source: TrackSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficReply {
    pub requester: IcaoAddress,
    /// Sorted by distance, then ICAO address.
    pub neighbors: Vec<Neighbor>,
}

/// Last known state of every tracked aircraft.
#[derive(Debug, Clone, Default)]
pub struct WorldState {
    tracks: BTreeMap<IcaoAddress, Track>,
}

impl WorldState {
    pub fn update(&mut self, track: Track) {
        self.tracks.insert(track.state.icao, track);
    }

    pub fn get(&self, icao: &IcaoAddress) -> Option<&Track> {
        self.tracks.get(icao)
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values()
    }

    /// Every track other than `requester` within `radius_m` of `position`.
    pub fn neighbors(&self, requester: IcaoAddress, position: &Point, radius_m: f64) -> Vec<Neighbor> {
        let mut out: Vec<Neighbor> = self
            .tracks
            .values()
            .filter(|t| t.state.icao != requester)
            .filter_map(|t| {
                let d = t.position.distance(position);
                (d <= radius_m).then_some(Neighbor { state: t.state, distance_m: d, source: t.source })
            })
            .collect();
        out.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m).then(a.state.icao.cmp(&b.state.icao)));
        out
    }
}

/// Static token registry standing in for network authentication.
#[derive(Debug, Clone, Default)]
pub struct AuthRegistry {
    tokens: BTreeSet<String>,
}

impl AuthRegistry {
    pub fn new(tokens: impl IntoIterator<Item = String>) -> Self {
        AuthRegistry { tokens: tokens.into_iter().collect() }
    }

    pub fn is_valid(&self, token: &str) -> bool {
        !token.is_empty() && self.tokens.contains(token)
    }
}

/// Topic-based fan-out from the server to gateways. Topics are cell ids.
#[derive(Debug, Clone, Default)]
pub struct Broker {
    subscriptions: BTreeMap<u32, BTreeSet<u32>>,
}

impl Broker {
    pub fn subscribe(&mut self, topic: u32, subscriber: u32) {
        self.subscriptions.entry(topic).or_default().insert(subscriber);
    }

    /// Subscribers that receive a message on `topic`, ascending.
    pub fn publish(&self, topic: u32) -> Vec<u32> {
        self.subscriptions
            .get(&topic)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AtsCounters {
    pub reports: u64,
    pub auth_rejected: u64,
    pub published: u64,
    pub replies: u64,
    pub neighbors_sent: u64,
    pub legacy_accepted: u64,
    pub legacy_rejected: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InjectSummary {
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct CprHistory {
    even: Option<(CprWord, u64)>,
    odd: Option<(CprWord, u64)>,
}

#[derive(Debug, Clone)]
pub struct Ats {
    registry: AuthRegistry,
    broker: Broker,
    world: WorldState,
    gateways: Vec<GatewayConfig>,
    anchor: GeoAnchor,
    neighbor_radius_m: f64,
    cpr: BTreeMap<IcaoAddress, CprHistory>,
    counters: AtsCounters,
}

impl Ats {
    /// Server for `scenario`, with every gateway subscribed to its own cell.
    pub fn new(scenario: &Scenario) -> Self {
        let mut broker = Broker::default();
        for g in &scenario.gateways {
            broker.subscribe(g.id, g.id);
        }
        Ats {
            registry: AuthRegistry::new(scenario.auth_registry.iter().cloned()),
            broker,
            world: WorldState::default(),
            gateways: scenario.gateways.clone(),
            anchor: scenario.anchor,
            neighbor_radius_m: scenario.neighbor_radius_m,
            cpr: BTreeMap::new(),
            counters: AtsCounters::default(),
        }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn counters(&self) -> AtsCounters {
        self.counters
    }

    /// Route one drone report and build its reply.
    ///
    /// Returns the gateways the report was published to and the traffic
    /// reply for the requester. Unauthenticated reports are dropped without
    /// touching the world state.
    pub fn handle_report(&mut self, report: &PositionReport) -> Result<(Vec<u32>, TrafficReply), SimError> {
        self.counters.reports += 1;
        if !self.registry.is_valid(&report.auth_token) {
            self.counters.auth_rejected += 1;
            return Err(SimError::AuthRejected(report.state.icao));
        }
        let cell = assign_cell(&report.position, &self.gateways)?;
        let publish = self.broker.publish(cell);
        self.counters.published += publish.len() as u64;

        self.world.update(Track { state: report.state, position: report.position, source: TrackSource::Drone });
        let neighbors = self.world.neighbors(report.state.icao, &report.position, self.neighbor_radius_m);
        self.counters.replies += 1;
        self.counters.neighbors_sent += neighbors.len() as u64;
        Ok((publish, TrafficReply { requester: report.state.icao, neighbors }))
    }

    /// Feed frames received off the air by `gateway` into the world state.
    ///
    /// A frame is positioned by a global decode when an opposite-parity word
    /// from the same aircraft arrived within [`CPR_PAIR_MAX_AGE_US`],
    /// otherwise by a local decode against the receiving gateway's position.
    pub fn reverse_path_inject(&mut self, gateway: u32, frames: &[AdsbFrame], now_us: u64) -> InjectSummary {
        let mut summary = InjectSummary::default();
        let reference = self
            .gateways
            .iter()
            .find(|g| g.id == gateway)
            .map(|g| self.anchor.to_geodetic(&g.cell_center));
        for frame in frames {
            match self.locate(frame, reference, now_us) {
                Some(track) => {
                    self.world.update(track);
                    summary.accepted += 1;
                }
                None => summary.rejected += 1,
            }
        }
        self.counters.legacy_accepted += summary.accepted;
        self.counters.legacy_rejected += summary.rejected;
        summary
    }

    fn locate(&mut self, frame: &AdsbFrame, reference: Option<(f64, f64)>, now_us: u64) -> Option<Track> {
        let msg = decode_frame(frame).ok()?;
        let history = self.cpr.entry(msg.icao).or_default();
        let word = msg.cpr;
        match word.parity() {
            CprParity::Even => history.even = Some((word, now_us)),
            CprParity::Odd => history.odd = Some((word, now_us)),
        }
        let paired = match (history.even, history.odd) {
            (Some((e, te)), Some((o, to))) if te.abs_diff(to) <= CPR_PAIR_MAX_AGE_US => {
                decode_cpr_global(e, o, word.parity()).ok()
            }
            _ => None,
        };
        let (lat, lon) = match paired {
            Some(p) => p,
            None => {
                let (ref_lat, ref_lon) = reference?;
                decode_cpr_local(word, ref_lat, ref_lon).ok()?
            }
        };
        let state = AircraftState {
            icao: msg.icao,
            latitude: lat,
            longitude: lon,
            altitude_ft: msg.altitude_ft,
            timestamp_us: now_us,
        };
        Some(Track { state, position: self.anchor.to_planar(lat, lon), source: TrackSource::Legacy })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::build_position_frame;

    fn icao(v: u32) -> IcaoAddress {
        IcaoAddress::new(v).unwrap()
    }

    fn scenario(rows: u32, cols: u32) -> Scenario {
        let mut s = Scenario::grid(rows, cols, 2000.0, 10_000_000, 1);
        s.auth_registry.insert("ok".into());
        s
    }

    fn report(s: &Scenario, id: u32, x: f64, y: f64, token: &str) -> PositionReport {
        let position = Point::new(x, y);
        let (lat, lon) = s.anchor.to_geodetic(&position);
        PositionReport {
            state: AircraftState { icao: icao(id), latitude: lat, longitude: lon, altitude_ft: 300.0, timestamp_us: 0 },
            position,
            auth_token: token.into(),
        }
    }

    #[test]
    fn single_drone_single_gateway() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        let (publish, reply) = ats.handle_report(&report(&s, 1, 100.0, 100.0, "ok")).unwrap();
        assert_eq!(publish, vec![0]);
        assert!(reply.neighbors.is_empty());
    }

    #[test]
    fn publishes_only_to_owning_cell() {
        let s = scenario(2, 2);
        let mut ats = Ats::new(&s);
        let (publish, _) = ats.handle_report(&report(&s, 1, 3000.0, 3000.0, "ok")).unwrap();
        assert_eq!(publish, vec![3]);
    }

    #[test]
    fn two_drones_see_each_other() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        ats.handle_report(&report(&s, 1, 100.0, 100.0, "ok")).unwrap();
        let (_, reply_b) = ats.handle_report(&report(&s, 2, 200.0, 100.0, "ok")).unwrap();
        let (_, reply_a) = ats.handle_report(&report(&s, 1, 100.0, 100.0, "ok")).unwrap();
        assert_eq!(reply_b.neighbors.len(), 1);
        assert_eq!(reply_b.neighbors[0].state.icao, icao(1));
        assert!((reply_b.neighbors[0].distance_m - 100.0).abs() < 1e-9);
        assert_eq!(reply_a.neighbors[0].state.icao, icao(2));
    }

    #[test]
    fn neighbors_sorted_and_bounded_against_all_pairs_oracle() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        let pts: Vec<(u32, f64, f64)> =
            (0..30).map(|i| (i + 1, (i * 37 % 1900) as f64, (i * 91 % 1900) as f64)).collect();
        for &(id, x, y) in &pts {
            ats.handle_report(&report(&s, id, x, y, "ok")).unwrap();
        }
        for &(id, x, y) in &pts {
            let (_, reply) = ats.handle_report(&report(&s, id, x, y, "ok")).unwrap();
            let mut expected: Vec<(f64, u32)> = pts
                .iter()
                .filter(|&&(o, _, _)| o != id)
                .map(|&(o, ox, oy)| (((ox - x).powi(2) + (oy - y).powi(2)).sqrt(), o))
                .filter(|&(d, _)| d <= 500.0)
                .collect();
            expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let got: Vec<u32> = reply.neighbors.iter().map(|n| n.state.icao.value()).collect();
            let want: Vec<u32> = expected.iter().map(|e| e.1).collect();
            assert_eq!(got, want, "drone {id}");
        }
    }

    #[test]
    fn bad_tokens_rejected() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        for token in ["", "forged"] {
            assert!(matches!(
                ats.handle_report(&report(&s, 1, 10.0, 10.0, token)),
                Err(SimError::AuthRejected(_))
            ));
        }
        assert!(ats.world().is_empty());
        assert_eq!(ats.counters().auth_rejected, 2);
        assert_eq!(ats.counters().published, 0);
    }

    fn legacy_frame(s: &Scenario, id: u32, x: f64, y: f64, parity: CprParity) -> AdsbFrame {
        let (lat, lon) = s.anchor.to_geodetic(&Point::new(x, y));
        let state = AircraftState { icao: icao(id), latitude: lat, longitude: lon, altitude_ft: 1500.0, timestamp_us: 0 };
        build_position_frame(&state, parity, 5).unwrap()
    }

    #[test]
    fn injected_aircraft_appears_in_replies() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        ats.handle_report(&report(&s, 1, 1000.0, 1000.0, "ok")).unwrap();
        let frame = legacy_frame(&s, 0xABCDEF, 1100.0, 1000.0, CprParity::Even);
        assert_eq!(ats.reverse_path_inject(0, &[frame], 1_000), InjectSummary { accepted: 1, rejected: 0 });
        let (_, reply) = ats.handle_report(&report(&s, 1, 1000.0, 1000.0, "ok")).unwrap();
        assert_eq!(reply.neighbors.len(), 1);
        let n = reply.neighbors[0];
        assert_eq!(n.source, TrackSource::Legacy);
        assert_eq!(n.state.altitude_ft, 1500.0);
        // one CPR quantum is a few metres
        assert!((n.distance_m - 100.0).abs() < 10.0, "{}", n.distance_m);

        let odd = legacy_frame(&s, 0xABCDEF, 1100.0, 1000.0, CprParity::Odd);
        ats.reverse_path_inject(0, &[odd], 400_000);
        let track = ats.world().get(&icao(0xABCDEF)).unwrap();
        assert!(track.position.distance(&Point::new(1100.0, 1000.0)) < 10.0);
    }

    #[test]
    fn corrupted_frame_leaves_world_unchanged() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        let frame = legacy_frame(&s, 0xABCDEF, 1100.0, 1000.0, CprParity::Even).with_bit_flipped(60);
        assert_eq!(ats.reverse_path_inject(0, &[frame], 0), InjectSummary { accepted: 0, rejected: 1 });
        assert!(ats.world().is_empty());
    }

    #[test]
    fn distant_aircraft_does_not_change_replies() {
        let s = scenario(1, 1);
        let mut ats = Ats::new(&s);
        let (_, before) = ats.handle_report(&report(&s, 1, 0.0, 0.0, "ok")).unwrap();
        let frame = legacy_frame(&s, 0xABCDEF, 1900.0, 1900.0, CprParity::Even);
        ats.reverse_path_inject(0, &[frame], 0);
        let (_, after) = ats.handle_report(&report(&s, 1, 0.0, 0.0, "ok")).unwrap();
        assert_eq!(before, after);
    }
}
