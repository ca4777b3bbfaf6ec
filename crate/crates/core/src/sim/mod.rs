//! Discrete-event simulation of drones reporting to a cloud server that
//! routes each report to the radio gateway covering the drone.
//!
//! Time is integer microseconds. Events at the same instant run in the
//! order arrivals, service completions, window markers, then by insertion.

mod ats;
mod config;
mod engine;
mod gateway;
mod geometry;
mod report;
mod scenario;

use thiserror::Error;

use crate::codec::IcaoAddress;

pub use ats::{
    Ats, AtsCounters, AuthRegistry, Broker, InjectSummary, Neighbor, PositionReport, Track, TrackSource,
    TrafficReply, WorldState, CPR_PAIR_MAX_AGE_US,
};
pub use config::{load_scenario, parse_scenario, parse_scenario_with_seed};
pub use engine::{run, run_with_sink, SimOutput};
pub use gateway::{
    write_broadcast_csv, BroadcastEntry, BroadcastSink, CsvBroadcastSink, Emitter, GatewayQueue, GatewayStats,
    Message, NullSink, BROADCAST_CSV_HEADER,
};
pub use geometry::{GeoAnchor, Point, Rect, EARTH_RADIUS_M};
pub use report::{EventCounts, SimReport, SystemStats, EVENTS_CSV_HEADER, REPORT_CSV_HEADER};
pub use scenario::{
    assign_cell, default_warmup_us, grid_gateways, ArrivalModel, DroneSpec, GatewayConfig, Kinematics,
    LegacyAircraft, Scenario,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("position ({x:.3}, {y:.3}) m is outside every gateway cell")]
    Coverage { x: f64, y: f64 },
    #[error("report from {0} failed authentication")]
    AuthRejected(IcaoAddress),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
