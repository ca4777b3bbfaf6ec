use std::io::{self, Write};

use crate::queue::format_sig;

use super::gateway::GatewayStats;

pub const REPORT_CSV_HEADER: &str = "scope,gateway_id,arrivals,served,dropped_auth,dropped_codec,in_system_end,\
lambda_hz,rho,avg_in_system,avg_sojourn_us,min_sojourn_us,max_queue_len";

pub const EVENTS_CSV_HEADER: &str = "event,count";

/// Aggregate over all gateways. Rates and averages cover the measurement
/// window only; counters cover the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemStats {
    pub arrivals: u64,
    pub served: u64,
    pub dropped_auth: u64,
    pub dropped_codec: u64,
    pub in_system_end: u64,
    pub window_arrivals: u64,
    pub window_served: u64,
    pub lambda_hz: f64,
    /// Busiest gateway's utilization.
    pub rho_max: f64,
    /// Mean number of messages in all gateways together.
    pub avg_in_system: f64,
    /// Mean sojourn over every message served in the window.
    pub avg_sojourn_us: f64,
    pub min_sojourn_us: Option<u64>,
    pub max_queue_len: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub drone_reports: u64,
    pub ats_received: u64,
    pub auth_rejected: u64,
    pub published: u64,
    pub replies: u64,
    pub neighbors_sent: u64,
    pub gateway_arrivals: u64,
    pub codec_dropped: u64,
    pub broadcasts: u64,
    pub service_completions: u64,
    pub legacy_squitters: u64,
    pub legacy_accepted: u64,
    pub legacy_rejected: u64,
}

impl EventCounts {
    pub fn rows(&self) -> [(&'static str, u64); 13] {
        [
            ("drone_reports", self.drone_reports),
            ("ats_received", self.ats_received),
            ("auth_rejected", self.auth_rejected),
            ("published", self.published),
            ("replies", self.replies),
            ("neighbors_sent", self.neighbors_sent),
            ("gateway_arrivals", self.gateway_arrivals),
            ("codec_dropped", self.codec_dropped),
            ("broadcasts", self.broadcasts),
            ("service_completions", self.service_completions),
            ("legacy_squitters", self.legacy_squitters),
            ("legacy_accepted", self.legacy_accepted),
            ("legacy_rejected", self.legacy_rejected),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub gateways: Vec<GatewayStats>,
    pub system: SystemStats,
    pub events: EventCounts,
    pub warmup_us: u64,
    pub duration_us: u64,
}

impl SimReport {
    pub fn new(gateways: Vec<GatewayStats>, events: EventCounts, warmup_us: u64, duration_us: u64) -> Self {
        let sum = |f: fn(&GatewayStats) -> u64| gateways.iter().map(f).sum::<u64>();
        let window_served = sum(|g| g.window_served);
        let sojourn_total: f64 = gateways.iter().map(|g| g.avg_sojourn_us * g.window_served as f64).sum();
        let system = SystemStats {
            arrivals: sum(|g| g.arrivals),
            served: sum(|g| g.served),
            dropped_auth: sum(|g| g.dropped_auth),
            dropped_codec: sum(|g| g.dropped_codec),
            in_system_end: sum(|g| g.in_system_end),
            window_arrivals: sum(|g| g.window_arrivals),
            window_served,
            lambda_hz: gateways.iter().map(|g| g.lambda_hz).sum(),
            rho_max: gateways.iter().map(|g| g.rho).fold(0.0, f64::max),
            avg_in_system: gateways.iter().map(|g| g.avg_in_system).sum(),
            avg_sojourn_us: if window_served > 0 { sojourn_total / window_served as f64 } else { 0.0 },
            min_sojourn_us: gateways.iter().filter_map(|g| g.min_sojourn_us).min(),
            max_queue_len: gateways.iter().map(|g| g.max_queue_len).max().unwrap_or(0),
        };
        SimReport { gateways, system, events, warmup_us, duration_us }
    }

    /// arrivals = served + in system + dropped, for every gateway.
    pub fn conservation_holds(&self) -> bool {
        let balanced = |a: u64, s: u64, n: u64, da: u64, dc: u64| a == s + n + da + dc;
        self.gateways
            .iter()
            .all(|g| balanced(g.arrivals, g.served, g.in_system_end, g.dropped_auth, g.dropped_codec))
            && balanced(
                self.system.arrivals,
                self.system.served,
                self.system.in_system_end,
                self.system.dropped_auth,
                self.system.dropped_codec,
            )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{REPORT_CSV_HEADER}")?;
        for g in &self.gateways {
            writeln!(
                out,
                "gateway,{},{},{},{},{},{},{},{},{},{},{},{}",
                g.id,
                g.arrivals,
                g.served,
                g.dropped_auth,
                g.dropped_codec,
                g.in_system_end,
                format_sig(g.lambda_hz, 9),
                format_sig(g.rho, 9),
                format_sig(g.avg_in_system, 9),
                format_sig(g.avg_sojourn_us, 9),
                opt(g.min_sojourn_us),
                g.max_queue_len
            )?;
        }
        let s = &self.system;
        writeln!(
            out,
            "system,all,{},{},{},{},{},{},{},{},{},{},{}",
            s.arrivals,
            s.served,
            s.dropped_auth,
            s.dropped_codec,
            s.in_system_end,
            format_sig(s.lambda_hz, 9),
            format_sig(s.rho_max, 9),
            format_sig(s.avg_in_system, 9),
            format_sig(s.avg_sojourn_us, 9),
            opt(s.min_sojourn_us),
            s.max_queue_len
        )
    }

    pub fn write_events_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{EVENTS_CSV_HEADER}")?;
        for (name, count) in self.events.rows() {
            writeln!(out, "{name},{count}")?;
        }
        Ok(())
    }
}

fn opt(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
