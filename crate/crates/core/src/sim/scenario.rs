use std::collections::{BTreeSet, HashSet};

use crate::codec::{AircraftState, IcaoAddress};
use crate::queue::DEFAULT_MU;

use super::geometry::{GeoAnchor, Point, Rect};
use super::SimError;

const FEET_PER_METRE: f64 = 1.0 / 0.3048;

/// One ADS-B radio gateway and the cell it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub id: u32,
    pub cell_center: Point,
    pub cell: Rect,
}

impl GatewayConfig {
    pub fn new(id: u32, cell: Rect) -> Self {
        GatewayConfig { id, cell_center: cell.center(), cell }
    }
}

/// `rows x cols` equal cells over `[0, cols*w] x [0, rows*h]`, numbered row
/// by row from the south-west corner.
pub fn grid_gateways(rows: u32, cols: u32, cell_width_m: f64, cell_height_m: f64) -> Vec<GatewayConfig> {
    let mut gateways = Vec::with_capacity((rows * cols) as usize);
    for r in 0..rows {
        for c in 0..cols {
            let x0 = f64::from(c) * cell_width_m;
            let y0 = f64::from(r) * cell_height_m;
            let cell = Rect::new(x0, y0, x0 + cell_width_m, y0 + cell_height_m);
            gateways.push(GatewayConfig::new(r * cols + c, cell));
        }
    }
    gateways
}

/// The gateway whose cell contains `position`. Points on a shared edge go
/// to the lowest id.
pub fn assign_cell(position: &Point, gateways: &[GatewayConfig]) -> Result<u32, SimError> {
    gateways
        .iter()
        .filter(|g| g.cell.contains(position))
        .map(|g| g.id)
        .min()
        .ok_or(SimError::Coverage { x: position.x, y: position.y })
}

/// Straight-line motion, bounced back at the region edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub position: Point,
    pub altitude_ft: f64,
    /// East, north, up in m/s.
    pub velocity_mps: [f64; 3],
}

impl Kinematics {
    pub fn stationary(position: Point, altitude_ft: f64) -> Self {
        Kinematics { position, altitude_ft, velocity_mps: [0.0; 3] }
    }

    /// Planar position and altitude (ft) at `t_us`.
    pub fn at(&self, region: &Rect, t_us: u64) -> (Point, f64) {
        let t = t_us as f64 * 1e-6;
        let [vx, vy, vz] = self.velocity_mps;
        let p = region.reflect(Point::new(self.position.x + vx * t, self.position.y + vy * t));
        (p, self.altitude_ft + vz * t * FEET_PER_METRE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroneSpec {
    pub icao: IcaoAddress,
    pub motion: Kinematics,
    pub auth_token: String,
}

/// A conventionally equipped aircraft whose own squitters reach the gateways.
#[derive(Debug, Clone, PartialEq)]
pub struct LegacyAircraft {
    pub icao: IcaoAddress,
    pub motion: Kinematics,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalModel {
    /// One memoryless stream of `lambda` reports/s; each report comes from a
    /// drone picked uniformly at random.
    PoissonAggregate { lambda: f64 },
    /// Every drone reports at exactly `rate_hz` with a random initial phase.
    PeriodicPerDrone { rate_hz: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub region: Rect,
    pub anchor: GeoAnchor,
    pub gateways: Vec<GatewayConfig>,
    pub drones: Vec<DroneSpec>,
    pub legacy: Vec<LegacyAircraft>,
    pub arrival_model: ArrivalModel,
    pub duration_us: u64,
    /// Measurement starts here; see [`default_warmup_us`].
    pub warmup_us: u64,
    pub seed: u64,
    /// Gateway service rate, s^-1.
    pub mu: f64,
    pub neighbor_radius_m: f64,
    /// Constant latency of each network hop (drone to server, server to gateway).
    pub hop_delay_us: u64,
    pub auth_registry: BTreeSet<String>,
    /// CA field of rebroadcast frames.
    pub capability: u8,
}

/// `max(5 s, 5% of duration)`.
pub fn default_warmup_us(duration_us: u64) -> u64 {
    (duration_us / 20).max(5_000_000)
}

impl Scenario {
    /// Minimal scenario over a `rows x cols` grid with no traffic.
    pub fn grid(rows: u32, cols: u32, cell_size_m: f64, duration_us: u64, seed: u64) -> Self {
        let gateways = grid_gateways(rows, cols, cell_size_m, cell_size_m);
        Scenario {
            region: Rect::new(0.0, 0.0, f64::from(cols) * cell_size_m, f64::from(rows) * cell_size_m),
            anchor: GeoAnchor::new(40.85, 14.27),
            gateways,
            drones: Vec::new(),
            legacy: Vec::new(),
            arrival_model: ArrivalModel::PeriodicPerDrone { rate_hz: 2.0 },
            duration_us,
            warmup_us: default_warmup_us(duration_us),
            seed,
            mu: DEFAULT_MU,
            neighbor_radius_m: 500.0,
            hop_delay_us: 0,
            auth_registry: BTreeSet::new(),
            capability: 5,
        }
    }

    /// Service time in whole microseconds.
    pub fn service_us(&self) -> u64 {
        (1e6 / self.mu).round() as u64
    }

    pub fn assign_cell(&self, position: &Point) -> Result<u32, SimError> {
        assign_cell(position, &self.gateways)
    }

    pub fn gateway_index(&self, id: u32) -> Option<usize> {
        self.gateways.iter().position(|g| g.id == id)
    }

    /// Geodetic state of a moving body at `t_us`.
    pub fn state_at(&self, icao: IcaoAddress, motion: &Kinematics, t_us: u64) -> (Point, AircraftState) {
        let (p, altitude_ft) = motion.at(&self.region, t_us);
        let (latitude, longitude) = self.anchor.to_geodetic(&p);
        (p, AircraftState { icao, latitude, longitude, altitude_ft, timestamp_us: t_us })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidScenario(msg));
        if self.gateways.is_empty() {
            return invalid("at least one gateway is required".into());
        }
        if self.duration_us == 0 {
            return invalid("duration must be positive".into());
        }
        if !(self.mu.is_finite() && self.mu > 0.0) || self.service_us() == 0 {
            return invalid(format!("service rate {} s^-1 is not usable", self.mu));
        }
        if !(self.neighbor_radius_m.is_finite() && self.neighbor_radius_m >= 0.0) {
            return invalid("neighbor radius must be non-negative".into());
        }
        if self.capability > 7 {
            return invalid(format!("capability {} does not fit 3 bits", self.capability));
        }
        match self.arrival_model {
            ArrivalModel::PoissonAggregate { lambda } if !(lambda.is_finite() && lambda >= 0.0) => {
                return invalid(format!("arrival rate {lambda} must be non-negative"));
            }
            ArrivalModel::PoissonAggregate { lambda } if lambda > 0.0 && self.drones.is_empty() => {
                return invalid("a positive arrival rate needs at least one drone".into());
            }
            ArrivalModel::PeriodicPerDrone { rate_hz } if !(rate_hz.is_finite() && rate_hz > 0.0) => {
                return invalid(format!("report rate {rate_hz} must be positive"));
            }
            _ => {}
        }
        if self.region.is_degenerate() {
            return invalid("coverage region has zero area".into());
        }
        self.validate_partition()?;

        let mut seen = HashSet::new();
        for d in &self.drones {
            if !seen.insert(d.icao) {
                return invalid(format!("duplicate ICAO address {}", d.icao));
            }
            if !self.region.contains(&d.motion.position) {
                return Err(SimError::Coverage { x: d.motion.position.x, y: d.motion.position.y });
            }
            check_motion(&d.motion, d.icao)?;
        }
        for a in &self.legacy {
            if !seen.insert(a.icao) {
                return invalid(format!("duplicate ICAO address {}", a.icao));
            }
            if !(a.rate_hz.is_finite() && a.rate_hz > 0.0) {
                return invalid(format!("legacy aircraft {} needs a positive rate", a.icao));
            }
            if !self.region.contains(&a.motion.position) {
                return Err(SimError::Coverage { x: a.motion.position.x, y: a.motion.position.y });
            }
            check_motion(&a.motion, a.icao)?;
        }
        Ok(())
    }

    /// Cells must be disjoint, lie inside the region and cover it.
    fn validate_partition(&self) -> Result<(), SimError> {
        let mut ids = HashSet::new();
        for (i, g) in self.gateways.iter().enumerate() {
            if !ids.insert(g.id) {
                return Err(SimError::InvalidScenario(format!("duplicate gateway id {}", g.id)));
            }
            if g.cell.is_degenerate() || !self.region.contains_rect(&g.cell) {
                return Err(SimError::InvalidScenario(format!("cell of gateway {} is not inside the region", g.id)));
            }
            if let Some(other) = self.gateways[i + 1..].iter().find(|o| o.cell.overlaps(&g.cell)) {
                return Err(SimError::InvalidScenario(format!("cells of gateways {} and {} overlap", g.id, other.id)));
            }
        }
        // Disjoint cells inside the region cover it iff their areas add up.
        let covered: f64 = self.gateways.iter().map(|g| g.cell.area()).sum();
        let total = self.region.area();
        if ((covered - total) / total).abs() > 1e-9 {
            return Err(SimError::InvalidScenario("cells do not cover the whole region".into()));
        }
        Ok(())
    }
}

fn check_motion(m: &Kinematics, icao: IcaoAddress) -> Result<(), SimError> {
    let finite = m.velocity_mps.iter().all(|v| v.is_finite()) && m.altitude_ft.is_finite();
    if finite {
        Ok(())
    } else {
        Err(SimError::InvalidScenario(format!("non-finite motion for {icao}")))
    }
}
