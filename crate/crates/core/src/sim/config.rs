//! TOML scenario files.
//!
//! ```toml
//! seed = 42
//! duration_s = 60
//! # warmup_s, mu_hz, neighbor_radius_m, hop_delay_us, capability are optional
//!
//! [grid]
//! rows = 1
//! cols = 2
//! cell_width_m = 2000
//!
//! [drones]
//! count = 100
//! placement = "balanced"
//!
//! [arrivals]
//! model = "poisson"
//! lambda_over_mu = 1.0
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::codec::IcaoAddress;
use crate::queue::DEFAULT_MU;

use super::engine::PLACEMENT_STREAM;
use super::geometry::{GeoAnchor, Point, Rect};
use super::scenario::{default_warmup_us, grid_gateways, ArrivalModel, DroneSpec, Kinematics, LegacyAircraft, Scenario};
use super::SimError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: u64,
    duration_s: f64,
    warmup_s: Option<f64>,
    mu_hz: Option<f64>,
    #[serde(default = "default_radius")]
    neighbor_radius_m: f64,
    #[serde(default)]
    hop_delay_us: u64,
    #[serde(default = "default_capability")]
    capability: u8,
    grid: GridSection,
    #[serde(default)]
    drones: DroneSection,
    arrivals: ArrivalSection,
    #[serde(default)]
    auth: AuthSection,
    #[serde(default)]
    legacy: Vec<LegacyEntry>,
}

fn default_radius() -> f64 {
    500.0
}

fn default_capability() -> u8 {
    5
}

fn default_altitude() -> f64 {
    200.0
}

fn default_rate() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    rows: u32,
    cols: u32,
    cell_width_m: f64,
    /// Defaults to `cell_width_m`.
    cell_height_m: Option<f64>,
    #[serde(default = "default_anchor_lat")]
    anchor_lat: f64,
    #[serde(default = "default_anchor_lon")]
    anchor_lon: f64,
}

fn default_anchor_lat() -> f64 {
    40.85
}

fn default_anchor_lon() -> f64 {
    14.27
}

#[derive(Debug, Default, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Placement {
    /// Drone `i` goes to cell `i mod K`, uniformly inside it.
    #[default]
    Balanced,
    /// Uniform over the whole region.
    Random,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DroneSection {
    #[serde(default)]
    count: u32,
    #[serde(default)]
    placement: Placement,
    #[serde(default = "default_altitude")]
    altitude_ft: f64,
    /// Horizontal speed drawn uniformly from `[0, max_speed_mps]`.
    #[serde(default)]
    max_speed_mps: f64,
    #[serde(default = "default_icao_base")]
    icao_base: String,
    #[serde(default)]
    fixed: Vec<FixedDrone>,
}

impl Default for DroneSection {
    fn default() -> Self {
        DroneSection {
            count: 0,
            placement: Placement::Balanced,
            altitude_ft: default_altitude(),
            max_speed_mps: 0.0,
            icao_base: default_icao_base(),
            fixed: Vec::new(),
        }
    }
}

fn default_icao_base() -> String {
    "A00000".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedDrone {
    icao: String,
    x_m: f64,
    y_m: f64,
    #[serde(default = "default_altitude")]
    altitude_ft: f64,
    #[serde(default)]
    velocity_mps: [f64; 3],
    token: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
enum ArrivalSection {
    Poisson { lambda_hz: Option<f64>, lambda_over_mu: Option<f64> },
    Periodic {
        #[serde(default = "default_rate")]
        rate_hz: f64,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AuthSection {
    /// Drones whose tokens are left out of the registry.
    #[serde(default)]
    unregistered: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LegacyEntry {
    icao: String,
    x_m: f64,
    y_m: f64,
    altitude_ft: f64,
    #[serde(default)]
    velocity_mps: [f64; 3],
    #[serde(default = "default_rate")]
    rate_hz: f64,
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

fn parse_icao(s: &str) -> Result<IcaoAddress, SimError> {
    s.parse().map_err(|_| config_err(format!("invalid ICAO address {s:?}")))
}

fn seconds_to_us(s: f64, what: &str) -> Result<u64, SimError> {
    if s.is_finite() && s >= 0.0 {
        Ok((s * 1e6).round() as u64)
    } else {
        Err(config_err(format!("{what} must be a non-negative number of seconds")))
    }
}

/// Read and validate a scenario file. `seed` replaces the file's seed.
pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_scenario_with_seed(&text, seed)
}

/// Parse and validate scenario TOML. Syntax and schema problems are
/// [`SimError::Config`]; a well-formed file describing an impossible
/// scenario fails [`Scenario::validate`].
pub fn parse_scenario(text: &str) -> Result<Scenario, SimError> {
    parse_scenario_with_seed(text, None)
}

pub fn parse_scenario_with_seed(text: &str, seed: Option<u64>) -> Result<Scenario, SimError> {
    let mut cfg: ConfigFile = toml::from_str(text).map_err(|e| config_err(e.message().to_string()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let scenario = build(cfg)?;
    scenario.validate()?;
    Ok(scenario)
}

fn build(cfg: ConfigFile) -> Result<Scenario, SimError> {
    let duration_us = seconds_to_us(cfg.duration_s, "duration_s")?;
    let warmup_us = match cfg.warmup_s {
        Some(w) => seconds_to_us(w, "warmup_s")?,
        None => default_warmup_us(duration_us),
    };
    let mu = cfg.mu_hz.unwrap_or(DEFAULT_MU);

    let g = &cfg.grid;
    let cell_h = g.cell_height_m.unwrap_or(g.cell_width_m);
    let gateways = grid_gateways(g.rows, g.cols, g.cell_width_m, cell_h);
    let region = Rect::new(0.0, 0.0, f64::from(g.cols) * g.cell_width_m, f64::from(g.rows) * cell_h);

    let arrival_model = match cfg.arrivals {
        ArrivalSection::Poisson { lambda_hz: Some(l), lambda_over_mu: None } => ArrivalModel::PoissonAggregate { lambda: l },
        ArrivalSection::Poisson { lambda_hz: None, lambda_over_mu: Some(r) } => {
            ArrivalModel::PoissonAggregate { lambda: r * mu }
        }
        ArrivalSection::Poisson { .. } => {
            return Err(config_err("poisson arrivals need exactly one of lambda_hz and lambda_over_mu"))
        }
        ArrivalSection::Periodic { rate_hz } => ArrivalModel::PeriodicPerDrone { rate_hz },
    };

    let unregistered: BTreeSet<IcaoAddress> =
        cfg.auth.unregistered.iter().map(|s| parse_icao(s)).collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(PLACEMENT_STREAM);

    let d = &cfg.drones;
    let base = parse_icao(&d.icao_base)?.value();
    if base + d.count > 0x100_0000 {
        return Err(config_err("drone ICAO addresses run past FFFFFF"));
    }
    if !(d.max_speed_mps.is_finite() && d.max_speed_mps >= 0.0) {
        return Err(config_err("max_speed_mps must be non-negative"));
    }
    let mut drones = Vec::with_capacity(d.count as usize + d.fixed.len());
    for i in 0..d.count {
        let area = match d.placement {
            Placement::Balanced if !gateways.is_empty() => gateways[i as usize % gateways.len()].cell,
            _ => region,
        };
        let position = Point::new(
            area.x_min + rng.random::<f64>() * area.width(),
            area.y_min + rng.random::<f64>() * area.height(),
        );
        let velocity_mps = if d.max_speed_mps > 0.0 {
            let heading = rng.random::<f64>() * std::f64::consts::TAU;
            let speed = rng.random::<f64>() * d.max_speed_mps;
            [speed * heading.cos(), speed * heading.sin(), 0.0]
        } else {
            [0.0; 3]
        };
        let icao = IcaoAddress::new(base + i).expect("checked above");
        drones.push(DroneSpec {
            icao,
            motion: Kinematics { position, altitude_ft: d.altitude_ft, velocity_mps },
            auth_token: format!("drone-{icao}"),
        });
    }
    for f in &d.fixed {
        let icao = parse_icao(&f.icao)?;
        drones.push(DroneSpec {
            icao,
            motion: Kinematics {
                position: Point::new(f.x_m, f.y_m),
                altitude_ft: f.altitude_ft,
                velocity_mps: f.velocity_mps,
            },
            auth_token: f.token.clone().unwrap_or_else(|| format!("drone-{icao}")),
        });
    }
    let auth_registry = drones
        .iter()
        .filter(|d| !unregistered.contains(&d.icao))
        .map(|d| d.auth_token.clone())
        .filter(|t| !t.is_empty())
        .collect();

    let legacy = cfg
        .legacy
        .iter()
        .map(|l| {
            Ok(LegacyAircraft {
                icao: parse_icao(&l.icao)?,
                motion: Kinematics {
                    position: Point::new(l.x_m, l.y_m),
                    altitude_ft: l.altitude_ft,
                    velocity_mps: l.velocity_mps,
                },
                rate_hz: l.rate_hz,
            })
        })
        .collect::<Result<_, SimError>>()?;

    Ok(Scenario {
        region,
        anchor: GeoAnchor::new(g.anchor_lat, g.anchor_lon),
        gateways,
        drones,
        legacy,
        arrival_model,
        duration_us,
        warmup_us,
        seed: cfg.seed,
        mu,
        neighbor_radius_m: cfg.neighbor_radius_m,
        hop_delay_us: cfg.hop_delay_us,
        auth_registry,
        capability: cfg.capability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 42
duration_s = 60

[grid]
rows = 1
cols = 2
cell_width_m = 2000

[drones]
count = 10

[arrivals]
model = "poisson"
lambda_over_mu = 1.0
"#;

    #[test]
    fn basic_file() {
        let s = parse_scenario(BASIC).unwrap();
        assert_eq!(s.gateways.len(), 2);
        assert_eq!(s.drones.len(), 10);
        assert_eq!(s.duration_us, 60_000_000);
        assert_eq!(s.warmup_us, 5_000_000);
        assert_eq!(s.service_us(), 120);
        assert_eq!(s.arrival_model, ArrivalModel::PoissonAggregate { lambda: DEFAULT_MU });
        assert_eq!(s.drones[0].icao.to_string(), "A00000");
        assert_eq!(s.auth_registry.len(), 10);
    }

    #[test]
    fn balanced_placement_splits_evenly() {
        let s = parse_scenario(BASIC).unwrap();
        let in_cell0 = s.drones.iter().filter(|d| s.assign_cell(&d.motion.position).unwrap() == 0).count();
        assert_eq!(in_cell0, 5);
    }

    #[test]
    fn placement_depends_only_on_seed() {
        assert_eq!(parse_scenario(BASIC).unwrap(), parse_scenario(BASIC).unwrap());
        let other = parse_scenario(&BASIC.replace("seed = 42", "seed = 43")).unwrap();
        assert_ne!(other.drones, parse_scenario(BASIC).unwrap().drones);
        assert_eq!(parse_scenario_with_seed(BASIC, Some(43)).unwrap(), other);
    }

    #[test]
    fn unknown_key_is_config_error() {
        let bad = BASIC.replace("count = 10", "count = 10\ncolour = \"red\"");
        assert!(matches!(parse_scenario(&bad), Err(SimError::Config(_))));
        let bad = BASIC.replace("seed = 42", "seed = 42\nspeed = 1");
        assert!(matches!(parse_scenario(&bad), Err(SimError::Config(_))));
        let bad = BASIC.replace("lambda_over_mu = 1.0", "lambda_over_mu = 1.0\nburst = 2");
        assert!(matches!(parse_scenario(&bad), Err(SimError::Config(_))));
    }

    #[test]
    fn malformed_is_config_error() {
        assert!(matches!(parse_scenario("seed = "), Err(SimError::Config(_))));
        let both = BASIC.replace("lambda_over_mu = 1.0", "lambda_over_mu = 1.0\nlambda_hz = 5.0");
        assert!(matches!(parse_scenario(&both), Err(SimError::Config(_))));
    }

    #[test]
    fn drone_outside_region_is_coverage_error() {
        let text = format!("{BASIC}\n[[drones.fixed]]\nicao = \"ABCDEF\"\nx_m = 5000\ny_m = 10\n");
        assert!(matches!(parse_scenario(&text), Err(SimError::Coverage { .. })));
    }

    #[test]
    fn unregistered_and_legacy() {
        let text = format!(
            "{}\n[auth]\nunregistered = [\"A00001\"]\n\n[[legacy]]\nicao = \"400000\"\nx_m = 10\ny_m = 10\naltitude_ft = 3000\n",
            BASIC
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.auth_registry.len(), 9);
        assert!(!s.auth_registry.contains("drone-A00001"));
        assert_eq!(s.legacy.len(), 1);
        assert_eq!(s.legacy[0].rate_hz, 2.0);
    }

    #[test]
    fn periodic_default_rate() {
        let text = BASIC.replace("model = \"poisson\"\nlambda_over_mu = 1.0", "model = \"periodic\"");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.arrival_model, ArrivalModel::PeriodicPerDrone { rate_hz: 2.0 });
    }
}
