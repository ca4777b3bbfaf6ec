//! K parallel M/D/1 queues fed by one Poisson stream.
//!
//! Request arrivals at aggregate rate `lambda` are split across `k` gateways
//! with probabilities `p`; every gateway serves at the same deterministic
//! rate `mu`. Rates are in s^-1 and times in seconds throughout.

use std::io::{self, Write};

use thiserror::Error;

/// One 120 us extended squitter per service.
pub const DEFAULT_MU: f64 = 1e6 / 120.0;

/// Position report rate of one ADS-B emitter.
pub const ADSB_RATE_HZ: f64 = 2.0;

const PROBABILITY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueueError {
    #[error("invalid queue parameters: {0}")]
    InvalidParams(String),
    #[error("unstable system: lambda * max P_k = {load} >= mu = {mu}")]
    Unstable { load: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueParams {
    lambda: f64,
    p: Vec<f64>,
    mu: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, p: Vec<f64>, mu: f64) -> Result<Self, QueueError> {
        if p.is_empty() {
            return Err(QueueError::InvalidParams("at least one gateway is required".into()));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(QueueError::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(QueueError::InvalidParams(format!("lambda must be non-negative, got {lambda}")));
        }
        if p.iter().any(|&pk| !(pk.is_finite() && pk >= 0.0)) {
            return Err(QueueError::InvalidParams("cell probabilities must be non-negative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(QueueError::InvalidParams(format!("cell probabilities sum to {total}, not 1")));
        }
        Ok(QueueParams { lambda, p, mu })
    }

    /// Equal load on every gateway.
    pub fn uniform(k: usize, lambda: f64, mu: f64) -> Result<Self, QueueError> {
        if k == 0 {
            return Err(QueueError::InvalidParams("at least one gateway is required".into()));
        }
        QueueParams::new(lambda, vec![1.0 / k as f64; k], mu)
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn p_max(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }

    /// Per-gateway utilization, `lambda * P_k / mu`.
    pub fn rho(&self) -> Vec<f64> {
        self.p.iter().map(|pk| self.lambda * pk / self.mu).collect()
    }

    pub fn rho_max(&self) -> f64 {
        self.lambda * self.p_max() / self.mu
    }

    fn require_stable(&self) -> Result<(), QueueError> {
        if stability(self) {
            Ok(())
        } else {
            Err(QueueError::Unstable { load: self.lambda * self.p_max(), mu: self.mu })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueMetrics {
    pub rho: Vec<f64>,
    /// Mean number of requests in the system (queued plus in service).
    pub n_avg: f64,
    /// Mean sojourn time in seconds.
    pub t_avg: f64,
    pub stable: bool,
    /// Always zero: buffers are unbounded.
    pub p_blocking: f64,
}

/// `lambda * max_k P_k < mu`. A load within rounding of `mu` counts as
/// unstable, matching [`capacity`].
pub fn stability(params: &QueueParams) -> bool {
    params.lambda * params.p_max() < params.mu * (1.0 - 1e-12)
}

fn mean_in_system(rho: f64) -> f64 {
    rho + 0.5 * rho * rho / (1.0 - rho)
}

fn mean_sojourn(rho: f64, mu: f64) -> f64 {
    1.0 / mu + rho / (2.0 * mu * (1.0 - rho))
}

/// Mean number of requests in the system, summed over gateways.
pub fn avg_requests(params: &QueueParams) -> Result<f64, QueueError> {
    params.require_stable()?;
    Ok(params.rho().into_iter().map(mean_in_system).sum())
}

/// Mean sojourn time in seconds, weighted by the share of traffic per gateway.
pub fn avg_wait(params: &QueueParams) -> Result<f64, QueueError> {
    params.require_stable()?;
    Ok(params
        .p
        .iter()
        .zip(params.rho())
        .map(|(pk, rho)| pk * mean_sojourn(rho, params.mu))
        .sum())
}

/// Closed form of [`avg_requests`] for equal cell probabilities.
pub fn avg_requests_uniform(k: usize, lambda: f64, mu: f64) -> Result<f64, QueueError> {
    let params = QueueParams::uniform(k, lambda, mu)?;
    params.require_stable()?;
    let k = k as f64;
    Ok(lambda / mu + lambda * lambda / (2.0 * mu * (k * mu - lambda)))
}

/// Closed form of [`avg_wait`] for equal cell probabilities.
pub fn avg_wait_uniform(k: usize, lambda: f64, mu: f64) -> Result<f64, QueueError> {
    let params = QueueParams::uniform(k, lambda, mu)?;
    params.require_stable()?;
    let k = k as f64;
    Ok(1.0 / mu + lambda / (2.0 * mu * (k * mu - lambda)))
}

pub fn evaluate(params: &QueueParams) -> Result<QueueMetrics, QueueError> {
    Ok(QueueMetrics {
        rho: params.rho(),
        n_avg: avg_requests(params)?,
        t_avg: avg_wait(params)?,
        stable: true,
        p_blocking: 0.0,
    })
}

/// Largest number of emitters at `r_adsb` Hz each that keeps
/// `N * r_adsb < k * mu`.
pub fn capacity(k: usize, mu: f64, r_adsb: f64) -> u64 {
    let bound = k as f64 * mu / r_adsb;
    let nearest = bound.round();
    // treat float noise around an exact integer bound as the integer itself
    if (bound - nearest).abs() <= 1e-9 * bound.max(1.0) {
        (nearest as u64).saturating_sub(1)
    } else {
        bound.floor() as u64
    }
}

/// How drone traffic is spread across the gateways in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellDistribution {
    Uniform,
    /// `P_k` proportional to `1 / k^s`, k = 1..K.
    Zipf(f64),
}

impl CellDistribution {
    pub fn probabilities(&self, k: usize) -> Vec<f64> {
        match *self {
            CellDistribution::Uniform => vec![1.0 / k as f64; k],
            CellDistribution::Zipf(s) => {
                let weights: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
                let total: f64 = weights.iter().sum();
                weights.into_iter().map(|w| w / total).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub num_drones: u64,
    pub lambda_hz: f64,
    pub rho_max: f64,
    /// `None` on unstable rows.
    pub avg_requests: Option<f64>,
    /// Mean sojourn in units of one service time; `None` on unstable rows.
    pub norm_avg_wait: Option<f64>,
    pub stable: bool,
}

/// Evaluate every (K, drone count) pair with `lambda = r_adsb * drones`.
pub fn sweep(
    k_values: &[usize],
    drone_counts: &[u64],
    mu: f64,
    r_adsb: f64,
    distribution: CellDistribution,
) -> Result<Vec<SweepRow>, QueueError> {
    let mut rows = Vec::with_capacity(k_values.len() * drone_counts.len());
    for &k in k_values {
        let p = distribution.probabilities(k);
        for &n in drone_counts {
            let lambda = r_adsb * n as f64;
            let params = QueueParams::new(lambda, p.clone(), mu)?;
            let stable = stability(&params);
            let (avg_requests, norm_avg_wait) = if stable {
                (Some(avg_requests(&params)?), Some(avg_wait(&params)? * mu))
            } else {
                (None, None)
            };
            rows.push(SweepRow {
                k,
                num_drones: n,
                lambda_hz: lambda,
                rho_max: params.rho_max(),
                avg_requests,
                norm_avg_wait,
                stable,
            });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "K,num_drones,lambda_hz,rho_max,avg_requests,norm_avg_wait,stable";

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| format_sig(x, 9)).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            r.num_drones,
            format_sig(r.lambda_hz, 9),
            format_sig(r.rho_max, 9),
            opt(r.avg_requests),
            opt(r.norm_avg_wait),
            r.stable
        )?;
    }
    Ok(())
}

/// Render like C's `%.{sig}g`: shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MU: f64 = DEFAULT_MU;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn stability_boundaries() {
        assert!(stability(&QueueParams::uniform(1, 0.0, MU).unwrap()));
        assert!(!stability(&QueueParams::uniform(1, MU, MU).unwrap()));
        assert!(stability(&QueueParams::uniform(5, 4.99 * MU, MU).unwrap()));
        assert!(!stability(&QueueParams::uniform(5, 5.0 * MU, MU).unwrap()));
        // skew: the busiest cell decides
        let skewed = QueueParams::new(1.5 * MU, vec![0.7, 0.3], MU).unwrap();
        assert!(!stability(&skewed));
    }

    #[test]
    fn empty_system() {
        let p = QueueParams::uniform(3, 0.0, MU).unwrap();
        assert_eq!(avg_requests(&p).unwrap(), 0.0);
        assert_eq!(avg_wait(&p).unwrap(), 1.0 / MU);
        assert!((avg_wait(&p).unwrap() - 120e-6).abs() < 1e-18);
    }

    #[test]
    fn half_loaded_single_gateway() {
        let p = QueueParams::uniform(1, MU / 2.0, MU).unwrap();
        assert!(rel(avg_requests(&p).unwrap(), 0.75) < 1e-14);
        assert!(rel(avg_wait(&p).unwrap(), 180e-6) < 1e-12);
    }

    #[test]
    fn two_gateways_at_mu() {
        let p = QueueParams::uniform(2, MU, MU).unwrap();
        assert!(rel(avg_requests(&p).unwrap(), 1.5) < 1e-14);
        assert!(rel(avg_requests_uniform(2, MU, MU).unwrap(), 1.5) < 1e-14);
    }

    #[test]
    fn unstable_is_an_error() {
        let p = QueueParams::uniform(1, MU, MU).unwrap();
        assert!(matches!(avg_requests(&p), Err(QueueError::Unstable { .. })));
        assert!(matches!(avg_wait(&p), Err(QueueError::Unstable { .. })));
        assert!(evaluate(&p).is_err());
        assert!(avg_wait_uniform(4, 4.0 * MU, MU).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(QueueParams::new(1.0, vec![], MU).is_err());
        assert!(QueueParams::new(1.0, vec![0.5, 0.4], MU).is_err());
        assert!(QueueParams::new(1.0, vec![1.5, -0.5], MU).is_err());
        assert!(QueueParams::new(-1.0, vec![1.0], MU).is_err());
        assert!(QueueParams::new(1.0, vec![1.0], 0.0).is_err());
        assert!(QueueParams::uniform(0, 1.0, MU).is_err());
        assert!(QueueParams::uniform(100, 1.0, MU).is_ok());
    }

    #[test]
    fn metrics_bundle() {
        let m = evaluate(&QueueParams::new(3000.0, vec![0.5, 0.25, 0.25], MU).unwrap()).unwrap();
        assert!(m.stable);
        assert_eq!(m.p_blocking, 0.0);
        assert_eq!(m.rho.len(), 3);
        assert!(rel(m.n_avg, 3000.0 * m.t_avg) < 1e-12);
    }

    #[test]
    fn capacity_values() {
        assert_eq!(capacity(1, MU, 2.0), 4166);
        assert_eq!(capacity(10, MU, 2.0), 41666);
        assert_eq!(capacity(100, MU, 2.0), 416666);
        // bound lands exactly on an integer: strict inequality excludes it
        for k in [1, 3, 7, 100] {
            assert_eq!(capacity(k, MU, MU), k as u64 - 1);
        }
        assert_eq!(capacity(4, 10.0, 2.0), 19);
    }

    #[test]
    fn sweep_flags_unstable_rows() {
        let rows = sweep(&[1, 100], &[10, 4166, 4167], MU, 2.0, CellDistribution::Uniform).unwrap();
        assert_eq!(rows.len(), 6);
        let near = &rows[1];
        assert!(near.stable);
        assert!((near.rho_max - 0.99984).abs() < 1e-5);
        assert!(near.norm_avg_wait.unwrap() > 1000.0);
        assert!(!rows[2].stable);
        assert_eq!(rows[2].avg_requests, None);
        let light = &rows[3];
        assert!((light.norm_avg_wait.unwrap() - 1.0).abs() < 2e-5);
    }

    #[test]
    fn zipf_distribution_normalized() {
        let p = CellDistribution::Zipf(1.0).probabilities(10);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn csv_rendering() {
        let rows = sweep(&[2], &[0, 10000], MU, 2.0, CellDistribution::Uniform).unwrap();
        let mut out = Vec::new();
        write_sweep_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(lines[1], "2,0,0,0,0,1,true");
        assert_eq!(lines[2], "2,10000,20000,1.2,,,false");
    }

    #[test]
    fn sig_formatting_matches_printf_g() {
        let cases = [
            (0.75, "0.75"),
            (1.0 / 3.0, "0.333333333"),
            (8333.333333333334, "8333.33333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (9.9999999996, "10"),
            (3125.50001, "3125.50001"),
        ];
        for (x, expected) in cases {
            assert_eq!(format_sig(x, 9), expected, "{x}");
        }
    }
}
