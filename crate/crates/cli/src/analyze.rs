use std::io::Write;

use adsb_relay::queue::{capacity, sweep, write_sweep_csv, CellDistribution, SweepRow, ADSB_RATE_HZ, DEFAULT_MU};

use crate::CliError;

pub const DEFAULT_K_VALUES: [usize; 5] = [1, 2, 5, 10, 100];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub k_values: Vec<usize>,
    pub max_drones: u64,
    pub step: u64,
    pub mu: f64,
    pub rate_hz: f64,
    pub distribution: CellDistribution,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            k_values: DEFAULT_K_VALUES.to_vec(),
            max_drones: 500_000,
            step: 100,
            mu: DEFAULT_MU,
            rate_hz: ADSB_RATE_HZ,
            distribution: CellDistribution::Uniform,
        }
    }
}

/// `step, 2*step, ... <= max_drones`, plus the capacity of `k` gateways
/// when it falls in range, so every curve reaches its asymptote.
pub fn drone_counts(k: usize, opts: &AnalyzeOptions) -> Vec<u64> {
    let mut counts: Vec<u64> = (1..).map(|i| i * opts.step).take_while(|&n| n <= opts.max_drones).collect();
    let cap = capacity(k, opts.mu, opts.rate_hz);
    if cap > 0 && cap <= opts.max_drones && !counts.contains(&cap) {
        counts.push(cap);
        counts.sort_unstable();
    }
    counts
}

/// Evaluate the sweep and write it as CSV.
pub fn cmd_analyze<W: Write>(opts: &AnalyzeOptions, out: W) -> Result<Vec<SweepRow>, CliError> {
    if opts.step == 0 {
        return Err(CliError::Validation("--step must be positive".into()));
    }
    if opts.k_values.contains(&0) {
        return Err(CliError::Validation("K values must be positive".into()));
    }
    let mut rows = Vec::new();
    for &k in &opts.k_values {
        rows.extend(sweep(&[k], &drone_counts(k, opts), opts.mu, opts.rate_hz, opts.distribution)?);
    }
    write_sweep_csv(out, &rows)?;
    Ok(rows)
}
