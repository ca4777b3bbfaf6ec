use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use adsb_relay::sim::{load_scenario, run_with_sink, CsvBroadcastSink, SimReport};

use crate::CliError;

pub const REPORT_FILE: &str = "report.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const BROADCAST_LOG_FILE: &str = "broadcast_log.csv";

#[derive(Debug, Clone)]
pub struct SimulateOutputs {
    pub report: SimReport,
    pub report_path: PathBuf,
    pub events_path: PathBuf,
    pub broadcast_log_path: PathBuf,
}

/// Run the scenario in `config` and write its reports into `out_dir`.
pub fn cmd_simulate(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<SimulateOutputs, CliError> {
    let scenario = load_scenario(config, seed)?;
    fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join(REPORT_FILE);
    let events_path = out_dir.join(EVENTS_FILE);
    let broadcast_log_path = out_dir.join(BROADCAST_LOG_FILE);

    let mut sink = CsvBroadcastSink::new(BufWriter::new(File::create(&broadcast_log_path)?));
    let report = run_with_sink(&scenario, &mut sink)?;
    sink.finish()?;

    let mut out = BufWriter::new(File::create(&report_path)?);
    report.write_csv(&mut out)?;
    out.flush()?;
    let mut out = BufWriter::new(File::create(&events_path)?);
    report.write_events_csv(&mut out)?;
    out.flush()?;
    Ok(SimulateOutputs { report, report_path, events_path, broadcast_log_path })
}
