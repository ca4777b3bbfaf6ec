use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adsb_relay::codec::{CprParity, IcaoAddress};
use adsb_relay::queue::{format_sig, CellDistribution, ADSB_RATE_HZ, DEFAULT_MU};
use adsb_relay_cli::{
    cmd_analyze, cmd_decode, cmd_encode, cmd_loopback, cmd_simulate, AnalyzeOptions, CliError, EncodeOptions,
    LoopbackOptions,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adsb-relay", version, about = "Cloud-to-ADS-B relay toolkit for small drones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_parity(s: &str) -> Result<CprParity, String> {
    match s.to_ascii_lowercase().as_str() {
        "even" | "0" => Ok(CprParity::Even),
        "odd" | "1" => Ok(CprParity::Odd),
        _ => Err(format!("expected even or odd, got {s:?}")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mean occupancy and normalized sojourn versus drone count, as CSV.
    Analyze {
        /// Gateway counts to evaluate.
        #[arg(long = "k", value_delimiter = ',', default_values_t = [1usize, 2, 5, 10, 100])]
        k_values: Vec<usize>,
        #[arg(long, default_value_t = 500_000)]
        max_drones: u64,
        #[arg(long, default_value_t = 100)]
        step: u64,
        /// Gateway service rate, s^-1.
        #[arg(long, default_value_t = DEFAULT_MU)]
        mu: f64,
        /// Reports per second per drone.
        #[arg(long, default_value_t = ADSB_RATE_HZ)]
        rate: f64,
        /// Skew cell loads as 1/k^s instead of spreading them evenly.
        #[arg(long)]
        zipf: Option<f64>,
        /// Write here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a scenario file and write report.csv, events.csv and broadcast_log.csv.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "sim_out")]
        out_dir: PathBuf,
        /// Replace the seed given in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print one airborne position frame as hex.
    Encode {
        #[arg(long, default_value = "A32DEA")]
        icao: IcaoAddress,
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        /// Barometric altitude, ft.
        #[arg(long, allow_hyphen_values = true)]
        alt: f64,
        #[arg(long, default_value = "even", value_parser = parse_parity)]
        parity: CprParity,
        #[arg(long, default_value_t = 5)]
        ca: u8,
    },
    /// Print the fields of a hex frame, or of every frame in a file.
    Decode { input: String },
    /// Encode, modulate, demodulate and decode a linear track.
    Loopback {
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 2.0)]
        rate: f64,
        #[arg(long, default_value = "A32DEA")]
        icao: IcaoAddress,
        #[arg(long, default_value_t = 40.8518, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, default_value_t = 14.2681, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long, default_value_t = 500.0, allow_hyphen_values = true)]
        alt: f64,
        /// Degrees per second.
        #[arg(long, default_value_t = 1e-4, allow_hyphen_values = true)]
        lat_rate: f64,
        /// Degrees per second.
        #[arg(long, default_value_t = 1.5e-4, allow_hyphen_values = true)]
        lon_rate: f64,
        /// Feet per second.
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        alt_rate: f64,
        #[arg(long, default_value_t = 1)]
        upsample: usize,
        /// Raw interleaved f32 IQ output; offsets go to <path>.sidecar.txt.
        #[arg(long)]
        iq_out: Option<PathBuf>,
        /// Published-versus-decoded CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Analyze { k_values, max_drones, step, mu, rate, zipf, output } => {
            let opts = AnalyzeOptions {
                k_values,
                max_drones,
                step,
                mu,
                rate_hz: rate,
                distribution: zipf.map_or(CellDistribution::Uniform, CellDistribution::Zipf),
            };
            match output {
                Some(path) => {
                    let mut out = BufWriter::new(File::create(&path)?);
                    cmd_analyze(&opts, &mut out)?;
                    out.flush()?;
                }
                None => {
                    cmd_analyze(&opts, io::stdout().lock())?;
                }
            }
        }
        Command::Simulate { config, out_dir, seed } => {
            let out = cmd_simulate(&config, &out_dir, seed)?;
            let s = &out.report.system;
            println!("served: {}", s.served);
            println!("arrivals: {}", s.arrivals);
            println!("dropped_auth: {}", s.dropped_auth);
            println!("dropped_codec: {}", s.dropped_codec);
            println!("in_system_end: {}", s.in_system_end);
            println!("avg_in_system: {}", format_sig(s.avg_in_system, 6));
            println!("avg_sojourn_us: {}", format_sig(s.avg_sojourn_us, 6));
            println!("rho_max: {}", format_sig(s.rho_max, 6));
            println!("report: {}", out.report_path.display());
            println!("events: {}", out.events_path.display());
            println!("broadcast_log: {}", out.broadcast_log_path.display());
        }
        Command::Encode { icao, lat, lon, alt, parity, ca } => {
            let hex = cmd_encode(&EncodeOptions { icao, lat, lon, altitude_ft: alt, parity, ca })?;
            println!("{hex}");
        }
        Command::Decode { input } => {
            let outcome = cmd_decode(&input)?;
            print!("{}", outcome.text);
            if outcome.failures > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Loopback {
            duration,
            rate,
            icao,
            lat,
            lon,
            alt,
            lat_rate,
            lon_rate,
            alt_rate,
            upsample,
            iq_out,
            log,
        } => {
            let opts = LoopbackOptions {
                duration_s: duration,
                rate_hz: rate,
                icao,
                start_lat: lat,
                start_lon: lon,
                start_alt_ft: alt,
                lat_rate_deg_s: lat_rate,
                lon_rate_deg_s: lon_rate,
                alt_rate_ft_s: alt_rate,
                upsample,
                iq_path: iq_out,
                log_path: log,
                ..LoopbackOptions::default()
            };
            let r = cmd_loopback(&opts)?;
            let pct = if r.sent > 0 { 100.0 * r.field_matches as f64 / r.sent as f64 } else { 100.0 };
            println!("sent: {}", r.sent);
            println!("detected: {}", r.detected);
            println!("decoded: {}", r.decoded);
            println!("field_match: {}/{} ({pct:.1}%)", r.field_matches, r.sent);
            println!("pairs: {}", r.pairs);
            match r.max_position_error_deg {
                Some(e) => println!("max_position_error_deg: {}", format_sig(e, 3)),
                None => println!("max_position_error_deg: n/a"),
            }
            if let Some(bytes) = r.iq_bytes {
                println!("iq_bytes: {bytes}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
