//! `abconv detect-steps` — recover the channel step size from a latency CSV.
//!
//! Accepts either format this tool works with: the `staircase` command's
//! modeled sweep, or measured per-layer latencies. For measured files the
//! swept axis is inferred when exactly one channel axis varies; otherwise
//! `--axis` disambiguates.

use std::path::PathBuf;

use abconv::roofline::{self, ChannelAxis};

use crate::cmd::{self, CliError};
use crate::io;

const STAIRCASE_HEADER: &str = "swept_axis,channel,latency_us_model";
const MEASURED_HEADER: &str = "label,s_o,k,c_in,c_out,latency_us";

#[derive(clap::Args)]
pub struct Args {
    /// Latency CSV: a staircase sweep or measured per-layer latencies
    #[arg(long)]
    input: PathBuf,
    /// Channel axis to read from a measured file: c_in or c_out
    #[arg(long)]
    axis: Option<String>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let text = io::read_file(&args.input)?;
    let header = text.lines().next().unwrap_or("").trim_end();
    let step = match header {
        STAIRCASE_HEADER => {
            let sweep = parse_staircase(&text)?;
            roofline::detect_step_size(&sweep).map_err(cmd::roofline_err)?
        }
        MEASURED_HEADER => {
            let samples =
                roofline::parse_measured_csv::<f64>(&text).map_err(cmd::roofline_err)?;
            let axis = resolve_axis(&args.axis, &samples)?;
            roofline::detect_step_from_samples(&samples, axis).map_err(cmd::roofline_err)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unrecognized CSV header {other:?}; expected {STAIRCASE_HEADER:?} or {MEASURED_HEADER:?}"
            )))
        }
    };
    println!("{step}");
    Ok(())
}

/// Parses the staircase CSV body: `axis,channel,latency_us` per line. The
/// latency unit cancels out of the detector's relative comparisons.
fn parse_staircase(text: &str) -> Result<Vec<(u64, f64)>, CliError> {
    let mut sweep = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| {
            CliError::Usage(format!(
                "malformed staircase CSV at line {}: {reason}",
                i + 1
            ))
        };
        let fields: Vec<&str> = line.split(',').collect();
        let [axis, channel, latency] = fields.as_slice() else {
            return Err(bad("expected 3 fields"));
        };
        axis.parse::<ChannelAxis>().map_err(|e| bad(&e))?;
        let channel = channel
            .parse::<u64>()
            .map_err(|_| bad("channel is not an integer"))?;
        let latency = latency
            .parse::<f64>()
            .map_err(|_| bad("latency is not a number"))?;
        if !latency.is_finite() || latency <= 0.0 {
            return Err(bad("latency must be positive and finite"));
        }
        sweep.push((channel, latency));
    }
    Ok(sweep)
}

/// `--axis` wins when given; otherwise exactly one channel axis must vary
/// across the samples.
fn resolve_axis(
    flag: &Option<String>,
    samples: &[roofline::LatencySample<f64>],
) -> Result<ChannelAxis, CliError> {
    if let Some(name) = flag {
        return name.parse::<ChannelAxis>().map_err(CliError::Usage);
    }
    let varies = |axis: ChannelAxis| {
        samples
            .windows(2)
            .any(|w| axis.of(w[0].spec) != axis.of(w[1].spec))
    };
    match (varies(ChannelAxis::Input), varies(ChannelAxis::Output)) {
        (true, false) => Ok(ChannelAxis::Input),
        (false, true) => Ok(ChannelAxis::Output),
        _ => Err(CliError::Usage(
            "cannot infer the swept axis from the samples; pass --axis c_in or --axis c_out".into(),
        )),
    }
}
