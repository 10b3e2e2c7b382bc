//! `abconv staircase` — model latency along one channel axis at unit stride
//! and emit the sweep as CSV. Feeding the output to `detect-steps` recovers
//! the profile's channel step.

use std::path::PathBuf;

use abconv::roofline::{self, ChannelAxis};
use abconv::{ConvSpec, ConvVariant};

use crate::cmd::{self, CliError, VariantKind};
use crate::io;

#[derive(clap::Args)]
pub struct Args {
    /// Channel axis to sweep: c_in or c_out
    #[arg(long)]
    axis: ChannelAxisArg,
    /// Output map height/width
    #[arg(long)]
    so: u64,
    /// Kernel height/width
    #[arg(long, default_value_t = 1)]
    k: u64,
    /// Channel count on the axis that stays fixed
    #[arg(long)]
    fixed: u64,
    /// First channel count of the sweep (inclusive)
    #[arg(long)]
    from: u64,
    /// Last channel count of the sweep (inclusive)
    #[arg(long)]
    to: u64,
    /// Variant to model at every point
    #[arg(long, value_enum, default_value = "standard")]
    variant: VariantKind,
    /// Group count for the grouped variants
    #[arg(long)]
    g: Option<u64>,
    /// Hardware profile: a JSON file path or a built-in name
    #[arg(long, default_value = "ethos-u65-like")]
    hw: String,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Thin clap wrapper: the library type already parses the two axis names.
#[derive(Clone, Copy)]
pub struct ChannelAxisArg(ChannelAxis);

impl std::str::FromStr for ChannelAxisArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(ChannelAxisArg)
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let profile = io::load_profile(&args.hw)?;
    let axis = args.axis.0;
    let variant = cmd::explicit_variant(args.variant, args.g)?;
    let (c_in, c_out) = match axis {
        ChannelAxis::Input => (args.from, args.fixed),
        ChannelAxis::Output => (args.fixed, args.from),
    };
    let base =
        ConvSpec::new(args.so, args.k, c_in, c_out).map_err(|e| CliError::Usage(e.to_string()))?;
    if variant != ConvVariant::Standard {
        // A fixed g across a unit-stride sweep divides almost no channel
        // counts; fail up front instead of at the first odd width.
        let g = variant.group_count();
        let divisible = |c: u64| c.is_multiple_of(g);
        if !(args.from..=args.to).all(divisible) || !divisible(args.fixed) {
            return Err(CliError::Domain(format!(
                "group count {g} does not divide every channel count in the sweep; \
                 sweep a standard layer or pick a range of multiples of {g}"
            )));
        }
    }
    let sweep = roofline::staircase_sweep(&profile, base, axis, variant, args.from, args.to)
        .map_err(cmd::roofline_err)?;
    io::emit(
        args.out.as_deref(),
        &roofline::staircase_to_csv(axis, &sweep),
    )
}
