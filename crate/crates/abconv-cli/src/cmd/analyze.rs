//! `abconv analyze` — cost one layer under one variant and print the row.

use abconv::{cost, roofline, select, ConvSpec, ConvVariant, Profile};

use crate::cmd::{self, CliError, LayerFlags, OutFormat, VariantKind};
use crate::io;

const HEADERS: [&str; 9] = [
    "layer",
    "variant",
    "g",
    "macs",
    "params",
    "weight_ai",
    "activation_ai",
    "whole_ai",
    "est_latency_us",
];

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    layer: LayerFlags,
    /// Convolution variant to cost
    #[arg(long, value_enum, default_value = "standard")]
    variant: VariantKind,
    /// Group count for the grouped variants
    #[arg(long)]
    g: Option<u64>,
    /// Pick the group count with the hardware-gated search instead of --g
    #[arg(long)]
    select: bool,
    /// Hardware profile: a JSON file path or a built-in name
    #[arg(long, default_value = "ethos-u65-like")]
    hw: String,
    #[arg(long, value_enum, default_value = "table")]
    format: OutFormat,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let spec = args.layer.spec()?;
    let profile = io::load_profile(&args.hw)?;
    let variant = resolve_variant(&args, spec, &profile)?;
    let breakdown = cost::for_variant(spec, variant).map_err(cmd::cost_err)?;
    let ai = breakdown.intensities::<f64>();
    let latency = roofline::estimate_latency(&profile, spec, variant).map_err(cmd::roofline_err)?;

    let label = format!(
        "so{}-k{}-cin{}-cout{}",
        spec.s_o, spec.k, spec.c_in, spec.c_out
    );
    let row = vec![
        label,
        variant.name().to_owned(),
        variant.group_count().to_string(),
        breakdown.macs.to_string(),
        breakdown.weight_elems.to_string(),
        format!("{:.1}", ai.weight_ai),
        format!("{:.1}", ai.activation_ai),
        format!("{:.1}", ai.whole_ai),
        format!("{:.1}", latency * 1e6),
    ];
    match args.format {
        OutFormat::Csv => {
            println!("{}", HEADERS.join(","));
            println!("{}", row.join(","));
        }
        OutFormat::Table => print!("{}", cmd::render_table(&HEADERS, &[row])),
    }
    Ok(())
}

/// Turns the variant flags into a concrete [`ConvVariant`], running the group
/// search when `--select` is given. A search that keeps the layer dense falls
/// back to the standard variant, with a note on stderr.
fn resolve_variant(
    args: &Args,
    spec: ConvSpec,
    profile: &Profile,
) -> Result<ConvVariant, CliError> {
    match args.variant {
        VariantKind::Standard => {
            if args.g.is_some() || args.select {
                return Err(CliError::Usage(
                    "--g and --select do not apply to the standard variant".into(),
                ));
            }
            Ok(ConvVariant::Standard)
        }
        VariantKind::Group => {
            if args.select {
                return Err(CliError::Usage(
                    "--select applies to abconv variants; pass --g for plain group convolution"
                        .into(),
                ));
            }
            let g = args
                .g
                .ok_or_else(|| CliError::Usage("--variant group requires --g".into()))?;
            Ok(ConvVariant::Group { g })
        }
        VariantKind::Abconv | VariantKind::AbconvExp => {
            let expanded = args.variant == VariantKind::AbconvExp;
            let g = match (args.g, args.select) {
                (Some(_), true) => {
                    return Err(CliError::Usage(
                        "pass either --g or --select, not both".into(),
                    ))
                }
                (None, false) => {
                    return Err(CliError::Usage(
                        "--variant abconv/abconv-exp needs --g or --select".into(),
                    ))
                }
                (Some(g), false) => g,
                (None, true) => {
                    let sel =
                        select::select_group::<f64>(spec, profile.t_in, profile.t_out, expanded);
                    if !sel.sw_rep {
                        eprintln!("note: group search kept the layer dense (g = 1)");
                        return Ok(ConvVariant::Standard);
                    }
                    sel.g
                }
            };
            Ok(if expanded {
                ConvVariant::ABConvExp { g }
            } else {
                ConvVariant::ABConv { g }
            })
        }
    }
}
