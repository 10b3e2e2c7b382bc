//! `abconv roofline` — place layers on the roofline and emit plot-ready CSV.
//!
//! Two sources of layers: a model file (`--model`), or a synthetic sweep of
//! square pointwise layers over output sizes and channel counts — the sweep
//! is what reproduces the intensity-ceiling plots.

use std::path::PathBuf;

use abconv::roofline::{self, LayerPoint};
use abconv::{model, select, ConvSpec, ConvVariant, Profile};
use clap::ValueEnum;

use crate::cmd::{self, CliError, VariantKind};
use crate::io;

#[derive(clap::Args)]
pub struct Args {
    /// Place the layers of this model file instead of sweeping
    #[arg(long, conflicts_with_all = ["so", "channels", "variants"])]
    model: Option<PathBuf>,
    /// Output map sizes to sweep, comma-separated
    #[arg(long, default_value = "4,8")]
    so: String,
    /// Channel range to sweep as start:stop:step (c_in = c_out)
    #[arg(long, default_value = "128:1280:128")]
    channels: String,
    /// Variants to place at each swept shape, comma-separated
    #[arg(long, default_value = "standard,abconv,abconv-exp")]
    variants: String,
    /// Measured latency CSV to overlay (label,s_o,k,c_in,c_out,latency_us)
    #[arg(long)]
    measured: Option<PathBuf>,
    /// Hardware profile: a JSON file path or a built-in name
    #[arg(long, default_value = "ethos-u65-like")]
    hw: String,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let profile = io::load_profile(&args.hw)?;
    let layers = match &args.model {
        Some(path) => {
            let parsed = model::parse_model(&io::read_file(path)?).map_err(cmd::model_err)?;
            parsed
                .layers
                .into_iter()
                .map(|l| LayerPoint {
                    label: l.name,
                    spec: l.spec,
                    variant: l.variant,
                })
                .collect()
        }
        None => sweep_layers(&args, &profile)?,
    };

    let measured = match &args.measured {
        Some(path) => {
            roofline::parse_measured_csv::<f64>(&io::read_file(path)?).map_err(cmd::roofline_err)?
        }
        None => Vec::new(),
    };

    let points =
        roofline::roofline_points(&layers, &profile, &measured).map_err(cmd::roofline_err)?;
    io::emit(args.out.as_deref(), &roofline::points_to_csv(&points))
}

/// Builds the synthetic sweep: one standard point per shape, plus a grouped
/// point per requested variant wherever the search actually groups.
fn sweep_layers(args: &Args, profile: &Profile) -> Result<Vec<LayerPoint>, CliError> {
    let sizes = parse_u64_list(&args.so, "--so")?;
    let (from, to, step) = parse_range(&args.channels)?;
    let variants = parse_variants(&args.variants)?;

    let mut layers = Vec::new();
    for &s_o in &sizes {
        let mut c = from;
        while c <= to {
            let spec = ConvSpec::new(s_o, 1, c, c).map_err(|e| CliError::Usage(e.to_string()))?;
            for kind in &variants {
                match kind {
                    VariantKind::Standard => layers.push(LayerPoint {
                        label: format!("so{s_o}-c{c}-standard"),
                        spec,
                        variant: ConvVariant::Standard,
                    }),
                    VariantKind::Group => {
                        return Err(CliError::Usage(
                            "sweeps cover standard and the abconv variants; plain group \
                             convolution has no selection rule to sweep"
                                .into(),
                        ))
                    }
                    VariantKind::Abconv | VariantKind::AbconvExp => {
                        let expanded = *kind == VariantKind::AbconvExp;
                        let sel = select::select_group::<f64>(
                            spec,
                            profile.t_in,
                            profile.t_out,
                            expanded,
                        );
                        // A gated shape would duplicate the standard point.
                        if !sel.sw_rep {
                            continue;
                        }
                        let (name, variant) = if expanded {
                            ("abconv-exp", ConvVariant::ABConvExp { g: sel.g })
                        } else {
                            ("abconv", ConvVariant::ABConv { g: sel.g })
                        };
                        layers.push(LayerPoint {
                            label: format!("so{s_o}-c{c}-{name}-g{}", sel.g),
                            spec,
                            variant,
                        });
                    }
                }
            }
            c += step;
        }
    }
    Ok(layers)
}

fn parse_u64_list(text: &str, flag: &str) -> Result<Vec<u64>, CliError> {
    let values: Vec<u64> = text
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            CliError::Usage(format!(
                "{flag} expects comma-separated integers, got {text:?}"
            ))
        })?;
    if values.is_empty() || values.contains(&0) {
        return Err(CliError::Usage(format!("{flag} values must be positive")));
    }
    Ok(values)
}

fn parse_range(text: &str) -> Result<(u64, u64, u64), CliError> {
    let bad = || {
        CliError::Usage(format!(
            "--channels expects start:stop:step with positive integers, got {text:?}"
        ))
    };
    let parts: Vec<u64> = text
        .split(':')
        .map(|p| p.trim().parse::<u64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [from, to, step] if *from >= 1 && *step >= 1 && from <= to => Ok((*from, *to, *step)),
        _ => Err(bad()),
    }
}

fn parse_variants(text: &str) -> Result<Vec<VariantKind>, CliError> {
    text.split(',')
        .map(|p| {
            VariantKind::from_str(p.trim(), true).map_err(|_| {
                CliError::Usage(format!("unknown variant {:?} in --variants", p.trim()))
            })
        })
        .collect()
}
