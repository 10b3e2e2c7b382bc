//! `abconv transform` — rewrite a model's pointwise layers under a cyclic
//! policy and write the tagged model (plus an optional cost report).

use std::path::PathBuf;

use abconv::{model, ConvVariant, PolicyStep};

use crate::cmd::{self, CliError};
use crate::io;

#[derive(clap::Args)]
pub struct Args {
    /// Model description to rewrite (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Cyclic policy over replaceable layers, e.g. A-P-P or E
    #[arg(long)]
    policy: String,
    /// Hardware profile: a JSON file path or a built-in name
    #[arg(long, default_value = "ethos-u65-like")]
    hw: String,
    /// Where to write the rewritten model JSON
    #[arg(long)]
    out: PathBuf,
    /// Optional per-layer cost report (CSV)
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let text = io::read_file(&args.model)?;
    let parsed = model::parse_model(&text).map_err(cmd::model_err)?;
    let policy = model::Policy::parse(&args.policy).map_err(cmd::model_err)?;
    let profile = io::load_profile(&args.hw)?;

    let rewritten = model::apply_policy(&parsed, &profile, &policy);
    note_gated_layers(&rewritten, &policy);
    io::write_atomic(&args.out, &rewritten.to_json())?;

    if let Some(report_path) = &args.report {
        let report = model::summarize::<f64>(&rewritten, &profile).map_err(cmd::model_err)?;
        io::write_atomic(report_path, &report.to_csv())?;
    }
    Ok(())
}

/// Points out layers where the policy asked for a grouped rewrite but the
/// search kept them dense, so a quiet no-op doesn't read as a tagging bug.
fn note_gated_layers(rewritten: &abconv::ModelIR, policy: &abconv::Policy) {
    let mut position = 0usize;
    for layer in &rewritten.layers {
        if !layer.replaceable() {
            continue;
        }
        let requested = policy.step_for(position);
        position += 1;
        if matches!(requested, PolicyStep::ABConv | PolicyStep::ABConvExp)
            && layer.variant == ConvVariant::Standard
        {
            eprintln!(
                "note: layer {:?} kept dense; the group search found no worthwhile group count",
                layer.name
            );
        }
    }
}
