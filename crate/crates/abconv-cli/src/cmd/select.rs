//! `abconv select` — run the group search for one layer and show the result.

use abconv::select;

use crate::cmd::{CliError, LayerFlags, OutFormat};
use crate::io;

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    layer: LayerFlags,
    /// Balance the expanded variant instead of the plain shared-weight one
    #[arg(long)]
    exp: bool,
    /// Hardware profile: a JSON file path or a built-in name
    #[arg(long, default_value = "ethos-u65-like")]
    hw: String,
    #[arg(long, value_enum, default_value = "table")]
    format: OutFormat,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let spec = args.layer.spec()?;
    let profile = io::load_profile(&args.hw)?;
    let sel = select::select_group::<f64>(spec, profile.t_in, profile.t_out, args.exp);

    let g_opt = sel.g_opt.map(|v| format!("{v:.4}")).unwrap_or_default();
    let candidates = sel
        .candidates
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    match args.format {
        OutFormat::Csv => {
            println!("g,sw_rep,g_opt,candidates,degenerate");
            println!(
                "{},{},{},{},{}",
                sel.g, sel.sw_rep, g_opt, candidates, sel.degenerate
            );
        }
        OutFormat::Table => {
            let dash = |s: &str| {
                if s.is_empty() {
                    "-".to_owned()
                } else {
                    s.to_owned()
                }
            };
            println!("g           {}", sel.g);
            println!("sw_rep      {}", sel.sw_rep);
            println!("g_opt       {}", dash(&g_opt));
            println!("candidates  {}", dash(&candidates));
            println!("degenerate  {}", sel.degenerate);
        }
    }
    Ok(())
}
