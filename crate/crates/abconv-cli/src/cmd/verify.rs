//! `abconv verify` — run the reference executor's equivalence checks on
//! seeded random tensors: reshape round-trips must be bit-exact, the folded
//! rewrite must match a tied-weight grouped convolution, and the expanded
//! rewrite must match the single composed matrix.

use abconv::{cost, tensor, ConvSpec, Tensor, TensorError, Weights};

use crate::cmd::CliError;

const TOLERANCE: f64 = 1e-6;

#[derive(clap::Args)]
pub struct Args {
    /// Group count to fold by
    #[arg(long)]
    g: u64,
    /// Input tensor shape as NxHxWxC
    #[arg(long)]
    shape: String,
    /// Output channels (defaults to the input channel count)
    #[arg(long)]
    cout: Option<u64>,
    /// Base seed for the random tensors
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeded trials
    #[arg(long, default_value_t = 10)]
    trials: u64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let [n, h, w, c] = parse_shape(&args.shape)?;
    let c_out = args.cout.unwrap_or(c as u64) as usize;
    let g = args.g as usize;
    if g == 0 {
        return Err(CliError::Usage("--g must be at least 1".into()));
    }
    if c % g != 0 || !c_out.is_multiple_of(g) {
        return Err(CliError::Usage(format!(
            "group count {g} must divide both channel counts ({c} in, {c_out} out)"
        )));
    }

    // Intermediate width for the expanded rewrite: the cost model's choice
    // for the equivalent pointwise layer.
    let spec =
        ConvSpec::new(1, 1, c as u64, c_out as u64).map_err(|e| CliError::Usage(e.to_string()))?;
    let mid = cost::c_mid(spec) as usize;

    let mut worst_tied = 0f64;
    let mut worst_composed = 0f64;
    for trial in 0..args.trials {
        let seed = args.seed.wrapping_add(trial);
        let (tied, composed) = run_trial(n, h, w, c, c_out, g, mid, seed)
            .map_err(|msg| CliError::Check(format!("trial {trial}: {msg}")))?;
        worst_tied = worst_tied.max(tied);
        worst_composed = worst_composed.max(composed);
    }
    println!(
        "ok: {} trials on {}x{}x{}x{} -> {} channels, g = {}, intermediate width {}",
        args.trials, n, h, w, c, c_out, g, mid
    );
    println!("    round trips bit-exact; worst tied error {worst_tied:.2e}, worst composed error {worst_composed:.2e}");
    Ok(())
}

/// One seeded trial; returns (tied error, composed error) or a failure message.
#[allow(clippy::too_many_arguments)]
fn run_trial(
    n: usize,
    h: usize,
    w: usize,
    c: usize,
    c_out: usize,
    g: usize,
    mid: usize,
    seed: u64,
) -> Result<(f64, f64), String> {
    let fail = |e: TensorError| format!("executor rejected shapes: {e}");
    let x = Tensor::seeded(n, h, w, c, seed);

    let round_trip = x
        .fold_groups(g)
        .and_then(|f| f.unfold_groups(g))
        .map_err(fail)?;
    if round_trip.data() != x.data() {
        return Err("fold/unfold round trip is not bit-exact".into());
    }

    // Distinct weight streams so the checks never compare a tensor to itself.
    let shared = Weights::seeded(c / g, c_out / g, seed ^ 0x9e37_79b9_7f4a_7c15);
    let folded = tensor::abconv_forward(&x, &shared, g).map_err(fail)?;
    let copies: Vec<Weights> = (0..g).map(|_| shared.clone()).collect();
    let tied = tensor::group_conv_pointwise(&x, &copies).map_err(fail)?;
    let tied_err = tensor::max_relative_error(&folded, &tied).map_err(fail)?;
    if tied_err > TOLERANCE {
        return Err(format!(
            "folded rewrite deviates from tied grouped convolution by {tied_err:.2e}"
        ));
    }

    let expansion = Weights::seeded(c / g, mid, seed ^ 0x5851_f42d_4c95_7f2d);
    let main = Weights::seeded(mid, c_out / g, seed ^ 0x1405_7b7e_f767_814f);
    let two_stage = tensor::abconv_exp_forward(&x, &expansion, &main, g).map_err(fail)?;
    let merged = expansion.compose(&main).map_err(fail)?;
    let one_stage = tensor::abconv_forward(&x, &merged, g).map_err(fail)?;
    let composed_err = tensor::max_relative_error(&two_stage, &one_stage).map_err(fail)?;
    if composed_err > TOLERANCE {
        return Err(format!(
            "expanded rewrite deviates from the composed matrix by {composed_err:.2e}"
        ));
    }

    Ok((tied_err, composed_err))
}

fn parse_shape(text: &str) -> Result<[usize; 4], CliError> {
    let bad = || {
        CliError::Usage(format!(
            "--shape must be NxHxWxC with positive integers, got {text:?}"
        ))
    };
    let parts: Vec<usize> = text
        .split('x')
        .map(|p| p.parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [n, h, w, c] if parts.iter().all(|&d| d > 0) => Ok([*n, *h, *w, *c]),
        _ => Err(bad()),
    }
}
