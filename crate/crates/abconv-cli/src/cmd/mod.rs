//! Subcommand implementations and the error-to-exit-code mapping they share.

pub mod analyze;
pub mod detect;
pub mod roofline;
pub mod select;
pub mod staircase;
pub mod transform;
pub mod verify;

use std::fmt;

use abconv::{ConvSpec, ConvVariant, CostError, ModelError, RooflineError};
use clap::ValueEnum;

/// CLI-level error carrying the message shown to the user and the process
/// exit code. Library errors are mapped here rather than at each call site
/// so that the code assignment stays in one place.
#[derive(Debug)]
pub enum CliError {
    /// A numeric verification failed (exit 1).
    Check(String),
    /// Bad arguments or unparseable input (exit 2).
    Usage(String),
    /// Structurally valid input that violates a domain rule (exit 3).
    Domain(String),
    /// Filesystem trouble (exit 4).
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Check(msg)
            | CliError::Usage(msg)
            | CliError::Domain(msg)
            | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

/// Zero dimensions are a usage problem (the flag value itself is bad);
/// a group count that does not divide the channels is a domain error.
pub fn cost_err(err: CostError) -> CliError {
    match err {
        CostError::ZeroDimension { .. } => CliError::Usage(err.to_string()),
        CostError::NonDivisibleGroup { .. } => CliError::Domain(err.to_string()),
    }
}

pub fn roofline_err(err: RooflineError) -> CliError {
    match err {
        RooflineError::Cost(inner) => cost_err(inner),
        RooflineError::MalformedCsv { .. } | RooflineError::InvalidRange => {
            CliError::Usage(err.to_string())
        }
        RooflineError::InvalidProfile(_)
        | RooflineError::NoStaircase
        | RooflineError::UnsortedSamples
        | RooflineError::TooFewSamples(_)
        | RooflineError::UnknownLabel(_)
        | RooflineError::DuplicateLabel(_) => CliError::Domain(err.to_string()),
    }
}

pub fn model_err(err: ModelError) -> CliError {
    match err {
        ModelError::LayerCost { .. } => CliError::Domain(err.to_string()),
        _ => CliError::Usage(err.to_string()),
    }
}

/// Layer-shape flags shared by `analyze`, `select`, and `staircase`.
#[derive(clap::Args)]
pub struct LayerFlags {
    /// Output map height/width
    #[arg(long)]
    pub so: u64,
    /// Kernel height/width
    #[arg(long, default_value_t = 1)]
    pub k: u64,
    /// Input channels
    #[arg(long)]
    pub cin: u64,
    /// Output channels
    #[arg(long)]
    pub cout: u64,
}

impl LayerFlags {
    pub fn spec(&self) -> Result<ConvSpec, CliError> {
        ConvSpec::new(self.so, self.k, self.cin, self.cout)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Table,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantKind {
    Standard,
    Group,
    Abconv,
    #[value(name = "abconv-exp", alias = "abconv_exp")]
    AbconvExp,
}

/// Builds a [`ConvVariant`] from `--variant`/`--g` where no search is on
/// offer: grouped variants need an explicit group count.
pub fn explicit_variant(kind: VariantKind, g: Option<u64>) -> Result<ConvVariant, CliError> {
    match (kind, g) {
        (VariantKind::Standard, None) => Ok(ConvVariant::Standard),
        (VariantKind::Standard, Some(_)) => Err(CliError::Usage(
            "--g does not apply to the standard variant".into(),
        )),
        (VariantKind::Group, Some(g)) => Ok(ConvVariant::Group { g }),
        (VariantKind::Abconv, Some(g)) => Ok(ConvVariant::ABConv { g }),
        (VariantKind::AbconvExp, Some(g)) => Ok(ConvVariant::ABConvExp { g }),
        (_, None) => Err(CliError::Usage("this variant requires --g".into())),
    }
}

/// Left-aligned plain-text table: headers, then one line per row, columns
/// separated by two spaces, trailing padding trimmed.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: &[&str]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{cell:<width$}", width = widths[i]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(headers);
    for row in rows {
        push_row(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}
