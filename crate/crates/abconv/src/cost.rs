//! Cost algebra for convolution variants: exact MAC and footprint counts,
//! and the arithmetic intensities derived from them.
//!
//! Footprints are counted in *elements*, not bytes; a hardware profile scales
//! by its element width when bytes matter. Three intensities are reported per
//! layer: MACs per weight element (how often each weight is reused), MACs per
//! activation element (how often each activation is reused), and MACs per
//! element of the combined footprint.
//!
//! The grouped rewrite modeled here trades the two reuse figures against each
//! other: splitting a pointwise convolution into `g` groups and folding the
//! group dimension into the spatial map multiplies weight reuse by `g` (the
//! groups share one weight matrix) while leaving activation traffic alone.
//! The expanded form restores the MAC count of a dense convolution by
//! inserting an intermediate expansion layer of width [`c_mid`].

use num_rational::Ratio;
use thiserror::Error;

use crate::Scalar;

/// Errors from constructing or costing a layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostError {
    /// A dimension that must be positive was zero.
    #[error("{field} must be at least 1")]
    ZeroDimension {
        /// Name of the offending dimension.
        field: &'static str,
    },
    /// The group count does not evenly split the channel dimensions.
    #[error("group count {g} must divide c_in={c_in} and c_out={c_out}")]
    NonDivisibleGroup { g: u64, c_in: u64, c_out: u64 },
}

/// Shape of one convolution layer over a square feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvSpec {
    /// Output spatial side length; the output map holds `s_o * s_o` positions.
    pub s_o: u64,
    /// Kernel side length (`1` for pointwise).
    pub k: u64,
    /// Input channels.
    pub c_in: u64,
    /// Output channels.
    pub c_out: u64,
}

impl ConvSpec {
    /// Builds a spec, rejecting zero dimensions.
    pub fn new(s_o: u64, k: u64, c_in: u64, c_out: u64) -> Result<Self, CostError> {
        for (value, field) in [(s_o, "s_o"), (k, "k"), (c_in, "c_in"), (c_out, "c_out")] {
            if value == 0 {
                return Err(CostError::ZeroDimension { field });
            }
        }
        Ok(Self {
            s_o,
            k,
            c_in,
            c_out,
        })
    }

    /// Number of output spatial positions (`s_o²`).
    pub fn positions(&self) -> u64 {
        self.s_o * self.s_o
    }
}

/// Execution variant of a convolution layer, carrying its group count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvVariant {
    /// Dense convolution.
    Standard,
    /// Grouped convolution with `g` independent weight matrices.
    Group { g: u64 },
    /// Grouped convolution with one weight matrix shared by all `g` groups,
    /// executed by folding the group dimension into the spatial map.
    ABConv { g: u64 },
    /// [`ConvVariant::ABConv`] preceded by a pointwise expansion to
    /// [`c_mid`] channels, restoring dense MAC parity.
    ABConvExp { g: u64 },
}

impl ConvVariant {
    /// Group count; `1` for the dense variant.
    pub fn group_count(&self) -> u64 {
        match *self {
            ConvVariant::Standard => 1,
            ConvVariant::Group { g } | ConvVariant::ABConv { g } | ConvVariant::ABConvExp { g } => {
                g
            }
        }
    }

    /// Stable lower-case name used in reports and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            ConvVariant::Standard => "standard",
            ConvVariant::Group { .. } => "group",
            ConvVariant::ABConv { .. } => "abconv",
            ConvVariant::ABConvExp { .. } => "abconv_exp",
        }
    }

    /// Inverse of [`ConvVariant::name`], attaching a group count.
    ///
    /// Accepts `-` or `_` as the separator in the expanded variant's name.
    pub fn from_name(name: &str, g: u64) -> Option<Self> {
        match name {
            "standard" => Some(ConvVariant::Standard),
            "group" => Some(ConvVariant::Group { g }),
            "abconv" => Some(ConvVariant::ABConv { g }),
            "abconv_exp" | "abconv-exp" => Some(ConvVariant::ABConvExp { g }),
            _ => None,
        }
    }
}

/// Exact operation and footprint counts for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostBreakdown {
    /// Multiply-accumulate operations.
    pub macs: u64,
    /// Weight elements fetched.
    pub weight_elems: u64,
    /// Activation elements moved (input read plus output written).
    pub activation_elems: u64,
    /// Expansion width, present only for the expanded variant.
    pub c_mid: Option<u64>,
}

impl CostBreakdown {
    /// Combined footprint: weights plus activations.
    pub fn total_elems(&self) -> u64 {
        self.weight_elems + self.activation_elems
    }

    /// MACs per weight element, as an exact rational.
    pub fn weight_intensity(&self) -> Ratio<u128> {
        Ratio::new(self.macs as u128, self.weight_elems as u128)
    }

    /// MACs per activation element, as an exact rational.
    pub fn activation_intensity(&self) -> Ratio<u128> {
        Ratio::new(self.macs as u128, self.activation_elems as u128)
    }

    /// MACs per element of the combined footprint, as an exact rational.
    pub fn whole_intensity(&self) -> Ratio<u128> {
        Ratio::new(self.macs as u128, self.total_elems() as u128)
    }

    /// All three intensities in floating point.
    pub fn intensities<R: Scalar>(&self) -> IntensityReport<R> {
        let macs = from_count::<R>(self.macs);
        IntensityReport {
            weight_ai: macs / from_count::<R>(self.weight_elems),
            activation_ai: macs / from_count::<R>(self.activation_elems),
            whole_ai: macs / from_count::<R>(self.total_elems()),
        }
    }
}

/// Arithmetic intensities of one layer: MACs per element moved, split by
/// data kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityReport<R> {
    /// MACs per weight element.
    pub weight_ai: R,
    /// MACs per activation element.
    pub activation_ai: R,
    /// MACs per element of the combined footprint.
    pub whole_ai: R,
}

pub(crate) fn from_count<R: Scalar>(n: u64) -> R {
    R::from_u64(n).expect("count representable in scalar type")
}

pub(crate) fn narrow(value: u128, what: &'static str) -> u64 {
    u64::try_from(value).unwrap_or_else(|_| panic!("{what} count exceeds u64 range"))
}

fn parts(spec: ConvSpec) -> (u128, u128, u128, u128) {
    (
        u128::from(spec.positions()),
        u128::from(spec.k) * u128::from(spec.k),
        u128::from(spec.c_in),
        u128::from(spec.c_out),
    )
}

fn check_group(spec: ConvSpec, g: u64) -> Result<(), CostError> {
    if g == 0 {
        return Err(CostError::ZeroDimension { field: "g" });
    }
    if !spec.c_in.is_multiple_of(g) || !spec.c_out.is_multiple_of(g) {
        return Err(CostError::NonDivisibleGroup {
            g,
            c_in: spec.c_in,
            c_out: spec.c_out,
        });
    }
    Ok(())
}

/// Costs a dense convolution.
pub fn standard(spec: ConvSpec) -> CostBreakdown {
    let (s2, k2, c_in, c_out) = parts(spec);
    CostBreakdown {
        macs: narrow(s2 * k2 * c_in * c_out, "mac"),
        weight_elems: narrow(k2 * c_in * c_out, "weight"),
        activation_elems: narrow(s2 * (c_in + c_out), "activation"),
        c_mid: None,
    }
}

/// Costs a grouped convolution with `g` independent weight matrices.
///
/// MACs and weights shrink by `g`; activation traffic is unchanged.
pub fn group(spec: ConvSpec, g: u64) -> Result<CostBreakdown, CostError> {
    check_group(spec, g)?;
    let (s2, k2, c_in, c_out) = parts(spec);
    let g = u128::from(g);
    Ok(CostBreakdown {
        macs: narrow(s2 * k2 * (c_in / g) * c_out, "mac"),
        weight_elems: narrow(k2 * (c_in / g) * c_out, "weight"),
        activation_elems: narrow(s2 * (c_in + c_out), "activation"),
        c_mid: None,
    })
}

/// Costs the shared-weight grouped variant.
///
/// MACs match the grouped form, but because all `g` groups share one weight
/// matrix the weight footprint shrinks by `g²` relative to dense. Weight
/// intensity therefore lands exactly at `g * s_o²` whatever the channel
/// counts.
pub fn abconv(spec: ConvSpec, g: u64) -> Result<CostBreakdown, CostError> {
    check_group(spec, g)?;
    let (s2, k2, c_in, c_out) = parts(spec);
    let g = u128::from(g);
    Ok(CostBreakdown {
        macs: narrow(s2 * k2 * (c_in / g) * c_out, "mac"),
        weight_elems: narrow(k2 * (c_in / g) * (c_out / g), "weight"),
        activation_elems: narrow(s2 * (c_in + c_out), "activation"),
        c_mid: None,
    })
}

/// Expansion width for the expanded variant: the number of intermediate
/// channels at which the expansion layer and the main kernel move the same
/// amount of weight data, rounded half-up and clamped to at least 1.
pub fn c_mid(spec: ConvSpec) -> u64 {
    let (_, k2, c_in, c_out) = parts(spec);
    let numer = k2 * c_in * c_out;
    let denom = c_in + k2 * c_out;
    let rounded = (2 * numer + denom) / (2 * denom);
    narrow(rounded.max(1), "c_mid")
}

/// Costs the expanded shared-weight variant: a pointwise expansion from
/// `c_in` to [`c_mid`] channels followed by the shared-weight grouped main
/// kernel to `c_out`, both executed on the group-folded spatial map.
///
/// The expansion restores the dense MAC count (exactly when `c_mid` needs no
/// rounding) at the price of the intermediate activations, which cross the
/// memory twice — once written, once read.
pub fn abconv_exp(spec: ConvSpec, g: u64) -> Result<CostBreakdown, CostError> {
    check_group(spec, g)?;
    let mid = c_mid(spec);
    let (s2, k2, c_in, c_out) = parts(spec);
    let (g, mid) = (u128::from(g), u128::from(mid));
    Ok(CostBreakdown {
        macs: narrow(s2 * c_in * mid + s2 * k2 * mid * c_out, "mac"),
        weight_elems: narrow((c_in / g) * mid + k2 * mid * (c_out / g), "weight"),
        activation_elems: narrow(s2 * (c_in + 2 * g * mid + c_out), "activation"),
        c_mid: Some(narrow(mid, "c_mid")),
    })
}

/// Costs `spec` under `variant`.
pub fn for_variant(spec: ConvSpec, variant: ConvVariant) -> Result<CostBreakdown, CostError> {
    match variant {
        ConvVariant::Standard => Ok(standard(spec)),
        ConvVariant::Group { g } => group(spec, g),
        ConvVariant::ABConv { g } => abconv(spec, g),
        ConvVariant::ABConvExp { g } => abconv_exp(spec, g),
    }
}
