//! Hardware-aware analysis and rewriting of convolution layers.
//!
//! The crate answers four questions about a convolution layer on a given
//! accelerator:
//!
//! * what does it cost — multiply-accumulates, weight footprint, activation
//!   traffic, and the arithmetic intensities that follow ([`cost`]);
//! * which group factor balances weight reuse against activation reuse, and
//!   does the hardware's channel-step quantization permit it ([`select`]);
//! * how fast will it run under a roofline model that charges for the padded
//!   channel widths the hardware actually computes ([`roofline`]);
//! * does the reshape-based grouped rewrite compute the same function as the
//!   layer it replaces ([`tensor`], a small reference executor).
//!
//! [`model`] ties these together: it reads a JSON description of a network,
//! rewrites its pointwise layers under a cyclic policy, and reports per-layer
//! and total costs.
//!
//! Operation and footprint counts are exact integers (`u64`, with `u128`
//! intermediates). Everything real-valued — intensities, balance points,
//! latencies, tensor data — is generic over [`Scalar`]; `f64`-backed aliases
//! live at the crate root. Where a law is exact by construction (intensity
//! ratios of integer counts), [`cost::CostBreakdown`] also exposes it as an
//! exact rational.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

pub mod cost;
pub mod model;
pub mod roofline;
pub mod select;
pub mod tensor;

/// Floating-point scalar used for the real-valued side of the analysis.
///
/// Implemented by `f32` and `f64`; anything satisfying the bounds gets the
/// blanket impl.
pub trait Scalar: Float + FromPrimitive + NumAssign + Debug + Display + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + NumAssign + Debug + Display + 'static {}

pub use cost::{ConvSpec, ConvVariant, CostBreakdown, CostError, IntensityReport};
pub use model::{LayerRecord, ModelError, ModelIR, ModelReport, Policy, PolicyStep, ReportRow};
pub use roofline::{ChannelAxis, HardwareProfile, LatencySample, RooflineError, RooflinePoint};
pub use select::SelectionResult;
pub use tensor::{PointwiseWeights, Tensor4, TensorError};

/// [`IntensityReport`] over `f64`.
pub type Intensities = IntensityReport<f64>;
/// [`HardwareProfile`] over `f64`.
pub type Profile = HardwareProfile<f64>;
/// [`SelectionResult`] over `f64`.
pub type Selection = SelectionResult<f64>;
/// [`ModelReport`] over `f64`.
pub type Report = ModelReport<f64>;
/// [`Tensor4`] over `f64`.
pub type Tensor = Tensor4<f64>;
/// [`PointwiseWeights`] over `f64`.
pub type Weights = PointwiseWeights<f64>;
