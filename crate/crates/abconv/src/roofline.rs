//! Staircase-aware roofline model: latency and attainable-throughput
//! estimates that charge for the channel widths the hardware actually
//! computes, not the ones the layer declares.
//!
//! Accelerators process channels in fixed steps (an input step `t_in` and an
//! output step `t_out`); a channel count that is not a whole multiple is
//! padded up, so modeled cost — and therefore latency — is constant across
//! each step interval and jumps at its boundary. [`estimate_latency`]
//! decomposes a variant into the convolutions the hardware really runs,
//! quantizes each one's channel widths, and applies the classic two-regime
//! bound: compute time at peak MAC rate versus transfer time at memory
//! bandwidth, whichever is larger.
//!
//! [`detect_step_size`] inverts the model: given a latency sweep over one
//! channel axis, it recovers the smallest plateau period that explains the
//! data, which on modeled sweeps is the profile's own step size.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{self, from_count, narrow, ConvSpec, ConvVariant, CostBreakdown, CostError};
use crate::Scalar;

/// Relative tolerance used when judging whether sweep samples sit on one
/// plateau (and whether adjacent plateaus genuinely differ).
pub const PLATEAU_REL_TOL: f64 = 0.02;

/// Errors from the roofline model and its CSV ingestion.
#[derive(Debug, Error, PartialEq)]
pub enum RooflineError {
    /// The underlying cost computation rejected the layer.
    #[error(transparent)]
    Cost(#[from] CostError),
    /// No plateau period explains the sweep.
    #[error("no plateau period explains the sweep within {:.0}% tolerance", PLATEAU_REL_TOL * 100.0)]
    NoStaircase,
    /// Sweep samples were not strictly increasing in the swept channel.
    #[error("sweep samples must be sorted by channel without duplicates")]
    UnsortedSamples,
    /// Too little data to detect a period at all.
    #[error("sweep needs at least {0} samples")]
    TooFewSamples(usize),
    /// A sweep range with `from < 1` or `from > to`.
    #[error("sweep range must satisfy 1 <= from <= to")]
    InvalidRange,
    /// A measured-latency CSV line that could not be parsed.
    #[error("measured CSV line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    /// A measured label with no matching layer.
    #[error("measured label {0:?} does not match any layer")]
    UnknownLabel(String),
    /// The same label used twice where labels must be unique.
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    /// A hardware profile with non-positive rates or steps.
    #[error("hardware profile: {0}")]
    InvalidProfile(String),
}

/// Throughput and channel-quantization description of one accelerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareProfile<R> {
    /// Display name.
    pub name: String,
    /// Peak multiply-accumulate rate, MACs per second.
    pub peak_macs_per_s: R,
    /// Sustained memory bandwidth, bytes per second.
    pub mem_bandwidth_bytes_per_s: R,
    /// Input-channel step: input widths are padded to multiples of this.
    pub t_in: u64,
    /// Output-channel step.
    pub t_out: u64,
    /// Bytes occupied by one weight or activation element.
    #[serde(default = "default_element_width")]
    pub bytes_per_element: u64,
}

fn default_element_width() -> u64 {
    1
}

impl<R: Scalar> HardwareProfile<R> {
    /// A 256-MAC integer NPU with strongly asymmetric channel steps
    /// (32 in, 16 out). Rates are order-of-magnitude placeholders chosen to
    /// put large pointwise layers in the memory-bound regime, not
    /// measurements of any particular part.
    pub fn ethos_u65_like() -> Self {
        HardwareProfile {
            name: "ethos-u65-like".to_owned(),
            peak_macs_per_s: from_f64(2.56e11),
            mem_bandwidth_bytes_per_s: from_f64(4.0e9),
            t_in: 32,
            t_out: 16,
            bytes_per_element: 1,
        }
    }

    /// A small GPU-class device: finer input step (8), coarser output step
    /// (32), and much higher bandwidth. Same caveat on the rates.
    pub fn jetson_nano_like() -> Self {
        HardwareProfile {
            name: "jetson-nano-like".to_owned(),
            peak_macs_per_s: from_f64(2.36e11),
            mem_bandwidth_bytes_per_s: from_f64(2.56e10),
            t_in: 8,
            t_out: 32,
            bytes_per_element: 1,
        }
    }

    /// Looks a builtin profile up by its name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ethos-u65-like" => Some(Self::ethos_u65_like()),
            "jetson-nano-like" => Some(Self::jetson_nano_like()),
            _ => None,
        }
    }

    /// Rejects profiles the model cannot evaluate: non-positive or
    /// non-finite rates, zero channel steps, zero element width.
    pub fn validate(&self) -> Result<(), RooflineError> {
        let bad = |what: &str| Err(RooflineError::InvalidProfile(what.to_owned()));
        if !(self.peak_macs_per_s > R::zero() && self.peak_macs_per_s.is_finite()) {
            return bad("peak_macs_per_s must be positive and finite");
        }
        if !(self.mem_bandwidth_bytes_per_s > R::zero()
            && self.mem_bandwidth_bytes_per_s.is_finite())
        {
            return bad("mem_bandwidth_bytes_per_s must be positive and finite");
        }
        if self.t_in == 0 || self.t_out == 0 {
            return bad("channel steps must be at least 1");
        }
        if self.bytes_per_element == 0 {
            return bad("bytes_per_element must be at least 1");
        }
        Ok(())
    }

    /// Arithmetic intensity at which the device turns compute bound,
    /// MACs per byte.
    pub fn ridge_point(&self) -> R {
        self.peak_macs_per_s / self.mem_bandwidth_bytes_per_s
    }
}

/// One labeled layer to place on the roofline.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPoint {
    pub label: String,
    pub spec: ConvSpec,
    pub variant: ConvVariant,
}

/// One row of roofline output: where a layer sits and what the model (and
/// optionally a measurement) says it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflinePoint<R> {
    pub label: String,
    /// MACs per byte over the combined footprint.
    pub whole_ai: R,
    /// MACs per byte over activations alone.
    pub activation_ai: R,
    /// Attainable throughput at this intensity, GMAC/s.
    pub modeled_gmacs: R,
    /// Achieved throughput from a measured latency, GMAC/s.
    pub measured_gmacs: Option<R>,
}

/// One measured latency: a labeled layer shape and how long it took.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencySample<R> {
    pub label: String,
    pub spec: ConvSpec,
    /// Measured latency in seconds.
    pub latency_s: R,
}

/// Which channel dimension a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelAxis {
    Input,
    Output,
}

impl ChannelAxis {
    /// Column/flag spelling of the axis.
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelAxis::Input => "c_in",
            ChannelAxis::Output => "c_out",
        }
    }

    /// Reads the axis' channel count out of a spec.
    pub fn of(&self, spec: ConvSpec) -> u64 {
        match self {
            ChannelAxis::Input => spec.c_in,
            ChannelAxis::Output => spec.c_out,
        }
    }

    /// Returns `spec` with this axis set to `c`.
    pub fn with(&self, spec: ConvSpec, c: u64) -> ConvSpec {
        match self {
            ChannelAxis::Input => ConvSpec { c_in: c, ..spec },
            ChannelAxis::Output => ConvSpec { c_out: c, ..spec },
        }
    }
}

impl std::str::FromStr for ChannelAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c_in" | "cin" => Ok(ChannelAxis::Input),
            "c_out" | "cout" => Ok(ChannelAxis::Output),
            other => Err(format!(
                "unknown channel axis {other:?} (expected c_in or c_out)"
            )),
        }
    }
}

/// Pads a channel count up to a whole number of steps.
pub fn quantize_channels(c: u64, t: u64) -> u64 {
    c.div_ceil(t) * t
}

/// Attainable throughput at arithmetic intensity `ai` (MACs per byte):
/// bandwidth-limited below the ridge point, peak-limited above it.
pub fn attainable<R: Scalar>(profile: &HardwareProfile<R>, ai: R) -> R {
    profile
        .peak_macs_per_s
        .min(profile.mem_bandwidth_bytes_per_s * ai)
}

/// One hardware-executed convolution after grouping and folding.
struct Constituent {
    positions: u64,
    k: u64,
    c_in: u64,
    c_out: u64,
    /// Independent instances sharing the shape (grouped convolution runs one
    /// per group, each with its own weights).
    copies: u64,
}

fn constituents(spec: ConvSpec, variant: ConvVariant) -> Result<Vec<Constituent>, CostError> {
    let base = |positions, k, c_in, c_out, copies| Constituent {
        positions,
        k,
        c_in,
        c_out,
        copies,
    };
    Ok(match variant {
        ConvVariant::Standard => {
            vec![base(spec.positions(), spec.k, spec.c_in, spec.c_out, 1)]
        }
        ConvVariant::Group { g } => {
            cost::group(spec, g)?;
            vec![base(
                spec.positions(),
                spec.k,
                spec.c_in / g,
                spec.c_out / g,
                g,
            )]
        }
        ConvVariant::ABConv { g } => {
            cost::abconv(spec, g)?;
            vec![base(
                spec.positions() * g,
                spec.k,
                spec.c_in / g,
                spec.c_out / g,
                1,
            )]
        }
        ConvVariant::ABConvExp { g } => {
            let mid = cost::abconv_exp(spec, g)?
                .c_mid
                .expect("expanded cost carries c_mid");
            let folded = spec.positions() * g;
            vec![
                base(folded, 1, spec.c_in / g, mid, 1),
                base(folded, spec.k, mid, spec.c_out / g, 1),
            ]
        }
    })
}

/// Costs a variant the way the hardware executes it: each constituent
/// convolution is charged for channel widths padded to the profile's steps.
///
/// With both steps at 1 this reduces exactly to the analytic counts.
pub fn effective_cost(
    spec: ConvSpec,
    variant: ConvVariant,
    t_in: u64,
    t_out: u64,
) -> Result<CostBreakdown, CostError> {
    if t_in == 0 {
        return Err(CostError::ZeroDimension { field: "t_in" });
    }
    if t_out == 0 {
        return Err(CostError::ZeroDimension { field: "t_out" });
    }
    let mut macs = 0u128;
    let mut weights = 0u128;
    let mut acts = 0u128;
    let mut mid = None;
    for part in constituents(spec, variant)? {
        let q_in = u128::from(quantize_channels(part.c_in, t_in));
        let q_out = u128::from(quantize_channels(part.c_out, t_out));
        let k2 = u128::from(part.k) * u128::from(part.k);
        let (positions, copies) = (u128::from(part.positions), u128::from(part.copies));
        macs += copies * positions * k2 * q_in * q_out;
        weights += copies * k2 * q_in * q_out;
        acts += copies * positions * (q_in + q_out);
    }
    if let ConvVariant::ABConvExp { .. } = variant {
        mid = Some(cost::c_mid(spec));
    }
    Ok(CostBreakdown {
        macs: narrow(macs, "effective mac"),
        weight_elems: narrow(weights, "effective weight"),
        activation_elems: narrow(acts, "effective activation"),
        c_mid: mid,
    })
}

/// Modeled latency of one layer in seconds: the larger of compute time at
/// peak MAC rate and transfer time at memory bandwidth, on the
/// [`effective_cost`] counts.
pub fn estimate_latency<R: Scalar>(
    profile: &HardwareProfile<R>,
    spec: ConvSpec,
    variant: ConvVariant,
) -> Result<R, RooflineError> {
    let eff = effective_cost(spec, variant, profile.t_in, profile.t_out)?;
    let macs = from_count::<R>(eff.macs);
    let bytes = u128::from(eff.total_elems()) * u128::from(profile.bytes_per_element);
    let bytes = R::from_u128(bytes).expect("byte count representable in scalar type");
    Ok((macs / profile.peak_macs_per_s).max(bytes / profile.mem_bandwidth_bytes_per_s))
}

/// Achieved throughput of a measured run: the layer's analytic MACs over the
/// measured time.
pub fn achieved_perf<R: Scalar>(macs: u64, latency_s: R) -> R {
    from_count::<R>(macs) / latency_s
}

const GIGA: f64 = 1e9;

/// Places layers on the roofline: analytic intensities (MACs per byte),
/// attainable throughput, and — where a measured latency is supplied —
/// achieved throughput.
///
/// Layer labels must be unique; every measured sample must match a layer.
pub fn roofline_points<R: Scalar>(
    layers: &[LayerPoint],
    profile: &HardwareProfile<R>,
    measured: &[LatencySample<R>],
) -> Result<Vec<RooflinePoint<R>>, RooflineError> {
    let mut seen = HashSet::new();
    for layer in layers {
        if !seen.insert(layer.label.as_str()) {
            return Err(RooflineError::DuplicateLabel(layer.label.clone()));
        }
    }
    let mut by_label = std::collections::HashMap::new();
    for sample in measured {
        if !seen.contains(sample.label.as_str()) {
            return Err(RooflineError::UnknownLabel(sample.label.clone()));
        }
        if by_label.insert(sample.label.as_str(), sample).is_some() {
            return Err(RooflineError::DuplicateLabel(sample.label.clone()));
        }
    }

    let giga = from_f64::<R>(GIGA);
    let width = from_count::<R>(profile.bytes_per_element);
    let mut points = Vec::with_capacity(layers.len());
    for layer in layers {
        let breakdown = cost::for_variant(layer.spec, layer.variant)?;
        let macs = from_count::<R>(breakdown.macs);
        let whole_ai = macs / (from_count::<R>(breakdown.total_elems()) * width);
        let activation_ai = macs / (from_count::<R>(breakdown.activation_elems) * width);
        let measured_gmacs = by_label
            .get(layer.label.as_str())
            .map(|sample| achieved_perf(breakdown.macs, sample.latency_s) / giga);
        points.push(RooflinePoint {
            label: layer.label.clone(),
            whole_ai,
            activation_ai,
            modeled_gmacs: attainable(profile, whole_ai) / giga,
            measured_gmacs,
        });
    }
    Ok(points)
}

/// Models a latency sweep along one channel axis at unit stride, inclusive.
pub fn staircase_sweep<R: Scalar>(
    profile: &HardwareProfile<R>,
    base: ConvSpec,
    axis: ChannelAxis,
    variant: ConvVariant,
    from: u64,
    to: u64,
) -> Result<Vec<(u64, R)>, RooflineError> {
    if from < 1 || from > to {
        return Err(RooflineError::InvalidRange);
    }
    let mut sweep = Vec::with_capacity((to - from + 1) as usize);
    for c in from..=to {
        let spec = axis.with(base, c);
        sweep.push((c, estimate_latency(profile, spec, variant)?));
    }
    Ok(sweep)
}

/// Recovers the smallest plateau period `p >= 2` that explains a latency
/// sweep: within every aligned interval `((m-1)p, mp]` the samples agree to
/// [`PLATEAU_REL_TOL`], and every adjacent pair of intervals differs by more
/// than it. Samples must be sorted by channel, duplicate-free, and span at
/// least two periods.
pub fn detect_step_size<R: Scalar>(samples: &[(u64, R)]) -> Result<u64, RooflineError> {
    const MIN_SAMPLES: usize = 4;
    if samples.len() < MIN_SAMPLES {
        return Err(RooflineError::TooFewSamples(MIN_SAMPLES));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(RooflineError::UnsortedSamples);
    }
    let span = samples[samples.len() - 1].0 - samples[0].0 + 1;
    for p in 2..=span / 2 {
        if period_explains(samples, p) {
            return Ok(p);
        }
    }
    Err(RooflineError::NoStaircase)
}

fn period_explains<R: Scalar>(samples: &[(u64, R)], p: u64) -> bool {
    let tol = from_f64::<R>(PLATEAU_REL_TOL);
    // (bucket id, min latency, max latency) per covered interval ((m-1)p, mp].
    let mut buckets: Vec<(u64, R, R)> = Vec::new();
    for &(c, latency) in samples {
        let id = c.div_ceil(p);
        match buckets.last_mut() {
            Some((last, lo, hi)) if *last == id => {
                *lo = lo.min(latency);
                *hi = hi.max(latency);
            }
            _ => buckets.push((id, latency, latency)),
        }
    }
    if buckets.len() < 2 {
        return false;
    }
    // Flat within each interval...
    if buckets.iter().any(|&(_, lo, hi)| hi - lo > tol * hi) {
        return false;
    }
    // ...and a real jump between neighbours, otherwise a divisor of the true
    // period would pass too.
    buckets.windows(2).all(|w| {
        let a = mid(w[0]);
        let b = mid(w[1]);
        (b - a).abs() > tol * a.max(b)
    })
}

fn mid<R: Scalar>((_, lo, hi): (u64, R, R)) -> R {
    (lo + hi) / from_f64::<R>(2.0)
}

/// [`detect_step_size`] over measured samples: extracts the given channel
/// axis, sorts by it, and detects the period of the latency staircase.
pub fn detect_step_from_samples<R: Scalar>(
    samples: &[LatencySample<R>],
    axis: ChannelAxis,
) -> Result<u64, RooflineError> {
    let mut sweep: Vec<(u64, R)> = samples
        .iter()
        .map(|s| (axis.of(s.spec), s.latency_s))
        .collect();
    sweep.sort_by_key(|&(c, _)| c);
    detect_step_size(&sweep)
}

const MEASURED_HEADER: &str = "label,s_o,k,c_in,c_out,latency_us";

/// Parses measured-latency CSV: `label,s_o,k,c_in,c_out,latency_us`.
/// Latencies convert from microseconds to seconds on the way in.
pub fn parse_measured_csv<R: Scalar>(text: &str) -> Result<Vec<LatencySample<R>>, RooflineError> {
    let malformed = |line: usize, reason: &str| RooflineError::MalformedCsv {
        line,
        reason: reason.to_owned(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == MEASURED_HEADER => {}
        _ => {
            return Err(malformed(
                1,
                &format!("expected header {MEASURED_HEADER:?}"),
            ))
        }
    }

    let micro = from_f64::<R>(1e-6);
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(malformed(
                idx + 1,
                &format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let label = fields[0].to_owned();
        if label.is_empty() {
            return Err(malformed(idx + 1, "empty label"));
        }
        let mut dims = [0u64; 4];
        for (slot, (field, name)) in dims
            .iter_mut()
            .zip(fields[1..5].iter().zip(["s_o", "k", "c_in", "c_out"]))
        {
            *slot = field
                .parse()
                .map_err(|_| malformed(idx + 1, &format!("{name} is not a positive integer")))?;
        }
        let spec = ConvSpec::new(dims[0], dims[1], dims[2], dims[3])
            .map_err(|e| malformed(idx + 1, &e.to_string()))?;
        let latency_us: f64 = fields[5]
            .parse()
            .map_err(|_| malformed(idx + 1, "latency_us is not a number"))?;
        if !(latency_us > 0.0 && latency_us.is_finite()) {
            return Err(malformed(idx + 1, "latency_us must be positive and finite"));
        }
        samples.push(LatencySample {
            label,
            spec,
            latency_s: from_f64::<R>(latency_us) * micro,
        });
    }
    Ok(samples)
}

/// Renders roofline points as CSV:
/// `label,whole_ai,activation_ai,modeled_gmacs,measured_gmacs`, with the
/// measured column left empty where no measurement was supplied.
pub fn points_to_csv<R: Scalar>(points: &[RooflinePoint<R>]) -> String {
    let mut out = String::from("label,whole_ai,activation_ai,modeled_gmacs,measured_gmacs\n");
    for p in points {
        let measured = p
            .measured_gmacs
            .map(|v| format!("{v:.3}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.3},{}\n",
            p.label, p.whole_ai, p.activation_ai, p.modeled_gmacs, measured
        ));
    }
    out
}

/// Renders a modeled sweep as CSV: `swept_axis,channel,latency_us_model`.
pub fn staircase_to_csv<R: Scalar>(axis: ChannelAxis, sweep: &[(u64, R)]) -> String {
    let mega = from_f64::<R>(1e6);
    let mut out = String::from("swept_axis,channel,latency_us_model\n");
    for &(c, latency_s) in sweep {
        out.push_str(&format!(
            "{},{},{:.4}\n",
            axis.as_str(),
            c,
            latency_s * mega
        ));
    }
    out
}

fn from_f64<R: Scalar>(x: f64) -> R {
    R::from_f64(x).expect("constant representable in scalar type")
}
