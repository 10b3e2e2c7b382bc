//! Whole-model bookkeeping: a JSON layer list in, a rewritten layer list and
//! a per-layer cost report out.
//!
//! A model is an ordered list of named convolution shapes. A [`Policy`] is a
//! short cyclic pattern over the *replaceable* layers (the pointwise ones):
//! each step either keeps the layer or asks for one of the grouped rewrites,
//! and the request is honored only when the group search actually finds a
//! group count worth using on the target hardware — otherwise the layer
//! quietly stays dense.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{self, ConvSpec, ConvVariant};
use crate::roofline::{self, HardwareProfile, RooflineError};
use crate::select;
use crate::Scalar;

/// Errors from model parsing, policy parsing, and report generation.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The document is not valid JSON of the expected shape.
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// A model with no layers.
    #[error("model must contain at least one layer")]
    EmptyModel,
    /// Two layers with the same name.
    #[error("duplicate layer name {0:?}")]
    DuplicateLayerName(String),
    /// A layer with inconsistent or out-of-range fields.
    #[error("layer {name:?}: {reason}")]
    InvalidLayer { name: String, reason: String },
    /// A policy pattern that could not be parsed.
    #[error("policy pattern: {0}")]
    InvalidPolicy(String),
    /// Costing a layer failed while building a report.
    #[error("layer {name:?}: {source}")]
    LayerCost {
        name: String,
        #[source]
        source: RooflineError,
    },
}

/// One named layer of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRecord {
    pub name: String,
    pub spec: ConvSpec,
    pub variant: ConvVariant,
}

impl LayerRecord {
    /// Whether the grouped rewrites apply: only pointwise layers are folded.
    pub fn replaceable(&self) -> bool {
        self.spec.k == 1
    }
}

/// A parsed model: a name and its ordered layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelIR {
    pub name: String,
    pub layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    name: String,
    s_o: u64,
    k: u64,
    c_in: u64,
    c_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<u64>,
}

/// Parses a model document. Layers default to the dense variant; `variant`
/// and `g` fields (as written by [`ModelIR::to_json`]) are honored and
/// validated against the layer shape.
pub fn parse_model(text: &str) -> Result<ModelIR, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    if doc.layers.is_empty() {
        return Err(ModelError::EmptyModel);
    }
    let mut seen = std::collections::HashSet::new();
    let mut layers = Vec::with_capacity(doc.layers.len());
    for layer in doc.layers {
        let invalid = |reason: String| ModelError::InvalidLayer {
            name: layer.name.clone(),
            reason,
        };
        if layer.name.is_empty() {
            return Err(ModelError::InvalidLayer {
                name: String::new(),
                reason: "empty layer name".to_owned(),
            });
        }
        if !seen.insert(layer.name.clone()) {
            return Err(ModelError::DuplicateLayerName(layer.name));
        }
        let spec = ConvSpec::new(layer.s_o, layer.k, layer.c_in, layer.c_out)
            .map_err(|e| invalid(e.to_string()))?;
        let g = layer.g.unwrap_or(1);
        let variant_name = layer.variant.as_deref().unwrap_or("standard");
        let variant = ConvVariant::from_name(variant_name, g)
            .ok_or_else(|| invalid(format!("unknown variant {variant_name:?}")))?;
        if variant == ConvVariant::Standard && g != 1 {
            return Err(invalid(format!("standard layers must have g = 1, got {g}")));
        }
        // Rejects non-divisible group counts for the grouped variants.
        cost::for_variant(spec, variant).map_err(|e| invalid(e.to_string()))?;
        layers.push(LayerRecord {
            name: layer.name,
            spec,
            variant,
        });
    }
    Ok(ModelIR {
        name: doc.name,
        layers,
    })
}

impl ModelIR {
    /// Serializes the model with explicit `variant` and `g` on every layer.
    /// The output is deterministic: same model, same bytes.
    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            name: self.name.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDoc {
                    name: l.name.clone(),
                    s_o: l.spec.s_o,
                    k: l.spec.k,
                    c_in: l.spec.c_in,
                    c_out: l.spec.c_out,
                    variant: Some(l.variant.name().to_owned()),
                    g: Some(l.variant.group_count()),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
        text.push('\n');
        text
    }
}

/// One step of a rewrite policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyStep {
    /// Keep the layer as it is.
    Pointwise,
    /// Replace with the shared-weight grouped variant, if the group search
    /// agrees.
    ABConv,
    /// Replace with the expanded variant, if the group search agrees.
    ABConvExp,
}

impl PolicyStep {
    fn letter(&self) -> char {
        match self {
            PolicyStep::Pointwise => 'P',
            PolicyStep::ABConv => 'A',
            PolicyStep::ABConvExp => 'E',
        }
    }
}

/// A cyclic rewrite pattern over the replaceable layers of a model, written
/// as letters `P`, `A`, `E` with optional `-` separators: `"A-P-P"` and
/// `"APP"` mean the same thing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    steps: Vec<PolicyStep>,
}

impl Policy {
    /// Parses a pattern; at least one step is required.
    pub fn parse(pattern: &str) -> Result<Self, ModelError> {
        let mut steps = Vec::new();
        for ch in pattern.chars() {
            match ch.to_ascii_uppercase() {
                'P' => steps.push(PolicyStep::Pointwise),
                'A' => steps.push(PolicyStep::ABConv),
                'E' => steps.push(PolicyStep::ABConvExp),
                '-' => {}
                other => {
                    return Err(ModelError::InvalidPolicy(format!(
                        "unknown step {other:?} (expected P, A, or E)"
                    )))
                }
            }
        }
        if steps.is_empty() {
            return Err(ModelError::InvalidPolicy("pattern has no steps".to_owned()));
        }
        Ok(Self { steps })
    }

    /// The steps, in pattern order.
    pub fn steps(&self) -> &[PolicyStep] {
        &self.steps
    }

    /// Step applied to the `i`-th replaceable layer (the pattern repeats).
    pub fn step_for(&self, i: usize) -> PolicyStep {
        self.steps[i % self.steps.len()]
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", step.letter())?;
        }
        Ok(())
    }
}

/// Applies a policy to a model: walks the replaceable layers in order,
/// cycling through the pattern. A `P` step passes the layer through
/// untouched; `A` and `E` run the group search against the profile's channel
/// steps and tag the layer with the chosen variant — or reset it to dense
/// when the search finds nothing worthwhile. Non-pointwise layers are left
/// alone and do not consume pattern steps.
pub fn apply_policy<R: Scalar>(
    model: &ModelIR,
    profile: &HardwareProfile<R>,
    policy: &Policy,
) -> ModelIR {
    let mut out = model.clone();
    let mut position = 0usize;
    for layer in out.layers.iter_mut() {
        if !layer.replaceable() {
            continue;
        }
        match policy.step_for(position) {
            PolicyStep::Pointwise => {}
            PolicyStep::ABConv => {
                let sel = select::select_group::<R>(layer.spec, profile.t_in, profile.t_out, false);
                layer.variant = if sel.sw_rep {
                    ConvVariant::ABConv { g: sel.g }
                } else {
                    ConvVariant::Standard
                };
            }
            PolicyStep::ABConvExp => {
                let sel = select::select_group::<R>(layer.spec, profile.t_in, profile.t_out, true);
                layer.variant = if sel.sw_rep {
                    ConvVariant::ABConvExp { g: sel.g }
                } else {
                    ConvVariant::Standard
                };
            }
        }
        position += 1;
    }
    out
}

/// One line of a model report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<R> {
    pub name: String,
    pub variant: ConvVariant,
    pub macs: u64,
    pub params: u64,
    pub weight_ai: R,
    pub activation_ai: R,
    pub whole_ai: R,
    /// Modeled latency in seconds.
    pub est_latency_s: R,
}

/// Per-layer costs plus totals for a whole model on one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport<R> {
    pub rows: Vec<ReportRow<R>>,
    pub total_macs: u64,
    pub total_params: u64,
    pub total_latency_s: R,
}

/// Costs every layer of `model` under its tagged variant and models its
/// latency on `profile`.
pub fn summarize<R: Scalar>(
    model: &ModelIR,
    profile: &HardwareProfile<R>,
) -> Result<ModelReport<R>, ModelError> {
    let mut rows = Vec::with_capacity(model.layers.len());
    let mut total_macs = 0u128;
    let mut total_params = 0u128;
    let mut total_latency = R::zero();
    for layer in &model.layers {
        let fail = |source: RooflineError| ModelError::LayerCost {
            name: layer.name.clone(),
            source,
        };
        let breakdown = cost::for_variant(layer.spec, layer.variant)
            .map_err(|e| fail(RooflineError::Cost(e)))?;
        let latency =
            roofline::estimate_latency(profile, layer.spec, layer.variant).map_err(fail)?;
        let ai = breakdown.intensities::<R>();
        total_macs += u128::from(breakdown.macs);
        total_params += u128::from(breakdown.weight_elems);
        total_latency += latency;
        rows.push(ReportRow {
            name: layer.name.clone(),
            variant: layer.variant,
            macs: breakdown.macs,
            params: breakdown.weight_elems,
            weight_ai: ai.weight_ai,
            activation_ai: ai.activation_ai,
            whole_ai: ai.whole_ai,
            est_latency_s: latency,
        });
    }
    Ok(ModelReport {
        rows,
        total_macs: u64::try_from(total_macs).expect("total MACs fit u64"),
        total_params: u64::try_from(total_params).expect("total params fit u64"),
        total_latency_s: total_latency,
    })
}

impl<R: Scalar> ModelReport<R> {
    /// Renders the report as CSV with a trailing `TOTAL` row:
    /// `layer,variant,g,macs,params,weight_ai,activation_ai,whole_ai,est_latency_us`.
    pub fn to_csv(&self) -> String {
        let mega = R::from_f64(1e6).expect("constant fits scalar");
        let mut out = String::from(
            "layer,variant,g,macs,params,weight_ai,activation_ai,whole_ai,est_latency_us\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.1},{:.1},{:.1},{:.1}\n",
                row.name,
                row.variant.name(),
                row.variant.group_count(),
                row.macs,
                row.params,
                row.weight_ai,
                row.activation_ai,
                row.whole_ai,
                row.est_latency_s * mega,
            ));
        }
        out.push_str(&format!(
            "TOTAL,,,{},{},,,,{:.1}\n",
            self.total_macs,
            self.total_params,
            self.total_latency_s * mega,
        ));
        out
    }
}
