//! Group-factor selection: find the group count that best balances weight
//! reuse against activation reuse, restricted to counts the hardware's
//! channel quantization will tolerate.
//!
//! Grouping multiplies weight intensity by `g` but (in the expanded form)
//! also inflates activation traffic, so each variant has a continuous
//! balance point `g_opt` where the two intensities meet. The usable group
//! counts are coarser: a group only avoids padding waste when both channel
//! dimensions split into whole multiples of the hardware's channel steps,
//! so candidates are the common divisors of the step quotients. Selection
//! picks the candidate nearest the balance point and recommends the rewrite
//! only when that candidate exceeds 1.

use num_integer::Integer;

use crate::cost::{self, ConvSpec};
use crate::Scalar;

/// Outcome of the group search for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<R> {
    /// Chosen group count; `1` when the layer should stay as it is.
    pub g: u64,
    /// Whether replacing the layer with the grouped rewrite is worthwhile.
    pub sw_rep: bool,
    /// Continuous balance point, present when the divisibility gate passed.
    pub g_opt: Option<R>,
    /// Admissible group counts, ascending. Empty when the gate failed.
    pub candidates: Vec<u64>,
    /// Set when a channel count is smaller than its hardware step, so the
    /// step quotient vanished and no grouping is possible.
    pub degenerate: bool,
}

/// Balance point of the shared-weight variant: the `g` at which its weight
/// footprint equals its activation footprint,
/// `sqrt(k² c_in c_out / (s_o² (c_in + c_out)))`.
pub fn g_opt_abconv<R: Scalar>(spec: ConvSpec) -> R {
    let numer =
        u128::from(spec.k) * u128::from(spec.k) * u128::from(spec.c_in) * u128::from(spec.c_out);
    let denom = u128::from(spec.positions()) * (u128::from(spec.c_in) + u128::from(spec.c_out));
    (from_u128::<R>(numer) / from_u128::<R>(denom)).sqrt()
}

/// Balance point of the expanded variant: the positive root of
/// `2 s_o² m g² + s_o² (c_in + c_out) g − m (c_in + k² c_out) = 0`, where
/// `m` is the (already rounded) expansion width.
///
/// Grouping the expanded form leaves MACs fixed while shrinking the shared
/// weights and growing the intermediate activations; weight intensity
/// (`g s_o²`) meets activation intensity exactly where the quadratic
/// vanishes. With an unrounded `m` the constant term reduces to
/// `k² c_in c_out`.
pub fn g_opt_abconv_exp<R: Scalar>(spec: ConvSpec) -> R {
    let s2 = u128::from(spec.positions());
    let k2 = u128::from(spec.k) * u128::from(spec.k);
    let (c_in, c_out) = (u128::from(spec.c_in), u128::from(spec.c_out));
    let m = u128::from(cost::c_mid(spec));

    let a = 2 * s2 * m;
    let b = s2 * (c_in + c_out);
    let c = m * (c_in + k2 * c_out);
    // Positive root as 2c / (b + sqrt(b² + 4ac)): no cancellation, and the
    // discriminant stays exact in integers before the single rounding.
    let disc = b * b + 4 * a * c;
    let two_c = from_u128::<R>(2 * c);
    two_c / (from_u128::<R>(b) + from_u128::<R>(disc).sqrt())
}

/// Common divisors of `q_in` and `q_out` in ascending order.
///
/// Both arguments must be positive; these are the step quotients
/// `c_in / t_in` and `c_out / t_out` after the divisibility gate.
pub fn common_divisors(q_in: u64, q_out: u64) -> Vec<u64> {
    let n = q_in.gcd(&q_out);
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            low.push(d);
            if d * d != n {
                high.push(n / d);
            }
        }
        d += 1;
    }
    high.reverse();
    low.extend(high);
    low
}

/// Runs the full group search for one layer against a pair of hardware
/// channel steps. `expanded` selects which variant's balance point to use.
///
/// Layers whose channels do not divide the steps keep `g = 1` with
/// `sw_rep = false`; so do layers whose channels are smaller than a step
/// (flagged `degenerate`). Among admissible candidates the one nearest the
/// balance point wins, ties resolving to the smaller group count.
pub fn select_group<R: Scalar>(
    spec: ConvSpec,
    t_in: u64,
    t_out: u64,
    expanded: bool,
) -> SelectionResult<R> {
    let keep = |degenerate| SelectionResult {
        g: 1,
        sw_rep: false,
        g_opt: None,
        candidates: Vec::new(),
        degenerate,
    };
    if t_in == 0 || t_out == 0 {
        return keep(true);
    }
    if !spec.c_in.is_multiple_of(t_in) || !spec.c_out.is_multiple_of(t_out) {
        return keep(false);
    }
    let (q_in, q_out) = (spec.c_in / t_in, spec.c_out / t_out);
    if q_in == 0 || q_out == 0 {
        return keep(true);
    }

    let g_opt: R = if expanded {
        g_opt_abconv_exp(spec)
    } else {
        g_opt_abconv(spec)
    };
    let candidates = common_divisors(q_in, q_out);
    let mut best = 1;
    let mut best_dist = R::infinity();
    for &cand in &candidates {
        let dist = (R::from_u64(cand).expect("candidate fits scalar") - g_opt).abs();
        // Strict improvement keeps the earlier (smaller) candidate on ties.
        if dist < best_dist {
            best = cand;
            best_dist = dist;
        }
    }
    SelectionResult {
        g: best,
        sw_rep: best > 1,
        g_opt: Some(g_opt),
        candidates,
        degenerate: false,
    }
}

fn from_u128<R: Scalar>(n: u128) -> R {
    R::from_u128(n).expect("count representable in scalar type")
}
