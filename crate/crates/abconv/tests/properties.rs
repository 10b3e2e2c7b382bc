//! Property tests for the algebraic laws the analysis relies on: the strict
//! intensity bound, the exact weight-reuse law, activation invariance, MAC
//! parity of the expanded form, balance points, selection soundness,
//! staircase shape, and executor equivalences.

use abconv::cost::{self, ConvSpec, ConvVariant};
use abconv::model::{self, LayerRecord, ModelIR};
use abconv::roofline::{self, ChannelAxis, HardwareProfile};
use abconv::select::{self, SelectionResult};
use abconv::tensor::{self, PointwiseWeights, Tensor4};
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::sample::select as pick;

/// Channel counts rich in divisors keep the candidate sets interesting.
fn divisible_spec() -> impl Strategy<Value = ConvSpec> {
    (1u64..=16, 1u64..=3, 1u64..=64, 1u64..=64)
        .prop_map(|(s_o, k, a, b)| ConvSpec::new(s_o, k, 8 * a, 8 * b).unwrap())
}

fn any_spec() -> impl Strategy<Value = ConvSpec> {
    (1u64..=16, 1u64..=3, 1u64..=512, 1u64..=512)
        .prop_map(|(s_o, k, c_in, c_out)| ConvSpec::new(s_o, k, c_in, c_out).unwrap())
}

/// A spec together with one admissible group count for it.
fn spec_and_group() -> impl Strategy<Value = (ConvSpec, u64)> {
    divisible_spec().prop_flat_map(|s| {
        let divisors = select::common_divisors(s.c_in, s.c_out);
        (Just(s), pick(divisors))
    })
}

fn all_variants(g: u64) -> [ConvVariant; 4] {
    [
        ConvVariant::Standard,
        ConvVariant::Group { g },
        ConvVariant::ABConv { g },
        ConvVariant::ABConvExp { g },
    ]
}

mod cost_laws {
    use super::*;

    proptest! {
        /// Whole intensity is strictly below both partial intensities for
        /// every variant — checked as exact rationals.
        #[test]
        fn whole_intensity_strictly_bounded((spec, g) in spec_and_group()) {
            for variant in all_variants(g) {
                let c = cost::for_variant(spec, variant).unwrap();
                let whole = c.whole_intensity();
                prop_assert!(whole < c.weight_intensity(), "{variant:?}");
                prop_assert!(whole < c.activation_intensity(), "{variant:?}");
            }
        }

        /// Weight reuse is the output map for dense and grouped layers, and
        /// exactly g times that for the shared-weight forms.
        #[test]
        fn weight_intensity_law((spec, g) in spec_and_group()) {
            let positions = Ratio::from_integer(u128::from(spec.positions()));
            let lifted = positions * Ratio::from_integer(u128::from(g));
            let std = cost::standard(spec);
            prop_assert_eq!(std.weight_intensity(), positions);
            prop_assert_eq!(cost::group(spec, g).unwrap().weight_intensity(), positions);
            prop_assert_eq!(cost::abconv(spec, g).unwrap().weight_intensity(), lifted);
            prop_assert_eq!(cost::abconv_exp(spec, g).unwrap().weight_intensity(), lifted);
        }

        /// Grouping and weight sharing leave activation traffic untouched.
        #[test]
        fn activation_traffic_invariant((spec, g) in spec_and_group()) {
            let std = cost::standard(spec).activation_elems;
            prop_assert_eq!(cost::group(spec, g).unwrap().activation_elems, std);
            prop_assert_eq!(cost::abconv(spec, g).unwrap().activation_elems, std);
        }

        /// When the expansion width divides evenly, the expanded form keeps
        /// dense MAC parity exactly and its weight count collapses to
        /// k²·c_in·c_out/g; when rounded, the MAC gap is bounded by the
        /// half-step of the rounding.
        #[test]
        fn expanded_mac_parity((spec, g) in spec_and_group()) {
            let numer = spec.k * spec.k * spec.c_in * spec.c_out;
            let denom = spec.c_in + spec.k * spec.k * spec.c_out;
            let std = cost::standard(spec);
            let exp = cost::abconv_exp(spec, g).unwrap();
            if numer % denom == 0 && numer / denom >= 1 {
                prop_assert_eq!(exp.macs, std.macs);
                prop_assert_eq!(exp.weight_elems, numer / g);
            } else {
                let gap = (i128::from(exp.macs) - i128::from(std.macs)).unsigned_abs();
                // |macs gap| = s_o² |m·denom - numer| <= s_o²·denom/2, plus
                // the clamp case where m was forced up to 1.
                let m = u128::from(exp.c_mid.unwrap());
                let bound = u128::from(spec.positions())
                    * (m * u128::from(denom)).abs_diff(u128::from(numer));
                prop_assert_eq!(gap, bound);
                if m > 1 {
                    prop_assert!(2 * (m * u128::from(denom)).abs_diff(u128::from(numer))
                        <= u128::from(denom));
                }
            }
        }

        /// The closed forms agree with walking the actual loop nest on small
        /// shapes.
        #[test]
        fn loop_nest_oracle(
            s_o in 1u64..=4,
            k in 1u64..=3,
            cg_in in 1u64..=3,
            cg_out in 1u64..=3,
            g in 1u64..=3,
        ) {
            let spec = ConvSpec::new(s_o, k, cg_in * g, cg_out * g).unwrap();
            let (macs, weights, acts) = count_loops(spec, g, false);
            let grouped = cost::group(spec, g).unwrap();
            prop_assert_eq!(grouped.macs, macs);
            prop_assert_eq!(grouped.weight_elems, weights);
            prop_assert_eq!(grouped.activation_elems, acts);
            let (macs, weights, acts) = count_loops(spec, g, true);
            let shared = cost::abconv(spec, g).unwrap();
            prop_assert_eq!(shared.macs, macs);
            prop_assert_eq!(shared.weight_elems, weights);
            prop_assert_eq!(shared.activation_elems, acts);
        }
    }

    /// Independent counter: walks output positions, groups, kernel taps, and
    /// channel pairs, collecting distinct weight coordinates as it goes.
    fn count_loops(spec: ConvSpec, g: u64, shared: bool) -> (u64, u64, u64) {
        use std::collections::HashSet;
        let mut macs = 0u64;
        let mut weights = HashSet::new();
        for _pos in 0..spec.positions() {
            for grp in 0..g {
                for tap in 0..spec.k * spec.k {
                    for ci in 0..spec.c_in / g {
                        for co in 0..spec.c_out / g {
                            macs += 1;
                            weights.insert((if shared { 0 } else { grp }, tap, ci, co));
                        }
                    }
                }
            }
        }
        (
            macs,
            weights.len() as u64,
            spec.positions() * (spec.c_in + spec.c_out),
        )
    }
}

mod selection_laws {
    use super::*;

    proptest! {
        /// At the continuous balance point of the shared-weight form, the
        /// weight footprint equals the activation footprint.
        #[test]
        fn abconv_balance_point(spec in any_spec()) {
            let g: f64 = select::g_opt_abconv(spec);
            let weights = (spec.k * spec.k * spec.c_in * spec.c_out) as f64 / (g * g);
            let acts = (spec.positions() * (spec.c_in + spec.c_out)) as f64;
            prop_assert!((weights - acts).abs() / acts < 1e-9);
        }

        /// At the continuous balance point of the expanded form, weight
        /// intensity (g·s_o²) equals activation intensity, using the rounded
        /// expansion width throughout.
        #[test]
        fn expanded_balance_point(spec in any_spec()) {
            let g: f64 = select::g_opt_abconv_exp(spec);
            let m = cost::c_mid(spec) as f64;
            let weight_ai = g * spec.positions() as f64;
            let activation_ai = m * (spec.c_in + spec.k * spec.k * spec.c_out) as f64
                / (spec.c_in as f64 + 2.0 * g * m + spec.c_out as f64);
            prop_assert!((weight_ai - activation_ai).abs() / activation_ai < 1e-9);
        }

        /// Doubling the output map exactly halves the balance point.
        #[test]
        fn balance_point_scales_with_map(spec in any_spec()) {
            prop_assume!(spec.s_o <= 8);
            let doubled = ConvSpec { s_o: 2 * spec.s_o, ..spec };
            let g: f64 = select::g_opt_abconv(spec);
            let g2: f64 = select::g_opt_abconv_exp(spec);
            prop_assert_eq!(select::g_opt_abconv::<f64>(doubled), g / 2.0);
            // The expanded balance point has no such exact scaling (the
            // rounded width stays put while both quadratic coefficients
            // scale); it must still shrink.
            prop_assert!(select::g_opt_abconv_exp::<f64>(doubled) < g2);
        }

        /// Whenever selection recommends a rewrite, the divisibility chain
        /// holds: steps divide channels and the group divides both step
        /// quotients, so per-group channels remain step-aligned.
        #[test]
        fn gating_soundness(
            spec in any_spec(),
            t_in in 1u64..=64,
            t_out in 1u64..=64,
            expanded in any::<bool>(),
        ) {
            let sel: SelectionResult<f64> = select::select_group(spec, t_in, t_out, expanded);
            if sel.sw_rep {
                prop_assert!(sel.g > 1);
                prop_assert_eq!(spec.c_in % t_in, 0);
                prop_assert_eq!(spec.c_out % t_out, 0);
                prop_assert_eq!((spec.c_in / t_in) % sel.g, 0);
                prop_assert_eq!((spec.c_out / t_out) % sel.g, 0);
            } else {
                prop_assert_eq!(sel.g, 1);
            }
            // The choice is a candidate at minimal distance to the balance
            // point.
            if let Some(g_opt) = sel.g_opt {
                prop_assert!(sel.candidates.contains(&sel.g));
                let d = (sel.g as f64 - g_opt).abs();
                for &cand in &sel.candidates {
                    prop_assert!(d <= (cand as f64 - g_opt).abs());
                }
            }
        }
    }

    /// Distance-to-balance selection versus brute-force whole-intensity
    /// maximization: the two agree on most shapes but are different rules;
    /// disagreements are reported, not failed.
    #[test]
    fn distance_rule_vs_intensity_argmax() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5e1ec7);
        let (mut total, mut replaced, mut disagreements) = (0u32, 0u32, 0u32);
        for _ in 0..1000 {
            let spec = ConvSpec::new(
                rng.gen_range(1..=16),
                rng.gen_range(1..=3),
                8 * rng.gen_range(1..=64),
                8 * rng.gen_range(1..=64),
            )
            .unwrap();
            for expanded in [false, true] {
                total += 1;
                let sel: SelectionResult<f64> = select::select_group(spec, 8, 8, expanded);
                let Some(g_opt) = sel.g_opt else { continue };
                if sel.sw_rep {
                    replaced += 1;
                }
                let best_by_ai = sel
                    .candidates
                    .iter()
                    .copied()
                    .max_by(|&a, &b| {
                        let ai = |g| whole_ai(spec, g, expanded);
                        ai(a).partial_cmp(&ai(b)).unwrap()
                    })
                    .unwrap();
                if best_by_ai != sel.g {
                    disagreements += 1;
                    let _ = g_opt;
                }
            }
        }
        println!(
            "distance rule vs whole-intensity argmax: {disagreements}/{total} disagreements \
             ({replaced} rewrites recommended)"
        );
        assert!(total == 2000);
    }

    fn whole_ai(spec: ConvSpec, g: u64, expanded: bool) -> f64 {
        let c = if expanded {
            cost::abconv_exp(spec, g).unwrap()
        } else {
            cost::abconv(spec, g).unwrap()
        };
        c.macs as f64 / c.total_elems() as f64
    }
}

mod roofline_laws {
    use super::*;

    fn profile(t_in: u64, t_out: u64) -> HardwareProfile<f64> {
        HardwareProfile {
            name: "test".to_owned(),
            peak_macs_per_s: 2.56e11,
            mem_bandwidth_bytes_per_s: 4.0e9,
            t_in,
            t_out,
            bytes_per_element: 1,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Modeled latency is flat inside every step interval and strictly
        /// increases across interval boundaries.
        #[test]
        fn latency_staircase_shape(
            t in pick(vec![4u64, 8, 16, 32]),
            s_o in 1u64..=8,
            c_out in 1u64..=64,
        ) {
            let hw = profile(t, 16);
            let base = ConvSpec::new(s_o, 1, 1, c_out).unwrap();
            let sweep = roofline::staircase_sweep(
                &hw, base, ChannelAxis::Input, ConvVariant::Standard, 1, 3 * t,
            ).unwrap();
            for w in sweep.windows(2) {
                let ((c0, l0), (c1, l1)) = (w[0], w[1]);
                if c0.div_ceil(t) == c1.div_ceil(t) {
                    prop_assert_eq!(l0, l1);
                } else {
                    prop_assert!(l1 > l0, "{c0} -> {c1}");
                }
            }
        }

        /// The detector recovers the step the model was built with.
        #[test]
        fn detector_inverts_model(
            t in pick(vec![4u64, 8, 16, 32]),
            s_o in 1u64..=8,
        ) {
            let hw = profile(t, 16);
            let base = ConvSpec::new(s_o, 1, 1, 64).unwrap();
            let sweep = roofline::staircase_sweep(
                &hw, base, ChannelAxis::Input, ConvVariant::Standard, 1, 4 * t,
            ).unwrap();
            prop_assert_eq!(roofline::detect_step_size(&sweep).unwrap(), t);
        }

        /// Attainable throughput never exceeds either roof.
        #[test]
        fn attainable_below_both_roofs(ai in 0.01f64..1e4) {
            let hw = profile(32, 16);
            let got = roofline::attainable(&hw, ai);
            prop_assert!(got <= hw.peak_macs_per_s);
            prop_assert!(got <= hw.mem_bandwidth_bytes_per_s * ai);
        }
    }

    #[test]
    fn roofs_meet_at_the_ridge() {
        for hw in [
            HardwareProfile::<f64>::ethos_u65_like(),
            HardwareProfile::<f64>::jetson_nano_like(),
        ] {
            let ridge = hw.ridge_point();
            assert_eq!(
                roofline::attainable(&hw, ridge),
                hw.peak_macs_per_s,
                "{}",
                hw.name
            );
        }
    }
}

mod executor_laws {
    use super::*;

    fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, usize, usize)> {
        // (n, h, w, g, per-group in, per-group out) — shapes stay tiny.
        (
            1usize..=2,
            1usize..=4,
            1usize..=4,
            pick(vec![1usize, 2, 4]),
            1usize..=4,
            1usize..=4,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Folding groups into rows and back is the identity, bit for bit,
        /// and preserves the value multiset.
        #[test]
        fn fold_round_trip((n, h, w, g, cg, _) in dims(), seed in any::<u64>()) {
            let x = Tensor4::<f64>::seeded(n, h, w, g * cg, seed);
            let folded = x.fold_groups(g).unwrap();
            let mut before: Vec<f64> = x.data().to_vec();
            let mut after: Vec<f64> = folded.data().to_vec();
            before.sort_by(f64::total_cmp);
            after.sort_by(f64::total_cmp);
            prop_assert_eq!(before, after);
            prop_assert_eq!(folded.unfold_groups(g).unwrap(), x);
        }

        /// The folded execution equals the tied-weight grouped convolution,
        /// and output shape keeps the spatial dimensions.
        #[test]
        fn folded_equals_tied_grouped((n, h, w, g, cg_in, cg_out) in dims(), seed in any::<u64>()) {
            let x = Tensor4::<f64>::seeded(n, h, w, g * cg_in, seed);
            let shared = PointwiseWeights::<f64>::seeded(cg_in, cg_out, seed ^ 0xabc);
            let folded = tensor::abconv_forward(&x, &shared, g).unwrap();
            prop_assert_eq!(folded.shape(), [n, h, w, g * cg_out]);
            let tied = tensor::group_conv_pointwise(&x, &vec![shared; g]).unwrap();
            let err = tensor::max_relative_error(&folded, &tied).unwrap();
            prop_assert!(err <= 1e-6, "relative error {err}");
        }

        /// The two-stage expanded execution equals folding once with the
        /// composed matrix.
        #[test]
        fn expanded_equals_composed(
            (n, h, w, g, cg_in, cg_out) in dims(),
            mid in 1usize..=5,
            seed in any::<u64>(),
        ) {
            let x = Tensor4::<f64>::seeded(n, h, w, g * cg_in, seed);
            let expansion = PointwiseWeights::<f64>::seeded(cg_in, mid, seed ^ 0x111);
            let main = PointwiseWeights::<f64>::seeded(mid, cg_out, seed ^ 0x222);
            let two_stage = tensor::abconv_exp_forward(&x, &expansion, &main, g).unwrap();
            prop_assert_eq!(two_stage.shape(), [n, h, w, g * cg_out]);
            let one_stage =
                tensor::abconv_forward(&x, &expansion.compose(&main).unwrap(), g).unwrap();
            let err = tensor::max_relative_error(&two_stage, &one_stage).unwrap();
            prop_assert!(err <= 1e-6, "relative error {err}");
        }

        /// The folded execution is linear in its input.
        #[test]
        fn folded_execution_is_linear(
            (n, h, w, g, cg_in, cg_out) in dims(),
            seed in any::<u64>(),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let c = g * cg_in;
            let x = Tensor4::<f64>::seeded(n, h, w, c, seed);
            let y = Tensor4::<f64>::seeded(n, h, w, c, seed ^ 0x777);
            let shared = PointwiseWeights::<f64>::seeded(cg_in, cg_out, seed ^ 0x888);
            let mixed_data: Vec<f64> = x
                .data()
                .iter()
                .zip(y.data())
                .map(|(a, b)| alpha * a + beta * b)
                .collect();
            let mixed = Tensor4::new(n, h, w, c, mixed_data).unwrap();
            let lhs = tensor::abconv_forward(&mixed, &shared, g).unwrap();
            let fx = tensor::abconv_forward(&x, &shared, g).unwrap();
            let fy = tensor::abconv_forward(&y, &shared, g).unwrap();
            let rhs_data: Vec<f64> = fx
                .data()
                .iter()
                .zip(fy.data())
                .map(|(a, b)| alpha * a + beta * b)
                .collect();
            let rhs = Tensor4::new(n, h, w, g * cg_out, rhs_data).unwrap();
            let err = tensor::max_relative_error(&lhs, &rhs).unwrap();
            prop_assert!(err <= 1e-6, "relative error {err}");
        }
    }
}

mod model_laws {
    use super::*;

    fn arb_model() -> impl Strategy<Value = ModelIR> {
        proptest::collection::vec((spec_and_group(), 0u8..=3), 1..=12).prop_map(|layers| {
            let layers = layers
                .into_iter()
                .enumerate()
                .map(|(i, ((spec, g), which))| {
                    let variant = match which {
                        0 => ConvVariant::Standard,
                        1 => ConvVariant::Group { g },
                        2 => ConvVariant::ABConv { g },
                        _ => ConvVariant::ABConvExp { g },
                    };
                    LayerRecord {
                        name: format!("layer{i}"),
                        spec,
                        variant,
                    }
                })
                .collect();
            ModelIR {
                name: "generated".to_owned(),
                layers,
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Serialization round-trips through the parser unchanged.
        #[test]
        fn json_round_trip(model in arb_model()) {
            let parsed = model::parse_model(&model.to_json()).unwrap();
            prop_assert_eq!(parsed, model);
        }

        /// Report totals are the exact sums of their rows.
        #[test]
        fn report_totals_are_row_sums(model in arb_model()) {
            let hw = HardwareProfile::<f64>::ethos_u65_like();
            let report = model::summarize(&model, &hw).unwrap();
            prop_assert_eq!(report.rows.len(), model.layers.len());
            let macs: u64 = report.rows.iter().map(|r| r.macs).sum();
            let params: u64 = report.rows.iter().map(|r| r.params).sum();
            let latency: f64 = report.rows.iter().map(|r| r.est_latency_s).sum();
            prop_assert_eq!(report.total_macs, macs);
            prop_assert_eq!(report.total_params, params);
            prop_assert_eq!(report.total_latency_s, latency);
        }

        /// The pass-through pattern never changes serialized bytes.
        #[test]
        fn pass_through_is_identity(model in arb_model()) {
            let hw = HardwareProfile::<f64>::ethos_u65_like();
            let policy = model::Policy::parse("P").unwrap();
            let rewritten = model::apply_policy(&model, &hw, &policy);
            prop_assert_eq!(rewritten.to_json(), model.to_json());
        }
    }
}
