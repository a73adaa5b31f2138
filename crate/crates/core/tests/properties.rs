//! Property tests for the generating-function layer and the simulators.

use proptest::prelude::*;

use bgw_skeleton::model_io::{MarkingSpec, ModelSpec};
use bgw_skeleton::offspring::{MarkingRule, OffspringLaw};
use bgw_skeleton::pgf::{joint_pgf, skeleton_offspring_pgf, solve_q_exact};
use bgw_skeleton::tree::{replica_rng, TreeSimulator};

/// Random finite-support law: up to 8 entries, normalized weights.
fn law_strategy() -> impl Strategy<Value = OffspringLaw> {
    proptest::collection::vec(0.0f64..1.0, 1..8)
        .prop_filter("non-degenerate weights", |w| w.iter().sum::<f64>() > 0.1)
        .prop_map(|w| {
            let sum: f64 = w.iter().sum();
            OffspringLaw::from_pmf(w.into_iter().map(|x| x / sum).collect()).unwrap()
        })
}

fn marked_law_strategy() -> impl Strategy<Value = (OffspringLaw, MarkingRule)> {
    law_strategy().prop_flat_map(|law| {
        let len = law.support_len();
        (
            Just(law),
            proptest::collection::vec(0.0f64..1.0, len..=len),
        )
            .prop_map(|(law, a)| {
                let rule = MarkingRule::from_table(a, &law).unwrap();
                (law, rule)
            })
    })
}

proptest! {
    /// |1 - Q - f(0, 1 - Q)| <= 1e-10 for every valid (law, rule).
    #[test]
    fn fixed_point_consistency((law, rule) in marked_law_strategy()) {
        let q = solve_q_exact(&law, &rule, true).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        if q > 0.0 && q < 1.0 {
            let f = joint_pgf(&law, &rule, 0.0, 1.0 - q).unwrap();
            prop_assert!(
                ((1.0 - q) - f).abs() <= 1e-10,
                "residual {} at q = {}", ((1.0 - q) - f).abs(), q
            );
        }
    }

    /// Q is nondecreasing under pointwise increases of the marking table.
    #[test]
    fn survival_monotone_in_marking(
        (law, rule) in marked_law_strategy(),
        bumps in proptest::collection::vec(0.0f64..1.0, 8),
    ) {
        let raised: Vec<f64> = rule
            .a()
            .iter()
            .zip(bumps.iter().cycle())
            .map(|(&a, &b)| a + b * (1.0 - a))
            .collect();
        let rule_up = MarkingRule::from_table(raised, &law).unwrap();
        let q_lo = solve_q_exact(&law, &rule, true).unwrap();
        let q_hi = solve_q_exact(&law, &rule_up, true).unwrap();
        prop_assert!(q_hi >= q_lo - 5e-12, "q dropped: {q_lo} -> {q_hi}");
    }

    /// For the {0, 1, 2}-supported shape with p(1) fixed, Q is
    /// nondecreasing in the drift epsilon.
    #[test]
    fn survival_monotone_in_drift(
        p1 in 0.0f64..0.8,
        eps_pair in (-0.15f64..0.15, -0.15f64..0.15),
        marking in 0.0f64..0.3,
    ) {
        let (e_lo, e_hi) = if eps_pair.0 <= eps_pair.1 {
            eps_pair
        } else {
            (eps_pair.1, eps_pair.0)
        };
        prop_assume!(e_hi <= 1.0 - p1 && e_lo >= p1 - 1.0);
        let make = |eps: f64| {
            let p2 = (1.0 + eps - p1) / 2.0;
            let p0 = 1.0 - p1 - p2;
            OffspringLaw::from_pmf(vec![p0, p1, p2]).unwrap()
        };
        let law_lo = make(e_lo);
        let law_hi = make(e_hi);
        let q_lo = solve_q_exact(&law_lo, &MarkingRule::constant(marking, &law_lo).unwrap(), true).unwrap();
        let q_hi = solve_q_exact(&law_hi, &MarkingRule::constant(marking, &law_hi).unwrap(), true).unwrap();
        prop_assert!(q_hi >= q_lo - 5e-12, "q dropped along drift: {q_lo} -> {q_hi}");
    }

    /// The conditional skeleton-offspring pgf is a valid pgf on the unit
    /// square: values in [0, 1], coordinatewise nondecreasing, g(1,1) = 1.
    #[test]
    fn skeleton_pgf_is_valid(
        law in law_strategy(),
        marking in 0.01f64..0.5,
    ) {
        let rule = MarkingRule::constant(marking, &law).unwrap();
        let q = solve_q_exact(&law, &rule, true).unwrap();
        prop_assume!(q > 0.0);
        // the bisected q carries ~1e-12 of absolute error which the
        // conditioning division amplifies by 1/q; mu >= 0.01 bounds that
        let slack = 1e-9;
        let grid: Vec<f64> = (0..=4).map(|i| i as f64 / 4.0).collect();
        let mut values = vec![vec![0.0; grid.len()]; grid.len()];
        for (i, &r) in grid.iter().enumerate() {
            for (j, &s) in grid.iter().enumerate() {
                let g = skeleton_offspring_pgf(&law, &rule, q, r, s).unwrap();
                prop_assert!((-slack..=1.0 + slack).contains(&g), "g({r},{s}) = {g}");
                values[i][j] = g;
            }
        }
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                if i > 0 {
                    prop_assert!(values[i][j] >= values[i - 1][j] - slack);
                }
                if j > 0 {
                    prop_assert!(values[i][j] >= values[i][j - 1] - slack);
                }
            }
        }
        let g11 = skeleton_offspring_pgf(&law, &rule, q, 1.0, 1.0).unwrap();
        prop_assert!((g11 - 1.0).abs() < 1e-10);
    }

    /// Identical (law, rule, horizon, cap, seed) reproduce the same tree.
    #[test]
    fn simulation_is_deterministic(
        (law, rule) in marked_law_strategy(),
        seed in any::<u64>(),
        stream in 0u64..1024,
    ) {
        let sim = TreeSimulator::new(law, rule, 16, 10_000).unwrap();
        let t1 = sim.simulate(&mut replica_rng(seed, stream));
        let t2 = sim.simulate(&mut replica_rng(seed, stream));
        prop_assert_eq!(t1.len(), t2.len());
        prop_assert_eq!(t1.truncated, t2.truncated);
        for (a, b) in t1.nodes().iter().zip(t2.nodes()) {
            prop_assert_eq!(a.parent, b.parent);
            prop_assert_eq!(a.child_count, b.child_count);
            prop_assert_eq!(a.marked, b.marked);
        }
    }

    /// Model files round-trip exactly through JSON.
    #[test]
    fn model_spec_round_trip(
        pmf in proptest::collection::vec(0.0f64..1.0, 1..8),
        constant in proptest::option::of(0.0f64..=1.0),
    ) {
        let sum: f64 = pmf.iter().sum();
        prop_assume!(sum > 0.1);
        let spec = ModelSpec {
            pmf: pmf.into_iter().map(|x| x / sum).collect(),
            marking: match constant {
                Some(value) => MarkingSpec::Constant { value },
                None => MarkingSpec::None,
            },
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(spec, back);
    }
}
