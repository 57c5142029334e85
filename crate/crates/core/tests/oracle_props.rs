//! Invariants of the whole-trace oracle, checked against a naive reference.

mod common;

use std::collections::BTreeSet;

use common::arb_trace;
use ineff_core::oracle::*;
use ineff_core::trace::{generate_synthetic, MicroOp, Seq, SynthParams};
use proptest::prelude::*;

/// Transitive successors by plain DFS.
fn cone(ddg: &DependenceGraph, s: Seq) -> BTreeSet<Seq> {
    let mut seen = BTreeSet::new();
    let mut stack = ddg.succs(s).to_vec();
    while let Some(x) = stack.pop() {
        if seen.insert(x) {
            stack.extend_from_slice(ddg.succs(x));
        }
    }
    seen
}

fn eligible(trace: &[MicroOp], ddg: &DependenceGraph, s: Seq, set: &BTreeSet<Seq>) -> bool {
    !trace[s as usize].class.is_memory() && !ddg.succs(s).is_empty() && cone(ddg, s).is_subset(set)
}

/// Least fixed point by repeated full sweeps in the given order.
fn naive_fixed_point(
    trace: &[MicroOp],
    ddg: &DependenceGraph,
    pivots: &BTreeSet<Seq>,
    reverse: bool,
) -> BTreeSet<Seq> {
    let mut set = pivots.clone();
    let mut order: Vec<Seq> = (0..trace.len() as Seq).collect();
    if reverse {
        order.reverse();
    }
    loop {
        let before = set.len();
        for &s in &order {
            if !set.contains(&s) && eligible(trace, ddg, s, &set) {
                set.insert(s);
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

fn pivots_of(trace: &[MicroOp], ddg: &DependenceGraph, pt: PivotType) -> BTreeSet<Seq> {
    oracle_pivots(trace, ddg, &embedded_outcomes(trace), pt)
        .into_keys()
        .collect()
}

fn pivot_type() -> impl Strategy<Value = PivotType> {
    prop_oneof![Just(PivotType::C), Just(PivotType::D), Just(PivotType::CD)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_naive_fixed_point(trace in arb_trace(120), pt in pivot_type()) {
        let ddg = build_ddg(&trace);
        let pivots = pivots_of(&trace, &ddg, pt);
        let fast = oracle_ineffectual(&trace, &ddg, &pivots);
        prop_assert_eq!(&fast, &naive_fixed_point(&trace, &ddg, &pivots, false));
        prop_assert_eq!(&fast, &naive_fixed_point(&trace, &ddg, &pivots, true));
    }

    #[test]
    fn sound_and_maximal(trace in arb_trace(120), pt in pivot_type()) {
        let ddg = build_ddg(&trace);
        let pivots = pivots_of(&trace, &ddg, pt);
        let set = oracle_ineffectual(&trace, &ddg, &pivots);
        for &s in &set {
            prop_assert!(pivots.contains(&s) || eligible(&trace, &ddg, s, &set), "{} unsupported", s);
        }
        for s in 0..trace.len() as Seq {
            if !set.contains(&s) {
                prop_assert!(!eligible(&trace, &ddg, s, &set), "{} should have been added", s);
            }
        }
    }

    #[test]
    fn memory_ops_never_ineffectual(trace in arb_trace(120)) {
        let r = analyze_trace(&trace, &embedded_outcomes(&trace), PivotType::CD);
        for s in &r.ineffectual {
            prop_assert!(!trace[*s as usize].class.is_memory());
        }
    }

    #[test]
    fn more_pivots_never_shrink_the_set(trace in arb_trace(120), keep in prop::collection::vec(any::<bool>(), 120)) {
        let ddg = build_ddg(&trace);
        let all = pivots_of(&trace, &ddg, PivotType::CD);
        let some: BTreeSet<Seq> = all.iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(s, _)| *s).collect();
        let small = oracle_ineffectual(&trace, &ddg, &some);
        let big = oracle_ineffectual(&trace, &ddg, &all);
        prop_assert!(small.is_subset(&big));
        let c = oracle_ineffectual(&trace, &ddg, &pivots_of(&trace, &ddg, PivotType::C));
        prop_assert!(c.is_subset(&big));
    }

    #[test]
    fn graphs_partition_the_set(trace in arb_trace(120)) {
        let r = analyze_trace(&trace, &embedded_outcomes(&trace), PivotType::CD);
        let mut union = BTreeSet::new();
        for g in &r.graphs {
            prop_assert!(g.size() >= 1);
            prop_assert_eq!(g.span(), g.nodes.last().unwrap() - g.nodes.first().unwrap() + 1);
            for n in &g.nodes {
                prop_assert!(union.insert(*n), "{} in two graphs", n);
            }
        }
        prop_assert_eq!(union, r.ineffectual);
    }
}

#[test]
fn synthetic_traces_agree_with_naive_fixed_point() {
    for seed in 0..4 {
        let p = SynthParams {
            count: 1500,
            ..SynthParams::default()
        };
        let trace = generate_synthetic(&p, seed).unwrap();
        let ddg = build_ddg(&trace);
        let pivots = pivots_of(&trace, &ddg, PivotType::CD);
        assert_eq!(
            oracle_ineffectual(&trace, &ddg, &pivots),
            naive_fixed_point(&trace, &ddg, &pivots, false),
            "seed {seed}"
        );
    }
}
