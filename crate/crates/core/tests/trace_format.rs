mod common;

use common::arb_trace;
use ineff_core::fixtures::{control_loop, walkthrough};
use ineff_core::trace::*;
use proptest::prelude::*;

fn round_trip(ops: &[MicroOp]) -> Vec<MicroOp> {
    let text = emit_trace_string(ops, RegSpace::DEFAULT);
    parse_trace_str(&text, RegSpace::DEFAULT).expect("emitted trace parses")
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(trace in arb_trace(80)) {
        prop_assert_eq!(round_trip(&trace), trace);
    }

    #[test]
    fn synthetic_round_trip(seed in any::<u64>(), count in 0usize..400) {
        let p = SynthParams { count, ..SynthParams::default() };
        let t = generate_synthetic(&p, seed).unwrap();
        prop_assert_eq!(round_trip(&t), t);
    }

    #[test]
    fn reference_execution_is_deterministic(trace in arb_trace(80)) {
        prop_assert_eq!(
            reference_execute(&trace, RegSpace::DEFAULT),
            reference_execute(&round_trip(&trace), RegSpace::DEFAULT)
        );
    }
}

#[test]
fn fixtures_round_trip() {
    for t in [
        walkthrough(),
        control_loop(3, &[(1, ControlKind::Predicate)]),
    ] {
        assert_eq!(round_trip(&t), t);
    }
}

#[test]
fn trace_file_round_trip() {
    let t = walkthrough();
    let mut buf = Vec::new();
    emit_trace(&t, RegSpace::DEFAULT, &mut buf).unwrap();
    assert_eq!(parse_trace(buf.as_slice(), RegSpace::DEFAULT).unwrap(), t);
}

#[test]
fn errors_name_the_offending_line() {
    let text = "ALU pc=0 srcs=r1 dest=r2\n\n# note\nALU pc=4 dest=r99\n";
    match parse_trace_str(text, RegSpace::DEFAULT) {
        Err(TraceError::Validation { line, .. }) => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
    match parse_trace_str("ALU pc=0\nBOGUS pc=4\n", RegSpace::DEFAULT) {
        Err(TraceError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn smaller_register_space_rejects_wide_traces() {
    let text = emit_trace_string(&walkthrough(), RegSpace::DEFAULT);
    assert!(parse_trace_str(&text, RegSpace::new(8)).is_err());
}
