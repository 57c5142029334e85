//! Random trace strategies shared by the property tests.

#![allow(dead_code)]

use ineff_core::trace::{renumber, Control, MicroOp, OpClass, Reg, RegSpace};
use proptest::prelude::*;

/// General purpose registers the strategies draw from. Few registers give
/// dense dependences and frequent overwrites.
pub const GPRS: u16 = 6;

fn flags() -> Reg {
    RegSpace::DEFAULT.flags()
}

fn gpr() -> impl Strategy<Value = Reg> {
    (0..GPRS).prop_map(Reg)
}

fn srcs(max: usize) -> impl Strategy<Value = Vec<Reg>> {
    prop::collection::vec(gpr(), 0..=max)
}

fn addr() -> impl Strategy<Value = u64> {
    (0u64..4).prop_map(|a| 0x1000 + 8 * a)
}

/// One micro-op with `seq` 0 and a pc drawn from a small static footprint so
/// that predictor and tag state is shared between dynamic instances.
pub fn arb_op() -> impl Strategy<Value = MicroOp> {
    let pc = (0u64..24).prop_map(|i| 0x400 + 4 * i);
    let body = prop_oneof![
        5 => (srcs(2), gpr(), 1u32..4).prop_map(|(s, d, lat)| {
            MicroOp::new(0, 0, OpClass::Alu).with_srcs(&s).with_dest(d).with_latency(lat)
        }),
        2 => srcs(2).prop_map(|s| MicroOp::new(0, 0, OpClass::Cmp).with_srcs(&s).with_dest(flags())),
        2 => (any::<bool>(), any::<bool>()).prop_map(|(taken, hit)| {
            MicroOp::new(0, 0, OpClass::CondBranch)
                .with_srcs(&[flags()])
                .with_ctrl(Control::Branch { taken, predicted: Some(taken == hit) })
        }),
        1 => (gpr(), 0u64..3, any::<bool>()).prop_map(|(s, t, hit)| {
            let target = 0x400 + 4 * t;
            MicroOp::new(0, 0, OpClass::IndirectJump)
                .with_srcs(&[s])
                .with_ctrl(Control::Indirect { target, predicted: Some(if hit { target } else { target ^ 0x40 }) })
        }),
        1 => (gpr(), any::<bool>(), any::<bool>()).prop_map(|(d, pf, hit)| {
            MicroOp::new(0, 0, OpClass::PredicatedAlu)
                .with_srcs(&[flags(), d])
                .with_dest(d)
                .with_ctrl(Control::Predicate { pred_false: pf, predicted_false: Some(pf == hit) })
        }),
        1 => (srcs(1), gpr(), addr()).prop_map(|(s, d, a)| {
            MicroOp::new(0, 0, OpClass::Load).with_srcs(&s).with_dest(d).with_addr(a)
        }),
        1 => (srcs(2), addr()).prop_map(|(s, a)| MicroOp::new(0, 0, OpClass::Store).with_srcs(&s).with_addr(a)),
    ];
    (pc, body).prop_map(|(pc, mut op)| {
        op.pc = pc;
        op
    })
}

/// A valid trace of up to `max_len` ops in the default register space.
pub fn arb_trace(max_len: usize) -> impl Strategy<Value = Vec<MicroOp>> {
    prop::collection::vec(arb_op(), 0..=max_len).prop_map(|mut ops| {
        renumber(&mut ops);
        ops
    })
}
