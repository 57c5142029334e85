//! Hand-built traces with known answers, shared by tests, benches and the CLI.
//!
//! All fixtures use the default register space (16 GPRs plus FLAGS) and embed
//! their predictions.

use crate::trace::{renumber, Control, ControlKind, MicroOp, OpClass, Reg, RegSpace, Seq};

fn flags() -> Reg {
    RegSpace::DEFAULT.flags()
}

fn regs(ids: &[u16]) -> Vec<Reg> {
    ids.iter().map(|&r| Reg(r)).collect()
}

fn alu(pc: u64, srcs: &[u16], dest: u16) -> MicroOp {
    MicroOp::new(0, pc, OpClass::Alu)
        .with_srcs(&regs(srcs))
        .with_dest(Reg(dest))
}

fn cmp(pc: u64, srcs: &[u16]) -> MicroOp {
    MicroOp::new(0, pc, OpClass::Cmp)
        .with_srcs(&regs(srcs))
        .with_dest(flags())
}

fn branch(pc: u64, taken: bool, predicted: bool) -> MicroOp {
    MicroOp::new(0, pc, OpClass::CondBranch)
        .with_srcs(&[flags()])
        .with_ctrl(Control::Branch {
            taken,
            predicted: Some(predicted),
        })
}

fn predicated(pc: u64, dest: u16, pred_false: bool, predicted_false: bool) -> MicroOp {
    MicroOp::new(0, pc, OpClass::PredicatedAlu)
        .with_srcs(&[flags(), Reg(dest)])
        .with_dest(Reg(dest))
        .with_ctrl(Control::Predicate {
            pred_false,
            predicted_false: Some(predicted_false),
        })
}

fn indirect(pc: u64, src: u16, target: u64, predicted: u64) -> MicroOp {
    MicroOp::new(0, pc, OpClass::IndirectJump)
        .with_srcs(&[Reg(src)])
        .with_ctrl(Control::Indirect {
            target,
            predicted: Some(predicted),
        })
}

fn finish(mut ops: Vec<MicroOp>) -> Vec<MicroOp> {
    renumber(&mut ops);
    ops
}

/// Window size the walkthrough trace is laid out for.
pub const WALKTHROUGH_WINDOW: usize = 5;

/// Order in which the detection pass over the walkthrough tags instructions.
pub const WALKTHROUGH_TAG_ORDER: [Seq; 6] = [14, 13, 12, 8, 5, 10];

/// Instructions of the walkthrough that must stay effectual.
pub const WALKTHROUGH_EFFECTUAL: [Seq; 3] = [4, 7, 11];

/// Twenty-op trace in windows of five. `i14` is a correctly predicted branch
/// and `i12` writes a register that `i15` overwrites unread. Dependences:
/// `i5,i7 -> i8`, `i8,i10 -> i12`, `i8,i11 -> i13 -> i14`, `i11 -> i15`,
/// `i7 -> i17`. Kills: `i15` of `i12`, `i16` of `i8`, `i17` of `i5`, `i18`
/// of the flags written by `i13`, `i19` of `i10`.
pub fn walkthrough() -> Vec<MicroOp> {
    let pc = |i: u64| 0x100 + 4 * i;
    finish(vec![
        alu(pc(0), &[0], 0),
        alu(pc(1), &[1], 1),
        alu(pc(2), &[2], 2),
        alu(pc(3), &[3], 3),
        alu(pc(4), &[4], 4),
        alu(pc(5), &[14], 5),
        alu(pc(6), &[6], 6),
        alu(pc(7), &[7], 7),
        alu(pc(8), &[5, 7], 8),
        alu(pc(9), &[9], 9),
        alu(pc(10), &[10], 10),
        alu(pc(11), &[11], 11),
        alu(pc(12), &[8, 10], 12),
        cmp(pc(13), &[8, 11]),
        branch(pc(14), true, true),
        alu(pc(15), &[11], 12),
        alu(pc(16), &[6], 8),
        alu(pc(17), &[7], 5),
        cmp(pc(18), &[9, 6]),
        alu(pc(19), &[9], 10),
    ])
}

/// The branch of [`cone_example`] whose input cone the example inspects.
pub const CONE_BRANCH: Seq = 6;

/// Compare-and-branch fragment: `i3` and `i4` feed the compare `i5`, which
/// feeds branch `i6`; `i4` is also read by the store `i14`. Everything else is
/// unrelated filler.
pub fn cone_example() -> Vec<MicroOp> {
    let pc = |i: u64| 0x400 + 4 * i;
    let mut ops = vec![
        alu(pc(0), &[0], 0),
        alu(pc(1), &[1], 1),
        alu(pc(2), &[2], 2),
        alu(pc(3), &[13], 3),
        alu(pc(4), &[14], 4),
        cmp(pc(5), &[3, 4]),
        branch(pc(6), false, false),
    ];
    for (k, r) in (5u16..12).enumerate() {
        ops.push(alu(pc(7 + k as u64), &[r], r));
    }
    ops.push(
        MicroOp::new(0, pc(14), OpClass::Store)
            .with_srcs(&[Reg(4)])
            .with_addr(0x2000),
    );
    finish(ops)
}

const LOOP_PC: u64 = 0x1000;

/// Ops per iteration of [`control_loop`].
pub const CONTROL_LOOP_BODY: usize = 16;

const CONTROL_LOOP_ACCUMULATORS: [u16; 12] = [0, 1, 2, 3, 4, 7, 8, 9, 10, 11, 12, 13];

/// A loop whose body holds one conditional branch, one predicated op and one
/// indirect jump, all normally predicted correctly, after twelve independent
/// accumulators. Each `(iteration, kind)` in `wrong` makes that iteration's
/// control op of `kind` mispredicted.
pub fn control_loop(iterations: usize, wrong: &[(usize, ControlKind)]) -> Vec<MicroOp> {
    let pc = |k: u64| LOOP_PC + 4 * k;
    let mut ops = Vec::with_capacity(iterations * CONTROL_LOOP_BODY);
    for it in 0..iterations {
        let miss = |k: ControlKind| wrong.contains(&(it, k));
        for (k, &r) in CONTROL_LOOP_ACCUMULATORS.iter().enumerate() {
            ops.push(alu(pc(k as u64), &[r], r));
        }
        ops.push(cmp(pc(12), &[1]));
        ops.push(branch(pc(13), true, !miss(ControlKind::Branch)));
        // A mispredicted predicate here is one that turns out true.
        ops.push(predicated(pc(14), 5, !miss(ControlKind::Predicate), true));
        let target = pc(0);
        let predicted = if miss(ControlKind::Indirect) {
            target ^ 0x40
        } else {
            target
        };
        ops.push(indirect(pc(15), 6, target, predicted));
    }
    finish(ops)
}

/// Ops per iteration of [`offload_loop`].
pub const OFFLOAD_LOOP_BODY: usize = 9;

/// Six independent accumulators plus a compare, a correctly predicted branch
/// and a correctly predicted false predicated op: a third of the ops are
/// ineffectual and none of them feed the accumulators.
pub fn offload_loop(iterations: usize) -> Vec<MicroOp> {
    let pc = |k: u64| LOOP_PC + 4 * k;
    let mut ops = Vec::with_capacity(iterations * OFFLOAD_LOOP_BODY);
    for _ in 0..iterations {
        for r in 1..=6u16 {
            ops.push(alu(pc(r as u64 - 1), &[r], r));
        }
        ops.push(cmp(pc(6), &[]));
        ops.push(branch(pc(7), true, true));
        ops.push(predicated(pc(8), 7, true, true));
    }
    finish(ops)
}

/// Ops per iteration of [`slow_chain_loop`].
pub const SLOW_CHAIN_BODY: usize = 6;

/// One effectual accumulator per iteration next to a chain of three
/// `latency`-cycle ops feeding a compare and a correctly predicted branch.
/// Once tagged, the chain runs serially in the in-order I-pipe and backs up
/// its reservation station.
pub fn slow_chain_loop(iterations: usize, latency: u32) -> Vec<MicroOp> {
    let pc = |k: u64| LOOP_PC + 4 * k;
    let mut ops = Vec::with_capacity(iterations * SLOW_CHAIN_BODY);
    for _ in 0..iterations {
        ops.push(alu(pc(0), &[1], 1));
        ops.push(alu(pc(1), &[1], 8).with_latency(latency));
        ops.push(alu(pc(2), &[8], 9).with_latency(latency));
        ops.push(alu(pc(3), &[9], 10).with_latency(latency));
        ops.push(cmp(pc(4), &[10]));
        ops.push(branch(pc(5), true, true));
    }
    finish(ops)
}

/// Evenly spaced mispredictions for [`control_loop`]: `count` injections,
/// `spacing` iterations apart from `first`, cycling branch, predicate, indirect.
pub fn injection_schedule(count: usize, first: usize, spacing: usize) -> Vec<(usize, ControlKind)> {
    (0..count)
        .map(|i| (first + i * spacing, ControlKind::ALL[i % 3]))
        .collect()
}
