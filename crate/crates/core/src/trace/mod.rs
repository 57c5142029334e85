//! Micro-op traces: representation, text format, synthetic generation and the
//! in-order reference executor.

mod exec;
mod op;
pub mod synth;
mod text;

pub use exec::{mem_initial, mix64, op_value, reference_execute, ArchState};
pub use op::{Control, ControlKind, MicroOp, OpClass, Outcome, Reg, RegSpace, Seq, Srcs};
pub use synth::{generate_synthetic, generate_synthetic_annotated, SynthManifest, SynthParams};
pub use text::{emit_trace, emit_trace_string, parse_trace, parse_trace_str};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Validation { line: usize, msg: String },
    #[error("synthetic parameters: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Checks the structural invariants of a single micro-op.
pub fn validate_op(op: &MicroOp, regs: RegSpace) -> Result<(), String> {
    for &r in op.srcs.as_slice() {
        if !regs.contains(r) {
            return Err(format!(
                "source register {} out of range (R={})",
                r.0, regs.num_regs
            ));
        }
    }
    if let Some(d) = op.dest {
        if !regs.contains(d) {
            return Err(format!(
                "destination register {} out of range (R={})",
                d.0, regs.num_regs
            ));
        }
    }
    if op.latency == Some(0) {
        return Err("latency must be at least 1".into());
    }
    let flags = regs.flags();
    match op.class {
        OpClass::CondBranch => {
            if !op.srcs.contains(flags) {
                return Err("conditional branch must read FLAGS".into());
            }
            if op.dest.is_some() {
                return Err("conditional branch has no destination".into());
            }
        }
        OpClass::Cmp => {
            if op.dest != Some(flags) {
                return Err("CMP must write FLAGS".into());
            }
        }
        OpClass::Store => {
            if op.dest.is_some() {
                return Err("store has no register destination".into());
            }
        }
        OpClass::Load => {
            if op.dest.is_none() {
                return Err("load needs a register destination".into());
            }
        }
        OpClass::IndirectJump | OpClass::Nop => {
            if op.dest.is_some() {
                return Err(format!("{} has no destination", op.class));
            }
        }
        OpClass::Alu | OpClass::PredicatedAlu => {}
    }
    if op.class.is_memory() != op.addr.is_some() {
        return Err(if op.class.is_memory() {
            "memory op needs addr".into()
        } else {
            "addr only allowed on LD/ST".into()
        });
    }
    let ctrl_ok = match (op.class, op.ctrl) {
        (OpClass::CondBranch, Some(Control::Branch { .. })) => true,
        (OpClass::IndirectJump, Some(Control::Indirect { .. })) => true,
        (OpClass::PredicatedAlu, Some(Control::Predicate { .. })) => true,
        (c, None) => !c.is_control(),
        _ => false,
    };
    if !ctrl_ok {
        return Err(format!(
            "control annotation does not match op class {}",
            op.class
        ));
    }
    Ok(())
}

/// Validates a whole trace, including dense sequence numbering.
pub fn validate_trace(ops: &[MicroOp], regs: RegSpace) -> Result<(), TraceError> {
    for (i, op) in ops.iter().enumerate() {
        if op.seq != i as Seq {
            return Err(TraceError::Validation {
                line: i + 1,
                msg: format!("seq {} out of order (expected {i})", op.seq),
            });
        }
        validate_op(op, regs).map_err(|msg| TraceError::Validation { line: i + 1, msg })?;
    }
    Ok(())
}

/// Renumbers `seq` to match positions.
pub fn renumber(ops: &mut [MicroOp]) {
    for (i, op) in ops.iter_mut().enumerate() {
        op.seq = i as Seq;
    }
}
