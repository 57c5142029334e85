//! Value semantics and the in-order reference executor.

use std::collections::BTreeMap;

use super::{MicroOp, OpClass, RegSpace};

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result value of a register-writing (or storing) op given its source values.
pub fn op_value(class: OpClass, pc: u64, srcs: &[u64]) -> u64 {
    let mut h = mix64((class.id() << 56) ^ pc);
    for &v in srcs {
        h = mix64(h ^ v);
    }
    h
}

const MEM_SALT: u64 = 0x6D65_6D6F_7279_0000;

/// Contents of a never-written memory word.
pub fn mem_initial(addr: u64) -> u64 {
    mix64(addr ^ MEM_SALT)
}

/// Architectural state: registers plus the memory words that have been written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchState {
    pub regs: Vec<u64>,
    pub mem: BTreeMap<u64, u64>,
}

impl ArchState {
    pub fn initial(regs: RegSpace) -> Self {
        ArchState {
            regs: (0..regs.num_regs as u64).map(mix64).collect(),
            mem: BTreeMap::new(),
        }
    }

    pub fn load(&self, addr: u64) -> u64 {
        self.mem
            .get(&addr)
            .copied()
            .unwrap_or_else(|| mem_initial(addr))
    }

    /// Applies one op in program order.
    pub fn step(&mut self, op: &MicroOp) {
        let srcs: Vec<u64> = op
            .srcs
            .as_slice()
            .iter()
            .map(|r| self.regs[r.index()])
            .collect();
        match op.class {
            OpClass::Load => {
                let v = mix64(self.load(op.addr.expect("validated load")));
                self.regs[op.dest.expect("validated load").index()] = v;
            }
            OpClass::Store => {
                let v = op_value(op.class, op.pc, &srcs);
                self.mem.insert(op.addr.expect("validated store"), v);
            }
            _ => {
                if let Some(d) = op.written_reg() {
                    self.regs[d.index()] = op_value(op.class, op.pc, &srcs);
                }
            }
        }
    }
}

pub fn reference_execute(trace: &[MicroOp], regs: RegSpace) -> ArchState {
    let mut st = ArchState::initial(regs);
    for op in trace {
        st.step(op);
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Control, Reg};

    #[test]
    fn empty_trace_leaves_initial_registers() {
        let st = reference_execute(&[], RegSpace::DEFAULT);
        for (i, v) in st.regs.iter().enumerate() {
            assert_eq!(*v, mix64(i as u64));
        }
        assert!(st.mem.is_empty());
    }

    #[test]
    fn single_alu_changes_only_its_destination() {
        let op = MicroOp::new(0, 3, OpClass::Alu)
            .with_srcs(&[Reg(1), Reg(2)])
            .with_dest(Reg(3));
        let before = ArchState::initial(RegSpace::DEFAULT);
        let after = reference_execute(&[op], RegSpace::DEFAULT);
        for i in 0..before.regs.len() {
            if i == 3 {
                assert_ne!(before.regs[i], after.regs[i]);
                assert_eq!(
                    after.regs[3],
                    op_value(OpClass::Alu, 3, &[mix64(1), mix64(2)])
                );
            } else {
                assert_eq!(before.regs[i], after.regs[i]);
            }
        }
    }

    #[test]
    fn predicated_false_writes_nothing() {
        let flags = RegSpace::DEFAULT.flags();
        let mk = |pf| {
            MicroOp::new(0, 9, OpClass::PredicatedAlu)
                .with_srcs(&[flags, Reg(1)])
                .with_dest(Reg(4))
                .with_ctrl(Control::Predicate {
                    pred_false: pf,
                    predicted_false: None,
                })
        };
        let init = ArchState::initial(RegSpace::DEFAULT);
        assert_eq!(reference_execute(&[mk(true)], RegSpace::DEFAULT), init);
        assert_ne!(reference_execute(&[mk(false)], RegSpace::DEFAULT), init);
    }

    #[test]
    fn load_sees_prior_store() {
        let st = MicroOp::new(0, 1, OpClass::Store)
            .with_srcs(&[Reg(0)])
            .with_addr(64);
        let ld = MicroOp::new(1, 2, OpClass::Load)
            .with_dest(Reg(5))
            .with_addr(64);
        let s = reference_execute(&[st, ld], RegSpace::DEFAULT);
        let stored = op_value(OpClass::Store, 1, &[mix64(0)]);
        assert_eq!(s.mem[&64], stored);
        assert_eq!(s.regs[5], mix64(stored));
    }
}
