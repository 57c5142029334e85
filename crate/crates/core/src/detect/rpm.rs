use crate::trace::{MicroOp, OpClass, Seq};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RpmEntry {
    pub has_dependants: bool,
    pub producer_seq: Seq,
    /// Loads are tracked for consumption but never become pivots.
    pub markable: bool,
}

/// Register Producer Map, maintained in rename order.
#[derive(Debug, Clone)]
pub struct Rpm {
    entries: Vec<Option<RpmEntry>>,
    window: u64,
}

impl Rpm {
    pub fn new(num_regs: usize, window: usize) -> Self {
        assert!(window > 0);
        Rpm {
            entries: vec![None; num_regs],
            window: window as u64,
        }
    }

    pub fn entry(&self, reg: usize) -> Option<RpmEntry> {
        self.entries[reg]
    }

    pub fn clear(&mut self) {
        self.entries.iter_mut().for_each(|e| *e = None);
    }

    /// Observes `op` at rename. Returns the producer to mark as a register
    /// ineffectual pivot, if any: its value was never consumed and it sits in
    /// the current or the previous window.
    pub fn observe_rename(&mut self, op: &MicroOp) -> Option<Seq> {
        for r in op.srcs.as_slice() {
            if let Some(e) = &mut self.entries[r.index()] {
                e.has_dependants = true;
            }
        }
        let d = op.written_reg()?;
        let mut marked = None;
        if let Some(prev) = self.entries[d.index()] {
            let cur_w = op.seq / self.window;
            let prod_w = prev.producer_seq / self.window;
            if !prev.has_dependants && prev.markable && cur_w.saturating_sub(prod_w) <= 1 {
                marked = Some(prev.producer_seq);
            }
        }
        self.entries[d.index()] = Some(RpmEntry {
            has_dependants: false,
            producer_seq: op.seq,
            markable: !matches!(op.class, OpClass::Load | OpClass::Store),
        });
        marked
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Reg;

    fn alu(seq: Seq, srcs: &[u16], dest: u16) -> MicroOp {
        let s: Vec<Reg> = srcs.iter().map(|&r| Reg(r)).collect();
        MicroOp::new(seq, seq, OpClass::Alu)
            .with_srcs(&s)
            .with_dest(Reg(dest))
    }

    #[test]
    fn unconsumed_producer_in_previous_window_is_marked() {
        let mut rpm = Rpm::new(17, 5);
        assert_eq!(rpm.observe_rename(&alu(12, &[9, 7], 7)), None);
        assert_eq!(rpm.observe_rename(&alu(15, &[10], 7)), Some(12));
    }

    #[test]
    fn producer_two_windows_back_is_not_marked() {
        let mut rpm = Rpm::new(17, 5);
        rpm.observe_rename(&alu(3, &[], 7));
        assert_eq!(rpm.observe_rename(&alu(12, &[], 7)), None);
    }

    #[test]
    fn reading_sets_has_dependants_and_new_producer_resets_it() {
        let mut rpm = Rpm::new(17, 5);
        rpm.observe_rename(&alu(0, &[], 1));
        rpm.observe_rename(&alu(1, &[1], 2));
        assert!(rpm.entry(1).unwrap().has_dependants);
        assert_eq!(rpm.observe_rename(&alu(2, &[], 1)), None);
        let e = rpm.entry(1).unwrap();
        assert!(!e.has_dependants);
        assert_eq!(e.producer_seq, 2);
    }

    #[test]
    fn loads_are_not_marked() {
        let mut rpm = Rpm::new(17, 5);
        rpm.observe_rename(
            &MicroOp::new(0, 0, OpClass::Load)
                .with_dest(Reg(1))
                .with_addr(0),
        );
        assert_eq!(rpm.observe_rename(&alu(1, &[], 1)), None);
    }
}
