use std::fmt;

/// Dynamic sequence number of a micro-op (position in the trace).
pub type Seq = u64;

/// Architectural register index. FLAGS is the last index of the register file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Reg(pub u16);

impl Reg {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Register file geometry of a trace: `num_regs` indices, of which the last one is FLAGS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegSpace {
    pub num_regs: u16,
}

impl RegSpace {
    /// 16 general purpose registers plus FLAGS.
    pub const DEFAULT: RegSpace = RegSpace { num_regs: 17 };

    pub fn new(num_regs: u16) -> Self {
        assert!(num_regs >= 2, "need at least one GPR and FLAGS");
        RegSpace { num_regs }
    }

    pub fn flags(self) -> Reg {
        Reg(self.num_regs - 1)
    }

    pub fn gprs(self) -> u16 {
        self.num_regs - 1
    }

    pub fn contains(self, r: Reg) -> bool {
        r.0 < self.num_regs
    }
}

impl Default for RegSpace {
    fn default() -> Self {
        RegSpace::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpClass {
    Alu,
    Cmp,
    CondBranch,
    IndirectJump,
    PredicatedAlu,
    Load,
    Store,
    Nop,
}

impl OpClass {
    pub const ALL: [OpClass; 8] = [
        OpClass::Alu,
        OpClass::Cmp,
        OpClass::CondBranch,
        OpClass::IndirectJump,
        OpClass::PredicatedAlu,
        OpClass::Load,
        OpClass::Store,
        OpClass::Nop,
    ];

    /// Stable numeric id used by the value semantics.
    pub fn id(self) -> u64 {
        match self {
            OpClass::Alu => 1,
            OpClass::Cmp => 2,
            OpClass::CondBranch => 3,
            OpClass::IndirectJump => 4,
            OpClass::PredicatedAlu => 5,
            OpClass::Load => 6,
            OpClass::Store => 7,
            OpClass::Nop => 8,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            OpClass::Alu => "ALU",
            OpClass::Cmp => "CMP",
            OpClass::CondBranch => "BR.C",
            OpClass::IndirectJump => "BR.I",
            OpClass::PredicatedAlu => "ALU.P",
            OpClass::Load => "LD",
            OpClass::Store => "ST",
            OpClass::Nop => "NOP",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<OpClass> {
        OpClass::ALL.into_iter().find(|c| c.mnemonic() == s)
    }

    pub fn is_control(self) -> bool {
        matches!(
            self,
            OpClass::CondBranch | OpClass::IndirectJump | OpClass::PredicatedAlu
        )
    }

    pub fn is_memory(self) -> bool {
        matches!(self, OpClass::Load | OpClass::Store)
    }
}

impl fmt::Display for OpClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Up to three source registers, stored inline so `MicroOp` stays `Copy`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Srcs {
    regs: [Reg; 3],
    len: u8,
}

impl Srcs {
    pub const MAX: usize = 3;

    pub fn new() -> Self {
        Srcs::default()
    }

    pub fn from_slice(regs: &[Reg]) -> Option<Self> {
        if regs.len() > Self::MAX {
            return None;
        }
        let mut s = Srcs::new();
        for &r in regs {
            s.regs[s.len as usize] = r;
            s.len += 1;
        }
        Some(s)
    }

    pub fn as_slice(&self) -> &[Reg] {
        &self.regs[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, r: Reg) -> bool {
        self.as_slice().contains(&r)
    }
}

impl fmt::Debug for Srcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// Resolved and (optionally) predicted outcome of a control micro-op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Branch {
        taken: bool,
        predicted: Option<bool>,
    },
    Indirect {
        target: u64,
        predicted: Option<u64>,
    },
    Predicate {
        pred_false: bool,
        predicted_false: Option<bool>,
    },
}

impl Control {
    /// Whether the annotation carries an embedded prediction.
    pub fn has_prediction(&self) -> bool {
        match *self {
            Control::Branch { predicted, .. } => predicted.is_some(),
            Control::Indirect { predicted, .. } => predicted.is_some(),
            Control::Predicate {
                predicted_false, ..
            } => predicted_false.is_some(),
        }
    }

    pub fn actual(&self) -> Outcome {
        match *self {
            Control::Branch { taken, .. } => Outcome::Taken(taken),
            Control::Indirect { target, .. } => Outcome::Target(target),
            Control::Predicate { pred_false, .. } => Outcome::PredicateFalse(pred_false),
        }
    }

    pub fn embedded(&self) -> Option<Outcome> {
        match *self {
            Control::Branch { predicted, .. } => predicted.map(Outcome::Taken),
            Control::Indirect { predicted, .. } => predicted.map(Outcome::Target),
            Control::Predicate {
                predicted_false, ..
            } => predicted_false.map(Outcome::PredicateFalse),
        }
    }

    pub fn kind(&self) -> ControlKind {
        match self {
            Control::Branch { .. } => ControlKind::Branch,
            Control::Indirect { .. } => ControlKind::Indirect,
            Control::Predicate { .. } => ControlKind::Predicate,
        }
    }
}

/// A control outcome: either actual or predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Taken(bool),
    Target(u64),
    PredicateFalse(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControlKind {
    Branch,
    Predicate,
    Indirect,
}

impl ControlKind {
    pub const ALL: [ControlKind; 3] = [
        ControlKind::Branch,
        ControlKind::Predicate,
        ControlKind::Indirect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlKind::Branch => "branch",
            ControlKind::Predicate => "predicate",
            ControlKind::Indirect => "indirect",
        }
    }
}

/// One dynamic micro-op of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MicroOp {
    pub seq: Seq,
    pub pc: u64,
    pub class: OpClass,
    pub srcs: Srcs,
    pub dest: Option<Reg>,
    pub addr: Option<u64>,
    /// Explicit execution latency; the pipeline's per-class default applies when absent.
    pub latency: Option<u32>,
    pub ctrl: Option<Control>,
}

impl MicroOp {
    pub fn new(seq: Seq, pc: u64, class: OpClass) -> Self {
        MicroOp {
            seq,
            pc,
            class,
            srcs: Srcs::new(),
            dest: None,
            addr: None,
            latency: None,
            ctrl: None,
        }
    }

    pub fn with_srcs(mut self, regs: &[Reg]) -> Self {
        self.srcs = Srcs::from_slice(regs).expect("at most three sources");
        self
    }

    pub fn with_dest(mut self, r: Reg) -> Self {
        self.dest = Some(r);
        self
    }

    pub fn with_addr(mut self, addr: u64) -> Self {
        self.addr = Some(addr);
        self
    }

    pub fn with_latency(mut self, lat: u32) -> Self {
        self.latency = Some(lat);
        self
    }

    pub fn with_ctrl(mut self, ctrl: Control) -> Self {
        self.ctrl = Some(ctrl);
        self
    }

    /// The register actually written once the op resolves. A predicated op whose
    /// predicate is false writes nothing.
    pub fn written_reg(&self) -> Option<Reg> {
        match self.ctrl {
            Some(Control::Predicate {
                pred_false: true, ..
            }) => None,
            _ => self.dest,
        }
    }

    pub fn reads(&self, r: Reg) -> bool {
        self.srcs.contains(r)
    }

    /// Whether the prediction matches the actual outcome. `None` for non-control ops.
    pub fn prediction_correct(&self, predicted: Outcome) -> Option<bool> {
        self.ctrl.map(|c| c.actual() == predicted)
    }
}
