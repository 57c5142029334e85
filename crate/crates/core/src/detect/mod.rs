//! Windowed ineffectuality detector: register producer map at rename, detection
//! buffer of committed instructions, and the micro-op cache tag store.

mod buffer;
mod rpm;
mod tags;

pub use buffer::{DbEntry, DetectionBuffer, Identification};
pub use rpm::{Rpm, RpmEntry};
pub use tags::TagStore;

use std::collections::BTreeSet;

use crate::oracle::{Outcomes, PivotKind, PivotType};
use crate::trace::{MicroOp, OpClass, Seq};

/// Pivot flag the commit stage attaches to an instruction.
pub fn commit_pivot(
    op: &MicroOp,
    prediction_correct: Option<bool>,
    ri_pivot: bool,
    pivot_type: PivotType,
) -> Option<PivotKind> {
    let control = match op.class {
        OpClass::CondBranch | OpClass::IndirectJump => prediction_correct == Some(true),
        OpClass::PredicatedAlu => op.written_reg().is_none() && prediction_correct == Some(true),
        _ => false,
    };
    let kind = if control {
        Some(PivotKind::Control)
    } else if ri_pivot && !op.class.is_memory() {
        Some(PivotKind::Dead)
    } else {
        None
    };
    kind.filter(|&k| pivot_type.allows(k))
}

/// One record per tagged dynamic instruction, for debug dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagRecord {
    pub seq: Seq,
    pub pc: u64,
    pub pivot: Option<PivotKind>,
    /// 1-based position in the discovery order of its pass.
    pub rank: usize,
}

/// Post-commit detection state: buffer, tag store and cumulative results.
#[derive(Debug, Clone)]
pub struct Detector {
    pub buffer: DetectionBuffer,
    pub tags: TagStore,
    pub pivot_type: PivotType,
    tagged: BTreeSet<Seq>,
    records: Vec<TagRecord>,
    keep_records: bool,
    passes: u64,
}

impl Detector {
    pub fn new(window: usize, pivot_type: PivotType) -> Self {
        Detector {
            buffer: DetectionBuffer::new(window),
            tags: TagStore::new(),
            pivot_type,
            tagged: BTreeSet::new(),
            records: Vec::new(),
            keep_records: false,
            passes: 0,
        }
    }

    pub fn keep_records(mut self, on: bool) -> Self {
        self.keep_records = on;
        self
    }

    /// Inserts a committed instruction and applies any resulting pass to the tag store.
    pub fn commit(&mut self, op: MicroOp, pivot: Option<PivotKind>) -> Option<Identification> {
        let id = self.buffer.insert(DbEntry { op, pivot })?;
        self.passes += 1;
        self.tags.apply(&id.effectual_pcs, &id.tagged_pcs);
        if self.keep_records {
            for (i, &seq) in id.tagged.iter().enumerate() {
                self.records.push(TagRecord {
                    seq,
                    pc: id.tagged_pcs[i],
                    pivot: id.tagged_pivots[i],
                    rank: i + 1,
                });
            }
        }
        self.tagged.extend(id.tagged.iter().copied());
        Some(id)
    }

    /// Every dynamic instruction tagged by some pass so far.
    pub fn tagged(&self) -> &BTreeSet<Seq> {
        &self.tagged
    }

    pub fn records(&self) -> &[TagRecord] {
        &self.records
    }

    pub fn passes(&self) -> u64 {
        self.passes
    }
}

/// Detector output for a trace processed in order without a timing model.
#[derive(Debug, Clone)]
pub struct DetectionRun {
    pub tagged: BTreeSet<Seq>,
    pub pivots: Vec<Option<PivotKind>>,
    pub identifications: Vec<Identification>,
}

/// Runs the register producer map over the trace in rename order, then feeds
/// every instruction to the detection buffer in commit order.
pub fn run_standalone(
    trace: &[MicroOp],
    outcomes: &Outcomes,
    window: usize,
    pivot_type: PivotType,
    num_regs: usize,
) -> DetectionRun {
    assert_eq!(trace.len(), outcomes.len());
    let mut rpm = Rpm::new(num_regs, window);
    let mut ri = vec![false; trace.len()];
    for op in trace {
        if let Some(p) = rpm.observe_rename(op) {
            ri[p as usize] = true;
        }
    }
    let mut det = Detector::new(window, pivot_type);
    let mut pivots = Vec::with_capacity(trace.len());
    let mut identifications = Vec::new();
    for (i, op) in trace.iter().enumerate() {
        let pivot = commit_pivot(op, outcomes[i], ri[i], pivot_type);
        pivots.push(pivot);
        if let Some(id) = det.commit(*op, pivot) {
            identifications.push(id);
        }
    }
    DetectionRun {
        tagged: det.tagged,
        pivots,
        identifications,
    }
}
