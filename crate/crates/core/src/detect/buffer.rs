use crate::oracle::PivotKind;
use crate::trace::{MicroOp, OpClass, Seq};

/// A committed instruction held in the detection buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbEntry {
    pub op: MicroOp,
    pub pivot: Option<PivotKind>,
}

/// Result of one pass of the detection engine.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Identification {
    /// Ineffectual instructions in the order they were tagged.
    pub tagged: Vec<Seq>,
    pub tagged_pcs: Vec<u64>,
    pub tagged_pivots: Vec<Option<PivotKind>>,
    /// Pcs of middle-window instructions left effectual.
    pub effectual_pcs: Vec<u64>,
}

/// Circular buffer of committed instructions, organized as four windows.
///
/// Logical slot 0 is the oldest retained instruction. A pass over slots
/// `0..3W` runs as soon as they are occupied; the oldest window is then dropped.
#[derive(Debug, Clone)]
pub struct DetectionBuffer {
    slots: Vec<Option<DbEntry>>,
    head: usize,
    count: usize,
    window: usize,
    tags: Vec<bool>,
}

impl DetectionBuffer {
    pub fn new(window: usize) -> Self {
        assert!(window > 0);
        DetectionBuffer {
            slots: vec![None; 4 * window],
            head: 0,
            count: 0,
            window,
            tags: vec![false; 3 * window],
        }
    }

    /// Builds a buffer whose analyzed region holds exactly `entries` (3W of them).
    pub fn with_entries(window: usize, entries: &[DbEntry]) -> Self {
        assert_eq!(entries.len(), 3 * window, "need three full windows");
        let mut db = DetectionBuffer::new(window);
        for (i, e) in entries.iter().enumerate() {
            db.slots[i] = Some(*e);
        }
        db.count = entries.len();
        db
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn clear(&mut self) {
        self.slots.iter_mut().for_each(|s| *s = None);
        self.head = 0;
        self.count = 0;
    }

    fn analyzed(&self) -> usize {
        3 * self.window
    }

    fn physical(&self, logical: usize) -> usize {
        (self.head + logical) % self.slots.len()
    }

    pub fn slot(&self, logical: usize) -> Option<&DbEntry> {
        if logical >= self.count {
            return None;
        }
        self.slots[self.physical(logical)].as_ref()
    }

    /// Physical index the next insert writes to.
    pub fn next_physical(&self) -> usize {
        self.physical(self.count)
    }

    fn entry(&self, logical: usize) -> &DbEntry {
        self.slot(logical).expect("occupied slot")
    }

    /// Appends a committed instruction; runs a detection pass when three windows are full.
    pub fn insert(&mut self, e: DbEntry) -> Option<Identification> {
        assert!(self.count < self.slots.len(), "detection buffer overflow");
        let p = self.physical(self.count);
        self.slots[p] = Some(e);
        self.count += 1;
        if self.count == self.analyzed() {
            let id = self.identify_window();
            self.discard_oldest_window();
            Some(id)
        } else {
            None
        }
    }

    fn discard_oldest_window(&mut self) {
        for i in 0..self.window {
            let p = self.physical(i);
            self.slots[p] = None;
        }
        self.head = self.physical(self.window);
        self.count -= self.window;
    }

    pub fn is_tagged(&self, logical: usize) -> bool {
        self.tags[logical]
    }

    /// Register-producing, non-memory predecessors inside the analyzed region,
    /// in source-operand order.
    pub fn get_pred(&self, idx: usize) -> Vec<usize> {
        let op = &self.entry(idx).op;
        let mut out: Vec<usize> = Vec::new();
        for &r in op.srcs.as_slice() {
            let writer = (0..idx)
                .rev()
                .find(|&j| self.entry(j).op.written_reg() == Some(r));
            if let Some(j) = writer {
                if self.entry(j).op.class != OpClass::Load && !out.contains(&j) {
                    out.push(j);
                }
            }
        }
        out
    }

    /// Consumers of `idx`'s result inside the analyzed region.
    pub fn get_succ(&self, idx: usize) -> Vec<usize> {
        let Some(d) = self.entry(idx).op.written_reg() else {
            return Vec::new();
        };
        let end = self.analyzed().min(self.count);
        let mut out = Vec::new();
        for j in idx + 1..end {
            let op = &self.entry(j).op;
            if op.reads(d) {
                out.push(j);
            }
            if op.written_reg() == Some(d) {
                break;
            }
        }
        out
    }

    pub fn analyze_olc(&self, idx: usize) -> bool {
        if self.get_succ(idx).iter().any(|&s| !self.tags[s]) {
            return false;
        }
        let Some(d) = self.entry(idx).op.written_reg() else {
            return false;
        };
        let end = self.analyzed().min(self.count);
        (idx + 1..end).any(|j| self.entry(j).op.written_reg() == Some(d))
    }

    fn analyze_ilc(&mut self, idx: usize, order: &mut Vec<usize>) {
        for p in self.get_pred(idx) {
            if self.tags[p] {
                continue;
            }
            if self.analyze_olc(p) {
                self.tags[p] = true;
                order.push(p);
                self.analyze_ilc(p, order);
            }
        }
    }

    /// One detection pass over slots `0..3W`, scanning the middle window from
    /// its youngest entry down for pivots.
    pub fn identify_window(&mut self) -> Identification {
        let w = self.window;
        assert!(self.count >= 3 * w, "detection needs three full windows");
        self.tags.iter_mut().for_each(|t| *t = false);
        let mut order = Vec::new();
        for idx in (w..2 * w).rev() {
            if self.entry(idx).pivot.is_some() && !self.tags[idx] {
                self.tags[idx] = true;
                order.push(idx);
                self.analyze_ilc(idx, &mut order);
            }
        }
        let tagged: Vec<Seq> = order.iter().map(|&i| self.entry(i).op.seq).collect();
        let tagged_pcs = order.iter().map(|&i| self.entry(i).op.pc).collect();
        let tagged_pivots = order.iter().map(|&i| self.entry(i).pivot).collect();
        let effectual_pcs = (w..2 * w)
            .filter(|&i| !self.tags[i])
            .map(|i| self.entry(i).op.pc)
            .collect();
        Identification {
            tagged,
            tagged_pcs,
            tagged_pivots,
            effectual_pcs,
        }
    }
}
