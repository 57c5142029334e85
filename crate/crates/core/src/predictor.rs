//! Control-flow prediction: conditional branch directions, indirect targets and
//! predicate outcomes, with per-kind accuracy accounting.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::trace::{Control, ControlKind, MicroOp, Outcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredictorError {
    #[error("op {seq} ({class}) is not a control op")]
    NotControl {
        seq: u64,
        class: crate::trace::OpClass,
    },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PredictorKind {
    Perfect,
    /// Predictions carried in the trace; unannotated ops fall back to gshare.
    #[default]
    TraceEmbedded,
    Gshare,
    TaggedTable,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Perfect => "perfect",
            PredictorKind::TraceEmbedded => "trace_embedded",
            PredictorKind::Gshare => "gshare",
            PredictorKind::TaggedTable => "tagged_table",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "perfect" => Ok(PredictorKind::Perfect),
            "trace_embedded" | "embedded" | "trace" => Ok(PredictorKind::TraceEmbedded),
            "gshare" => Ok(PredictorKind::Gshare),
            "tagged_table" | "tagged" | "tage" => Ok(PredictorKind::TaggedTable),
            _ => Err(format!("unknown predictor kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictorConfig {
    pub kind: PredictorKind,
    pub gshare_entries: usize,
    pub gshare_history: u32,
    pub base_entries: usize,
    pub tagged_entries: usize,
    pub tagged_histories: [u32; 3],
    pub indirect_entries: usize,
    pub predicate_entries: usize,
    /// Train on ops that ran in the I-pipe as well as on effectual ones.
    pub train_ineffectual: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            kind: PredictorKind::default(),
            gshare_entries: 4096,
            gshare_history: 6,
            base_entries: 4096,
            tagged_entries: 1024,
            tagged_histories: [4, 10, 24],
            indirect_entries: 512,
            predicate_entries: 1024,
            train_ineffectual: true,
        }
    }
}

impl PredictorConfig {
    pub fn with_kind(kind: PredictorKind) -> Self {
        PredictorConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let sizes = [
            ("gshare_entries", self.gshare_entries),
            ("base_entries", self.base_entries),
            ("tagged_entries", self.tagged_entries),
            ("indirect_entries", self.indirect_entries),
            ("predicate_entries", self.predicate_entries),
        ];
        for (name, v) in sizes {
            if !v.is_power_of_two() {
                return Err(PredictorError::Config(format!(
                    "predictor.{name}={v} is not a power of two"
                )));
            }
        }
        if self.gshare_history > 63 {
            return Err(PredictorError::Config(
                "predictor.gshare_history must be < 64".into(),
            ));
        }
        if self.tagged_histories.iter().any(|&h| h == 0 || h > 64) {
            return Err(PredictorError::Config(
                "predictor tagged history lengths must be in 1..=64".into(),
            ));
        }
        Ok(())
    }
}

/// Correct/incorrect counts for one control kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: u64,
    pub incorrect: u64,
}

impl Accuracy {
    pub fn total(&self) -> u64 {
        self.correct + self.incorrect
    }

    /// Fraction correct; 1.0 when nothing was predicted.
    pub fn rate(&self) -> f64 {
        if self.total() == 0 {
            1.0
        } else {
            self.correct as f64 / self.total() as f64
        }
    }

    fn record(&mut self, ok: bool) {
        if ok {
            self.correct += 1;
        } else {
            self.incorrect += 1;
        }
    }
}

/// Two-bit saturating counter helpers. Values 0..=3, taken when >= 2.
fn bump(c: &mut u8, up: bool) {
    if up {
        *c = (*c + 1).min(3);
    } else {
        *c = c.saturating_sub(1);
    }
}

#[derive(Debug, Clone)]
struct Gshare {
    table: Vec<u8>,
    hist_mask: u64,
}

impl Gshare {
    fn new(entries: usize, history_bits: u32) -> Self {
        Gshare {
            table: vec![1; entries],
            hist_mask: (1u64 << history_bits) - 1,
        }
    }

    fn index(&self, pc: u64, history: u64) -> usize {
        ((pc ^ (history & self.hist_mask)) as usize) & (self.table.len() - 1)
    }

    fn predict(&self, pc: u64, history: u64) -> bool {
        self.table[self.index(pc, history)] >= 2
    }

    fn train(&mut self, pc: u64, history: u64, taken: bool) {
        let i = self.index(pc, history);
        bump(&mut self.table[i], taken);
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TaggedEntry {
    tag: u16,
    /// Signed 3-bit counter, taken when >= 0.
    ctr: i8,
    useful: u8,
    valid: bool,
}

/// A matching tagged entry as (table, index).
type Hit = (usize, usize);

/// Bimodal base plus three tagged tables indexed with geometrically longer
/// global histories. The longest matching table provides the prediction.
#[derive(Debug, Clone)]
struct TaggedTable {
    base: Vec<u8>,
    tables: [Vec<TaggedEntry>; 3],
    lengths: [u32; 3],
    tick: u64,
}

impl TaggedTable {
    fn new(base_entries: usize, entries: usize, lengths: [u32; 3]) -> Self {
        TaggedTable {
            base: vec![1; base_entries],
            tables: [
                vec![TaggedEntry::default(); entries],
                vec![TaggedEntry::default(); entries],
                vec![TaggedEntry::default(); entries],
            ],
            lengths,
            tick: 0,
        }
    }

    fn folded(history: u64, len: u32, bits: u32) -> u64 {
        let h = if len >= 64 {
            history
        } else {
            history & ((1u64 << len) - 1)
        };
        let mut out = 0u64;
        let mut rest = h;
        while rest != 0 {
            out ^= rest & ((1u64 << bits) - 1);
            rest >>= bits;
        }
        out
    }

    fn slot(&self, t: usize, pc: u64, h: u64) -> (usize, u16) {
        let n = self.tables[t].len();
        let bits = n.trailing_zeros().max(1);
        let idx = (pc ^ (pc >> bits) ^ Self::folded(h, self.lengths[t], bits)) as usize & (n - 1);
        let tag = ((pc ^ (Self::folded(h, self.lengths[t], 9) << 1)) & 0x1ff) as u16;
        (idx, tag)
    }

    /// Matching (table, index) pairs from the longest history down, at most two.
    fn hits(&self, pc: u64, h: u64) -> (Option<Hit>, Option<Hit>) {
        let mut found = (0..3).rev().filter_map(|t| {
            let (i, tag) = self.slot(t, pc, h);
            let e = &self.tables[t][i];
            (e.valid && e.tag == tag).then_some((t, i))
        });
        (found.next(), found.next())
    }

    fn base_index(&self, pc: u64) -> usize {
        pc as usize & (self.base.len() - 1)
    }

    fn lookup(&self, pc: u64, hit: Option<Hit>) -> bool {
        match hit {
            Some((t, i)) => self.tables[t][i].ctr >= 0,
            None => self.base[self.base_index(pc)] >= 2,
        }
    }

    /// Returns (final prediction, provider prediction, alternate prediction).
    fn predictions(&self, pc: u64, h: u64) -> (bool, bool, bool) {
        let (provider, alt) = self.hits(pc, h);
        let p = self.lookup(pc, provider);
        let a = self.lookup(pc, alt);
        // A freshly allocated entry with a weak counter is not trusted yet.
        let fresh = provider.is_some_and(|(t, i)| {
            let e = &self.tables[t][i];
            e.useful == 0 && (e.ctr == 0 || e.ctr == -1)
        });
        (if fresh { a } else { p }, p, a)
    }

    fn predict(&self, pc: u64, h: u64) -> bool {
        self.predictions(pc, h).0
    }

    fn train(&mut self, pc: u64, h: u64, taken: bool) {
        let (predicted, provider_pred, alt_pred) = self.predictions(pc, h);
        let (provider, _) = self.hits(pc, h);
        match provider {
            Some((t, i)) => {
                let e = &mut self.tables[t][i];
                e.ctr = if taken {
                    (e.ctr + 1).min(3)
                } else {
                    (e.ctr - 1).max(-4)
                };
                if provider_pred != alt_pred {
                    e.useful = if provider_pred == taken {
                        (e.useful + 1).min(3)
                    } else {
                        e.useful.saturating_sub(1)
                    };
                }
            }
            None => {
                let b = self.base_index(pc);
                bump(&mut self.base[b], taken);
            }
        }
        if predicted != taken {
            let start = provider.map_or(0, |(t, _)| t + 1);
            let mut allocated = false;
            for t in start..3 {
                let (i, tag) = self.slot(t, pc, h);
                let e = &mut self.tables[t][i];
                if !e.valid || e.useful == 0 {
                    *e = TaggedEntry {
                        tag,
                        ctr: if taken { 0 } else { -1 },
                        useful: 0,
                        valid: true,
                    };
                    allocated = true;
                    break;
                }
            }
            if !allocated {
                for t in start..3 {
                    let (i, _) = self.slot(t, pc, h);
                    let e = &mut self.tables[t][i];
                    e.useful = e.useful.saturating_sub(1);
                }
            }
        }
        self.tick += 1;
        if self.tick.is_multiple_of(4096) {
            for table in &mut self.tables {
                table.iter_mut().for_each(|e| e.useful >>= 1);
            }
        }
    }
}

/// Global branch history at the moment a control op was predicted. Restoring
/// it undoes the history updates of every op fetched afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Checkpoint(u64);

/// Pluggable predictor owned by one simulation.
#[derive(Debug, Clone)]
pub struct BranchPredictor {
    config: PredictorConfig,
    gshare: Gshare,
    tagged: TaggedTable,
    indirect: Vec<Option<u64>>,
    predicate: Vec<u8>,
    /// Global direction history as of the youngest fetched branch. Fetch
    /// shifts in the resolved direction, since only the correct path is fetched.
    history: u64,
    accuracy: [Accuracy; 3],
}

fn kind_slot(k: ControlKind) -> usize {
    match k {
        ControlKind::Branch => 0,
        ControlKind::Predicate => 1,
        ControlKind::Indirect => 2,
    }
}

impl BranchPredictor {
    pub fn new(config: PredictorConfig) -> Result<Self, PredictorError> {
        config.validate()?;
        Ok(BranchPredictor {
            gshare: Gshare::new(config.gshare_entries, config.gshare_history),
            tagged: TaggedTable::new(
                config.base_entries,
                config.tagged_entries,
                config.tagged_histories,
            ),
            indirect: vec![None; config.indirect_entries],
            predicate: vec![1; config.predicate_entries],
            history: 0,
            accuracy: [Accuracy::default(); 3],
            config,
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    fn ctrl(op: &MicroOp) -> Result<Control, PredictorError> {
        op.ctrl.ok_or(PredictorError::NotControl {
            seq: op.seq,
            class: op.class,
        })
    }

    fn direction(&self, pc: u64) -> bool {
        match self.config.kind {
            PredictorKind::TaggedTable => self.tagged.predict(pc, self.history),
            _ => self.gshare.predict(pc, self.history),
        }
    }

    /// Predicts `op` and advances the speculative history past it. The
    /// returned checkpoint is needed to train on `op` and to roll back to it.
    pub fn fetch(&mut self, op: &MicroOp) -> Result<(Outcome, Checkpoint), PredictorError> {
        let predicted = self.predict(op)?;
        let cp = Checkpoint(self.history);
        if let Some(Control::Branch { taken, .. }) = op.ctrl {
            self.history = (self.history << 1) | taken as u64;
        }
        Ok((predicted, cp))
    }

    /// Rewinds the speculative history to just before the op that produced `cp`.
    pub fn restore(&mut self, cp: Checkpoint) {
        self.history = cp.0;
    }

    /// Predicted outcome for a control op. Does not change predictor state.
    pub fn predict(&self, op: &MicroOp) -> Result<Outcome, PredictorError> {
        let ctrl = Self::ctrl(op)?;
        match self.config.kind {
            PredictorKind::Perfect => return Ok(ctrl.actual()),
            PredictorKind::TraceEmbedded => {
                if let Some(p) = ctrl.embedded() {
                    return Ok(p);
                }
            }
            _ => {}
        }
        Ok(match ctrl {
            Control::Branch { .. } => Outcome::Taken(self.direction(op.pc)),
            Control::Indirect { .. } => {
                let slot = op.pc as usize & (self.indirect.len() - 1);
                Outcome::Target(self.indirect[slot].unwrap_or(0))
            }
            Control::Predicate { .. } => {
                let slot = op.pc as usize & (self.predicate.len() - 1);
                Outcome::PredicateFalse(self.predicate[slot] >= 2)
            }
        })
    }

    /// Records whether `predicted` was right and, if `update`, trains the tables
    /// on the actual outcome using the history `op` was predicted with.
    pub fn train(
        &mut self,
        op: &MicroOp,
        predicted: Outcome,
        cp: Checkpoint,
        update: bool,
    ) -> Result<bool, PredictorError> {
        let ctrl = Self::ctrl(op)?;
        let ok = ctrl.actual() == predicted;
        self.accuracy[kind_slot(ctrl.kind())].record(ok);
        if !update || self.config.kind == PredictorKind::Perfect {
            return Ok(ok);
        }
        match ctrl {
            Control::Branch { taken, .. } => match self.config.kind {
                PredictorKind::TaggedTable => self.tagged.train(op.pc, cp.0, taken),
                _ => self.gshare.train(op.pc, cp.0, taken),
            },
            Control::Indirect { target, .. } => {
                let slot = op.pc as usize & (self.indirect.len() - 1);
                self.indirect[slot] = Some(target);
            }
            Control::Predicate { pred_false, .. } => {
                let slot = op.pc as usize & (self.predicate.len() - 1);
                bump(&mut self.predicate[slot], pred_false);
            }
        }
        Ok(ok)
    }

    pub fn accuracy(&self, kind: ControlKind) -> Accuracy {
        self.accuracy[kind_slot(kind)]
    }

    pub fn total_accuracy(&self) -> Accuracy {
        self.accuracy
            .iter()
            .fold(Accuracy::default(), |a, b| Accuracy {
                correct: a.correct + b.correct,
                incorrect: a.incorrect + b.incorrect,
            })
    }
}

/// Predicts and trains every control op of `trace` in program order, with no
/// timing model. Entry `i` is `Some(correct)` for control ops, `None` otherwise.
pub fn predict_trace(
    trace: &[MicroOp],
    config: &PredictorConfig,
) -> Result<Vec<Option<bool>>, PredictorError> {
    let mut bp = BranchPredictor::new(config.clone())?;
    trace
        .iter()
        .map(|op| {
            if op.ctrl.is_none() {
                return Ok(None);
            }
            let (p, cp) = bp.fetch(op)?;
            bp.train(op, p, cp, true).map(Some)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{OpClass, Reg};

    fn branch(pc: u64, taken: bool) -> MicroOp {
        MicroOp::new(0, pc, OpClass::CondBranch)
            .with_srcs(&[Reg(16)])
            .with_ctrl(Control::Branch {
                taken,
                predicted: None,
            })
    }

    #[test]
    fn perfect_matches_actual() {
        let p = BranchPredictor::new(PredictorConfig::with_kind(PredictorKind::Perfect)).unwrap();
        for t in [true, false] {
            assert_eq!(p.predict(&branch(4, t)).unwrap(), Outcome::Taken(t));
        }
    }

    #[test]
    fn non_control_is_rejected() {
        let p = BranchPredictor::new(PredictorConfig::default()).unwrap();
        let op = MicroOp::new(3, 9, OpClass::Alu);
        assert!(matches!(
            p.predict(&op),
            Err(PredictorError::NotControl { seq: 3, .. })
        ));
    }

    #[test]
    fn embedded_prediction_wins() {
        let p = BranchPredictor::new(PredictorConfig::default()).unwrap();
        let op = branch(4, false).with_ctrl(Control::Branch {
            taken: false,
            predicted: Some(true),
        });
        assert_eq!(p.predict(&op).unwrap(), Outcome::Taken(true));
    }

    #[test]
    fn gshare_learns_always_taken_within_eight_updates() {
        let mut p =
            BranchPredictor::new(PredictorConfig::with_kind(PredictorKind::Gshare)).unwrap();
        let op = branch(0x40, true);
        for _ in 0..8 {
            let (pred, cp) = p.fetch(&op).unwrap();
            p.train(&op, pred, cp, true).unwrap();
        }
        assert_eq!(p.predict(&op).unwrap(), Outcome::Taken(true));
    }

    #[test]
    fn mispredicted_training_moves_counter_one_step() {
        let mut g = Gshare::new(16, 0);
        assert_eq!(g.table[5], 1);
        g.train(5, 0, true);
        assert_eq!(g.table[5], 2);
        g.train(5, 0, false);
        assert_eq!(g.table[5], 1);
    }

    #[test]
    fn accuracy_arithmetic() {
        let mut a = Accuracy::default();
        for i in 0..100 {
            a.record(i >= 5);
        }
        assert_eq!(a.total(), 100);
        assert!((a.rate() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn sizes_must_be_powers_of_two() {
        let cfg = PredictorConfig {
            indirect_entries: 300,
            ..Default::default()
        };
        assert!(BranchPredictor::new(cfg).is_err());
    }

    #[test]
    fn tagged_table_learns_alternating_pattern() {
        let mut p =
            BranchPredictor::new(PredictorConfig::with_kind(PredictorKind::TaggedTable)).unwrap();
        let mut late_correct = 0;
        for i in 0..2000 {
            let op = branch(0x80, i % 2 == 0);
            let (pred, cp) = p.fetch(&op).unwrap();
            let ok = p.train(&op, pred, cp, true).unwrap();
            if i >= 1000 && ok {
                late_correct += 1;
            }
        }
        assert!(late_correct > 950, "{late_correct}");
    }

    #[test]
    fn indirect_last_target() {
        let mut p =
            BranchPredictor::new(PredictorConfig::with_kind(PredictorKind::Gshare)).unwrap();
        let op = MicroOp::new(0, 7, OpClass::IndirectJump).with_ctrl(Control::Indirect {
            target: 0x99,
            predicted: None,
        });
        let (first, cp) = p.fetch(&op).unwrap();
        assert!(!p.train(&op, first, cp, true).unwrap());
        assert_eq!(p.predict(&op).unwrap(), Outcome::Target(0x99));
        assert_eq!(p.accuracy(ControlKind::Indirect).incorrect, 1);
    }

    #[test]
    fn restore_rewinds_speculative_history() {
        let mut p =
            BranchPredictor::new(PredictorConfig::with_kind(PredictorKind::Gshare)).unwrap();
        let (_, start) = p.fetch(&branch(0x10, true)).unwrap();
        let (_, second) = p.fetch(&branch(0x14, false)).unwrap();
        for i in 0..5 {
            p.fetch(&branch(0x18, i % 2 == 0)).unwrap();
        }
        p.restore(second);
        assert_eq!(p.history, 0b1);
        p.restore(start);
        assert_eq!(p.history, 0);
    }
}
