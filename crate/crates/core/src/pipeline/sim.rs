use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use super::config::{ConfigError, Mode, PipelineConfig, Resources};
use super::stats::{kind_index, Cause, CycleRecord, Event, SimStats};
use crate::detect::{commit_pivot, Detector, Rpm, TagRecord};
use crate::predictor::{BranchPredictor, Checkpoint, PredictorError};
use crate::trace::{
    mix64, op_value, validate_trace, ArchState, MicroOp, OpClass, Outcome, Reg, Seq, TraceError,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("invalid trace: {0}")]
    Trace(#[from] TraceError),
    #[error("no forward progress since cycle {last_progress} (now {cycle})\n{dump}")]
    Deadlock {
        cycle: u64,
        last_progress: u64,
        dump: String,
    },
}

#[derive(Debug, Clone)]
struct RobEntry {
    op: MicroOp,
    /// Renamed to the I-PRF and sent to the I-pipe.
    steered: bool,
    ri_pivot: bool,
    /// Prediction and the history it was made with, for control ops.
    predicted: Option<(Outcome, Checkpoint)>,
    mispredicted: bool,
    producers: [Option<Seq>; 3],
    renamed_at: u64,
    done_at: Option<u64>,
    completed: bool,
    value: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fetch {
    Open,
    Until(u64),
    /// Waiting for a mispredicted control op in the primary pipe to resolve.
    Resolve(Seq),
}

/// Everything a finished simulation produces.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub stats: SimStats,
    /// Committed architectural state.
    pub arch: ArchState,
    /// Per-op prediction correctness of the committed execution.
    pub outcomes: Vec<Option<bool>>,
    /// Dynamic instructions the detector tagged.
    pub tagged: BTreeSet<Seq>,
    pub tag_records: Vec<TagRecord>,
    pub events: Vec<Event>,
    pub cycle_log: Vec<CycleRecord>,
}

struct SrcRead {
    ready: bool,
    value: Option<u64>,
    /// Read from the I-PRF rather than the PRF or its mirror.
    iprf: bool,
    /// Producer still in flight in the I-pipe.
    inflight_ineffectual: bool,
}

#[derive(Default)]
struct RenameOutcome {
    effectual: u32,
    ineffectual: u32,
    irs_blocked: bool,
}

pub struct Simulator<'t> {
    trace: &'t [MicroOp],
    cfg: PipelineConfig,
    res: Resources,
    predictor: BranchPredictor,
    detector: Detector,
    rpm: Rpm,
    arch: ArchState,
    committed_in_iprf: Vec<bool>,
    rename_map: Vec<Option<Seq>>,
    rob: VecDeque<RobEntry>,
    rs: Vec<Seq>,
    irs: VecDeque<Seq>,
    pending_primary: Vec<Seq>,
    pending_ipipe: VecDeque<Seq>,
    stores: HashMap<u64, VecDeque<Seq>>,
    fetch_seq: Seq,
    fetch: Fetch,
    prf_used: usize,
    outcomes: Vec<Option<bool>>,
    cycle: u64,
    last_progress: u64,
    irs_stall_run: u64,
    stats: SimStats,
    events: Vec<Event>,
    cycle_log: Vec<CycleRecord>,
}

/// Runs `trace` through the configured core.
pub fn simulate(trace: &[MicroOp], cfg: &PipelineConfig) -> Result<SimResult, SimError> {
    Simulator::new(trace, cfg.clone())?.run()
}

impl<'t> Simulator<'t> {
    pub fn new(trace: &'t [MicroOp], cfg: PipelineConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        validate_trace(trace, cfg.regs())?;
        let r = cfg.num_regs as usize;
        Ok(Simulator {
            trace,
            res: cfg.resources(),
            predictor: BranchPredictor::new(cfg.predictor.clone())?,
            detector: Detector::new(cfg.window_size, cfg.pivot_type)
                .keep_records(cfg.keep_tag_records),
            rpm: Rpm::new(r, cfg.window_size),
            arch: ArchState::initial(cfg.regs()),
            committed_in_iprf: vec![false; r],
            rename_map: vec![None; r],
            rob: VecDeque::new(),
            rs: Vec::new(),
            irs: VecDeque::new(),
            pending_primary: Vec::new(),
            pending_ipipe: VecDeque::new(),
            stores: HashMap::new(),
            fetch_seq: 0,
            fetch: Fetch::Open,
            prf_used: 0,
            outcomes: vec![None; trace.len()],
            cycle: 0,
            last_progress: 0,
            irs_stall_run: 0,
            stats: SimStats::default(),
            events: Vec::new(),
            cycle_log: Vec::new(),
            cfg,
        })
    }

    fn len(&self) -> Seq {
        self.trace.len() as Seq
    }

    fn head_seq(&self) -> Seq {
        self.rob.front().map_or(self.fetch_seq, |e| e.op.seq)
    }

    fn index_of(&self, seq: Seq) -> Option<usize> {
        let head = self.rob.front()?.op.seq;
        let i = seq.checked_sub(head)? as usize;
        (i < self.rob.len()).then_some(i)
    }

    fn entry(&self, seq: Seq) -> Option<&RobEntry> {
        self.index_of(seq).map(|i| &self.rob[i])
    }

    fn entry_mut(&mut self, seq: Seq) -> Option<&mut RobEntry> {
        self.index_of(seq).map(move |i| &mut self.rob[i])
    }

    fn latency(&self, op: &MicroOp) -> u64 {
        op.latency
            .unwrap_or_else(|| self.cfg.latencies.of(op.class)) as u64
    }

    pub fn run(mut self) -> Result<SimResult, SimError> {
        let n = self.len();
        let limit = self.cfg.deadlock_factor * self.res.rob_entries as u64;
        while self.fetch_seq < n || !self.rob.is_empty() {
            let before = self.progress_marker();
            let renamed = self.rename();
            let primary = self.primary_tick();
            let ipipe = self.ipipe_tick();
            let committed = if self.res.commit_width.is_some() {
                self.commit_in_order()
            } else {
                self.mdre_and_commit()
            };
            self.bottleneck_monitor(renamed.irs_blocked);
            self.sample(&renamed, primary, ipipe, committed);
            if self.progress_marker() != before || renamed.effectual + renamed.ineffectual > 0 {
                self.last_progress = self.cycle;
            } else if self.cycle - self.last_progress > limit {
                return Err(SimError::Deadlock {
                    cycle: self.cycle,
                    last_progress: self.last_progress,
                    dump: self.dump(),
                });
            }
            self.cycle += 1;
        }
        self.stats.cycles = self.cycle;
        self.stats.detection_passes = self.detector.passes();
        self.stats.detector_tagged = self.detector.tagged().len() as u64;
        for k in crate::trace::ControlKind::ALL {
            self.stats.accuracy[kind_index(k)] = self.predictor.accuracy(k);
        }
        Ok(SimResult {
            stats: self.stats,
            arch: self.arch,
            outcomes: self.outcomes,
            tagged: self.detector.tagged().clone(),
            tag_records: self.detector.records().to_vec(),
            events: self.events,
            cycle_log: self.cycle_log,
        })
    }

    fn progress_marker(&self) -> (u64, u64, u64, u64, usize) {
        (
            self.stats.committed,
            self.stats.primary_issued,
            self.stats.ipipe_issued,
            self.stats.squashed,
            self.pending_primary.len() + self.pending_ipipe.len(),
        )
    }

    fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "fetch_seq={} fetch={:?} rob={} rs={} irs={} prf_used={} tags={}",
            self.fetch_seq,
            self.fetch,
            self.rob.len(),
            self.rs.len(),
            self.irs.len(),
            self.prf_used,
            self.detector.tags.len()
        );
        for e in self.rob.iter().take(24) {
            let _ = writeln!(
                s,
                "  seq={} pc={} {} steered={} done_at={:?} completed={} producers={:?}",
                e.op.seq, e.op.pc, e.op.class, e.steered, e.done_at, e.completed, e.producers
            );
        }
        s
    }

    fn read_src(&self, producer: Option<Seq>, reg: Reg) -> SrcRead {
        let committed = SrcRead {
            ready: true,
            value: Some(self.arch.regs[reg.index()]),
            iprf: self.committed_in_iprf[reg.index()],
            inflight_ineffectual: false,
        };
        let Some(p) = producer else {
            return committed;
        };
        let Some(e) = self.entry(p) else {
            return committed;
        };
        if e.steered {
            SrcRead {
                ready: e.completed,
                value: e.value,
                iprf: true,
                inflight_ineffectual: true,
            }
        } else {
            SrcRead {
                ready: e.done_at.is_some_and(|d| d <= self.cycle),
                value: e.value,
                iprf: false,
                inflight_ineffectual: false,
            }
        }
    }

    // ---------------------------------------------------------------- rename

    fn rename(&mut self) -> RenameOutcome {
        let mut out = RenameOutcome::default();
        match self.fetch {
            Fetch::Open => {}
            Fetch::Until(t) => {
                if self.cycle < t {
                    return out;
                }
                self.fetch = Fetch::Open;
            }
            Fetch::Resolve(s) => {
                let done = self.entry(s).and_then(|e| e.done_at);
                match done {
                    Some(d) if d <= self.cycle => {
                        let t = d + self.cfg.redirect_penalty;
                        if self.cycle < t {
                            self.fetch = Fetch::Until(t);
                            return out;
                        }
                        self.fetch = Fetch::Open;
                    }
                    _ => return out,
                }
            }
        }
        let n = self.len();
        while self.fetch_seq < n {
            if self.rob.len() >= self.res.rob_entries {
                break;
            }
            let op = self.trace[self.fetch_seq as usize];
            // Tags only exist for pcs that have committed, so a tagged op's
            // micro-op is always resident.
            let steer =
                self.res.steer && !op.class.is_memory() && self.detector.tags.is_tagged(op.pc);
            if steer {
                if out.ineffectual as usize >= self.cfg.ipipe_width {
                    break;
                }
                if self.irs.len() >= self.cfg.irs_entries {
                    out.irs_blocked = true;
                    break;
                }
            } else {
                if out.effectual as usize >= self.res.rename_width {
                    break;
                }
                if self.rs.len() >= self.res.rs_entries {
                    break;
                }
                if op.written_reg().is_some() && self.prf_used >= self.cfg.prf_free_regs() {
                    break;
                }
                let needs_iprf = op.srcs.as_slice().iter().find_map(|r| {
                    let p = self.rename_map[r.index()]?;
                    self.entry(p).filter(|e| e.steered).map(|_| p)
                });
                if let Some(p) = needs_iprf {
                    self.recover_type_b(p, op.seq);
                    return out;
                }
            }
            self.accept(op, steer);
            if steer {
                out.ineffectual += 1;
            } else {
                out.effectual += 1;
                let e = self.rob.back().expect("just pushed");
                if e.mispredicted {
                    self.fetch = Fetch::Resolve(op.seq);
                    self.stats.redirects += 1;
                    break;
                }
            }
        }
        out
    }

    fn accept(&mut self, op: MicroOp, steer: bool) {
        let predicted = op
            .ctrl
            .map(|_| self.predictor.fetch(&op).expect("control op"));
        let mispredicted = match (op.ctrl, predicted) {
            (Some(c), Some((p, _))) => c.actual() != p,
            _ => false,
        };
        if let Some(p) = self.rpm.observe_rename(&op) {
            if let Some(e) = self.entry_mut(p) {
                e.ri_pivot = true;
            }
        }
        let mut producers = [None; 3];
        for (i, r) in op.srcs.as_slice().iter().enumerate() {
            producers[i] = self.rename_map[r.index()];
        }
        if let Some(d) = op.written_reg() {
            self.rename_map[d.index()] = Some(op.seq);
        }
        if op.class == OpClass::Store {
            self.stores
                .entry(op.addr.expect("validated store"))
                .or_default()
                .push_back(op.seq);
        }
        self.rob.push_back(RobEntry {
            op,
            steered: steer,
            ri_pivot: false,
            predicted,
            mispredicted,
            producers,
            renamed_at: self.cycle,
            done_at: None,
            completed: false,
            value: None,
        });
        if steer {
            self.irs.push_back(op.seq);
            self.stats.steered += 1;
        } else {
            self.rs.push(op.seq);
            if op.written_reg().is_some() {
                self.prf_used += 1;
            }
        }
        self.fetch_seq += 1;
    }

    // ---------------------------------------------------------- primary pipe

    fn primary_tick(&mut self) -> u32 {
        let cycle = self.cycle;
        let mut pending = std::mem::take(&mut self.pending_primary);
        pending.retain(|&s| {
            let Some(e) = self.entry_mut(s) else {
                return false;
            };
            if e.done_at.is_some_and(|d| d <= cycle) {
                e.completed = true;
                false
            } else {
                true
            }
        });
        self.pending_primary = pending;

        let mut issued = 0;
        let mut i = 0;
        while i < self.rs.len() && issued < self.res.issue_width {
            let seq = self.rs[i];
            if let Some(value) = self.try_primary(seq) {
                let lat = self.latency(&self.entry(seq).expect("in rob").op);
                let e = self.entry_mut(seq).expect("in rob");
                e.value = value;
                e.done_at = Some(cycle + lat);
                self.rs.remove(i);
                self.pending_primary.push(seq);
                issued += 1;
            } else {
                i += 1;
            }
        }
        self.stats.primary_issued += issued as u64;
        issued as u32
    }

    /// The op's result if it can issue this cycle (`Some(None)` for ops without one).
    fn try_primary(&mut self, seq: Seq) -> Option<Option<u64>> {
        let e = self.entry(seq)?;
        if e.renamed_at >= self.cycle {
            return None;
        }
        let op = e.op;
        let mut vals = [0u64; 3];
        let mut violation = false;
        for (i, r) in op.srcs.as_slice().iter().enumerate() {
            let s = self.read_src(e.producers[i], *r);
            if !s.ready {
                return None;
            }
            violation |= s.inflight_ineffectual;
            vals[i] = s.value.expect("ready source has a value");
        }
        let srcs = &vals[..op.srcs.len()];
        let value = match op.class {
            OpClass::Load => {
                let addr = op.addr.expect("validated load");
                let fwd = self
                    .stores
                    .get(&addr)
                    .and_then(|q| q.iter().rev().find(|&&s| s < seq).copied());
                let word = match fwd {
                    Some(s) => self.entry(s).and_then(|st| st.value)?,
                    None => self.arch.load(addr),
                };
                Some(mix64(word))
            }
            OpClass::Store => Some(op_value(op.class, op.pc, srcs)),
            _ => op.written_reg().map(|_| op_value(op.class, op.pc, srcs)),
        };
        if violation {
            self.stats.iprf_read_violations += 1;
        }
        Some(value)
    }

    // ---------------------------------------------------------------- I-pipe

    fn ipipe_tick(&mut self) -> u32 {
        let cycle = self.cycle;
        let perfect = self.cfg.mode == Mode::PerfectIpipe;
        let mut ports = self.cfg.iprf_write_ports;
        let mut kept = VecDeque::with_capacity(self.pending_ipipe.len());
        let pending = std::mem::take(&mut self.pending_ipipe);
        for s in pending {
            let Some(e) = self.entry(s) else { continue };
            let finished = e.done_at.is_some_and(|d| d <= cycle);
            let writes = e.op.written_reg().is_some();
            if finished && (perfect || !writes || ports > 0) {
                if writes && !perfect {
                    ports -= 1;
                }
                self.entry_mut(s).expect("in rob").completed = true;
            } else {
                if finished {
                    self.stats.iprf_write_conflicts += 1;
                }
                kept.push_back(s);
            }
        }
        self.pending_ipipe = kept;

        let mut issued = 0usize;
        let (mut iprf_reads, mut mprf_reads) = (0usize, 0usize);
        while issued < self.cfg.ipipe_width {
            let Some(&seq) = self.irs.front() else { break };
            let e = self.entry(seq).expect("I-RS entry in rob");
            if e.renamed_at >= cycle {
                break;
            }
            let op = e.op;
            let value = if perfect {
                None
            } else {
                let mut vals = [0u64; 3];
                let (mut ir, mut mr) = (0, 0);
                let mut ready = true;
                for (i, r) in op.srcs.as_slice().iter().enumerate() {
                    let s = self.read_src(e.producers[i], *r);
                    if !s.ready {
                        ready = false;
                        break;
                    }
                    if s.iprf {
                        ir += 1;
                    } else {
                        mr += 1;
                    }
                    vals[i] = s.value.expect("ready source has a value");
                }
                if !ready {
                    break;
                }
                let over = iprf_reads + ir > self.cfg.iprf_read_ports
                    || mprf_reads + mr > self.cfg.mprf_read_ports;
                if over && issued > 0 {
                    break;
                }
                iprf_reads += ir;
                mprf_reads += mr;
                op.written_reg()
                    .map(|_| op_value(op.class, op.pc, &vals[..op.srcs.len()]))
            };
            let lat = self.latency(&op);
            let e = self.entry_mut(seq).expect("in rob");
            e.value = value;
            e.done_at = Some(cycle + lat);
            self.irs.pop_front();
            self.pending_ipipe.push_back(seq);
            issued += 1;
        }
        self.stats.ipipe_issued += issued as u64;
        issued as u32
    }

    // ---------------------------------------------------------- MDRE, commit

    fn mdre_and_commit(&mut self) -> u32 {
        let w = self.cfg.window_size;
        let len = self.rob.len();
        if len == 0 {
            return 0;
        }
        let all_fetched = self.fetch_seq == self.len();
        let a = w.min(len);
        let b = w.min(len - a);
        if (a < w || b < w) && !all_fetched {
            return 0;
        }
        if self.rob.range(a..a + b).any(|e| !e.completed) {
            return 0;
        }
        let culprit = self
            .rob
            .range(..a + b)
            .find(|e| e.steered && e.mispredicted && e.completed)
            .map(|e| {
                (
                    e.op.seq,
                    e.op.ctrl.expect("mispredicted op is control").kind(),
                )
            });
        if let Some((seq, kind)) = culprit {
            self.flush(Cause::TypeA(kind), seq);
            return 0;
        }
        if self.rob.range(..a).any(|e| !e.completed) {
            return 0;
        }
        for _ in 0..a {
            self.commit_head();
        }
        a as u32
    }

    fn commit_in_order(&mut self) -> u32 {
        let width = self.res.commit_width.expect("in-order commit width");
        let mut n = 0;
        while n < width && self.rob.front().is_some_and(|e| e.completed) {
            self.commit_head();
            n += 1;
        }
        n as u32
    }

    fn commit_head(&mut self) {
        let e = self.rob.pop_front().expect("commit from non-empty rob");
        let op = e.op;
        if self.cfg.mode == Mode::PerfectIpipe && e.steered {
            self.arch.step(&op);
        } else if op.class == OpClass::Store {
            let v = e.value.expect("executed store");
            self.arch.mem.insert(op.addr.expect("validated store"), v);
        } else if let Some(d) = op.written_reg() {
            self.arch.regs[d.index()] = e.value.expect("executed writer");
        }
        if let Some(d) = op.written_reg() {
            self.committed_in_iprf[d.index()] = e.steered;
            if self.rename_map[d.index()] == Some(op.seq) {
                self.rename_map[d.index()] = None;
            }
            if !e.steered {
                self.prf_used -= 1;
            }
        }
        if op.class == OpClass::Store {
            if let Some(q) = self.stores.get_mut(&op.addr.expect("validated store")) {
                q.pop_front();
            }
        }
        let correct = e.predicted.map(|(p, cp)| {
            let update = !e.steered || self.cfg.predictor.train_ineffectual;
            self.predictor
                .train(&op, p, cp, update)
                .expect("control op")
        });
        self.outcomes[op.seq as usize] = correct;
        self.stats.committed += 1;
        if e.steered {
            self.stats.ineffectual_committed += 1;
        }
        if self.res.steer {
            let pivot = commit_pivot(&op, correct, e.ri_pivot, self.cfg.pivot_type);
            self.detector.commit(op, pivot);
        }
    }

    // ------------------------------------------------------------- recovery

    /// Puts the predictor history back to where it was before the oldest
    /// control op at or after ROB index `from` was fetched.
    fn rewind_history(&mut self, from: usize) {
        if let Some((_, cp)) = self.rob.iter().skip(from).find_map(|e| e.predicted) {
            self.predictor.restore(cp);
        }
    }

    /// Squashes the whole ROB back to its head, the start of Portion A.
    fn flush(&mut self, cause: Cause, trigger: Seq) {
        let target = self.head_seq();
        let squashed = self.rob.len() as u64;
        let w = self.cfg.window_size;
        match cause {
            Cause::TypeA(kind) => {
                self.stats.type_a[kind_index(kind)] += 1;
                self.stats.rollbacks += 1;
                let pcs: Vec<u64> = self.rob.iter().take(2 * w).map(|e| e.op.pc).collect();
                self.detector.tags.reset_pcs(pcs);
            }
            Cause::TypeB => unreachable!("type-B recovery is partial"),
            Cause::Bottleneck => {
                self.stats.bottleneck_flushes += 1;
                self.detector.tags.reset_all();
            }
        }
        self.rewind_history(0);
        self.rob.clear();
        self.rs.clear();
        self.irs.clear();
        self.pending_primary.clear();
        self.pending_ipipe.clear();
        self.stores.clear();
        self.rename_map.iter_mut().for_each(|m| *m = None);
        self.rpm.clear();
        self.prf_used = 0;
        self.fetch_seq = target;
        self.fetch = Fetch::Until(self.cycle + 1 + self.cfg.redirect_penalty);
        self.stats.squashed += squashed;
        self.events.push(Event {
            cycle: self.cycle,
            cause,
            target,
            trigger,
            squashed,
            tags_after: self.detector.tags.len(),
        });
    }

    /// Handles an effectual op that needs the value of the steered, in-flight
    /// `producer`. Every root of the producer's graph lies in its window or the
    /// one before, so squashing from that earlier window checkpoint is enough.
    fn recover_type_b(&mut self, producer: Seq, trigger: Seq) {
        let w = self.cfg.window_size as Seq;
        let head = self.head_seq();
        let target = (producer - producer % w).saturating_sub(w).max(head);
        let keep = (target - head) as usize;
        self.rewind_history(keep);
        let squashed_entries: Vec<RobEntry> = self.rob.drain(keep..).collect();
        let squashed = squashed_entries.len() as u64;
        let mut pcs: Vec<u64> = squashed_entries.iter().map(|e| e.op.pc).collect();
        pcs.push(self.trace[trigger as usize].pc);
        self.detector.tags.reset_pcs(pcs);
        for e in &squashed_entries {
            if !e.steered && e.op.written_reg().is_some() {
                self.prf_used -= 1;
            }
        }
        self.rs.retain(|&s| s < target);
        self.irs.retain(|&s| s < target);
        self.pending_primary.retain(|&s| s < target);
        self.pending_ipipe.retain(|&s| s < target);
        for q in self.stores.values_mut() {
            q.retain(|&s| s < target);
        }
        self.rename_map.iter_mut().for_each(|m| *m = None);
        for e in &self.rob {
            if let Some(d) = e.op.written_reg() {
                self.rename_map[d.index()] = Some(e.op.seq);
            }
        }
        self.rpm.clear();
        self.stats.type_b += 1;
        self.stats.rollbacks += 1;
        self.stats.squashed += squashed;
        self.fetch_seq = target;
        self.fetch = Fetch::Until(self.cycle + 1 + self.cfg.redirect_penalty);
        self.events.push(Event {
            cycle: self.cycle,
            cause: Cause::TypeB,
            target,
            trigger,
            squashed,
            tags_after: self.detector.tags.len(),
        });
    }

    fn bottleneck_monitor(&mut self, irs_blocked: bool) {
        if !irs_blocked {
            self.irs_stall_run = 0;
            return;
        }
        self.irs_stall_run += 1;
        self.stats.irs_stall_cycles += 1;
        if self.irs_stall_run == self.cfg.bottleneck_k {
            self.stats.irs_stall_episodes += 1;
            let trigger = self.irs.front().copied().unwrap_or(self.fetch_seq);
            self.flush(Cause::Bottleneck, trigger);
            self.irs_stall_run = 0;
        }
    }

    fn sample(&mut self, renamed: &RenameOutcome, primary: u32, ipipe: u32, committed: u32) {
        if self.res.steer {
            let bucket = self.irs.len() * 8 / self.cfg.irs_entries;
            self.stats.irs_occupancy[bucket.min(8)] += 1;
        }
        if self.cfg.cycle_log {
            self.cycle_log.push(CycleRecord {
                cycle: self.cycle,
                renamed_effectual: renamed.effectual,
                renamed_ineffectual: renamed.ineffectual,
                primary_issued: primary,
                ipipe_issued: ipipe,
                committed,
                rob: self.rob.len() as u32,
                irs: self.irs.len() as u32,
                tags: self.detector.tags.len() as u32,
                irs_blocked: renamed.irs_blocked,
            });
        }
    }
}
