//! Whole-trace reference analysis of ineffectual instructions.
//!
//! Works on the unbounded register-dependence graph of a trace, with perfect
//! hindsight of prediction outcomes. The windowed detector in [`crate::detect`]
//! is checked against this module.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::trace::{MicroOp, OpClass, Seq};

/// Which pivot conditions seed the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PivotType {
    /// Correctly predicted control: branches, predicate-false ops, indirect jumps.
    C,
    /// Results that are never consumed.
    D,
    #[default]
    CD,
}

impl PivotType {
    pub fn allows(self, kind: PivotKind) -> bool {
        matches!(
            (self, kind),
            (PivotType::CD, _)
                | (PivotType::C, PivotKind::Control)
                | (PivotType::D, PivotKind::Dead)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            PivotType::C => "C",
            PivotType::D => "D",
            PivotType::CD => "CD",
        }
    }
}

impl std::str::FromStr for PivotType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "C" => Ok(PivotType::C),
            "D" => Ok(PivotType::D),
            "CD" => Ok(PivotType::CD),
            _ => Err(format!("unknown pivot type `{s}` (expected C, D or CD)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PivotKind {
    /// Correctly predicted control op.
    Control,
    /// Register result that is overwritten before any use.
    Dead,
}

/// Per-op prediction correctness: `Some(true)` for correctly predicted control
/// ops, `Some(false)` for mispredicted ones, `None` otherwise.
pub type Outcomes = [Option<bool>];

/// Outcomes taken from the predictions embedded in a trace. Control ops without
/// an embedded prediction count as correctly predicted.
pub fn embedded_outcomes(trace: &[MicroOp]) -> Vec<Option<bool>> {
    trace
        .iter()
        .map(|op| {
            op.ctrl
                .map(|c| c.embedded().is_none_or(|p| p == c.actual()))
        })
        .collect()
}

/// Register dependence graph: an edge `j -> i` iff `j` is the most recent writer
/// of a register that `i` reads.
#[derive(Debug, Clone, Default)]
pub struct DependenceGraph {
    preds: Vec<Vec<Seq>>,
    succs: Vec<Vec<Seq>>,
    /// Next op that writes the same register, if any.
    next_writer: Vec<Option<Seq>>,
}

impl DependenceGraph {
    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn preds(&self, s: Seq) -> &[Seq] {
        &self.preds[s as usize]
    }

    pub fn succs(&self, s: Seq) -> &[Seq] {
        &self.succs[s as usize]
    }

    pub fn next_writer(&self, s: Seq) -> Option<Seq> {
        self.next_writer[s as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (Seq, Seq)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(j, ss)| ss.iter().map(move |&i| (j as Seq, i)))
    }

    fn closure<'a>(&'a self, start: Seq, next: impl Fn(Seq) -> &'a [Seq]) -> BTreeSet<Seq> {
        let mut seen = BTreeSet::new();
        let mut work: Vec<Seq> = next(start).to_vec();
        while let Some(x) = work.pop() {
            if seen.insert(x) {
                work.extend_from_slice(next(x));
            }
        }
        seen
    }

    /// Input logic cone: everything `s` transitively depends on.
    pub fn ilc(&self, s: Seq) -> BTreeSet<Seq> {
        self.closure(s, |x| self.preds(x))
    }

    /// Output logic cone: everything transitively depending on `s`.
    pub fn olc(&self, s: Seq) -> BTreeSet<Seq> {
        self.closure(s, |x| self.succs(x))
    }
}

pub fn build_ddg(trace: &[MicroOp]) -> DependenceGraph {
    let n = trace.len();
    let mut g = DependenceGraph {
        preds: vec![Vec::new(); n],
        succs: vec![Vec::new(); n],
        next_writer: vec![None; n],
    };
    let mut last_writer: BTreeMap<u16, Seq> = BTreeMap::new();
    for (i, op) in trace.iter().enumerate() {
        let i = i as Seq;
        for r in op.srcs.as_slice() {
            if let Some(&j) = last_writer.get(&r.0) {
                if !g.preds[i as usize].contains(&j) {
                    g.preds[i as usize].push(j);
                    g.succs[j as usize].push(i);
                }
            }
        }
        if let Some(d) = op.written_reg() {
            if let Some(prev) = last_writer.insert(d.0, i) {
                g.next_writer[prev as usize] = Some(i);
            }
        }
    }
    g
}

fn candidate(op: &MicroOp) -> bool {
    !op.class.is_memory()
}

/// Pivots by kind. A value still live at trace end counts as used.
pub fn oracle_pivots(
    trace: &[MicroOp],
    ddg: &DependenceGraph,
    outcomes: &Outcomes,
    pivot_type: PivotType,
) -> BTreeMap<Seq, PivotKind> {
    let mut out = BTreeMap::new();
    for (i, op) in trace.iter().enumerate() {
        let s = i as Seq;
        if !candidate(op) {
            continue;
        }
        let kind = match op.class {
            OpClass::CondBranch | OpClass::IndirectJump => {
                (outcomes[i] == Some(true)).then_some(PivotKind::Control)
            }
            OpClass::PredicatedAlu => {
                let pf = op.written_reg().is_none();
                if pf && outcomes[i] == Some(true) {
                    Some(PivotKind::Control)
                } else if !pf && ddg.succs(s).is_empty() && ddg.next_writer(s).is_some() {
                    Some(PivotKind::Dead)
                } else {
                    None
                }
            }
            _ => (op.written_reg().is_some()
                && ddg.succs(s).is_empty()
                && ddg.next_writer(s).is_some())
            .then_some(PivotKind::Dead),
        };
        if let Some(k) = kind.filter(|&k| pivot_type.allows(k)) {
            out.insert(s, k);
        }
    }
    out
}

/// Least fixed point: pivots, plus any non-memory op that feeds an ineffectual
/// op and whose whole output cone is ineffectual.
pub fn oracle_ineffectual(
    trace: &[MicroOp],
    ddg: &DependenceGraph,
    pivots: &BTreeSet<Seq>,
) -> BTreeSet<Seq> {
    let mut set: BTreeSet<Seq> = pivots.clone();
    let mut work: VecDeque<Seq> = pivots.iter().copied().collect();
    while let Some(j) = work.pop_front() {
        for &i in ddg.preds(j) {
            if set.contains(&i) || !candidate(&trace[i as usize]) {
                continue;
            }
            if olc_all_in(ddg, i, &set) {
                set.insert(i);
                work.push_back(i);
            }
        }
    }
    set
}

fn olc_all_in(ddg: &DependenceGraph, i: Seq, set: &BTreeSet<Seq>) -> bool {
    if !ddg.succs(i).iter().all(|s| set.contains(s)) {
        return false;
    }
    let mut seen = BTreeSet::new();
    let mut work: Vec<Seq> = ddg.succs(i).to_vec();
    while let Some(x) = work.pop() {
        if !set.contains(&x) {
            return false;
        }
        if seen.insert(x) {
            work.extend_from_slice(ddg.succs(x));
        }
    }
    true
}

/// A maximal connected set of ineffectual ops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IneffectualGraph {
    pub nodes: BTreeSet<Seq>,
    pub roots: BTreeSet<Seq>,
    pub pivots: BTreeSet<Seq>,
}

impl IneffectualGraph {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Program-order distance from the earliest root to the latest pivot, inclusive.
    pub fn span(&self) -> u64 {
        let first = *self.roots.first().expect("graph has a root");
        let last = *self.pivots.last().expect("graph has a pivot");
        last.saturating_sub(first) + 1
    }
}

pub fn extract_graphs(
    ineffectual: &BTreeSet<Seq>,
    pivots: &BTreeSet<Seq>,
    ddg: &DependenceGraph,
) -> Vec<IneffectualGraph> {
    let mut seen = BTreeSet::new();
    let mut graphs = Vec::new();
    for &start in ineffectual {
        if !seen.insert(start) {
            continue;
        }
        let mut nodes = BTreeSet::from([start]);
        let mut work = vec![start];
        while let Some(x) = work.pop() {
            for &y in ddg.preds(x).iter().chain(ddg.succs(x)) {
                if ineffectual.contains(&y) && seen.insert(y) {
                    nodes.insert(y);
                    work.push(y);
                }
            }
        }
        let roots = nodes
            .iter()
            .copied()
            .filter(|&x| ddg.preds(x).iter().all(|p| !ineffectual.contains(p)))
            .collect();
        let gp = nodes
            .iter()
            .copied()
            .filter(|x| pivots.contains(x))
            .collect();
        graphs.push(IneffectualGraph {
            nodes,
            roots,
            pivots: gp,
        });
    }
    graphs
}

/// Counts per bucket: index 0..=15 hold values 1..=16, index 16 holds `>16`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    pub buckets: [u64; 17],
}

impl Histogram {
    pub fn add(&mut self, v: u64) {
        let idx = (v.clamp(1, 17) - 1) as usize;
        self.buckets[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().sum()
    }

    pub fn count(&self, v: u64) -> u64 {
        self.buckets[(v.clamp(1, 17) - 1) as usize]
    }

    pub fn label(idx: usize) -> String {
        if idx == 16 {
            ">16".to_string()
        } else {
            (idx + 1).to_string()
        }
    }

    /// Rows of `bucket,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bucket,count\n");
        for (i, c) in self.buckets.iter().enumerate() {
            s.push_str(&format!("{},{}\n", Self::label(i), c));
        }
        s
    }
}

pub fn graph_histograms(graphs: &[IneffectualGraph]) -> (Histogram, Histogram) {
    let mut size = Histogram::default();
    let mut span = Histogram::default();
    for g in graphs {
        size.add(g.size() as u64);
        span.add(g.span());
    }
    (size, span)
}

/// Everything the oracle computes for one trace.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub ddg: DependenceGraph,
    pub pivots: BTreeMap<Seq, PivotKind>,
    pub ineffectual: BTreeSet<Seq>,
    pub graphs: Vec<IneffectualGraph>,
}

impl OracleReport {
    pub fn fraction(&self) -> f64 {
        if self.ddg.is_empty() {
            0.0
        } else {
            self.ineffectual.len() as f64 / self.ddg.len() as f64
        }
    }

    pub fn pivot_count(&self, kind: PivotKind) -> usize {
        self.pivots.values().filter(|&&k| k == kind).count()
    }

    pub fn histograms(&self) -> (Histogram, Histogram) {
        graph_histograms(&self.graphs)
    }
}

pub fn analyze_trace(
    trace: &[MicroOp],
    outcomes: &Outcomes,
    pivot_type: PivotType,
) -> OracleReport {
    assert_eq!(trace.len(), outcomes.len(), "one outcome slot per op");
    let ddg = build_ddg(trace);
    let pivots = oracle_pivots(trace, &ddg, outcomes, pivot_type);
    let seeds: BTreeSet<Seq> = pivots.keys().copied().collect();
    let ineffectual = oracle_ineffectual(trace, &ddg, &seeds);
    let graphs = extract_graphs(&ineffectual, &seeds, &ddg);
    OracleReport {
        ddg,
        pivots,
        ineffectual,
        graphs,
    }
}
