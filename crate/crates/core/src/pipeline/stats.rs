use crate::predictor::Accuracy;
use crate::trace::{ControlKind, Seq};

/// Counters collected over one simulation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimStats {
    pub cycles: u64,
    pub committed: u64,
    /// Committed instructions that executed in the I-pipe.
    pub ineffectual_committed: u64,
    /// Rename-time steering decisions, squashed ones included.
    pub steered: u64,
    pub type_a: [u64; 3],
    pub type_b: u64,
    pub rollbacks: u64,
    pub bottleneck_flushes: u64,
    /// Maximal runs of consecutive rename stalls on a full I-RS that reached the threshold.
    pub irs_stall_episodes: u64,
    pub irs_stall_cycles: u64,
    pub squashed: u64,
    pub primary_issued: u64,
    pub ipipe_issued: u64,
    pub iprf_write_conflicts: u64,
    /// Primary-pipe operand reads served by the I-PRF. Zero when steering is sound.
    pub iprf_read_violations: u64,
    pub redirects: u64,
    /// I-RS occupancy sampled every cycle, in eighths of capacity (index 8 = full).
    pub irs_occupancy: [u64; 9],
    pub detection_passes: u64,
    /// Dynamic instructions tagged by the detector over the run.
    pub detector_tagged: u64,
    pub accuracy: [Accuracy; 3],
}

pub fn kind_index(k: ControlKind) -> usize {
    match k {
        ControlKind::Branch => 0,
        ControlKind::Predicate => 1,
        ControlKind::Indirect => 2,
    }
}

impl SimStats {
    pub fn ineffectual_fraction(&self) -> f64 {
        ratio(self.ineffectual_committed, self.committed)
    }

    pub fn ipc(&self) -> f64 {
        ratio(self.committed, self.cycles)
    }

    pub fn type_a_total(&self) -> u64 {
        self.type_a.iter().sum()
    }

    pub fn type_a_of(&self, k: ControlKind) -> u64 {
        self.type_a[kind_index(k)]
    }

    pub fn mpki(&self, k: ControlKind) -> f64 {
        per_kilo(self.type_a_of(k), self.committed)
    }

    pub fn mpki_total(&self) -> f64 {
        per_kilo(self.type_a_total(), self.committed)
    }

    pub fn ipipe_issue_rate(&self) -> f64 {
        ratio(self.ipipe_issued, self.cycles)
    }

    pub fn detector_fraction(&self) -> f64 {
        ratio(self.detector_tagged, self.committed)
    }

    /// Column names of [`SimStats::csv_values`], stable across modes.
    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "cycles",
            "committed",
            "ipc",
            "ineffectual_committed",
            "ineffectual_fraction",
            "detector_tagged",
            "detector_fraction",
            "steered",
            "type_a_branch",
            "type_a_predicate",
            "type_a_indirect",
            "type_b",
            "mpki_branch",
            "mpki_predicate",
            "mpki_indirect",
            "mpki_total",
            "rollbacks",
            "bottleneck_flushes",
            "irs_stall_episodes",
            "squashed",
            "ipipe_issue_rate",
            "iprf_read_violations",
            "accuracy_branch",
            "accuracy_predicate",
            "accuracy_indirect",
        ]
    }

    pub fn csv_values(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.6}");
        vec![
            self.cycles.to_string(),
            self.committed.to_string(),
            f(self.ipc()),
            self.ineffectual_committed.to_string(),
            f(self.ineffectual_fraction()),
            self.detector_tagged.to_string(),
            f(self.detector_fraction()),
            self.steered.to_string(),
            self.type_a[0].to_string(),
            self.type_a[1].to_string(),
            self.type_a[2].to_string(),
            self.type_b.to_string(),
            f(self.mpki(ControlKind::Branch)),
            f(self.mpki(ControlKind::Predicate)),
            f(self.mpki(ControlKind::Indirect)),
            f(self.mpki_total()),
            self.rollbacks.to_string(),
            self.bottleneck_flushes.to_string(),
            self.irs_stall_episodes.to_string(),
            self.squashed.to_string(),
            f(self.ipipe_issue_rate()),
            self.iprf_read_violations.to_string(),
            f(self.accuracy[0].rate()),
            f(self.accuracy[1].rate()),
            f(self.accuracy[2].rate()),
        ]
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn per_kilo(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        1000.0 * a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    /// A steered control op turned out mispredicted.
    TypeA(ControlKind),
    /// An effectual op needed a value still held only in the I-PRF.
    TypeB,
    /// The I-RS stayed full for the bottleneck threshold.
    Bottleneck,
}

/// Pipeline flush record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub cycle: u64,
    pub cause: Cause,
    /// First squashed instruction; fetch restarts here.
    pub target: Seq,
    /// Instruction that exposed the problem.
    pub trigger: Seq,
    pub squashed: u64,
    /// Tagged pcs remaining once the flush is done.
    pub tags_after: usize,
}

/// One row of the optional per-cycle log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CycleRecord {
    pub cycle: u64,
    pub renamed_effectual: u32,
    pub renamed_ineffectual: u32,
    pub primary_issued: u32,
    pub ipipe_issued: u32,
    pub committed: u32,
    pub rob: u32,
    pub irs: u32,
    pub tags: u32,
    /// Rename stopped on a full I-RS this cycle.
    pub irs_blocked: bool,
}

impl CycleRecord {
    pub const HEADER: &'static str =
        "cycle,renamed_effectual,renamed_ineffectual,primary_issued,ipipe_issued,committed,rob,irs,tags,irs_blocked";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.cycle,
            self.renamed_effectual,
            self.renamed_ineffectual,
            self.primary_issued,
            self.ipipe_issued,
            self.committed,
            self.rob,
            self.irs,
            self.tags,
            self.irs_blocked as u8
        )
    }
}
