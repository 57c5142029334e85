//! Oracle reports and detector-versus-oracle comparisons.

use std::collections::BTreeSet;
use std::io::Write;

use super::HarnessError;
use crate::detect::run_standalone;
use crate::oracle::{analyze_trace, Histogram, OracleReport, Outcomes, PivotKind, PivotType};
use crate::pipeline::{simulate, PipelineConfig, SimError};
use crate::trace::{MicroOp, Seq};

/// Whole-trace oracle statistics plus the windowed detector's coverage.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub ops: usize,
    pub window: usize,
    pub pivot_type: PivotType,
    pub oracle: OracleReport,
    pub size_hist: Histogram,
    pub span_hist: Histogram,
    /// Instructions the detector tags when fed the trace in order.
    pub detector_tagged: usize,
}

impl AnalysisReport {
    pub fn fraction(&self) -> f64 {
        self.oracle.fraction()
    }

    pub fn detector_fraction(&self) -> f64 {
        if self.ops == 0 {
            0.0
        } else {
            self.detector_tagged as f64 / self.ops as f64
        }
    }

    pub fn summary_rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("ops", self.ops.to_string()),
            ("window", self.window.to_string()),
            ("pivot_type", self.pivot_type.name().to_string()),
            ("ineffectual", self.oracle.ineffectual.len().to_string()),
            ("ineffectual_fraction", format!("{:.6}", self.fraction())),
            (
                "pivots_control",
                self.oracle.pivot_count(PivotKind::Control).to_string(),
            ),
            (
                "pivots_dead",
                self.oracle.pivot_count(PivotKind::Dead).to_string(),
            ),
            ("graphs", self.oracle.graphs.len().to_string()),
            ("detector_tagged", self.detector_tagged.to_string()),
            (
                "detector_fraction",
                format!("{:.6}", self.detector_fraction()),
            ),
        ]
    }

    pub fn write_summary<W: Write>(&self, sink: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["metric", "value"])?;
        for (k, v) in self.summary_rows() {
            w.write_record([k, v.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows of `histogram,bucket,count` for both the size and span histograms.
    pub fn write_histograms<W: Write>(&self, sink: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["histogram", "bucket", "count"])?;
        for (name, h) in [("size", &self.size_hist), ("span", &self.span_hist)] {
            for (i, c) in h.buckets.iter().enumerate() {
                w.write_record([name, &Histogram::label(i), &c.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn analyze(
    trace: &[MicroOp],
    outcomes: &Outcomes,
    window: usize,
    pivot_type: PivotType,
    num_regs: usize,
) -> AnalysisReport {
    let oracle = analyze_trace(trace, outcomes, pivot_type);
    let (size_hist, span_hist) = oracle.histograms();
    let detector_tagged = run_standalone(trace, outcomes, window, pivot_type, num_regs)
        .tagged
        .len();
    AnalysisReport {
        ops: trace.len(),
        window,
        pivot_type,
        oracle,
        size_hist,
        span_hist,
        detector_tagged,
    }
}

/// Why an oracle-ineffectual instruction was left untagged by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MissReason {
    /// An oracle pivot the commit stage never marked, e.g. a dead result whose
    /// next writer came too late for the producer map.
    UnmarkedPivot,
    /// Every pivot it feeds sits two or more windows later; its window was
    /// discarded before those pivots were analyzed.
    DiscardedPredecessor,
    /// A consumer lies beyond the last analysis region that covers it.
    OutOfWindowSuccessor,
    /// Its register is not rewritten inside the analysis region.
    MissingOverwrite,
    /// Depends on another miss, or on tags cleared by a recovery.
    Cascade,
}

impl MissReason {
    pub fn name(self) -> &'static str {
        match self {
            MissReason::UnmarkedPivot => "unmarked_pivot",
            MissReason::DiscardedPredecessor => "discarded_predecessor",
            MissReason::OutOfWindowSuccessor => "out_of_window_successor",
            MissReason::MissingOverwrite => "missing_overwrite",
            MissReason::Cascade => "cascade",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContainmentReport {
    pub detector: BTreeSet<Seq>,
    pub oracle: BTreeSet<Seq>,
    /// Detector tags the oracle does not confirm. Empty when the detector is sound.
    pub violations: Vec<Seq>,
    pub misses: Vec<(Seq, MissReason)>,
}

impl ContainmentReport {
    pub fn contained(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn coverage(&self) -> f64 {
        if self.oracle.is_empty() {
            1.0
        } else {
            self.detector.intersection(&self.oracle).count() as f64 / self.oracle.len() as f64
        }
    }

    pub fn miss_count(&self, reason: MissReason) -> usize {
        self.misses.iter().filter(|(_, r)| *r == reason).count()
    }
}

/// Simulates `trace` and checks the detector's cumulative tags against the
/// oracle run on the committed prediction outcomes.
pub fn compare_detector_oracle(
    trace: &[MicroOp],
    config: &PipelineConfig,
) -> Result<ContainmentReport, SimError> {
    let sim = simulate(trace, config)?;
    Ok(containment(
        trace,
        &sim.outcomes,
        &sim.tagged,
        config.window_size,
        config.pivot_type,
    ))
}

/// Compares an arbitrary detector tag set with the oracle.
pub fn containment(
    trace: &[MicroOp],
    outcomes: &Outcomes,
    detector: &BTreeSet<Seq>,
    window: usize,
    pivot_type: PivotType,
) -> ContainmentReport {
    let report = analyze_trace(trace, outcomes, pivot_type);
    let violations = detector.difference(&report.ineffectual).copied().collect();
    let misses = report
        .ineffectual
        .difference(detector)
        .map(|&s| (s, classify_miss(&report, s, window as Seq)))
        .collect();
    ContainmentReport {
        detector: detector.clone(),
        oracle: report.ineffectual.clone(),
        violations,
        misses,
    }
}

fn classify_miss(report: &OracleReport, s: Seq, w: Seq) -> MissReason {
    if report.pivots.contains_key(&s) {
        return MissReason::UnmarkedPivot;
    }
    let win = s / w;
    // `s` can only be tagged by the passes over its own window or the next one,
    // and the later of those analyzes slots up to the end of window `win + 2`.
    let region_end = (win + 3) * w;
    let ddg = &report.ddg;
    let nearest_pivot = ddg
        .olc(s)
        .into_iter()
        .filter(|x| report.pivots.contains_key(x))
        .min();
    if nearest_pivot.is_some_and(|p| p / w >= win + 2) {
        return MissReason::DiscardedPredecessor;
    }
    if ddg.succs(s).iter().any(|&x| x >= region_end) {
        return MissReason::OutOfWindowSuccessor;
    }
    if ddg.next_writer(s).is_none_or(|x| x >= region_end) {
        return MissReason::MissingOverwrite;
    }
    MissReason::Cascade
}

/// Fraction of oracle-ineffectual instructions the standalone detector tags
/// with window size `window`.
pub fn detector_coverage(
    trace: &[MicroOp],
    outcomes: &Outcomes,
    window: usize,
    pivot_type: PivotType,
    num_regs: usize,
) -> f64 {
    let run = run_standalone(trace, outcomes, window, pivot_type, num_regs);
    containment(trace, outcomes, &run.tagged, window, pivot_type).coverage()
}
